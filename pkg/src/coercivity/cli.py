"""Command line entry point: ``coercivity <subcommand> [options]``."""
from __future__ import annotations

import argparse
import sys

from .errors import CoercivityError
from .sweep import (
    CHAIN_COLUMNS,
    CSV_COLUMNS,
    KERNEL_COLUMNS,
    SweepConfig,
    chain_checks,
    config_from_mapping,
    kernel_checks,
    load_config,
    render,
    run_sweep,
)

SUBCOMMANDS = {
    "sweep": "boltzmann",
    "landau-sweep": "landau",
    "kernel-checks": "kernel-checks",
    "chain-check": "landau",
}


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value file mirroring the sweep config fields")
    for name in ("gamma", "alpha"):
        p.add_argument(f"--{name}-min", type=float)
        p.add_argument(f"--{name}-max", type=float)
        p.add_argument(f"--{name}-steps", type=int)
    p.add_argument("--epsilon", help="comma separated list, e.g. 0,0.1")
    p.add_argument("--dim", type=int)
    p.add_argument("--degree", type=int, help="basis degree")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--workers", type=int)
    p.add_argument("--timing", action="store_true", help="record wall time per point (breaks byte-reproducibility)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coercivity", description="Coercivity sweeps for linearized collision operators.")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "sweep": "Boltzmann coercivity estimates over a (gamma, alpha, epsilon) grid",
        "landau-sweep": "Landau sigma-norm estimates over a gamma grid",
        "kernel-checks": "symmetry and decay-slope checks of the gain kernel",
        "chain-check": "H^1 chain links on seeded random trial functions",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        _add_common(p)
        if name == "chain-check":
            p.add_argument("--samples", type=int, default=100)
    return ap


def config_from_args(args) -> SweepConfig:
    mode = SUBCOMMANDS[args.command]
    raw = {}
    if args.config:
        cfg = load_config(args.config)
        raw = {
            "gamma_range": ",".join(map(str, cfg.gamma_range)),
            "alpha_range": ",".join(map(str, cfg.alpha_range)),
            "epsilon": ",".join(map(str, cfg.epsilon)),
            "dim": str(cfg.dim), "basis_degree": str(cfg.basis_degree), "seed": str(cfg.seed),
            "format": cfg.format, "workers": str(cfg.workers), "timing": str(cfg.timing),
        }
        if cfg.output:
            raw["output"] = cfg.output
        raw.update({k: str(v) for k, v in cfg.quadrature})
    elif mode == "landau":
        raw["gamma_range"] = "-3,0,4" if args.command == "landau-sweep" else "-2,2,3"
    if args.command == "chain-check" and not args.config:
        raw.setdefault("gamma_range", "-2,2,3")
    for name in ("gamma", "alpha"):
        for part in ("min", "max", "steps"):
            val = getattr(args, f"{name}_{part}")
            if val is not None:
                raw[f"{name}_{part}"] = str(val)
    direct = {"epsilon": args.epsilon, "dim": args.dim, "basis_degree": args.degree, "seed": args.seed,
              "output": args.out, "format": args.format, "workers": args.workers}
    raw.update({k: str(v) for k, v in direct.items() if v is not None})
    if args.timing:
        raw["timing"] = "true"
    raw["mode"] = mode
    return config_from_mapping(raw)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.command in ("sweep", "landau-sweep"):
            rows, cols = run_sweep(cfg), CSV_COLUMNS
        elif args.command == "kernel-checks":
            rows, cols = kernel_checks(cfg), KERNEL_COLUMNS
        else:
            rows, cols = chain_checks(cfg, samples=args.samples), CHAIN_COLUMNS
        text = render(rows, cfg.format, cols)
    except CoercivityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if cfg.output:
        try:
            with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: cannot write {cfg.output}: {exc}", file=sys.stderr)
            return 1
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
