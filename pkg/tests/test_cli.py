import json
import subprocess
import sys

from coercivity.cli import main

SMALL = ["--gamma-min", "0", "--gamma-steps", "1", "--alpha-min", "0.5", "--alpha-steps", "1", "--degree", "3"]


def test_sweep_to_stdout(capsys):
    assert main(["sweep", *SMALL]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("gamma,alpha,epsilon")
    assert len(out) == 2 and out[1].startswith("0,0.5,0,3,")


def test_json_to_file(tmp_path):
    path = tmp_path / "r.json"
    assert main(["sweep", *SMALL, "--format", "json", "--out", str(path)]) == 0
    (row,) = json.loads(path.read_text())
    assert row["coercivity_estimate"] > 0


def test_landau_and_chain_subcommands(capsys):
    assert main(["landau-sweep", "--gamma-min", "-2", "--gamma-max", "-1", "--gamma-steps", "2", "--degree", "4"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3 and lines[1].startswith("-2,nan,")
    assert main(["chain-check", "--samples", "3", "--degree", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "gamma,sample,link_i,link_ii,link_iii,link_iv,passed"
    assert len(lines) == 1 + 3 * 3 and all(l.endswith(",1") for l in lines[1:])


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("gamma_range = 0, 1, 2\nalpha_range = 0.5, 0.5, 1\nbasis_degree = 3\n")
    assert main(["sweep", "--config", str(cfg), "--gamma-steps", "1"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 2


def test_bad_input_and_unwritable(tmp_path, capsys):
    assert main(["sweep", "--gamma-min", "2", "--gamma-max", "1"]) == 2
    assert "error" in capsys.readouterr().err
    assert main(["sweep", *SMALL, "--out", str(tmp_path / "no" / "x.csv")]) == 1


def test_console_entry_point(tmp_path):
    out = tmp_path / "a.csv"
    cmd = [sys.executable, "-m", "coercivity.cli", "sweep", *SMALL, "--out", str(out)]
    subprocess.run(cmd, check=True)
    assert out.read_text().count("\n") == 2
