import json
import math

import numpy as np
import pytest

from coercivity import KernelParams, coercivity_estimate
from coercivity.spaces import BasisSpec
from coercivity.errors import DomainError, FitError, InputError
from coercivity.sweep import (
    CSV_COLUMNS,
    GapReport,
    SweepConfig,
    emit_report,
    fit_exponents,
    format_float,
    landau_degree_trend,
    load_config,
    read_csv,
    render,
    run_sweep,
)


def small(**kw):
    base = dict(gamma_range=(0.0, 0.5, 2), alpha_range=(0.5, 1.0, 2), basis_degree=3)
    base.update(kw)
    return SweepConfig(**base)


def test_three_by_three_grid_rows_sorted_and_positive():
    cfg = SweepConfig(gamma_range=(-1.0, 1.0, 3), alpha_range=(0.25, 1.0, 3), epsilon=(0.1,), basis_degree=5)
    rows = run_sweep(cfg)
    assert len(rows) == 9
    keys = [(r.gamma, r.alpha) for r in rows]
    assert keys == sorted(keys)
    for r in rows:
        assert r.coercivity_estimate >= -1e-8
        if r.gamma + r.alpha - r.epsilon > 0:
            assert r.coercivity_estimate > 0
        assert r.quad_flag == 0
        assert r.wall_ms == 0.0
        assert all(np.isfinite([r.d1, r.d2, r.d3, r.d4, r.fit_exponent]))


def test_single_step_grid_matches_standalone_call():
    cfg = small(gamma_range=(0.25, 0.25, 1), alpha_range=(0.5, 0.5, 1))
    (row,) = run_sweep(cfg)
    assert row.gamma == 0.25 and row.alpha == 0.5
    est = coercivity_estimate(KernelParams(3, 0.25, 0.5), BasisSpec(3, 3))
    assert row.coercivity_estimate == est.lambda_


def test_workers_do_not_change_output():
    cfg = small()
    serial = render(run_sweep(cfg))
    pooled = render(run_sweep(SweepConfig(**{**cfg.__dict__, "workers": 2})))
    assert serial == pooled


def test_epsilon_axis_and_alpha_zero_row():
    cfg = small(gamma_range=(0.5, 0.5, 1), alpha_range=(0.0, 0.0, 1), epsilon=(0.0, 0.1))
    rows = run_sweep(cfg)
    assert [r.epsilon for r in rows] == [0.0, 0.1]
    assert rows[0].coercivity_estimate <= rows[1].coercivity_estimate
    assert math.isnan(rows[0].d1) and rows[0].note


def test_landau_mode_rows():
    cfg = SweepConfig(mode="landau", gamma_range=(-3.0, 0.0, 4), basis_degree=4)
    rows = run_sweep(cfg)
    assert [r.gamma for r in rows] == [-3.0, -2.0, -1.0, 0.0]
    for r in rows:
        assert r.coercivity_estimate > 0
        assert math.isnan(r.alpha)


def test_landau_soft_end_trend_keeps_falling():
    vals, fit = landau_degree_trend(-3.0, 3, [4, 5, 6, 7, 8])
    assert np.all(np.diff(vals) < 0)
    assert fit.slope < -0.5
    # the moderately soft end flattens out
    vals2, _ = landau_degree_trend(-1.0, 3, [6, 7, 8])
    assert vals2[-1] / vals2[0] > 0.95


def test_config_validation():
    with pytest.raises(InputError):
        SweepConfig(gamma_range=(1.0, 0.0, 3))
    with pytest.raises(InputError):
        SweepConfig(gamma_range=(0.0, 1.0, 0))
    with pytest.raises(DomainError):
        SweepConfig(alpha_range=(0.5, 2.0, 2))
    with pytest.raises(DomainError):
        SweepConfig(basis_degree=2)
    with pytest.raises(DomainError):
        SweepConfig(epsilon=(-0.1,))
    with pytest.raises(InputError):
        SweepConfig(quadrature=(("radial_nodes", 3),))
    with pytest.raises(DomainError):
        SweepConfig(mode="landau", gamma_range=(-4.0, 0.0, 2))


def test_fit_recovers_synthetic_exponent():
    x = np.geomspace(5, 20, 8)
    fit = fit_exponents(x, 3.7 * x**-1.25, target=-1.25)
    assert abs(fit.deviation) < 1e-10 and fit.residual < 1e-10
    pairs = fit_exponents(list(zip(x, 2 * (1 + x) ** 0.5)), shift=1.0)
    assert pairs.slope == pytest.approx(0.5, abs=1e-10)
    with pytest.raises(FitError):
        fit_exponents(x[:3], x[:3])
    with pytest.raises(FitError):
        fit_exponents(x, -x)
    with pytest.raises(FitError):
        fit_exponents(np.linspace(5, 5.5, 5), np.ones(5))


def _rows():
    return [
        GapReport(0.0, 0.5, 0.0, 6, 10.25, 1.0, 2.0, -0.5, -0.25, 0.44, 1e-3, 0, 0.0),
        GapReport(-1.0, math.nan, 0.0, 6, 0.5, quad_flag=1),
    ]


def test_csv_round_trip(tmp_path):
    path = tmp_path / "out.csv"
    emit_report(_rows(), path)
    text = path.read_text()
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    back = read_csv(path)
    assert back[0]["coercivity_estimate"] == 10.25
    assert back[0]["basis_degree"] == 6 and back[1]["quad_flag"] == 1
    assert math.isnan(back[1]["alpha"])


def test_json_fields_and_nan(tmp_path):
    path = tmp_path / "out.json"
    emit_report(_rows(), path, fmt="json")
    data = json.loads(path.read_text())
    assert list(data[0]) == list(CSV_COLUMNS)
    assert data[1]["alpha"] is None
    assert data[0]["fit_exponent"] == 0.44


def test_empty_and_unwritable(tmp_path):
    with pytest.raises(InputError):
        render([])
    with pytest.raises(OSError):
        emit_report(_rows(), tmp_path / "missing" / "out.csv")
    assert not (tmp_path / "missing").exists()


def test_format_float():
    assert format_float(3) == "3"
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(float("nan")) == "nan"


def test_config_file(tmp_path):
    path = tmp_path / "sweep.ini"
    path.write_text("gamma_min = 0\ngamma_max = 1\ngamma_steps = 3\nalpha_range = 0.5, 1, 2\n"
                    "epsilon = 0, 0.1\ndegree = 4\nangular_cells = 24\nseed = 3\n")
    cfg = load_config(path)
    assert cfg.gamma_range == (0.0, 1.0, 3) and cfg.alpha_range == (0.5, 1.0, 2)
    assert cfg.epsilon == (0.0, 0.1) and cfg.basis_degree == 4 and cfg.seed == 3
    assert cfg.quad("angular_cells", 0) == 24
    path.write_text("angular.cells = 16\nangular.order = 6\n")
    assert load_config(path).quadrature == (("angular_cells", 16), ("angular_order", 6))
    path.write_text("velocity.kind = tensor-hermite\n")
    with pytest.raises(InputError):
        load_config(path)
    path.write_text("gamma_min = 0\nbogus = 1\n")
    with pytest.raises(InputError):
        load_config(path)
