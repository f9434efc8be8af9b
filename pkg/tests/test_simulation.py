import math

import numpy as np
import pytest

from nlks.etdrk4 import BlowUpError, ConfigurationError, StepperConfig
from nlks.simulation import (
    PhysicalParams,
    RunConfig,
    ScaledParams,
    execute,
    standard_initial_condition,
    rescale,
    run,
)
from nlks.spectral import GridSpec, SpectrumField, inverse_transform, odd_residual, sobolev_norm

from conftest import REFERENCE_PARAMS


def test_rescale_examples():
    p = rescale(PhysicalParams(beta=2.0, gamma=0.5, L=2 * math.pi))
    assert (p.beta, p.delta, p.epsilon) == (2.0, 0.5, 1.0)
    p = rescale(PhysicalParams(beta=1.0, gamma=1.0, L=4 * math.pi))
    assert p.delta == pytest.approx(0.5) and p.epsilon == pytest.approx(0.25)
    assert rescale(PhysicalParams(1.0, 0.0, 3.0)).delta == 0.0
    assert p.physical == PhysicalParams(1.0, 1.0, 4 * math.pi)


@pytest.mark.parametrize("args", [(0.0, 1.0, 1.0), (1.0, 2.5, 1.0), (1.0, -0.1, 1.0), (1.0, 1.0, 0.0)])
def test_physical_params_validation(args):
    with pytest.raises(ValueError):
        PhysicalParams(*args)


@pytest.mark.parametrize("args", [(1.0, -0.1, 1.0), (1.0, 0.1, 0.0), (math.nan, 0.1, 1.0)])
def test_scaled_params_validation(args):
    with pytest.raises(ValueError):
        ScaledParams(*args)


def test_initial_condition_samples():
    g = GridSpec(64)
    s = standard_initial_condition(g)
    assert s.coeff(0, 0) == 0
    assert np.all(s.coeffs[~g.dealias_mask] == 0)
    v = inverse_transform(s).values
    assert odd_residual(v) < 1e-14
    assert np.max(np.abs(v[0, :])) < 1e-14  # x = 0
    assert abs(np.mean(v)) < 1e-15


def test_initial_condition_raw_values():
    # before dealiasing the sampled formula is recovered exactly at grid points
    from nlks.simulation import _odd_sine

    n = 16
    s = _odd_sine(n)
    assert np.array_equal(s[1:], -s[1:][::-1])
    assert s[n // 4] == 1.0  # x = pi/2
    y0 = 0.0
    assert -s[n // 4] * (math.sin(y0) + math.exp(-y0 * y0) * math.cos(y0)) == -1.0


def _cfg(**kw):
    base = dict(n=32, stepper=StepperConfig(0.05), params=REFERENCE_PARAMS, t_end=1.0)
    base.update(kw)
    return RunConfig(**base)


def test_run_config_validation():
    with pytest.raises(ConfigurationError):
        _cfg(t_end=-1.0)
    with pytest.raises(ConfigurationError):
        _cfg(t_end=1.01)
    with pytest.raises(ConfigurationError):
        _cfg(cadence=0.3)  # 0.3 does not divide 1.0
    with pytest.raises(ConfigurationError):
        _cfg(cadence=0.07)
    with pytest.raises(ConfigurationError):
        _cfg(params=PhysicalParams(1.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        _cfg(n=30.5)
    with pytest.raises(ConfigurationError):
        _cfg(refine=0)


def test_run_t_end_zero():
    final, recs = run(_cfg(t_end=0.0))
    assert len(recs) == 1
    assert recs[0].t == 0.0
    assert recs[0].l2_norm == pytest.approx(sobolev_norm(standard_initial_condition(GridSpec(32))))
    assert np.array_equal(final.coeffs, standard_initial_condition(GridSpec(32)).coeffs)


def test_run_sampling_and_energy():
    final, recs = run(_cfg(t_end=2.0, cadence=0.5))
    assert [r.t for r in recs] == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert math.isnan(recs[0].energy_balance_residual)
    assert all(math.isfinite(r.energy_balance_residual) for r in recs[1:])
    assert recs[-1].l2_norm == pytest.approx(sobolev_norm(final), rel=1e-15)


def test_run_with_custom_initial_and_blow_up(tmp_path):
    p = ScaledParams(beta=40.0, delta=0.0, epsilon=1.0)
    cfg = _cfg(params=p, t_end=20.0, output_dir=str(tmp_path))
    s = SpectrumField.from_modes(GridSpec(32), {(3, 0): -0.5j})
    with pytest.raises(BlowUpError):
        run(cfg, s)
    text = (tmp_path / "timeseries.csv").read_text()
    assert text.startswith("t,l2,")
    assert len(text.strip().splitlines()) >= 2


def test_subcritical_decay():
    p = ScaledParams(beta=0.5, delta=0.0, epsilon=1.0)
    _, recs = run(_cfg(params=p, t_end=5.0, cadence=0.25))
    l2 = np.array([r.l2_norm for r in recs if r.t >= 1.0])
    assert np.all(np.diff(l2) < 0)


def test_execute_reports_files(tmp_path):
    res = execute(_cfg(t_end=1.0, output_dir=str(tmp_path), snapshot_interval=0.5))
    names = sorted(p.split("/")[-1] for p in res.files)
    assert "timeseries.csv" in names
    assert "eta_t00000.500.bin" in names and "eta_t00001.000.pgm" in names
