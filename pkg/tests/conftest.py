import numpy as np
import pytest

from nlks import GridSpec, RunConfig, ScaledParams, SpectrumField, StepperConfig, run
from nlks.spectral import dealias, forward_transform, GridField

REFERENCE_PARAMS = ScaledParams(beta=2.0, delta=0.5, epsilon=1.0)

_criteria = {}


def random_field(grid, rng, band=None, zero_mean=True):
    """Real random spectrum, optionally restricted to max(|xi_i|) <= band."""
    values = rng.standard_normal((grid.n, grid.n))
    s = forward_transform(GridField(grid, values))
    c = s.coeffs.copy()
    if band is not None:
        k = np.abs(grid.wavenumbers) <= band
        c[~(k[:, None] & k[None, :])] = 0.0
    if zero_mean:
        c[0, 0] = 0.0
    return SpectrumField(grid, c)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def reference_run():
    """The n=128, dt=0.05, t=40 run with the reference parameters, computed once."""
    cfg = RunConfig(n=128, stepper=StepperConfig(0.05), params=REFERENCE_PARAMS, t_end=40.0)
    final, records = run(cfg)
    return cfg, final, records


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion's verdict for the terminal summary."""

    def record(label, passed, detail=""):
        _criteria[label] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_criteria, key=lambda s: int(s.split(".")[0])):
        ok, detail = _criteria[label]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")
