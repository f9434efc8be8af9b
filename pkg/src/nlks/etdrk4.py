"""Fourth-order exponential time differencing (Cox-Matthews ETD-RK4).

The stiff diagonal linear part is integrated exactly through exp(L dt); the
stage weights are phi-type functions of z = L dt evaluated by averaging over a
circle in the complex plane around each z (Kassam-Trefethen), which avoids the
cancellation in the closed forms near z = 0 without switching to series.
"""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from . import kernels
from .params import ScaledParams
from .spectral import (
    FOUR_PI_SQ,
    GridSpec,
    SpectrumField,
    _nonlinear,
    linear_symbol_grid,
)

__all__ = [
    "StepperConfig",
    "EtdTableau",
    "ConfigurationError",
    "BlowUpError",
    "BLOWUP_L2",
    "build_tableau",
    "step",
    "trajectory",
    "integrate",
]

BLOWUP_L2 = 1e6


class ConfigurationError(ValueError):
    pass


class BlowUpError(RuntimeError):
    """The solution stopped being finite or exceeded the L2 ceiling."""

    def __init__(self, t, step, l2, state=None):
        super().__init__(f"blow-up at t={t!r} (step {step}): ||eta||_L2 = {l2!r}")
        self.t = t
        self.step = step
        self.l2 = l2
        self.state = state


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    contour_points: int = 32
    contour_radius: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if int(self.contour_points) != self.contour_points or self.contour_points < 16:
            raise ConfigurationError(
                f"contour_points must be an integer >= 16, got {self.contour_points}"
            )
        object.__setattr__(self, "contour_points", int(self.contour_points))
        if not (math.isfinite(self.contour_radius) and self.contour_radius > 0):
            raise ConfigurationError(f"contour_radius must be positive, got {self.contour_radius}")


@dataclass(frozen=True, eq=False)
class EtdTableau:
    grid: GridSpec
    params: ScaledParams
    config: StepperConfig
    linear: np.ndarray
    E: np.ndarray
    E2: np.ndarray
    Q: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray

    @property
    def dt(self):
        return self.config.dt


def _contour_weights(z, dt, points, radius):
    nodes = radius * np.exp(2j * np.pi * (np.arange(points) + 0.5) / points)
    acc = [np.zeros(z.shape, dtype=np.complex128) for _ in range(4)]
    with np.errstate(all="ignore"):
        for r in nodes:
            zk = z + r
            ez = np.exp(zk)
            z3 = zk**3
            acc[0] += (np.exp(zk / 2.0) - 1.0) / zk
            acc[1] += (-4.0 - zk + ez * (4.0 - 3.0 * zk + zk * zk)) / z3
            acc[2] += (2.0 + zk + ez * (zk - 2.0)) / z3
            acc[3] += (-4.0 - 3.0 * zk - zk * zk + ez * (4.0 - zk)) / z3
    weights = []
    for name, a in zip(("Q", "f1", "f2", "f3"), acc):
        w = dt * (a / points)
        if not np.all(np.isfinite(w)):
            raise ConfigurationError(
                f"non-finite ETD weight {name}; adjust contour_radius or dt"
            )
        # relative to max(1, |w|): for strongly growing modes the weights are
        # large and their rounding noise is too
        worst = float(np.max(np.abs(w.imag) / np.maximum(1.0, np.abs(w.real))))
        if worst > 1e-12:
            raise ConfigurationError(
                f"ETD weight {name} has imaginary part {worst:.2e}; contour too coarse"
            )
        weights.append(np.ascontiguousarray(w.real))
    return weights


@lru_cache(maxsize=16)
def build_tableau(params: ScaledParams, grid: GridSpec, cfg: StepperConfig) -> EtdTableau:
    """Per-mode ETD-RK4 coefficients for the fixed linear symbol and step."""
    L = np.ascontiguousarray(linear_symbol_grid(params, grid))
    z = L * cfg.dt
    with np.errstate(over="ignore"):
        E = np.exp(z)
        E2 = np.exp(z / 2.0)
    if not (np.all(np.isfinite(E)) and np.all(np.isfinite(E2))):
        raise ConfigurationError("exp(L dt) overflows; reduce dt")
    Q, f1, f2, f3 = _contour_weights(z, cfg.dt, cfg.contour_points, cfg.contour_radius)
    arrays = [L, E, E2, Q, f1, f2, f3]
    for a in arrays:
        a.flags.writeable = False
    return EtdTableau(grid, params, cfg, *arrays)


def _zero_nonlinear(u, grid):
    return np.zeros_like(u)


def _advance(u, tab, nonlinear):
    """One ETD-RK4 step on a raw coefficient array."""
    grid = tab.grid
    E, E2, Q = tab.E.ravel(), tab.E2.ravel(), tab.Q.ravel()
    f1, f2, f3 = tab.f1.ravel(), tab.f2.ravel(), tab.f3.ravel()
    shape = u.shape
    uf = u.ravel()

    Nu = nonlinear(u, grid).ravel()
    a = kernels.etd_stage(E2, uf, Q, Nu, np.empty_like(uf))
    Na = nonlinear(a.reshape(shape), grid).ravel()
    b = kernels.etd_stage(E2, uf, Q, Na, np.empty_like(uf))
    Nb = nonlinear(b.reshape(shape), grid).ravel()
    c = kernels.etd_stage_c(E2, a, Q, Nb, Nu, np.empty_like(uf))
    Nc = nonlinear(c.reshape(shape), grid).ravel()
    out = kernels.etd_final(E, uf, f1, Nu, f2, Na, Nb, f3, Nc, np.empty_like(uf))
    out = out.reshape(shape)
    out[0, 0] = 0.0
    return out


def _l2(u):
    return math.sqrt(FOUR_PI_SQ * float(np.vdot(u, u).real))


def _check(u, t, k):
    l2 = _l2(u)
    if not math.isfinite(l2) or l2 > BLOWUP_L2:
        raise BlowUpError(t, k, l2, u)
    return l2


def _require_dealiased(s):
    outside = s.coeffs[~s.grid.dealias_mask]
    if outside.size and np.any(outside != 0):
        raise ValueError("state must be dealiased before stepping")


def step(state: SpectrumField, tab: EtdTableau, *, linear_only=False, t=None) -> SpectrumField:
    """Advance ``state`` by one step of size ``tab.dt``."""
    if state.grid != tab.grid:
        raise ValueError("state and tableau live on different grids")
    _require_dealiased(state)
    u = state.coeffs.copy()
    u[0, 0] = 0.0
    out = _advance(u, tab, _zero_nonlinear if linear_only else _nonlinear)
    _check(out, t, 1)
    return SpectrumField(state.grid, out)


def trajectory(state: SpectrumField, tab: EtdTableau, n_steps: int, *, linear_only=False):
    """Yield ``(k, t, coeffs)`` for k = 0..n_steps.

    Yielded arrays are fresh and read-only.  Raises BlowUpError on the first
    non-finite state or one with ||eta||_L2 above BLOWUP_L2.
    """
    if state.grid != tab.grid:
        raise ValueError("state and tableau live on different grids")
    _require_dealiased(state)
    nonlinear = _zero_nonlinear if linear_only else _nonlinear
    u = state.coeffs.copy()
    u[0, 0] = 0.0
    u.flags.writeable = False
    yield 0, 0.0, u
    for k in range(1, n_steps + 1):
        u = _advance(u, tab, nonlinear)
        t = k * tab.dt
        _check(u, t, k)
        u.flags.writeable = False
        yield k, t, u


def _step_count(t_end, dt):
    ratio = t_end / dt
    n = int(math.floor(ratio + 1e-9))
    rest = t_end - n * dt
    if rest <= 1e-12 * max(1.0, t_end):
        rest = 0.0
    return n, rest


def integrate(state, params, cfg, t_end, observer=None, *, every=1, linear_only=False):
    """Integrate from t = 0 to ``t_end`` with fixed steps of ``cfg.dt``.

    ``observer(t, state)`` is called every ``every`` steps, including t = 0,
    and once more at ``t_end`` if that time was not already observed.  When
    ``t_end`` is not a multiple of dt the last partial step uses its own
    tableau.
    """
    if not t_end >= 0:
        raise ValueError(f"t_end must be >= 0, got {t_end}")
    if every < 1:
        raise ValueError("every must be >= 1")
    grid = state.grid
    tab = build_tableau(params, grid, cfg)
    n_full, rest = _step_count(t_end, cfg.dt)
    u = state.coeffs
    t = 0.0
    observed_last = False
    for k, t, u in trajectory(state, tab, n_full, linear_only=linear_only):
        observed_last = k % every == 0
        if observer is not None and observed_last:
            observer(t, SpectrumField(grid, u))
    if rest:
        last = build_tableau(
            params, grid, StepperConfig(rest, cfg.contour_points, cfg.contour_radius)
        )
        u = _advance(u, last, _zero_nonlinear if linear_only else _nonlinear)
        t = t_end
        _check(u, t, n_full + 1)
        observed_last = False
    final = SpectrumField(grid, u)
    if observer is not None and not observed_last:
        observer(t, final)
    return final
