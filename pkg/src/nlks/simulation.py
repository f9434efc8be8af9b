"""Problem setup and run orchestration."""
from collections import deque
from dataclasses import dataclass, field
import math
import os

import numpy as np

from .diagnostics import DiagnosticsTracker
from .etdrk4 import BlowUpError, ConfigurationError, StepperConfig, build_tableau, trajectory
from .params import PhysicalParams, ScaledParams, rescale
from .spectral import GridSpec, SpectrumField, _to_spectrum, dealias, sobolev_norm

__all__ = [
    "PhysicalParams",
    "ScaledParams",
    "RunConfig",
    "RunResult",
    "rescale",
    "standard_initial_condition",
    "run",
    "snapshot_stem",
]


def _odd_sine(n):
    """sin(2 pi j / n) with s[n - j] = -s[j] holding bit-for-bit."""
    j = np.arange(n // 2 + 1)
    half = np.sin(2.0 * np.pi * j / n)
    half[0] = 0.0
    half[n // 2] = 0.0
    s = np.empty(n)
    s[: n // 2 + 1] = half
    s[n // 2 + 1 :] = -half[1 : n // 2][::-1]
    return s


def standard_initial_condition(grid: GridSpec) -> SpectrumField:
    """eta0 = -sin x (sin y + exp(-y^2) cos y), sampled with y in [0, 2 pi).

    The x factor is built antisymmetric so the sampled field is exactly odd in
    x; the spectrum is then given zero mean and dealiased.
    """
    n = grid.n
    y = 2.0 * np.pi * np.arange(n) / n
    values = -_odd_sine(n)[:, None] * (np.sin(y) + np.exp(-(y * y)) * np.cos(y))[None, :]
    coeffs = _to_spectrum(values, grid)
    coeffs[0, 0] = 0.0
    return dealias(SpectrumField(grid, coeffs))


def _multiple(a, b, what):
    ratio = a / b
    k = round(ratio)
    if abs(ratio - k) > 1e-9 * max(1.0, abs(ratio)):
        raise ConfigurationError(f"{what}: {a!r} is not a multiple of {b!r}")
    return int(k)


@dataclass(frozen=True)
class RunConfig:
    """Everything one simulation needs.

    ``cadence`` is the observer spacing in time units and must be a multiple
    of dt that divides the step count.  Snapshots (binary field plus heatmap)
    are written at multiples of ``snapshot_interval`` and at ``t_end``.
    ``seed`` only feeds synthetic-field generators; the run itself is
    deterministic.
    """

    n: int
    stepper: StepperConfig
    params: ScaledParams
    t_end: float
    cadence: float = 0.5
    seed: int = 0
    output_dir: str | None = None
    mu: float = 1.0
    c_trilinear: float = 1.0
    transient_cut: float = 20.0
    refine: int = 4
    snapshot_interval: float = 20.0
    grid: GridSpec = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "grid", GridSpec(self.n))
        if not isinstance(self.params, ScaledParams):
            raise ConfigurationError("params must be ScaledParams; use rescale() for physical ones")
        if not (math.isfinite(self.t_end) and self.t_end >= 0):
            raise ConfigurationError(f"t_end must be >= 0, got {self.t_end}")
        if not self.cadence > 0:
            raise ConfigurationError(f"cadence must be positive, got {self.cadence}")
        if not self.mu > 0:
            raise ConfigurationError(f"mu must be positive, got {self.mu}")
        if not self.c_trilinear > 0:
            raise ConfigurationError(f"c_trilinear must be positive, got {self.c_trilinear}")
        if int(self.refine) != self.refine or self.refine < 1:
            raise ConfigurationError(f"refine must be a positive integer, got {self.refine}")
        if not self.snapshot_interval > 0:
            raise ConfigurationError("snapshot_interval must be positive")
        steps = self.n_steps
        every = self.sample_every
        if steps % every:
            raise ConfigurationError(
                f"cadence {self.cadence} does not divide t_end {self.t_end} in steps of {self.stepper.dt}"
            )
        _multiple(self.snapshot_interval, self.cadence, "snapshot_interval")

    @property
    def n_steps(self):
        return _multiple(self.t_end, self.stepper.dt, "t_end")

    @property
    def sample_every(self):
        return _multiple(self.cadence, self.stepper.dt, "cadence")

    @property
    def snapshot_every(self):
        return self.sample_every * _multiple(self.snapshot_interval, self.cadence, "snapshot_interval")


@dataclass
class RunResult:
    final: SpectrumField
    records: list
    files: list


def snapshot_stem(t):
    return f"eta_t{t:09.3f}"


def run(cfg: RunConfig, initial: SpectrumField | None = None):
    """Integrate ``cfg`` from the standard initial datum (or ``initial``).

    Returns ``(final_state, records)``.  Each record at an interior sample time
    carries the energy-balance residual from the neighbouring steps, which is
    why one extra step past ``t_end`` is taken when t_end > 0; the returned
    final state is the one at ``t_end``.  With ``output_dir`` set, the time
    series, snapshots and heatmaps are written there; on blow-up the partial
    series is written before the error propagates.
    """
    result = execute(cfg, initial)
    return result.final, result.records


def execute(cfg: RunConfig, initial: SpectrumField | None = None) -> RunResult:
    """Like ``run`` but also reports the files written."""
    from . import io

    grid = cfg.grid
    state = standard_initial_condition(grid) if initial is None else dealias(initial)
    if state.grid != grid:
        raise ConfigurationError("initial state lives on a different grid")
    tab = build_tableau(cfg.params, grid, cfg.stepper)
    tracker = DiagnosticsTracker(
        cfg.params,
        sobolev_norm(state, 0.0) ** 2,
        mu=cfg.mu,
        refine=cfg.refine,
        c_trilinear=cfg.c_trilinear,
        transient_cut=cfg.transient_cut,
    )
    n_steps, every, snap_every = cfg.n_steps, cfg.sample_every, cfg.snapshot_every
    dt = cfg.stepper.dt
    out_dir = cfg.output_dir
    records, files = [], []
    final = state

    def emit(k, t, prev, cur, nxt):
        s = SpectrumField(grid, cur)
        p = None if prev is None else SpectrumField(grid, prev)
        q = None if nxt is None else SpectrumField(grid, nxt)
        records.append(tracker.record(t, s, p, q, dt))
        if out_dir is not None and (k % snap_every == 0 or k == n_steps):
            files.extend(_write_fields(io, out_dir, s, t, cfg))

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)

    window = deque(maxlen=3)
    total = n_steps + 1 if n_steps else 0
    try:
        for k, t, u in trajectory(state, tab, total):
            window.append(u)
            if k == 0:
                emit(0, 0.0, None, u, None)
                continue
            j = k - 1
            if j >= 1 and j % every == 0:
                emit(j, (j // every) * cfg.cadence, window[0], window[1], window[2])
            if k == n_steps:
                final = SpectrumField(grid, u)
    except BlowUpError:
        if out_dir is not None and records:
            io.write_timeseries(records, os.path.join(out_dir, "timeseries.csv"))
        raise
    if out_dir is not None:
        path = os.path.join(out_dir, "timeseries.csv")
        io.write_timeseries(records, path)
        files.append(path)
    return RunResult(final, records, files)


def _write_fields(io, out_dir, state, t, cfg):
    stem = os.path.join(out_dir, snapshot_stem(t))
    written = io.write_snapshot(state, t, stem + ".bin", params=cfg.params)
    pgm = stem + ".pgm"
    io.render_heatmap(state, pgm)
    return list(written) + [pgm]
