"""Computable monitors for the analytical results about the equation.

Covers the L2 energy balance, absorbing-set monitoring, Gevrey norms with the
sigma(t) schedule, interpolation and trilinear inequalities, the
Gagliardo-Nirenberg type ratios, analyticity-radius estimation from spectral
decay, and critical-point (peak) counting.

Undefined quantities (too few shells, zero denominators, empty windows) come
back as NaN; Gevrey overflow raises ``GevreyOverflowError``.
"""
from dataclasses import asdict, dataclass, field
import math

import numpy as np
from scipy.signal import convolve2d

from . import kernels
from .spectral import (
    FOUR_PI_SQ,
    GevreyOverflowError,
    SpectrumField,
    _to_spectrum,
    _to_values,
    apply_lambda_power,
    derivative,
    gevrey_inner,
    interpolate,
    odd_residual,
    sobolev_norm,
)

__all__ = [
    "SigmaSchedule",
    "DiagnosticsRecord",
    "DiagnosticsTracker",
    "compute_T0",
    "energy_rhs",
    "energy_balance_residual",
    "gevrey_norm",
    "gevrey_interpolation_check",
    "trilinear_check",
    "gn_inequality_ratios",
    "analyticity_radius_estimate",
    "count_critical_points",
    "peak_bound",
    "absorbing_monitor",
    "RADIUS_CAP",
]

RADIUS_CAP = 10.0


@dataclass(frozen=True)
class SigmaSchedule:
    """sigma(t) = min(tanh t, tanh(T0/2)) with the constants that fix T0."""

    T0: float
    c_trilinear: float
    K: float
    D1: float
    D2: float
    D3: float
    D4: float

    def sigma(self, t):
        cap = math.tanh(self.T0 / 2.0)
        if np.ndim(t):
            return np.minimum(np.tanh(np.asarray(t, dtype=float)), cap)
        return min(math.tanh(t), cap)

    @property
    def sigma_max(self):
        return math.tanh(self.T0 / 2.0)


def compute_T0(params, eta0_l2_sq, c_trilinear=1.0):
    """T0 = 1 / (2 K (1 + ||eta0||^2)) with K = D1 + D2 + D3 + D4."""
    eps, beta, delta = params.epsilon, params.beta, params.delta
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    if eta0_l2_sq < 0:
        raise ValueError("eta0_l2_sq must be >= 0")
    if not c_trilinear > 0:
        raise ValueError("c_trilinear must be positive")
    D1 = (3.0 / (2.0 * eps)) ** (1.0 / 3.0)
    D2 = 9.0 * beta**2 / (4.0 * eps)
    D3 = (27.0 / (4.0 * eps)) ** 3 * delta**4
    D4 = 9.0 * c_trilinear**2 / (4.0 * eps)
    K = D1 + D2 + D3 + D4
    T0 = 1.0 / (2.0 * K * (1.0 + eta0_l2_sq))
    return SigmaSchedule(T0=T0, c_trilinear=c_trilinear, K=K, D1=D1, D2=D2, D3=D3, D4=D4)


def _sq(s):
    return sobolev_norm(s, 0.0) ** 2


def energy_rhs(state, params):
    """(beta-1)||eta_x||^2 - ||eta_y||^2 + delta||Lambda^{3/2} eta||^2 - eps||Delta eta||^2."""
    ex = _sq(derivative(state, "x", 1))
    ey = _sq(derivative(state, "y", 1))
    e32 = _sq(apply_lambda_power(state, 1.5))
    e2 = _sq(apply_lambda_power(state, 2.0))
    return (params.beta - 1.0) * ex - ey + params.delta * e32 - params.epsilon * e2


def energy_balance_residual(prev, cur, nxt, dt, params):
    """|central difference of ||eta||^2 / 2 at ``cur`` minus the spectral RHS|.

    The nonlinear term drops out of the balance, so it is not evaluated.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    d_half_energy = (0.5 * _sq(nxt) - 0.5 * _sq(prev)) / (2.0 * dt)
    return abs(d_half_energy - energy_rhs(cur, params))


def gevrey_norm(state, sigma):
    """||exp(sigma Lambda) eta||_L2; raises GevreyOverflowError."""
    return math.sqrt(max(gevrey_inner(state, state, sigma), 0.0))


def gevrey_interpolation_check(state, a, b, sigma):
    """Both sides of ||L^{a/2} eta||_s^2 <= ||L^{b/2} eta||_s^{2a/b} ||eta||_s^{2-2a/b}."""
    if not b > a >= 0:
        raise ValueError(f"need b > a >= 0, got a={a}, b={b}")
    lhs = gevrey_norm(apply_lambda_power(state, a / 2.0), sigma) ** 2
    top = gevrey_norm(apply_lambda_power(state, b / 2.0), sigma)
    base = gevrey_norm(state, sigma)
    theta = a / b
    rhs = top ** (2.0 * theta) * base ** (2.0 - 2.0 * theta)
    return lhs, rhs


def _centered_block(s, K):
    """Modes with |xi_i| <= K as a (2K+1)^2 array indexed by xi + K."""
    n = s.grid.n
    idx = np.arange(-K, K + 1) % n
    return s.coeffs[np.ix_(idx, idx)]


def _product_spectrum(s):
    """Spectrum of eta * eta_x by direct convolution of coefficients."""
    grid = s.grid
    n = grid.n
    K = grid.dealias_cutoff // 2
    mask = np.zeros((n, n), dtype=bool)
    keep = np.arange(-K, K + 1) % n
    mask[np.ix_(keep, keep)] = True
    if np.any(s.coeffs[~mask] != 0):
        raise ValueError("trilinear_check needs a field band-limited to half the dealias cutoff")
    A = _centered_block(s, K)
    ks = np.arange(-K, K + 1, dtype=float)
    B = 1j * ks[:, None] * A
    conv = convolve2d(A, B, mode="full")  # index l + 2K for |l_i| <= 2K
    out = np.zeros((n, n), dtype=np.complex128)
    lidx = np.arange(-2 * K, 2 * K + 1) % n
    out[np.ix_(lidx, lidx)] = conv
    return SpectrumField(grid, out)


def trilinear_check(state, sigma):
    """Return (lhs, rhs_without_c, ratio) for |<eta eta_x, eta>_s| <= c ||L eta||_s ||L^{1/2} eta||_s^2."""
    prod = _product_spectrum(state)
    lhs = abs(gevrey_inner(prod, state, sigma))
    rhs = gevrey_norm(apply_lambda_power(state, 1.0), sigma) * gevrey_norm(
        apply_lambda_power(state, 0.5), sigma
    ) ** 2
    ratio = lhs / rhs if rhs > 0 else 0.0
    return lhs, rhs, ratio


def gn_inequality_ratios(state, oversample=2):
    """Ratios ||grad eta||_{L4}^2 / D and ||Delta(eta^2)||_{L2} / D, D = ||eta||_inf ||Delta eta||_L2.

    Point values come from a zero-padded inverse transform with ``oversample``
    times more points per axis.  Returns (nan, nan) when D vanishes.
    """
    grid = state.grid
    m = oversample * grid.n
    cell = (2.0 * math.pi / m) ** 2
    eta = interpolate(state, oversample)
    ex = interpolate(derivative(state, "x", 1), oversample)
    ey = interpolate(derivative(state, "y", 1), oversample)
    sup = float(np.max(np.abs(eta)))
    lap = sobolev_norm(apply_lambda_power(state, 2.0), 0.0)
    denom = sup * lap
    if not denom > 0:
        return math.nan, math.nan
    grad_l4_sq = math.sqrt(cell * float(np.sum((ex * ex + ey * ey) ** 2)))
    # eta^2 on the fine grid, back to spectral space there
    k = np.fft.fftfreq(m, 1.0 / m)
    sq_hat = np.fft.fft2(eta * eta, norm="forward")
    lap_sq = (k[:, None] ** 2 + k[None, :] ** 2) * sq_hat
    lap_sq_l2 = math.sqrt(FOUR_PI_SQ * float(np.sum(np.abs(lap_sq) ** 2)))
    return grad_l4_sq / denom, lap_sq_l2 / denom


def analyticity_radius_estimate(state, floor=1e-14, min_shell=2, min_shells=4):
    """Exponential decay rate of the shell maxima of |c(xi)|.

    Fits log max_{|xi| in [r, r+1)} |c| against r over shells r >= 2 whose
    maximum exceeds ``floor``; returns the negated slope clamped to
    [0, RADIUS_CAP], or NaN with fewer than ``min_shells`` usable shells.
    """
    grid = state.grid
    shells = np.floor(grid.modulus).astype(np.int64).ravel()
    mags = np.abs(state.coeffs).ravel()
    peak = np.zeros(int(shells.max()) + 1)
    np.maximum.at(peak, shells, mags)
    r = np.arange(peak.size)
    use = (r >= min_shell) & (peak > floor)
    if np.count_nonzero(use) < min_shells:
        return math.nan
    slope = np.polyfit(r[use].astype(float), np.log(peak[use]), 1)[0]
    return float(min(max(-slope, 0.0), RADIUS_CAP))


def count_critical_points(state, mu=1.0, refine=4, rel_tol=1e-12):
    """Count zeros of d(eta)/dx per y-row outside the low-slope set.

    For every row y = 2 pi k / n the derivative is sampled on an x-grid refined
    ``refine`` times by spectral interpolation.  Its sign changes cut the row
    into lobes; lobes whose peak |d eta/dx| stays within ``mu`` form the flat
    set I_mu, the rest form R_mu.  A zero is counted when it borders a lobe of
    R_mu.  Returns ``(counts, coverage)`` where ``coverage`` is the fraction of
    samples lying in I_mu.

    ``rel_tol`` absorbs rounding: samples with |d| below rel_tol * max|d| are
    treated as zeros, and the flat threshold is mu * (1 + rel_tol).
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    if int(refine) != refine or refine < 1:
        raise ValueError("refine must be a positive integer")
    dx = interpolate(derivative(state, "x", 1), int(refine), 1)
    rows = np.ascontiguousarray(dx.T)  # one row per y
    scale = float(np.max(np.abs(rows), initial=0.0))
    counts, covered = kernels.count_row_critical(rows, mu * (1.0 + rel_tol), rel_tol * scale)
    return np.asarray(counts, dtype=np.int64), covered / rows.size


def peak_bound(schedule, gevrey_cap):
    """(4 pi / log 2) log(gevrey_cap) / tanh(T0 / 2)."""
    if not schedule.T0 > 0:
        raise ValueError("T0 must be positive")
    if not gevrey_cap > 1:
        raise ValueError("gevrey_cap must exceed 1")
    return 4.0 * math.pi / math.log(2.0) * math.log(gevrey_cap) / math.tanh(schedule.T0 / 2.0)


def absorbing_monitor(times, l2, transient_cut):
    """Sup of ||eta||_L2 after ``transient_cut`` and the least-squares slope there."""
    times = np.asarray(times, dtype=float)
    l2 = np.asarray(l2, dtype=float)
    window = times >= transient_cut
    if not np.any(window):
        return math.nan, math.nan
    sup = float(np.max(l2[window]))
    if np.count_nonzero(window) < 2:
        return sup, math.nan
    slope = float(np.polyfit(times[window], l2[window], 1)[0])
    return sup, slope


@dataclass
class DiagnosticsRecord:
    t: float
    l2_norm: float
    h1_norm: float
    h2_norm: float
    mean_residual: float
    odd_residual: float
    energy_balance_residual: float
    sigma_theory: float
    sigma_eff: float
    gevrey_norm: float
    gevrey_overflow: bool
    analyticity_radius_estimate: float
    peak_count_per_row: np.ndarray = field(repr=False)
    i_mu_coverage: float
    peak_bound_theoretical: float
    running_sup_l2_after_transient: float

    @property
    def peak_count_max(self):
        return int(np.max(self.peak_count_per_row, initial=0))

    def to_dict(self):
        d = asdict(self)
        d["peak_count_per_row"] = [int(c) for c in self.peak_count_per_row]
        d["peak_count_max"] = self.peak_count_max
        return d


class DiagnosticsTracker:
    """Builds DiagnosticsRecords along one trajectory.

    Holds the sigma schedule (fixed by the initial data) and the running
    maxima the peak bound and the absorbing-set monitor need.
    """

    def __init__(self, params, eta0_l2_sq, *, mu=1.0, refine=4, c_trilinear=1.0,
                 transient_cut=20.0):
        self.params = params
        self.mu = mu
        self.refine = refine
        self.transient_cut = transient_cut
        self.schedule = compute_T0(params, eta0_l2_sq, c_trilinear)
        self._sup_sq = eta0_l2_sq
        self._sup_after = math.nan

    def record(self, t, state, prev=None, nxt=None, dt=None):
        values = _to_values(state.coeffs, state.grid)
        l2 = sobolev_norm(state, 0.0)
        self._sup_sq = max(self._sup_sq, l2 * l2)
        if t >= self.transient_cut:
            self._sup_after = l2 if math.isnan(self._sup_after) else max(self._sup_after, l2)

        if prev is not None and nxt is not None and dt:
            energy = energy_balance_residual(prev, state, nxt, dt, self.params)
        else:
            energy = math.nan

        radius = analyticity_radius_estimate(state)
        sigma_t = float(self.schedule.sigma(t))
        sigma_eff = sigma_t if math.isnan(radius) else min(sigma_t, 0.9 * radius)
        try:
            gnorm, overflow = gevrey_norm(state, sigma_eff), False
        except GevreyOverflowError:
            gnorm, overflow = math.inf, True

        counts, coverage = count_critical_points(state, self.mu, self.refine)
        cap = 1.0 + 2.0 * self._sup_sq
        return DiagnosticsRecord(
            t=float(t),
            l2_norm=l2,
            h1_norm=sobolev_norm(state, 1.0),
            h2_norm=sobolev_norm(state, 2.0),
            mean_residual=abs(float(np.mean(values))),
            odd_residual=odd_residual(values),
            energy_balance_residual=energy,
            sigma_theory=sigma_t,
            sigma_eff=sigma_eff,
            gevrey_norm=gnorm,
            gevrey_overflow=overflow,
            analyticity_radius_estimate=radius,
            peak_count_per_row=counts,
            i_mu_coverage=coverage,
            peak_bound_theoretical=peak_bound(self.schedule, cap),
            running_sup_l2_after_transient=self._sup_after,
        )
