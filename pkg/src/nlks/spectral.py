"""Fourier representation of fields on the 2*pi torus and the spatial operators.

Coefficients are Fourier-series coefficients, so a field is

    eta(x, y) = sum_xi c(xi) exp(i xi . (x, y)),   c(xi) = (1/n^2) sum_grid ...

and the continuum L2 norm obeys ||eta||^2 = 4 pi^2 sum |c|^2.  Spectra are stored
as full ``n x n`` complex arrays in FFT order: ``coeffs[i1, i2]`` holds the mode
``(xi1, xi2)`` with ``xi = i`` for ``i < n/2`` and ``xi = i - n`` otherwise.
Axis 0 is x, axis 1 is y, both for spectra and for grid values.
"""
from dataclasses import dataclass
from functools import cached_property
import math
from typing import NamedTuple

import numpy as np

from . import kernels

__all__ = [
    "FOUR_PI_SQ",
    "GridSpec",
    "WaveVector",
    "GridField",
    "SpectrumField",
    "ConjugateSymmetryError",
    "GevreyOverflowError",
    "forward_transform",
    "inverse_transform",
    "apply_lambda_power",
    "derivative",
    "linear_symbol",
    "linear_symbol_grid",
    "nonlinear_term",
    "dealias",
    "sobolev_norm",
    "gevrey_inner",
    "interpolate",
    "odd_residual",
]

FOUR_PI_SQ = 4.0 * math.pi**2
_LOG_MAX = math.log(np.finfo(float).max)
_I_POWERS = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)


class ConjugateSymmetryError(ValueError):
    """A spectrum that should describe a real field is not Hermitian."""


class GevreyOverflowError(OverflowError):
    """A Gevrey-weighted sum does not fit in a double; use a smaller sigma."""

    def __init__(self, sigma, log_term):
        super().__init__(
            f"Gevrey sum overflows at sigma={sigma!r} (largest log-term {log_term:.1f})"
        )
        self.sigma = sigma
        self.log_term = log_term


def _readonly(a):
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class GridSpec:
    """Uniform ``n x n`` grid on [0, 2*pi)^2 and its wavenumber lattice."""

    n: int

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n:
            raise ValueError(f"grid size must be an integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if self.n < 8 or self.n % 2:
            raise ValueError(f"grid size must be even and >= 8, got {self.n}")

    @property
    def dealias_cutoff(self):
        """Largest retained |xi_i| under the 2/3 rule."""
        return self.n // 3

    @cached_property
    def wavenumbers(self):
        return _readonly(np.fft.fftfreq(self.n, 1.0 / self.n).round().astype(np.int64))

    @cached_property
    def xi1(self):
        return _readonly(np.broadcast_to(self.wavenumbers[:, None].astype(float), (self.n, self.n)).copy())

    @cached_property
    def xi2(self):
        return _readonly(np.broadcast_to(self.wavenumbers[None, :].astype(float), (self.n, self.n)).copy())

    @cached_property
    def modulus(self):
        return _readonly(np.sqrt(self.xi1**2 + self.xi2**2))

    @cached_property
    def dealias_mask(self):
        k = np.abs(self.wavenumbers) <= self.dealias_cutoff
        return _readonly(k[:, None] & k[None, :])

    @cached_property
    def neg_index(self):
        """Index of -xi along one axis."""
        return _readonly((-np.arange(self.n)) % self.n)

    @cached_property
    def shell_order(self):
        """Flat indices sorted by increasing |xi| (stable, so deterministic)."""
        return _readonly(np.argsort(self.modulus.ravel(), kind="stable"))

    @cached_property
    def _nl_half(self):
        # -(i xi1 / 2) on the retained modes, restricted to xi2 >= 0
        h = self.n // 2
        m = -0.5j * self.xi1 * self.dealias_mask
        return _readonly(np.ascontiguousarray(m[:, : h + 1]))

    def grid_points(self):
        x = 2.0 * math.pi * np.arange(self.n) / self.n
        return np.meshgrid(x, x, indexing="ij")


class WaveVector(NamedTuple):
    xi1: int
    xi2: int

    @property
    def modulus(self):
        return math.hypot(self.xi1, self.xi2)


@dataclass(frozen=True, eq=False)
class GridField:
    """Real point values; ``values[j, k] = eta(2 pi j / n, 2 pi k / n)``."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        n = self.grid.n
        if v.shape != (n, n):
            raise ValueError(f"expected values of shape {(n, n)}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        object.__setattr__(self, "values", _readonly(v))


@dataclass(frozen=True, eq=False)
class SpectrumField:
    """Fourier coefficients of a real field on the truncated lattice."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128, copy=True)
        n = self.grid.n
        if c.shape != (n, n):
            raise ValueError(f"expected coefficients of shape {(n, n)}, got {c.shape}")
        object.__setattr__(self, "coeffs", _readonly(c))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((grid.n, grid.n), dtype=np.complex128))

    @classmethod
    def from_modes(cls, grid, modes):
        """Build a real field from ``{(xi1, xi2): coefficient}``.

        The conjugate partner of each listed mode is filled in unless it is
        listed too.
        """
        n = grid.n
        c = np.zeros((n, n), dtype=np.complex128)
        for (k1, k2), value in modes.items():
            c[k1 % n, k2 % n] = value
        for (k1, k2), value in modes.items():
            if (-k1, -k2) not in modes:
                c[-k1 % n, -k2 % n] = np.conj(value)
        return cls(grid, c)

    def coeff(self, xi1, xi2):
        n = self.grid.n
        return self.coeffs[xi1 % n, xi2 % n]

    def symmetry_defect(self):
        """max |c(-xi) - conj(c(xi))|."""
        neg = self.grid.neg_index
        return float(np.max(np.abs(self.coeffs[np.ix_(neg, neg)] - np.conj(self.coeffs)), initial=0.0))

    def to_grid(self):
        return inverse_transform(self)

    def __add__(self, other):
        return SpectrumField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return SpectrumField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectrumField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


# -- array-level helpers shared with the integrator ---------------------------

def _hermitian_full(half, grid):
    """Expand an ``n x (n/2+1)`` half spectrum to an exactly Hermitian full one."""
    n = grid.n
    h = n // 2
    neg = grid.neg_index
    full = np.empty((n, n), dtype=np.complex128)
    full[:, : h + 1] = half
    full[:, h + 1 :] = np.conj(half[neg, h - 1 : 0 : -1])
    for col in (0, h):
        c = full[:, col]
        full[:, col] = 0.5 * (c + np.conj(c[neg]))
    return full


def _to_spectrum(values, grid):
    return _hermitian_full(np.fft.rfft2(values, norm="forward"), grid)


def _to_values(coeffs, grid):
    h = grid.n // 2
    return np.fft.irfft2(coeffs[:, : h + 1], s=(grid.n, grid.n), norm="forward")


def _nonlinear(coeffs, grid):
    v = _to_values(coeffs, grid)
    w = np.fft.rfft2(v * v, norm="forward")
    w *= grid._nl_half
    out = _hermitian_full(w, grid)
    out[0, 0] = 0.0
    return out


def _symbol(params, k1, k2):
    mod = np.hypot(k1, k2)
    return (params.beta - 1.0) * k1**2 - k2**2 + params.delta * mod**3 - params.epsilon * mod**4


# -- public operations --------------------------------------------------------

def forward_transform(g: GridField) -> SpectrumField:
    """Series coefficients of the trigonometric interpolant of ``g``.

    The mean is kept so that the transform round-trips every grid field; the
    operators below project it away.
    """
    return SpectrumField(g.grid, _to_spectrum(g.values, g.grid))


def inverse_transform(s: SpectrumField, *, tol=1e-10) -> GridField:
    scale = max(1.0, float(np.max(np.abs(s.coeffs), initial=0.0)))
    defect = s.symmetry_defect()
    if defect > tol * scale:
        raise ConjugateSymmetryError(
            f"spectrum is not conjugate-symmetric (defect {defect:.3e})"
        )
    return GridField(s.grid, _to_values(s.coeffs, s.grid))


def _apply(s, multiplier):
    c = s.coeffs * multiplier
    c[0, 0] = 0.0
    return SpectrumField(s.grid, c)


def apply_lambda_power(s: SpectrumField, p: float) -> SpectrumField:
    """Multiply by |xi|^p (the zero mode stays 0 for every p >= 0)."""
    if not (math.isfinite(p) and p >= 0):
        raise ValueError(f"power must be finite and >= 0, got {p}")
    with np.errstate(divide="ignore"):
        mult = s.grid.modulus**p
    return _apply(s, mult)


def derivative(s: SpectrumField, axis: str, order: int = 1) -> SpectrumField:
    """Spectral derivative d^order/d(axis)^order, axis in {"x", "y"}.

    For odd orders the Nyquist wavenumber is treated as 0, which is the
    derivative of the trigonometric interpolant sampled on the grid and keeps
    the result real.
    """
    if axis not in ("x", "y"):
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    if int(order) != order or order < 1:
        raise ValueError(f"order must be a positive integer, got {order}")
    order = int(order)
    k = s.grid.wavenumbers.astype(float)
    if order % 2:
        k = k.copy()
        k[s.grid.n // 2] = 0.0
    m1 = _I_POWERS[order % 4] * k**order
    mult = m1[:, None] if axis == "x" else m1[None, :]
    return _apply(s, mult)


def linear_symbol(params, xi: WaveVector) -> float:
    """(beta-1) xi1^2 - xi2^2 + delta |xi|^3 - epsilon |xi|^4."""
    return float(_symbol(params, float(xi[0]), float(xi[1])))


def linear_symbol_grid(params, grid: GridSpec) -> np.ndarray:
    return _symbol(params, grid.xi1, grid.xi2)


def dealias(s: SpectrumField) -> SpectrumField:
    return _apply(s, s.grid.dealias_mask)


def nonlinear_term(s: SpectrumField) -> SpectrumField:
    """Spectrum of -(1/2) d/dx (eta^2), pseudospectral and dealiased."""
    outside = s.coeffs[~s.grid.dealias_mask]
    if outside.size and np.any(outside != 0):
        raise ValueError("nonlinear_term needs a dealiased spectrum")
    return SpectrumField(s.grid, _nonlinear(s.coeffs, s.grid))


def sobolev_norm(s: SpectrumField, order: float = 0.0) -> float:
    """(4 pi^2 sum (1+|xi|^2)^order |c|^2)^(1/2)."""
    if order < 0:
        raise ValueError("order must be >= 0")
    a2 = np.abs(s.coeffs) ** 2
    if order:
        a2 = a2 * (1.0 + s.grid.modulus**2) ** order
    return math.sqrt(FOUR_PI_SQ * float(np.sum(a2)))


def gevrey_inner(u: SpectrumField, v: SpectrumField, sigma: float) -> float:
    """4 pi^2 sum exp(2 sigma |xi|) c_u conj(c_v), real part.

    Terms are accumulated in order of increasing |xi| with compensation.
    Raises GevreyOverflowError rather than returning inf.
    """
    if not sigma >= 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    grid = u.grid
    order = grid.shell_order
    w = (u.coeffs * np.conj(v.coeffs)).real.ravel()[order]
    mod = grid.modulus.ravel()[order]
    nz = w != 0.0
    if not np.any(nz):
        return 0.0
    expo = 2.0 * sigma * mod
    log_terms = expo[nz] + np.log(np.abs(w[nz])) + math.log(FOUR_PI_SQ)
    worst = float(np.max(log_terms))
    if worst > _LOG_MAX:
        raise GevreyOverflowError(sigma, worst)
    with np.errstate(over="ignore", invalid="ignore"):
        terms = (FOUR_PI_SQ * w) * np.exp(expo)
    bad = ~np.isfinite(terms)
    if np.any(bad):
        # weight alone overflows while the product still fits
        with np.errstate(divide="ignore"):
            terms[bad] = np.sign(w[bad]) * np.exp(expo[bad] + np.log(np.abs(FOUR_PI_SQ * w[bad])))
    total = kernels.compensated_sum(np.ascontiguousarray(terms))
    if not math.isfinite(total):
        raise GevreyOverflowError(sigma, worst)
    return float(total)


def _pad_axis(c, axis, m):
    n = c.shape[axis]
    h = n // 2
    shape = list(c.shape)
    shape[axis] = m
    out = np.zeros(shape, dtype=np.complex128)
    src = np.moveaxis(c, axis, 0)
    dst = np.moveaxis(out, axis, 0)
    dst[:h] = src[:h]
    dst[m - h + 1 :] = src[h + 1 :]
    # split the Nyquist mode so the refined field stays real
    dst[h] = 0.5 * src[h]
    dst[m - h] += 0.5 * src[h]
    return out


def interpolate(s: SpectrumField, factor_x: int = 1, factor_y: int | None = None) -> np.ndarray:
    """Sample the trigonometric interpolant on a grid refined by integer factors."""
    factor_y = factor_x if factor_y is None else factor_y
    if factor_x < 1 or factor_y < 1:
        raise ValueError("refinement factors must be >= 1")
    n = s.grid.n
    if factor_x == factor_y == 1:
        return _to_values(s.coeffs, s.grid)
    c = s.coeffs
    if factor_x > 1:
        c = _pad_axis(c, 0, factor_x * n)
    if factor_y > 1:
        c = _pad_axis(c, 1, factor_y * n)
    return np.fft.ifft2(c, norm="forward").real


def odd_residual(values: np.ndarray) -> float:
    """max |eta(x, y) + eta(2 pi - x, y)| over the grid."""
    mirrored = np.roll(values[::-1], 1, axis=0)
    return float(np.max(np.abs(values + mirrored)))
