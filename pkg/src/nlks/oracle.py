"""Slow reference implementations for validating the fast path on tiny grids.

Nothing here calls numpy.fft or the spectral module's transforms.  Transforms
are explicit double sums, multipliers are applied mode by mode from a freshly
enumerated lattice, the nonlinearity is a direct convolution and the
reference integrator is classical RK4 built on dense DFT matrices.
"""
from dataclasses import dataclass
import math

import numpy as np

from .spectral import GridField, GridSpec, SpectrumField, WaveVector

__all__ = [
    "OracleReport",
    "OracleInstabilityError",
    "MAX_N",
    "MAX_N_INTEGRATE",
    "compare_spectra",
    "compare_values",
    "naive_transform",
    "naive_inverse",
    "naive_multiplier",
    "naive_derivative",
    "naive_lambda_power",
    "naive_linear_symbol",
    "naive_nonlinear",
    "reference_integrate",
]

MAX_N = 16
MAX_N_INTEGRATE = 32


class OracleInstabilityError(ValueError):
    """The reference integrator's norm grew past 1e6: the configuration is rejected."""


@dataclass(frozen=True)
class OracleReport:
    max_abs_error: float
    location: object

    def __post_init__(self):
        if not self.max_abs_error >= 0:
            raise ValueError("max_abs_error must be >= 0")


def _signed(i, n):
    return i if 2 * i < n else i - n


def _unit_roots(n, sign):
    """exp(sign * 2 pi i m / n) for m = 0..n-1 from exact integer angles."""
    m = np.arange(n)
    ang = 2.0 * math.pi * m / n
    return np.cos(ang) + sign * 1j * np.sin(ang)


def _cap(n, limit):
    if n > limit:
        raise ValueError(f"oracle is limited to n <= {limit}, got {n}")


def compare_spectra(a: SpectrumField, b: SpectrumField) -> OracleReport:
    diff = np.abs(a.coeffs - b.coeffs)
    i1, i2 = np.unravel_index(int(np.argmax(diff)), diff.shape)
    n = a.grid.n
    return OracleReport(float(diff[i1, i2]), WaveVector(_signed(int(i1), n), _signed(int(i2), n)))


def compare_values(a, b) -> OracleReport:
    va = a.values if isinstance(a, GridField) else np.asarray(a)
    vb = b.values if isinstance(b, GridField) else np.asarray(b)
    diff = np.abs(va - vb)
    idx = np.unravel_index(int(np.argmax(diff)), diff.shape)
    return OracleReport(float(diff[idx]), tuple(int(i) for i in idx))


def naive_transform(g: GridField) -> SpectrumField:
    """c(k) = n^-2 sum_j g(j) exp(-2 pi i k.j / n), one mode at a time."""
    n = g.grid.n
    _cap(n, MAX_N)
    roots = _unit_roots(n, -1)
    j = np.arange(n)
    out = np.zeros((n, n), dtype=np.complex128)
    for k1 in range(n):
        for k2 in range(n):
            phase = roots[(k1 * j[:, None] + k2 * j[None, :]) % n]
            out[k1, k2] = np.sum(g.values * phase) / (n * n)
    return SpectrumField(g.grid, out)


def naive_inverse(s: SpectrumField) -> GridField:
    """g(j) = Re sum_k c(k) exp(2 pi i k.j / n), one grid point at a time."""
    n = s.grid.n
    _cap(n, MAX_N)
    roots = _unit_roots(n, +1)
    k = np.arange(n)
    out = np.zeros((n, n))
    for j1 in range(n):
        for j2 in range(n):
            phase = roots[(j1 * k[:, None] + j2 * k[None, :]) % n]
            out[j1, j2] = np.sum(s.coeffs * phase).real
    return GridField(s.grid, out)


def naive_multiplier(s: SpectrumField, symbol) -> SpectrumField:
    """Apply ``symbol(xi1, xi2)`` to every mode.

    A Nyquist coefficient stands for the pair of modes +n/2 and -n/2 of the
    real interpolant; it is split evenly between them, each half gets its own
    symbol value, and the halves are recombined.
    """
    n = s.grid.n
    _cap(n, MAX_N)
    h = n // 2
    out = np.zeros((n, n), dtype=np.complex128)
    for i1 in range(n):
        alts1 = (h, -h) if i1 == h else (_signed(i1, n),)
        for i2 in range(n):
            alts2 = (h, -h) if i2 == h else (_signed(i2, n),)
            share = 1.0 / (len(alts1) * len(alts2))
            acc = 0.0 + 0.0j
            for a in alts1:
                for b in alts2:
                    acc += share * complex(symbol(a, b))
            out[i1, i2] = acc * s.coeffs[i1, i2]
    return SpectrumField(s.grid, out)


def naive_derivative(s, axis, order=1):
    if axis == "x":
        return naive_multiplier(s, lambda a, b: (1j * a) ** order)
    if axis == "y":
        return naive_multiplier(s, lambda a, b: (1j * b) ** order)
    raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")


def naive_lambda_power(s, p):
    def sym(a, b):
        r = math.sqrt(a * a + b * b)
        return 0.0 if r == 0.0 else r**p

    return naive_multiplier(s, sym)


def _symbol_value(params, a, b):
    r2 = a * a + b * b
    return (params.beta - 1.0) * a * a - b * b + params.delta * r2**1.5 - params.epsilon * r2 * r2


def naive_linear_symbol(s, params):
    return naive_multiplier(s, lambda a, b: _symbol_value(params, a, b))


def naive_nonlinear(s: SpectrumField) -> SpectrumField:
    """-(i xi1 / 2) sum_j c(j) c(xi - j) by direct convolution.

    Both the input and the output are truncated to the retained lattice
    max(|xi1|, |xi2|) <= floor(n/3).
    """
    n = s.grid.n
    _cap(n, MAX_N)
    K = n // 3
    modes = [(a, b) for a in range(-K, K + 1) for b in range(-K, K + 1)]
    c = {(a, b): s.coeffs[a % n, b % n] for a, b in modes}
    out = np.zeros((n, n), dtype=np.complex128)
    for x1, x2 in modes:
        acc = 0.0 + 0.0j
        for j1, j2 in modes:
            partner = (x1 - j1, x2 - j2)
            if partner in c:
                acc += c[(j1, j2)] * c[partner]
        out[x1 % n, x2 % n] = -0.5j * x1 * acc
    return SpectrumField(s.grid, out)


def _dft_matrices(n):
    fwd = np.empty((n, n), dtype=np.complex128)
    inv = np.empty((n, n), dtype=np.complex128)
    rf, ri = _unit_roots(n, -1), _unit_roots(n, +1)
    for k in range(n):
        for j in range(n):
            fwd[k, j] = rf[(k * j) % n] / n
            inv[j, k] = ri[(k * j) % n]
    return fwd, inv


def reference_integrate(state: SpectrumField, params, dt_fine, t_end) -> SpectrumField:
    """Classical RK4 on the full right-hand side with a fixed small step.

    Requires n <= 32 and dt_fine <= 0.1 / (epsilon (n/2)^4).  The quadratic
    term is evaluated on the grid through dense DFT matrices and truncated to
    the retained lattice.  A last partial step lands exactly on ``t_end``.
    """
    grid = state.grid
    n = grid.n
    _cap(n, MAX_N_INTEGRATE)
    if not t_end >= 0:
        raise ValueError("t_end must be >= 0")
    limit = 0.1 / (params.epsilon * (n / 2) ** 4)
    if not 0 < dt_fine <= limit:
        raise OracleInstabilityError(f"dt_fine={dt_fine} violates the RK4 bound {limit:.3e}")

    K = n // 3
    signed = np.array([_signed(i, n) for i in range(n)], dtype=float)
    keep = (np.abs(signed) <= K)[:, None] & (np.abs(signed) <= K)[None, :]
    a, b = signed[:, None], signed[None, :]
    r2 = a * a + b * b
    lin = (params.beta - 1.0) * a * a - b * b + params.delta * r2**1.5 - params.epsilon * r2 * r2
    half_dx = np.where(keep, -0.5j * a, 0.0)
    fwd, inv = _dft_matrices(n)

    def rhs(c):
        v = (inv @ c @ inv.T).real
        w = fwd @ (v * v) @ fwd.T
        return lin * c + half_dx * w

    c = state.coeffs.copy()
    c[0, 0] = 0.0
    steps = int(math.floor(t_end / dt_fine + 1e-9))
    rest = t_end - steps * dt_fine
    schedule = [dt_fine] * steps
    if rest > 1e-12 * max(1.0, t_end):
        schedule.append(rest)
    for h in schedule:
        k1 = rhs(c)
        k2 = rhs(c + 0.5 * h * k1)
        k3 = rhs(c + 0.5 * h * k2)
        k4 = rhs(c + h * k3)
        c = c + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        norm = math.sqrt(4.0 * math.pi**2 * float(np.sum(np.abs(c) ** 2)))
        if not norm <= 1e6:
            raise OracleInstabilityError(f"reference RK4 norm reached {norm:.3e}")
    return SpectrumField(grid, c)
