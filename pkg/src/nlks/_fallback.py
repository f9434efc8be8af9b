"""Pure-Python/NumPy versions of the compiled kernels in ``_kernels.pyx``."""
import math

import numpy as np


def etd_stage(E2, u, Q, N, out):
    np.multiply(E2, u, out=out)
    out += Q * N
    return out


def etd_stage_c(E2, a, Q, Nb, Nu, out):
    np.multiply(E2, a, out=out)
    out += Q * (2.0 * Nb - Nu)
    return out


def etd_final(E, u, f1, Nu, f2, Na, Nb, f3, Nc, out):
    np.multiply(E, u, out=out)
    out += f1 * Nu
    out += (2.0 * f2) * (Na + Nb)
    out += f3 * Nc
    return out


def compensated_sum(values):
    # fsum is exactly rounded, so it needs no ordering; the compiled path uses
    # Neumaier's loop instead.
    return math.fsum(values)


def count_row_critical(d, mu, zero_tol):
    rows, m = d.shape
    counts = np.zeros(rows, dtype=np.int64)
    covered = 0
    for r in range(rows):
        row = d[r]
        definite = np.flatnonzero(np.abs(row) > zero_tol)
        if definite.size == 0:
            covered += m
            continue
        start = definite[0]
        # walk offsets 1..m from `start`, keeping only samples with a sign
        offs = (definite - start) % m
        offs = np.sort(offs)
        offs = np.append(offs[1:], m)
        signs = np.sign(row[(start + offs) % m])
        prev = np.concatenate(([np.sign(row[start])], signs[:-1]))
        cross = offs[signs != prev]
        if cross.size == 0:
            if np.max(np.abs(row)) <= mu:
                covered += m
            continue
        bounds = np.append(cross, cross[0] + m)
        mag = np.abs(row)
        steep = np.empty(cross.size, dtype=bool)
        for k in range(cross.size):
            lo, hi = bounds[k], bounds[k + 1]
            peak = mag[(start + np.arange(lo, hi)) % m].max()
            steep[k] = peak > mu
            if not steep[k]:
                covered += int(hi - lo)
        counts[r] = int(np.count_nonzero(steep | np.roll(steep, 1)))
    return counts, covered
