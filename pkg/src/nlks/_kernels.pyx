# cython: language_level=3
"""Compiled inner loops.

Every function here has a pure-Python twin in ``_fallback`` with the same
signature; ``nlks.kernels`` picks one at import time.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


cdef object _flat(x):
    # complex128 seen as interleaved (re, im) doubles; keeps the loops real so
    # no complex multiply (and its inf/nan special-casing) is emitted
    return np.asarray(x).view(np.float64)


def etd_stage(const double[::1] E2, u, const double[::1] Q, N, out):
    """out = E2*u + Q*N"""
    cdef const double[::1] uf = _flat(u)
    cdef const double[::1] nf = _flat(N)
    cdef double[::1] of = _flat(out)
    cdef Py_ssize_t i, k, m = E2.shape[0]
    if uf.shape[0] != 2 * m or nf.shape[0] != 2 * m or of.shape[0] != 2 * m:
        raise ValueError("length mismatch")
    with nogil:
        for k in range(m):
            i = 2 * k
            of[i] = E2[k] * uf[i] + Q[k] * nf[i]
            of[i + 1] = E2[k] * uf[i + 1] + Q[k] * nf[i + 1]
    return out


def etd_stage_c(const double[::1] E2, a, const double[::1] Q, Nb, Nu, out):
    """out = E2*a + Q*(2*Nb - Nu)"""
    cdef const double[::1] af = _flat(a)
    cdef const double[::1] bf = _flat(Nb)
    cdef const double[::1] uf = _flat(Nu)
    cdef double[::1] of = _flat(out)
    cdef Py_ssize_t i, k, j, m = E2.shape[0]
    if (af.shape[0] != 2 * m or bf.shape[0] != 2 * m or uf.shape[0] != 2 * m
            or of.shape[0] != 2 * m):
        raise ValueError("length mismatch")
    with nogil:
        for k in range(m):
            for j in range(2):
                i = 2 * k + j
                of[i] = E2[k] * af[i] + Q[k] * (2.0 * bf[i] - uf[i])
    return out


def etd_final(const double[::1] E, u, const double[::1] f1, Nu,
              const double[::1] f2, Na, Nb, const double[::1] f3, Nc, out):
    """out = E*u + f1*Nu + 2*f2*(Na + Nb) + f3*Nc"""
    cdef const double[::1] xf = _flat(u)
    cdef const double[::1] pf = _flat(Nu)
    cdef const double[::1] af = _flat(Na)
    cdef const double[::1] bf = _flat(Nb)
    cdef const double[::1] cf = _flat(Nc)
    cdef double[::1] of = _flat(out)
    cdef Py_ssize_t i, k, j, m = E.shape[0]
    for arr in (xf, pf, af, bf, cf, of):
        if arr.shape[0] != 2 * m:
            raise ValueError("length mismatch")
    with nogil:
        for k in range(m):
            for j in range(2):
                i = 2 * k + j
                of[i] = (E[k] * xf[i] + f1[k] * pf[i]
                         + (2.0 * f2[k]) * (af[i] + bf[i]) + f3[k] * cf[i])
    return out


def compensated_sum(const double[::1] values):
    """Neumaier-compensated sum, accumulated in array order."""
    cdef Py_ssize_t i, m = values.shape[0]
    cdef double s = 0.0, c = 0.0, t, v
    with nogil:
        for i in range(m):
            v = values[i]
            t = s + v
            if fabs(s) >= fabs(v):
                c += (s - t) + v
            else:
                c += (v - t) + s
            s = t
    return s + c


def count_row_critical(const double[:, ::1] d, double mu, double zero_tol):
    """Count slope sign changes per row that border a steep lobe.

    Each row is a periodic sample of a derivative.  Sign changes split the row
    into lobes; a lobe whose peak |d| is at most ``mu`` is flat.  A sign change
    is counted when at least one neighbouring lobe is steep.  Returns the
    per-row counts and the total number of samples lying in flat lobes.
    """
    cdef Py_ssize_t rows = d.shape[0], m = d.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts = np.zeros(rows, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cross = np.empty(m + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] steep = np.empty(m + 1, dtype=np.uint8)
    cdef Py_ssize_t r, j, k, idx, start, ncross, nlobe, lo, hi
    cdef long long covered = 0
    cdef int cs, s
    cdef double v, peak
    for r in range(rows):
        # first sample with a definite sign
        start = -1
        for j in range(m):
            if fabs(d[r, j]) > zero_tol:
                start = j
                break
        if start < 0:
            covered += m
            continue
        cs = 1 if d[r, start] > 0 else -1
        ncross = 0
        for k in range(1, m + 1):
            idx = (start + k) % m
            v = d[r, idx]
            if fabs(v) <= zero_tol:
                continue
            s = 1 if v > 0 else -1
            if s != cs:
                # lobes are measured in offsets from `start`
                cross[ncross] = k
                ncross += 1
                cs = s
        if ncross == 0:
            peak = 0.0
            for j in range(m):
                if fabs(d[r, j]) > peak:
                    peak = fabs(d[r, j])
            if peak <= mu:
                covered += m
            continue
        # lobe i spans offsets [cross[i], cross[i+1]) with wrap-around
        nlobe = ncross
        cross[ncross] = cross[0] + m
        for k in range(nlobe):
            lo = cross[k]
            hi = cross[k + 1]
            peak = 0.0
            for j in range(lo, hi):
                v = fabs(d[r, (start + j) % m])
                if v > peak:
                    peak = v
            steep[k] = 1 if peak > mu else 0
            if not steep[k]:
                covered += hi - lo
        # crossing k separates lobe k-1 and lobe k
        for k in range(ncross):
            if steep[k] or steep[(k - 1 + nlobe) % nlobe]:
                counts[r] += 1
    return counts, covered
