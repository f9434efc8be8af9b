import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlks import kernels
from nlks.kernels import available_backends, load_backend

BACKENDS = available_backends()
needs_both = pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")


def _cplx(rng, m):
    return rng.standard_normal(m) + 1j * rng.standard_normal(m)


def test_fallback_always_available():
    assert "python" in BACKENDS
    assert kernels.BACKEND in BACKENDS
    with pytest.raises(ValueError):
        load_backend("fortran")


@pytest.mark.parametrize("backend", BACKENDS)
def test_etd_kernels_formulae(backend):
    k = load_backend(backend)
    rng = np.random.default_rng(1)
    m = 37
    E, E2, Q, f1, f2, f3 = (rng.standard_normal(m) for _ in range(6))
    u, Nu, Na, Nb, Nc = (_cplx(rng, m) for _ in range(5))
    out = np.empty(m, complex)
    assert np.allclose(k.etd_stage(E2, u, Q, Nu, out), E2 * u + Q * Nu, rtol=1e-15, atol=0)
    assert np.allclose(k.etd_stage_c(E2, u, Q, Nb, Nu, out), E2 * u + Q * (2 * Nb - Nu), rtol=1e-15)
    want = E * u + f1 * Nu + 2 * f2 * (Na + Nb) + f3 * Nc
    assert np.allclose(k.etd_final(E, u, f1, Nu, f2, Na, Nb, f3, Nc, out), want, rtol=1e-14)


@needs_both
def test_etd_kernels_bitwise_equal_across_backends():
    rng = np.random.default_rng(2)
    m = 1000
    E, E2, Q, f1, f2, f3 = (rng.standard_normal(m) for _ in range(6))
    u, Nu, Na, Nb, Nc = (_cplx(rng, m) for _ in range(5))
    c, p = load_backend("cython"), load_backend("python")
    for name, args in (
        ("etd_stage", (E2, u, Q, Nu)),
        ("etd_stage_c", (E2, u, Q, Nb, Nu)),
        ("etd_final", (E, u, f1, Nu, f2, Na, Nb, f3, Nc)),
    ):
        a = getattr(c, name)(*args, np.empty(m, complex))
        b = getattr(p, name)(*args, np.empty(m, complex))
        assert np.array_equal(a, b), name


@pytest.mark.parametrize("backend", BACKENDS)
def test_compensated_sum_cancellation(backend):
    k = load_backend(backend)
    v = np.array([1e16, 1.0, -1e16, 1.0])
    assert k.compensated_sum(v) == 2.0
    assert k.compensated_sum(np.zeros(0)) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e12, 1e12), min_size=1, max_size=200))
def test_compensated_sum_close_to_exact(xs):
    v = np.array(xs)
    exact = math.fsum(xs)
    scale = float(np.sum(np.abs(v)))
    for b in BACKENDS:
        assert abs(load_backend(b).compensated_sum(v) - exact) <= 4e-16 * scale


def _rows(vals):
    return np.ascontiguousarray(np.atleast_2d(np.asarray(vals, dtype=float)))


@pytest.mark.parametrize("backend", BACKENDS)
def test_row_critical_cases(backend):
    k = load_backend(backend)
    x = 2 * np.pi * np.arange(64) / 64
    counts, covered = k.count_row_critical(_rows(np.cos(x)), 1.0 + 1e-12, 1e-12)
    assert list(counts) == [0] and covered == 64
    counts, covered = k.count_row_critical(_rows(2 * np.cos(x)), 1.0, 1e-12)
    assert list(counts) == [2] and covered == 0
    counts, covered = k.count_row_critical(_rows(np.zeros(64)), 1.0, 0.0)
    assert list(counts) == [0] and covered == 64
    # one steep lobe pair and one flat pair in the same row
    row = np.where(x < np.pi, 3 * np.sin(2 * x), 0.5 * np.sin(2 * x))
    counts, covered = k.count_row_critical(_rows(row), 1.0, 1e-12)
    assert list(counts) == [3]


@needs_both
@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31), rows=st.integers(1, 6), m=st.integers(4, 80),
       mu=st.floats(0.1, 3.0), exact_zeros=st.booleans())
def test_row_critical_backends_agree(seed, rows, m, mu, exact_zeros):
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((rows, m)) * 2
    if exact_zeros:
        d[rng.random((rows, m)) < 0.3] = 0.0
    d = np.ascontiguousarray(d)
    a = load_backend("cython").count_row_critical(d, mu, 1e-12)
    b = load_backend("python").count_row_critical(d, mu, 1e-12)
    assert np.array_equal(a[0], b[0]) and a[1] == b[1]


def test_env_var_forces_fallback():
    code = "import nlks.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, NLKS_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
