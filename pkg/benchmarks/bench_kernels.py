"""Time the compiled kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--n 128] [--repeat 20]

Prints one line per kernel with the best-of-repeat time for each backend and
the speedup, then the wall time of a short full run under each backend.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from nlks.kernels import available_backends, load_backend


def _inputs(n, rng):
    m = n * n
    real = lambda: np.ascontiguousarray(rng.standard_normal(m))
    cplx = lambda: np.ascontiguousarray(rng.standard_normal(m) + 1j * rng.standard_normal(m))
    return real, cplx


def kernel_cases(n, rng):
    real, cplx = _inputs(n, rng)
    E, E2, Q, f1, f2, f3 = (real() for _ in range(6))
    u, Nu, Na, Nb, Nc, out = (cplx() for _ in range(6))
    terms = np.ascontiguousarray(rng.standard_normal(n * n) * np.logspace(0, 12, n * n))
    rows = np.ascontiguousarray(3.0 * np.sin(np.linspace(0, 40 * np.pi, 4 * n))[None, :].repeat(n, 0)
                                + 0.1 * rng.standard_normal((n, 4 * n)))
    return {
        "etd_stage": lambda k: k.etd_stage(E2, u, Q, Nu, out),
        "etd_stage_c": lambda k: k.etd_stage_c(E2, u, Q, Nb, Nu, out),
        "etd_final": lambda k: k.etd_final(E, u, f1, Nu, f2, Na, Nb, f3, Nc, out),
        "compensated_sum": lambda k: k.compensated_sum(terms),
        "count_row_critical": lambda k: k.count_row_critical(rows, 1.0, 1e-12),
    }


def best_time(fn, repeat):
    number = 5
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def run_wall(backend, n, t_end):
    code = (
        "import time\n"
        "from nlks import RunConfig, ScaledParams, StepperConfig, run, BACKEND\n"
        f"cfg = RunConfig(n={n}, stepper=StepperConfig(0.05), params=ScaledParams(2.0, 0.5, 1.0), t_end={t_end})\n"
        "t0 = time.perf_counter(); run(cfg); print(BACKEND, time.perf_counter() - t0)\n"
    )
    env = dict(os.environ, NLKS_PURE_PYTHON="1" if backend == "python" else "0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    name, secs = out.stdout.split()
    return name, float(secs)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--t-end", type=float, default=5.0)
    args = ap.parse_args(argv)

    backends = available_backends()
    print(f"backends: {', '.join(backends)}  n={args.n}")
    if "cython" not in backends:
        print("compiled extension not built; only the fallback can be timed")
    cases = kernel_cases(args.n, np.random.default_rng(0))
    print(f"{'kernel':<20}" + "".join(f"{b:>14}" for b in backends) + f"{'speedup':>10}")
    for name, call in cases.items():
        times = [best_time(lambda k=load_backend(b): call(k), args.repeat) for b in backends]
        line = f"{name:<20}" + "".join(f"{t * 1e6:>11.1f} us" for t in times)
        if len(times) == 2:
            line += f"{times[1] / times[0]:>9.2f}x"
        print(line)
    for b in backends:
        name, secs = run_wall(b, args.n, args.t_end)
        print(f"full run n={args.n} t_end={args.t_end}: {name:<7} {secs:.3f} s")


if __name__ == "__main__":
    main()
