"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--size 1024]

Each kernel is warmed up once (JIT compile) before timing; the reported
figure is the best of ``--repeat`` runs.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from optodde import kernels


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n):
    rng = np.random.default_rng(0)
    cross, noise = rng.standard_normal((n, n // 4)), rng.random((n, n // 4))
    f = np.sign(rng.standard_normal((n, n // 4)))
    w = rng.random(n)
    m = n // 4
    u = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    x_in, x_out = np.linspace(-1, 1, m), np.linspace(-3, 3, n)
    yield ("row_weighted_sum",
           lambda: kernels._np_row_weighted_sum(cross, w),
           lambda: kernels._nb_row_weighted_sum(cross, w, parallel=True))
    yield ("fused_budget_sums",
           lambda: kernels._np_fused_budget_sums(cross, noise, f, w),
           lambda: kernels._nb_fused_budget_sums(cross, noise, f, w, parallel=True))
    yield ("dft_last_axis",
           lambda: kernels._np_dft_last_axis(u, x_in, x_out, 5.0, 0.01),
           lambda: kernels._nb_dft_last_axis(u, x_in, x_out, 5.0, 0.01))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=1024)
    args = ap.parse_args(argv)
    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':<20}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, np_fn, nb_fn in cases(args.size):
        t_np, t_nb = best_of(np_fn, args.repeat), best_of(nb_fn, args.repeat)
        print(f"{name:<20}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>10.2f}")


if __name__ == "__main__":
    main()
