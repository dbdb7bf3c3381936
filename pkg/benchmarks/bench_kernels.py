"""Time the numba kernels against their numpy twins.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is warmed up once (so numba compilation is excluded) and the
best of ``--repeat`` wall-clock timings is reported. The two paths are also
checked for agreement.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from copula_hmm._kernels import empirical_copula_at_points, forward_backward_kernel, numba_enabled


def best_time(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def fb_case(T, K, rng):
    log_b = rng.normal(size=(T, K))
    g = rng.dirichlet(np.ones(K), size=K)
    pi = rng.dirichlet(np.ones(K))
    return log_b, np.log(pi), np.log(g)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if not numba_enabled():
        print("numba path unavailable (CHMM_DISABLE_NUMBA set or numba missing); timing numpy only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<28}{'size':>14}{'numpy [s]':>12}{'numba [s]':>12}{'speed-up':>10}{'max diff':>11}")
    for T, K in [(500, 2), (5000, 3), (20000, 5)]:
        args_fb = fb_case(T, K, rng)
        t_np = best_time(lambda: forward_backward_kernel(*args_fb, use_numba=False), args.repeat)
        t_nb = best_time(lambda: forward_backward_kernel(*args_fb, use_numba=True), args.repeat)
        u0, _, _ = forward_backward_kernel(*args_fb, use_numba=False)
        u1, _, _ = forward_backward_kernel(*args_fb, use_numba=True)
        diff = float(np.max(np.abs(u0 - u1)))
        print(f"{'forward_backward':<28}{f'T={T},K={K}':>14}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}{diff:>11.1e}")
    for n in [1000, 5000, 20000]:
        u = rng.uniform(size=(n, 2))
        t_np = best_time(lambda: empirical_copula_at_points(u, use_numba=False), args.repeat)
        t_nb = best_time(lambda: empirical_copula_at_points(u, use_numba=True), args.repeat)
        diff = float(np.max(np.abs(empirical_copula_at_points(u, use_numba=False)
                                   - empirical_copula_at_points(u, use_numba=True))))
        print(f"{'empirical_copula':<28}{f'n={n}':>14}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
