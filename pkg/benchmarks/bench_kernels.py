"""Time the compiled kernels against the numpy fallback on the same inputs.

Usage: ``python benchmarks/bench_kernels.py [--repeat N]``.  Prints one CSV
row per kernel: name, seconds per call for each backend, and the speedup.
"""
import argparse
import sys
import time

import numpy as np

from lodac.core import Instance, q_matrix
from lodac.kernels import compiled_backend, python_backend
from lodac.policy import Portfolio, optimal_restricted_policy


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n=50):
    inst = Instance.random(n, np.random.default_rng(0))
    z, sigma = np.ascontiguousarray(inst.z), np.ascontiguousarray(inst.sigma)
    sigma_inv = np.empty(n, dtype=np.int64)
    sigma_inv[sigma] = np.arange(n)
    table = np.array(optimal_restricted_policy(Portfolio(n, (1, 2, 6))).to_table(), dtype=np.int64)
    qmat = np.ascontiguousarray(q_matrix(n))
    small_q = np.ascontiguousarray(q_matrix(30))

    def episodes(kern, count=20):
        for seed in range(count):
            kern.rls_episode(table, z, sigma, sigma_inv, -1, np.random.PCG64(seed))

    def surrogate(kern, count=20):
        for seed in range(count):
            kern.surrogate_episode(table, qmat, -1, np.random.PCG64(seed))

    return {
        f"rls_episode x20 (n={n})": episodes,
        f"surrogate_episode x20 (n={n})": surrogate,
        "subset_runtimes (k=3, n=30)": lambda kern: kern.subset_runtimes(small_q, 3),
        f"best_subset (k=3, n={n})": lambda kern: kern.best_subset(qmat, 3, 2, n + 1),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    if compiled_backend is None:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1
    print("kernel;python_s;cython_s;speedup")
    for name, fn in cases().items():
        t_py = best_time(lambda: fn(python_backend), args.repeat)
        t_cy = best_time(lambda: fn(compiled_backend), args.repeat)
        print(f"{name};{t_py:.4g};{t_cy:.4g};{t_py / t_cy:.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
