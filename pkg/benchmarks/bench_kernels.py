"""Time the compiled and numpy Jacobi kernels on batches of symbol samples.

    python benchmarks/bench_kernels.py [--grid 2048] [--repeat 5]

Each batch is a symbol evaluated on a theta grid, the workload of band
sampling. Times are the best of ``--repeat`` runs.
"""

import argparse
import time

import numpy as np

from specgap import _kernels
from specgap.eigensolver import eigh_batch
from specgap.model import SchrodingerSpec, schrodinger_symbol


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--grid", type=int, default=2048)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = _kernels.available_backends()
    theta = 2 * np.pi * np.arange(args.grid) / args.grid
    print(f"grid {args.grid}, best of {args.repeat}; backends: {', '.join(backends)}")
    print(f"{'p':>3} " + " ".join(f"{b:>10}" for b in backends) + "   speedup")
    for p in (2, 3, 4, 6, 8, 12):
        rng = np.random.default_rng(p)
        spec = SchrodingerSpec(np.sort(rng.uniform(-3, 3, p)), {1: 1.0, -2: 0.4})
        stack = schrodinger_symbol(spec).evaluate(theta)
        times = {}
        for name in backends:
            kernel = _kernels.get_kernel(name)
            times[name] = best_time(lambda: eigh_batch(stack, kernel=kernel), args.repeat)
        row = " ".join(f"{times[b] * 1e3:>8.2f}ms" for b in backends)
        speedup = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{p:>3} {row}   {speedup:7.1f}x")


if __name__ == "__main__":
    main()
