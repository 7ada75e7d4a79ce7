#!/usr/bin/env python3
"""Compare the numpy and numba kernel implementations.

Times the scaling loops and the greedy assignment over a few problem
sizes, after a warmup pass so numba's compilation cost is not counted.
Run from the repository root:

    python3 benchmarks/kernel_bench.py
    python3 benchmarks/kernel_bench.py --sizes 64x256,256x1024 --repeat 5
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from time import perf_counter

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from claimcheck.curation.kernels import IMPLEMENTATIONS  # noqa: E402


def parse_sizes(raw: str) -> list[tuple[int, int]]:
    sizes = []
    for part in raw.split(","):
        n, m = part.lower().split("x")
        sizes.append((int(n), int(m)))
    return sizes


def bench(fn, args, repeat: int) -> float:
    fn(*args)  # warmup (and jit compile on first use)
    best = float("inf")
    for _ in range(repeat):
        start = perf_counter()
        fn(*args)
        best = min(best, perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="8x32,32x128,128x512,256x1024",
                        help="comma-separated NxM problem sizes")
    parser.add_argument("--repeat", type=int, default=3,
                        help="timed repetitions (best is reported)")
    parser.add_argument("--iters", type=int, default=200,
                        help="scaling iterations per call")
    options = parser.parse_args()

    names = list(IMPLEMENTATIONS)
    if len(names) == 1:
        print("only the numpy implementation is available "
              "(numba not importable); timing it alone")

    header = f"{'kernel':<12}{'size':<12}" + "".join(f"{n:>12}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))

    rng = np.random.default_rng(7)
    for n, m in parse_sizes(options.sizes):
        C = rng.uniform(0.0, 2.0, size=(n, m))
        K = np.exp(-C / 0.05)
        mu = np.full(n, 1.0 / n)
        nu = np.full(m, 1.0 / m)
        plan = rng.uniform(size=(n, m))
        cases = {
            "scale": lambda impl: (impl["scale"],
                                   (K, mu, nu, options.iters, 0.0)),
            "log_scale": lambda impl: (impl["log_scale"],
                                       (C, np.log(mu), np.log(nu), 0.05,
                                        options.iters, 0.0)),
            "greedy": lambda impl: (impl["greedy"], (plan,)),
        }
        for kernel, make in cases.items():
            times = []
            for name in names:
                fn, args = make(IMPLEMENTATIONS[name])
                times.append(bench(fn, args, options.repeat))
            row = f"{kernel:<12}{f'{n}x{m}':<12}"
            row += "".join(f"{t * 1e3:>10.2f}ms" for t in times)
            if len(times) == 2 and times[1] > 0:
                row += f"{times[0] / times[1]:>9.1f}x"
            print(row)


if __name__ == "__main__":
    main()
