"""Time the compiled kernels against their pure-Python twins.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from coopcf import _purepy, build_codebook

try:
    from coopcf import _speedups
except ImportError:
    _speedups = None


def cases():
    rng = np.random.default_rng(0)
    L, M = 3, 2
    H = rng.rayleigh(size=(L, M))
    G = rng.rayleigh(size=(L, L)) * (1 - np.eye(L))
    V = np.full((L, M + 1), 0.5)
    A = np.array([[1, 0], [1, 1], [0, 1]], dtype=np.int64)
    in_B = np.ones(L, dtype=np.uint8)
    gains = rng.rayleigh(size=6)
    cb = build_codebook(8, 4, 2, 5, seed=0)
    reps = np.ascontiguousarray(cb.coset_reps("coding"))
    u = rng.uniform(-2, 2, size=8)
    out = np.zeros(8, dtype=np.int64)
    cands = rng.normal(size=(625, 8))
    return {
        "c_mac_unit (6 users)": lambda k: k.c_mac_unit(gains, 100.0),
        "coop_rate (3x2)": lambda k: k.coop_rate(H, G, 100.0, A, V, in_B),
        "nearest_coset_point (n=8, 625 cosets)": lambda k: k.nearest_coset_point(u, reps, 5, out),
        "nearest_row (625 x 8)": lambda k: k.nearest_row(cands, u),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=2000)
    args = ap.parse_args()
    impls = [("python", _purepy)] + ([("cython", _speedups)] if _speedups else [])
    print(f"{'kernel':40s}" + "".join(f"{n:>14s}" for n, _ in impls) + f"{'speedup':>10s}")
    for name, fn in cases().items():
        times = []
        for _, mod in impls:
            t = min(timeit.repeat(lambda: fn(mod), number=args.repeat, repeat=3)) / args.repeat
            times.append(t)
        ratio = f"{times[0] / times[1]:9.1f}x" if len(times) == 2 else ""
        print(f"{name:40s}" + "".join(f"{t * 1e6:11.2f} us" for t in times) + ratio)


if __name__ == "__main__":
    main()
