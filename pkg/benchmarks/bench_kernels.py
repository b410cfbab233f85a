"""Compare the compiled and numpy neighbor kernels.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-N wall time per kernel and backend and checks that both
backends return identical arrays.
"""
import argparse
import time

import numpy as np

from advos import _kernels_py

try:
    from advos import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def cases(rng):
    a = rng.uniform(size=(1500, 60))
    b = rng.uniform(size=(1000, 60))
    holes = a.copy()
    holes[rng.uniform(size=holes.shape) < 0.1] = np.nan
    small = rng.uniform(size=(100, 590))
    return [
        ("sq_distances 1500x1000x60", lambda m: m.sq_distances(a, b)),
        ("knn k=5 1500 in 1000x60", lambda m: m.knn_indices(a, b, 5, False)),
        ("knn k=5 self 1500x60", lambda m: m.knn_indices(a, a, 5, True)),
        ("nan_distances 1500x1500x60", lambda m: m.nan_distances(holes, holes)),
        ("nan_distances 100x100x590", lambda m: m.nan_distances(small, small)),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the numpy backend is available")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':32s} {'numpy s':>10s} {'cython s':>10s} {'speedup':>8s} identical")
    for name, call in cases(rng):
        t_py, out_py = best_of(lambda: call(_kernels_py), args.repeat)
        if _kernels is None:
            print(f"{name:32s} {t_py:10.4f} {'-':>10s} {'-':>8s} -")
            continue
        t_c, out_c = best_of(lambda: call(_kernels), args.repeat)
        same = np.array_equal(np.asarray(out_py), np.asarray(out_c))
        print(f"{name:32s} {t_py:10.4f} {t_c:10.4f} {t_py / t_c:8.2f} {same}")


if __name__ == "__main__":
    main()
