"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from gendersignal import _kernels
from gendersignal.matching import KDTree


def cases(rng):
    B, L, K, V, F = 64, 1014, 7, 69, 64
    idx = rng.integers(-1, V, size=(B, L)).astype(np.int16)
    wt = rng.normal(size=(K, V, F)).astype(np.float32)
    bias = np.zeros(F, dtype=np.float32)
    T = L - K + 1
    conv_out = np.empty((B, T, F), dtype=np.float32)
    dout = rng.normal(size=(B, T, F)).astype(np.float32)
    dwt = np.zeros_like(wt)

    p = 3
    n = T // p
    pool_out = np.empty((B, n, F), dtype=np.float32)
    arg = np.empty((B, n, F), dtype=np.int8)
    dpool = rng.normal(size=(B, n, F)).astype(np.float32)
    dx = np.zeros_like(dout)

    pts = rng.normal(size=(20000, 5))
    tree = KDTree(pts)
    q = rng.normal(size=(2000, 5))
    ex = np.full(2000, -1, dtype=np.int64)

    return {
        "onehot_conv_forward": lambda k: k.onehot_conv_forward(idx, wt, bias, conv_out),
        "onehot_conv_backward": lambda k: k.onehot_conv_backward(idx, dout, dwt),
        "maxpool_forward": lambda k: k.maxpool_forward(dout, p, pool_out, arg),
        "maxpool_backward": lambda k: k.maxpool_backward(dpool, arg, p, dx),
        "kdtree_query (2000 x 20000)": lambda k: k.kdtree_query(
            tree.points, tree.perm, tree.lo, tree.hi, tree.start, tree.end, tree.left, tree.right, q, ex),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [b for b in ("compiled", "python") if b in _kernels.BACKENDS]
    rng = np.random.default_rng(0)
    print(f"{'kernel':<30}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for name, fn in cases(rng).items():
        times = []
        for b in backends:
            k = _kernels.get_backend(b)
            n = 1 if b == "python" and name.startswith("kdtree") else args.repeat
            times.append(min(timeit.repeat(lambda: fn(k), number=1, repeat=n)))
        row = f"{name:<30}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[1] / times[0]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
