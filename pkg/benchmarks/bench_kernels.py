"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from nof1._backend import compiled_kernels, python_kernels


def cases(rng):
    T, R = 200, 2000
    g = 0.65 ** np.arange(T) - 1.6 * 0.5 ** np.arange(T)
    g[64:] = 0.0
    q = np.zeros(T)
    q[:25] = 1.0
    x = (rng.random((R, T)) < 0.5).astype(np.uint8)
    z = (2 * x.astype(np.int8) - 1).astype(np.int8)
    y = rng.standard_normal((R, T))
    g12 = rng.standard_normal(12)
    q12 = rng.standard_normal(12)
    e12 = rng.standard_normal(12)
    return {
        "conv_linear T=4096": lambda k: k.conv_linear(rng_vec(4096), rng_vec(4096)),
        "linear_quadratic_terms T=1000": lambda k: k.linear_quadratic_terms(rng_vec(1000), rng_vec(1000)),
        "conv_linear_rows R=2000 T=200": lambda k: k.conv_linear_rows(x, g, 64),
        "lagged_cross R=2000 T=200 lags=25": lambda k: k.lagged_cross(z, y, 25, False),
        "enumerate_moments T=12": lambda k: k.enumerate_moments(g12, q12, e12, False),
    }


_VEC = {}


def rng_vec(n):
    if n not in _VEC:
        _VEC[n] = np.random.default_rng(n).standard_normal(n)
    return _VEC[n]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if compiled_kernels is None:
        print("compiled extension not built; nothing to compare")
        return 1
    print(f"{'kernel':<36} {'python ms':>10} {'cython ms':>10} {'speedup':>8}")
    for name, fn in cases(np.random.default_rng(0)).items():
        tp = min(timeit.repeat(lambda: fn(python_kernels), number=1, repeat=args.repeat)) * 1e3
        tc = min(timeit.repeat(lambda: fn(compiled_kernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<36} {tp:>10.3f} {tc:>10.3f} {tp / tc:>8.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
