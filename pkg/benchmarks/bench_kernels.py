"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from dcot import _fallback
from dcot._backend import compiled
from dcot.transport import gibbs_kernel


def cases(rng):
    for M, d in ((32, 32), (128, 32), (512, 64)):
        X, Y = rng.standard_normal((M, d)), rng.standard_normal((M, d))
        yield f"cosine_distance M={M} d={d}", "cosine_distance", (X, Y)
        yield f"euclidean_distance M={M} d={d}", "euclidean_distance", (X, Y)
        K = gibbs_kernel(_fallback.cosine_distance(X, Y), 20.0)
        a = np.full(M, 1.0 / M)
        yield f"sinkhorn_scaling M={M} (100 it)", "sinkhorn_scaling", (K, a, a, 100, 0.0)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    ext = compiled()
    if ext is None:
        print("compiled extension not available; build with `pip install -e . --no-build-isolation`")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for label, name, inputs in cases(rng):
        times = []
        for mod in (_fallback, ext):
            fn = getattr(mod, name)
            number = max(1, int(0.2 / max(timeit.timeit(lambda: fn(*inputs), number=1), 1e-6)))
            best = min(timeit.repeat(lambda: fn(*inputs), number=number, repeat=args.repeat)) / number
            times.append(best * 1e3)
        print(f"{label:34s} {times[0]:10.3f} {times[1]:10.3f} {times[0] / times[1]:7.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
