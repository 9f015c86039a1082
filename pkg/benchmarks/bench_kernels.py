"""Compiled kernels vs the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from jacobispec import _backend
from jacobispec.model import make_family, truncate


def cases(rng):
    H = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
    H = 0.5 * (H + H.conj().T)
    T = truncate(make_family("example1", alpha=0.75, b=1.0), 4000)
    b, a2 = T.scalar_arrays()
    shifts = np.linspace(-50, 50, 256)
    tols = np.full(shifts.shape, 1e-12)
    P = truncate(make_family("prop6"), 1000)
    a, bb = make_family("step3", alpha=0.75, delta=1.0).scalar_coefficients(100_000)
    return {
        "jacobi_eigh 12x12": lambda k: k.jacobi_eigh(H),
        "scalar_negcounts N=4000 x 256 shifts": lambda k: k.scalar_negcounts(b, a2, shifts, tols),
        "block_negcount d=2 N=1000": lambda k: k.block_negcount(P.diag, P.offdiag, 0.37, 1e-12),
        "three_term N=1e5": lambda k: k.three_term(a, bb, 1.0, 1.0, 0.0, True),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if _backend.compiled_kernels is None:
        raise SystemExit("compiled extension not available; build with pip install -e .")
    rng = np.random.default_rng(0)
    backends = {"cython": _backend.compiled_kernels, "python": _backend.python_kernels}
    print(f"{'kernel':40s} {'cython [ms]':>12s} {'python [ms]':>12s} {'speedup':>8s}")
    for name, fn in cases(rng).items():
        t = {}
        for label, k in backends.items():
            number = 1 if label == "python" else 5
            t[label] = min(timeit.repeat(lambda: fn(k), number=number, repeat=args.repeat)) / number
        print(f"{name:40s} {1e3 * t['cython']:12.3f} {1e3 * t['python']:12.3f} "
              f"{t['python'] / t['cython']:8.1f}x")


if __name__ == "__main__":
    main()
