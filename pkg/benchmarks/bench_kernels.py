"""Compare the compiled kernels with the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--sizes 256 1024 4096] [--repeat 200]

Both backends are imported directly (not through the dispatch module) so one
process can time them side by side.  Results are printed as a table of
microseconds per call and the speed-up of the compiled path.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from bergerflow import _kernels_py

try:
    from bergerflow import _kernels as _kernels_c
except ImportError:  # pragma: no cover - depends on the build
    _kernels_c = None


def _inputs(n: int):
    x = np.cumsum(np.full(n, 8.0 / n))
    w = np.diff(x, prepend=0.0)
    b = np.tanh(x)
    c = b * (1.0 - 0.3 * b * b)
    lnxi = 0.01 * np.sin(x)
    s = np.cumsum(np.exp(lnxi) * w)
    return w, b, c, lnxi, s


def bench(n: int, repeat: int) -> list[tuple[str, int, float, float]]:
    w, b, c, lnxi, s = _inputs(n)
    cases = {
        "rhs_kernel": lambda k: k.rhs_kernel(w, b, c, lnxi, 0, 1, 6),
        "deriv4": lambda k: k.deriv4(b, s, True, 0),
    }
    out = []
    for name, fn in cases.items():
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=repeat, repeat=3)) / repeat
        t_c = (min(timeit.repeat(lambda: fn(_kernels_c), number=repeat, repeat=3)) / repeat
               if _kernels_c is not None else float("nan"))
        out.append((name, n, t_py * 1e6, t_c * 1e6))
    return out


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 1024, 4096])
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args(argv)
    if _kernels_c is None:
        print("compiled extension not built; only the fallback is timed")
    print(f"{'kernel':<12}{'n':>7}{'python us':>12}{'cython us':>12}{'speed-up':>10}")
    for n in args.sizes:
        for name, nn, tp, tc in bench(n, args.repeat):
            print(f"{name:<12}{nn:>7}{tp:>12.1f}{tc:>12.1f}{tp / tc:>10.1f}")


if __name__ == "__main__":
    main()
