"""Compare the compiled kernel backend against the numpy fallback.

Runs the three hot kernels on both backends, checks they agree, and
prints per-call timings with the speedup. Exits nonzero when the
compiled extension is unavailable so CI can notice.

Usage: python benchmarks/bench_kernels.py [--repeats 20]
"""

import argparse
import sys
from time import perf_counter

import numpy as np

from petsumm._kernels import _pykernels

try:
    from petsumm._kernels import _ckernels
except ImportError:
    _ckernels = None


def timed(fn, *args, repeats: int) -> float:
    fn(*args)  # warmup
    start = perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (perf_counter() - start) / repeats


def bench(repeats: int) -> None:
    rng = np.random.default_rng(0)
    rows = []

    for n in (64, 256, 1024):
        a = rng.integers(0, 50, size=n)
        b = rng.integers(0, 50, size=n)
        assert _pykernels.lcs_length(a, b) == _ckernels.lcs_length(a, b)
        rows.append((f"lcs_length n={n}",
                     timed(_pykernels.lcs_length, a, b, repeats=repeats),
                     timed(_ckernels.lcs_length, a, b, repeats=repeats)))

    values = rng.normal(size=200)
    other = rng.normal(size=200)
    idx = rng.integers(0, 200, size=(10_000, 200))
    np.testing.assert_allclose(_pykernels.resample_means(values, idx),
                               _ckernels.resample_means(values, idx))
    rows.append(("resample_means 10k x 200",
                 timed(_pykernels.resample_means, values, idx,
                       repeats=repeats),
                 timed(_ckernels.resample_means, values, idx,
                       repeats=repeats)))
    np.testing.assert_allclose(
        _pykernels.resample_mean_diffs(values, other, idx),
        _ckernels.resample_mean_diffs(values, other, idx))
    rows.append(("resample_mean_diffs 10k x 200",
                 timed(_pykernels.resample_mean_diffs, values, other, idx,
                       repeats=repeats),
                 timed(_ckernels.resample_mean_diffs, values, other, idx,
                       repeats=repeats)))

    width = max(len(name) for name, _, _ in rows)
    print(f"{'kernel':<{width}}  {'numpy':>10}  {'compiled':>10}  speedup")
    for name, py_t, c_t in rows:
        print(f"{name:<{width}}  {py_t * 1e6:>8.1f}us  {c_t * 1e6:>8.1f}us"
              f"  {py_t / c_t:>6.2f}x")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=20,
                        help="timed calls per kernel (default 20)")
    args = parser.parse_args()
    if _ckernels is None:
        print("compiled extension not built; nothing to compare",
              file=sys.stderr)
        return 1
    bench(args.repeats)
    return 0


if __name__ == "__main__":
    sys.exit(main())
