"""Pure-Python (numpy) fallback for the compiled kernels.

Same contracts as ``_ckernels``. Callers pass pre-built index arrays, so
the two backends disagree at most in floating-point summation order.
"""

import numpy as np


def lcs_length(a, b):
    """Length of the longest common subsequence of two id sequences.

    Row-sweep DP: within a row, dropping the left-neighbor term and
    restoring it with a running max is exact because LCS rows are
    non-decreasing.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.size == 0 or b.size == 0:
        return 0
    prev = np.zeros(b.size + 1, dtype=np.int64)
    for tok in a:
        matched = np.where(b == tok, prev[:-1] + 1, 0)
        row = np.maximum(prev[1:], matched)
        np.maximum.accumulate(row, out=row)
        prev[1:] = row
    return int(prev[-1])


def resample_means(values, idx):
    """Per-row mean of ``values`` gathered at ``idx`` (trials, m)."""
    values = np.asarray(values, dtype=np.float64)
    return values[idx].mean(axis=1)


def resample_mean_diffs(a, b, idx):
    """Per-row mean of ``a - b`` over paired resample indices."""
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    return d[idx].mean(axis=1)
