"""Lexical overlap metrics over the shared tokenization.

All scores live in [0, 1]. Degenerate inputs (either side empty after
tokenization) score 0.0 rather than raising, so corpus-level tables
stay rectangular.
"""

from __future__ import annotations

import math
from collections import Counter

import numpy as np

from .. import _kernels
from .normalize import tokenize


def ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _overlap(cand: Counter, ref: Counter) -> int:
    return sum(min(count, ref[gram]) for gram, count in cand.items())


def rouge_n(candidate: str, reference: str, n: int = 1) -> float:
    cand = tokenize(candidate)
    ref = tokenize(reference)
    cand_counts = ngram_counts(cand, n)
    ref_counts = ngram_counts(ref, n)
    total_cand = sum(cand_counts.values())
    total_ref = sum(ref_counts.values())
    if total_cand == 0 or total_ref == 0:
        return 0.0
    overlap = _overlap(cand_counts, ref_counts)
    return _f1(overlap / total_cand, overlap / total_ref)


def _token_ids(cand: list[str], ref: list[str]) -> tuple[np.ndarray, np.ndarray]:
    table: dict[str, int] = {}
    for tok in cand + ref:
        table.setdefault(tok, len(table))
    a = np.fromiter((table[t] for t in cand), dtype=np.int64, count=len(cand))
    b = np.fromiter((table[t] for t in ref), dtype=np.int64, count=len(ref))
    return a, b


def rouge_l(candidate: str, reference: str) -> float:
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0
    a, b = _token_ids(cand, ref)
    lcs = _kernels.lcs_length(a, b)
    return _f1(lcs / len(cand), lcs / len(ref))


def bleu4(candidate: str, reference: str) -> float:
    """BLEU with uniform 1-4 gram weights and brevity penalty.

    No smoothing: a missing n-gram order zeroes the score, which keeps
    the value exactly reproducible.
    """
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0
    log_sum = 0.0
    for n in range(1, 5):
        cand_counts = ngram_counts(cand, n)
        total = sum(cand_counts.values())
        if total == 0:
            return 0.0
        clipped = _overlap(cand_counts, ngram_counts(ref, n))
        if clipped == 0:
            return 0.0
        log_sum += 0.25 * math.log(clipped / total)
    if len(cand) >= len(ref):
        bp = 1.0
    else:
        bp = math.exp(1.0 - len(ref) / len(cand))
    return bp * math.exp(log_sum)


def _char_ngrams(text: str, n: int) -> Counter:
    chars = "".join(tokenize(text))
    return Counter(chars[i:i + n] for i in range(len(chars) - n + 1))


def chrf(candidate: str, reference: str, max_n: int = 6,
         beta: float = 2.0) -> float:
    """Character n-gram F-score averaged over orders 1..max_n."""
    beta2 = beta * beta
    scores = []
    for n in range(1, max_n + 1):
        cand_counts = _char_ngrams(candidate, n)
        ref_counts = _char_ngrams(reference, n)
        total_cand = sum(cand_counts.values())
        total_ref = sum(ref_counts.values())
        if total_cand == 0 and total_ref == 0:
            continue
        if total_cand == 0 or total_ref == 0:
            scores.append(0.0)
            continue
        overlap = _overlap(cand_counts, ref_counts)
        precision = overlap / total_cand
        recall = overlap / total_ref
        if precision + recall == 0:
            scores.append(0.0)
        else:
            scores.append((1 + beta2) * precision * recall
                          / (beta2 * precision + recall))
    if not scores:
        return 0.0
    return sum(scores) / len(scores)


def token_f1(candidate: str, reference: str) -> float:
    """Distinct-token overlap F1 (repeats ignored)."""
    cand = set(tokenize(candidate))
    ref = set(tokenize(reference))
    if not cand or not ref:
        return 0.0
    overlap = len(cand & ref)
    return _f1(overlap / len(cand), overlap / len(ref))
