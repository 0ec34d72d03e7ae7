"""Independent brute-force reference implementations.

Everything here is written the slow, obvious way (full DP tables,
explicit loops, direct formulas) so package code can be checked
against it. Counting logic is deliberately duplicated rather than
imported; only the shared tokenizer contract comes from the package.
"""

from __future__ import annotations

import math

import numpy as np

from petsumm.metrics.normalize import tokenize


def oracle_lcs(a, b) -> int:
    """Full-table LCS, no rolling rows."""
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[len(a)][len(b)]


def _count_ngrams(tokens, n):
    counts = {}
    for i in range(len(tokens) - n + 1):
        gram = tuple(tokens[i:i + n])
        counts[gram] = counts.get(gram, 0) + 1
    return counts


def oracle_rouge_n(candidate: str, reference: str, n: int) -> float:
    cand = tokenize(candidate)
    ref = tokenize(reference)
    cand_counts = _count_ngrams(cand, n)
    ref_counts = _count_ngrams(ref, n)
    total_cand = sum(cand_counts.values())
    total_ref = sum(ref_counts.values())
    if total_cand == 0 or total_ref == 0:
        return 0.0
    overlap = 0
    for gram, count in cand_counts.items():
        overlap += min(count, ref_counts.get(gram, 0))
    precision = overlap / total_cand
    recall = overlap / total_ref
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def oracle_rouge_l(candidate: str, reference: str) -> float:
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0
    lcs = oracle_lcs(cand, ref)
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def oracle_bleu(candidate: str, reference: str) -> float:
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0
    log_sum = 0.0
    for n in range(1, 5):
        cand_counts = _count_ngrams(cand, n)
        ref_counts = _count_ngrams(ref, n)
        total = sum(cand_counts.values())
        if total == 0:
            return 0.0
        clipped = 0
        for gram, count in cand_counts.items():
            clipped += min(count, ref_counts.get(gram, 0))
        if clipped == 0:
            return 0.0
        log_sum += 0.25 * math.log(clipped / total)
    if len(cand) >= len(ref):
        bp = 1.0
    else:
        bp = math.exp(1.0 - len(ref) / len(cand))
    return bp * math.exp(log_sum)


def oracle_rank(values) -> list[float]:
    """Average ranks via the definition: mean of 1-based positions of
    equal values in the sorted order."""
    sorted_vals = sorted(values)
    ranks = []
    for v in values:
        positions = [i + 1 for i, s in enumerate(sorted_vals) if s == v]
        ranks.append(sum(positions) / len(positions))
    return ranks


def oracle_spearman(x, y) -> float:
    rx = oracle_rank(list(x))
    ry = oracle_rank(list(y))
    n = len(rx)
    mx = sum(rx) / n
    my = sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    return cov / math.sqrt(vx * vy)


def oracle_weighted_kappa(a, b, k: int = 5) -> float:
    """Direct formula with explicit observed/expected sums."""
    n = len(a)
    observed = [[0.0] * k for _ in range(k)]
    for x, y in zip(a, b):
        observed[x - 1][y - 1] += 1.0 / n
    row = [sum(observed[i][j] for j in range(k)) for i in range(k)]
    col = [sum(observed[i][j] for i in range(k)) for j in range(k)]
    num = 0.0
    den = 0.0
    for i in range(k):
        for j in range(k):
            w = abs(i - j) / (k - 1)
            num += w * observed[i][j]
            den += w * row[i] * col[j]
    if den == 0:
        return float("nan")
    return 1.0 - num / den


def oracle_exceedance(a, b, n_trials: int, seed: int) -> float:
    """Plain-numpy paired bootstrap win fraction, ties counted half."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    diff = a - b
    rng = np.random.default_rng(seed)
    wins = 0.0
    for _ in range(n_trials):
        idx = rng.integers(0, len(diff), size=len(diff))
        m = diff[idx].mean()
        if m > 0:
            wins += 1.0
        elif m == 0:
            wins += 0.5
    return wins / n_trials


def oracle_greedy_rollout(bundle, example, max_new_tokens: int) -> list[int]:
    """Greedy decode by explicit argmax at each step, no beam code."""
    import torch
    import torch.nn.functional as F

    tokenizer = bundle.tokenizer
    model = bundle.model
    model.eval()
    out: list[int] = []
    with torch.no_grad():
        if bundle.arch == "encoder_decoder":
            src = torch.tensor([tokenizer.encode(example.input_text)])
            memory = model.encode(src)
            for _ in range(max_new_tokens):
                dec_in = torch.tensor([[tokenizer.bos_id] + out])
                logits = model.decode_logits(dec_in, memory)[0, -1].double()
                logits[tokenizer.pad_id] = float("-inf")
                logits[tokenizer.bos_id] = float("-inf")
                tok = int(torch.argmax(F.log_softmax(logits, dim=-1)))
                out.append(tok)
                if tok == tokenizer.eos_id:
                    break
        else:
            prompt = tokenizer.encode(example.input_text)
            for _ in range(max_new_tokens):
                ids = torch.tensor([prompt + out])
                logits = model(ids)[0, -1].double()
                logits[tokenizer.pad_id] = float("-inf")
                logits[tokenizer.bos_id] = float("-inf")
                tok = int(torch.argmax(F.log_softmax(logits, dim=-1)))
                out.append(tok)
                if tok == tokenizer.eos_id:
                    break
    return out
