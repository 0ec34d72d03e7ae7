"""Deauville five-point score extraction and inter-text agreement.

Extraction is a rule cascade over impression text. Every hit carries
its evidence span and the rule that fired. When several scores appear,
a sentence framing the overall response wins; otherwise the maximum
mentioned score is taken, matching how multi-lesion reads are
summarized clinically.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateKappaError
from .stats import bootstrap_ci

_WORD_VALUES = {"one": 1, "two": 2, "three": 3, "four": 4, "five": 5}
_ROMAN_VALUES = {"i": 1, "ii": 2, "iii": 3, "iv": 4, "v": 5}

_VALUE = r"(?P<value>[1-5]\b|[iv]{1,3}\b|one\b|two\b|three\b|four\b|five\b)"
_LINK = r"(?:score|category|criteria|scale|rating)?\s*(?:of|is|was|=|:)?\s*"

# Ordered cascade; the first group is the rule id.
_RULES = [
    ("deauville_keyword",
     re.compile(r"\bdeauville\s*[-:]?\s*" + _LINK + _VALUE, re.IGNORECASE)),
    ("five_ps",
     re.compile(r"\b5[\s-]?ps\s*" + _LINK + _VALUE, re.IGNORECASE)),
    ("ds_abbrev",
     re.compile(r"\bds\s*[-=:]?\s*(?P<value>[1-5])\b", re.IGNORECASE)),
]

_OVERALL_RE = re.compile(r"\b(overall|global|summary)\b", re.IGNORECASE)
_SENTENCE_RE = re.compile(r"[^.!?\n]+[.!?]?")


@dataclass(frozen=True)
class DsEvidence:
    value: int
    start: int
    end: int
    text: str
    rule_id: str
    overall: bool


@dataclass
class DsExtraction:
    score: int | None
    evidence: list[DsEvidence] = field(default_factory=list)
    resolution: str = "none"


def _parse_value(raw: str) -> int | None:
    raw = raw.lower()
    if raw.isdigit():
        return int(raw)
    if raw in _WORD_VALUES:
        return _WORD_VALUES[raw]
    return _ROMAN_VALUES.get(raw)


def extract_ds(text: str) -> DsExtraction:
    """Pull a Deauville score from free text, if one is stated."""
    evidence: list[DsEvidence] = []
    for sentence_match in _SENTENCE_RE.finditer(text):
        sentence = sentence_match.group()
        offset = sentence_match.start()
        overall = bool(_OVERALL_RE.search(sentence))
        seen_spans: list[tuple[int, int]] = []
        for rule_id, pattern in _RULES:
            for m in pattern.finditer(sentence):
                span = (offset + m.start(), offset + m.end())
                if any(s < span[1] and span[0] < e for s, e in seen_spans):
                    continue
                value = _parse_value(m.group("value"))
                if value is None:
                    continue
                seen_spans.append(span)
                evidence.append(DsEvidence(value, span[0], span[1],
                                           m.group(), rule_id, overall))
    if not evidence:
        return DsExtraction(score=None, evidence=[], resolution="none")
    overall_hits = [e for e in evidence if e.overall]
    if overall_hits:
        return DsExtraction(score=overall_hits[-1].value, evidence=evidence,
                            resolution="overall")
    if len(evidence) == 1:
        return DsExtraction(score=evidence[0].value, evidence=evidence,
                            resolution="single")
    return DsExtraction(score=max(e.value for e in evidence),
                        evidence=evidence, resolution="max")


def filter_ds_cases(texts: Sequence[str]) -> list[int]:
    """Indices of texts that state a Deauville score."""
    return [i for i, t in enumerate(texts) if extract_ds(t).score is not None]


def weighted_kappa(a: Sequence[int], b: Sequence[int],
                   n_categories: int = 5) -> float:
    """Linearly weighted Cohen's kappa over 1..n_categories labels.

    Raises when chance-corrected agreement is undefined, i.e. both
    raters used one identical category throughout.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.shape != b.shape or a.ndim != 1 or len(a) == 0:
        raise ValueError("ratings must be equal-length non-empty sequences")
    for arr in (a, b):
        if arr.min() < 1 or arr.max() > n_categories:
            raise ValueError(f"ratings must lie in 1..{n_categories}")
    k = n_categories
    observed = np.zeros((k, k), dtype=np.float64)
    for x, y in zip(a, b):
        observed[x - 1, y - 1] += 1
    observed /= len(a)
    row = observed.sum(axis=1)
    col = observed.sum(axis=0)
    expected = np.outer(row, col)
    idx = np.arange(k, dtype=np.float64)
    weights = np.abs(idx[:, None] - idx[None, :]) / (k - 1)
    expected_disagreement = float((weights * expected).sum())
    if expected_disagreement == 0:
        raise DegenerateKappaError(
            "all ratings fall in a single category; kappa is undefined")
    observed_disagreement = float((weights * observed).sum())
    return 1.0 - observed_disagreement / expected_disagreement


@dataclass
class DsAgreement:
    n_total: int
    n_used: int
    n_ref_only: int
    n_cand_only: int
    n_neither: int
    accuracy: float
    accuracy_lo: float
    accuracy_hi: float
    kappa: float | None
    kappa_lo: float | None
    kappa_hi: float | None
    confusion: np.ndarray


def ds_agreement(reference_texts: Sequence[str],
                 candidate_texts: Sequence[str],
                 n_boot: int = 1000, seed: int = 0) -> DsAgreement:
    """Score agreement between reference and candidate impressions.

    Only pairs where both sides state a score enter accuracy and
    kappa; one-sided and absent cases are counted separately so the
    denominator is explicit.
    """
    if len(reference_texts) != len(candidate_texts):
        raise ValueError("reference and candidate lists differ in length")
    ref_scores = [extract_ds(t).score for t in reference_texts]
    cand_scores = [extract_ds(t).score for t in candidate_texts]
    pairs = [(r, c) for r, c in zip(ref_scores, cand_scores)]
    used = [(r, c) for r, c in pairs if r is not None and c is not None]
    n_ref_only = sum(1 for r, c in pairs if r is not None and c is None)
    n_cand_only = sum(1 for r, c in pairs if r is None and c is not None)
    n_neither = sum(1 for r, c in pairs if r is None and c is None)
    confusion = np.zeros((5, 5), dtype=np.int64)
    for r, c in used:
        confusion[r - 1, c - 1] += 1
    if not used:
        return DsAgreement(len(pairs), 0, n_ref_only, n_cand_only, n_neither,
                           float("nan"), float("nan"), float("nan"),
                           None, None, None, confusion)
    matches = np.array([float(r == c) for r, c in used])
    acc = bootstrap_ci(matches, n_boot=n_boot, seed=seed)
    refs = np.array([r for r, _ in used], dtype=np.int64)
    cands = np.array([c for _, c in used], dtype=np.int64)
    try:
        kappa = weighted_kappa(refs, cands)
    except DegenerateKappaError:
        kappa = None
    kappa_lo = kappa_hi = None
    if kappa is not None and len(used) > 1:
        rng = np.random.default_rng(seed + 1)
        resampled = []
        for _ in range(n_boot):
            idx = rng.integers(0, len(used), size=len(used))
            try:
                resampled.append(weighted_kappa(refs[idx], cands[idx]))
            except DegenerateKappaError:
                continue
        if resampled:
            kappa_lo, kappa_hi = (float(v) for v in
                                  np.percentile(resampled, [2.5, 97.5]))
    return DsAgreement(len(pairs), len(used), n_ref_only, n_cand_only,
                       n_neither, acc.point, acc.lo, acc.hi,
                       kappa, kappa_lo, kappa_hi, confusion)
