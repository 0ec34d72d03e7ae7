"""Bootstrap intervals, paired exceedance tests, and rank correlation.

Resampling runs through the kernel backends (compiled when built,
numpy otherwise); index matrices are drawn here with a seeded PCG64 so
both backends see identical resamples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import UndefinedCorrelationError


@dataclass(frozen=True)
class BootstrapSummary:
    point: float
    lo: float
    hi: float
    n_boot: int
    alpha: float
    seed: int

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi


@dataclass(frozen=True)
class ExceedanceResult:
    exceedance: float
    significant: bool
    direction: str
    mean_diff: float
    lo: float
    hi: float
    n_boot: int
    seed: int


@dataclass(frozen=True)
class CorrelationResult:
    name: str
    rho: float
    n: int


@dataclass
class HumanScoreSet:
    """Per-reader quality scores aligned over one set of items."""
    reader_scores: dict[str, list[float]]

    def __post_init__(self):
        lengths = {len(v) for v in self.reader_scores.values()}
        if len(lengths) > 1:
            raise ValueError("readers scored different numbers of items")

    @property
    def n_items(self) -> int:
        return len(next(iter(self.reader_scores.values())))

    def consensus(self) -> list[float]:
        cols = np.array(list(self.reader_scores.values()), dtype=np.float64)
        return cols.mean(axis=0).tolist()


def _rank_with_ties(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        # tied values share the average of the ranks they span
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Rank correlation with average ranks for ties."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be equal-length 1-d sequences")
    if len(x) < 2:
        raise UndefinedCorrelationError("need at least two observations")
    rx = _rank_with_ties(x)
    ry = _rank_with_ties(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if denom == 0:
        raise UndefinedCorrelationError("constant input has no rank ordering")
    return float(rx @ ry) / denom


def _resample_indices(n: int, n_boot: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.integers(0, n, size=(n_boot, n), dtype=np.int64)


def bootstrap_ci(values: Sequence[float], n_boot: int = 10_000,
                 alpha: float = 0.05, seed: int = 0,
                 stat: str | Callable = "mean") -> BootstrapSummary:
    """Percentile bootstrap interval for a statistic of one sample."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or len(values) == 0:
        raise ValueError("values must be a non-empty 1-d sequence")
    idx = _resample_indices(len(values), n_boot, seed)
    if stat == "mean":
        stats = _kernels.resample_means(values, idx)
        point = float(values.mean())
    else:
        fn = {"median": np.median}.get(stat, stat)
        if not callable(fn):
            raise ValueError(f"unknown statistic {stat!r}")
        stats = np.array([fn(values[row]) for row in idx], dtype=np.float64)
        point = float(fn(values))
    lo, hi = np.percentile(stats, [100 * alpha / 2, 100 * (1 - alpha / 2)])
    return BootstrapSummary(point, float(lo), float(hi), n_boot, alpha, seed)


def paired_exceedance_test(a: Sequence[float], b: Sequence[float],
                           n_boot: int = 10_000, seed: int = 0,
                           threshold: float = 0.95) -> ExceedanceResult:
    """Paired bootstrap of mean(a - b) with a win-fraction decision.

    The exceedance is the fraction of resampled mean differences above
    zero, ties counted half, so identical groups land near 0.5. The
    difference is significant when exceedance reaches ``threshold``
    in either direction.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or len(a) == 0:
        raise ValueError("inputs must be equal-length non-empty 1-d sequences")
    idx = _resample_indices(len(a), n_boot, seed)
    diffs = _kernels.resample_mean_diffs(a, b, idx)
    exceedance = float(np.mean(diffs > 0) + 0.5 * np.mean(diffs == 0))
    significant = exceedance >= threshold or exceedance <= 1 - threshold
    if not significant:
        direction = "tie"
    else:
        direction = "a" if exceedance >= threshold else "b"
    lo, hi = np.percentile(diffs, [2.5, 97.5])
    return ExceedanceResult(exceedance, significant, direction,
                            float(np.mean(a - b)), float(lo), float(hi),
                            n_boot, seed)


def rank_metrics(metric_scores: dict[str, Sequence[float]],
                 human: HumanScoreSet) -> list[CorrelationResult]:
    """Order metrics by rank correlation against consensus human scores.

    Metrics whose correlation is undefined (constant output) are
    dropped rather than ranked.
    """
    consensus = human.consensus()
    results = []
    for name, scores in metric_scores.items():
        if len(scores) != len(consensus):
            raise ValueError(f"metric {name!r} scored {len(scores)} items, "
                             f"humans scored {len(consensus)}")
        try:
            rho = spearman_rho(scores, consensus)
        except UndefinedCorrelationError:
            continue
        results.append(CorrelationResult(name, rho, len(consensus)))
    results.sort(key=lambda r: r.rho, reverse=True)
    return results


def inter_reader_rho(human: HumanScoreSet) -> float:
    """Mean pairwise rank correlation between readers."""
    names = list(human.reader_scores)
    if len(names) < 2:
        raise UndefinedCorrelationError("need at least two readers")
    rhos = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            rhos.append(spearman_rho(human.reader_scores[names[i]],
                                     human.reader_scores[names[j]]))
    return float(np.mean(rhos))


@dataclass
class ModelGrid:
    """Min-max normalized model-by-metric table with best markers."""
    models: list[str]
    metrics: list[str]
    raw: np.ndarray
    normalized: np.ndarray
    stars: dict[str, str]
    circles: dict[str, str]

    def as_rows(self) -> list[dict]:
        out = []
        for i, model in enumerate(self.models):
            row = {"model": model}
            for j, metric in enumerate(self.metrics):
                row[metric] = float(self.normalized[i, j])
                if self.stars.get(metric) == model:
                    row[f"{metric}_marker"] = "star"
                elif self.circles.get(metric) == model:
                    row[f"{metric}_marker"] = "circle"
            out.append(row)
        return out


def compare_models(scores: dict[str, dict[str, float]],
                   higher_is_better: dict[str, bool] | None = None) -> ModelGrid:
    """Min-max normalize each metric column to [0, 1] across models.

    Stars mark the best model per metric and circles the runner-up,
    honoring metric direction. Constant columns normalize to 0.5.
    """
    models = list(scores)
    if not models:
        raise ValueError("no models to compare")
    metrics = list(scores[models[0]])
    for model in models:
        if list(scores[model]) != metrics:
            raise ValueError("models report different metric sets")
    raw = np.array([[scores[m][k] for k in metrics] for m in models],
                   dtype=np.float64)
    normalized = np.empty_like(raw)
    stars: dict[str, str] = {}
    circles: dict[str, str] = {}
    for j, metric in enumerate(metrics):
        col = raw[:, j]
        span = col.max() - col.min()
        if span == 0:
            normalized[:, j] = 0.5
        else:
            normalized[:, j] = (col - col.min()) / span
        better = (higher_is_better or {}).get(metric, True)
        order = np.argsort(-col if better else col, kind="stable")
        stars[metric] = models[order[0]]
        if len(models) > 1:
            circles[metric] = models[order[1]]
    return ModelGrid(models, metrics, raw, normalized, stars, circles)


@dataclass(frozen=True)
class StyleShiftReport:
    metric: str
    baseline_mean: float
    shifted_mean: float
    pct_change: float
    pct_lo: float
    pct_hi: float
    n_boot: int
    seed: int


def style_shift_report(baseline: Sequence[float], shifted: Sequence[float],
                       metric: str = "rougeL", n_boot: int = 10_000,
                       seed: int = 0) -> StyleShiftReport:
    """Percent change of a metric's mean between two evaluation sets.

    The sets are resampled independently, so they may differ in size.
    """
    baseline = np.asarray(baseline, dtype=np.float64)
    shifted = np.asarray(shifted, dtype=np.float64)
    if len(baseline) == 0 or len(shifted) == 0:
        raise ValueError("both score sets must be non-empty")
    if baseline.mean() == 0:
        raise ValueError("baseline mean of zero has no percent change")
    base_means = _kernels.resample_means(
        baseline, _resample_indices(len(baseline), n_boot, seed))
    shift_means = _kernels.resample_means(
        shifted, _resample_indices(len(shifted), n_boot, seed + 1))
    pct = (shift_means - base_means) / base_means * 100.0
    lo, hi = np.percentile(pct, [2.5, 97.5])
    point = float((shifted.mean() - baseline.mean()) / baseline.mean() * 100.0)
    return StyleShiftReport(metric, float(baseline.mean()),
                            float(shifted.mean()), point, float(lo),
                            float(hi), n_boot, seed)
