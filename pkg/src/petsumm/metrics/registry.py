"""Metric registry and corpus-level scoring tables.

Metrics register under a descriptor so callers can enumerate what is
installed, plug in their own, and score a corpus into a rectangular
table. Slots may be registered as unavailable (for scorers that need
assets this environment cannot provide); requesting one raises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from ..errors import MetricUnavailableError, UndefinedScoreError
from ..models import ModelBundle
from .embedding import HashTokenEncoder, greedy_match_f
from .genscore import gen_score
from .lexical import bleu4, chrf, rouge_l, rouge_n, token_f1

MetricFn = Callable[[str, str], float]


@dataclass(frozen=True)
class MetricDescriptor:
    name: str
    description: str
    higher_is_better: bool = True
    available: bool = True
    needs_model: bool = False
    unavailable_reason: str | None = None


@dataclass
class MetricResult:
    name: str
    value: float
    error: str | None = None


@dataclass
class ScoreTable:
    """Rectangular per-pair scores; gaps document every NaN cell."""
    metric_names: list[str]
    rows: list[dict[str, float]]
    gaps: list[tuple[int, str, str]] = field(default_factory=list)

    def column(self, name: str) -> list[float]:
        return [row[name] for row in self.rows]

    def means(self) -> dict[str, float]:
        out = {}
        for name in self.metric_names:
            values = [v for v in self.column(name) if not math.isnan(v)]
            out[name] = sum(values) / len(values) if values else float("nan")
        return out


class MetricRegistry:
    def __init__(self):
        self._descriptors: dict[str, MetricDescriptor] = {}
        self._fns: dict[str, MetricFn] = {}

    def register(self, descriptor: MetricDescriptor,
                 fn: MetricFn | None = None) -> None:
        if descriptor.available and fn is None:
            raise ValueError(f"metric {descriptor.name!r} needs a function")
        self._descriptors[descriptor.name] = descriptor
        if fn is not None:
            self._fns[descriptor.name] = fn

    def names(self, available_only: bool = True) -> list[str]:
        return [n for n, d in self._descriptors.items()
                if d.available or not available_only]

    def descriptor(self, name: str) -> MetricDescriptor:
        if name not in self._descriptors:
            raise KeyError(f"unknown metric {name!r}")
        return self._descriptors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._descriptors

    def compute(self, name: str, candidate: str, reference: str) -> MetricResult:
        desc = self.descriptor(name)
        if not desc.available:
            raise MetricUnavailableError(
                f"metric {name!r} is unavailable: {desc.unavailable_reason}")
        try:
            return MetricResult(name, float(self._fns[name](candidate, reference)))
        except UndefinedScoreError as exc:
            return MetricResult(name, float("nan"), error=str(exc))


def score_corpus(pairs: Sequence[tuple[str, str]], registry: MetricRegistry,
                 names: Sequence[str] | None = None) -> ScoreTable:
    """Score (candidate, reference) pairs on every requested metric.

    Explicitly naming an unavailable metric raises; undefined scores
    on individual pairs become NaN cells recorded in ``gaps``.
    """
    if names is None:
        names = registry.names(available_only=True)
    else:
        for name in names:
            desc = registry.descriptor(name)
            if not desc.available:
                raise MetricUnavailableError(
                    f"metric {name!r} is unavailable: {desc.unavailable_reason}")
    table = ScoreTable(metric_names=list(names), rows=[])
    for i, (candidate, reference) in enumerate(pairs):
        row = {}
        for name in names:
            result = registry.compute(name, candidate, reference)
            row[name] = result.value
            if result.error is not None:
                table.gaps.append((i, name, result.error))
        table.rows.append(row)
    return table


def default_registry(scorer: ModelBundle | None = None,
                     encoder: HashTokenEncoder | None = None) -> MetricRegistry:
    """Registry with the lexical family, the hashed-embedding metric,
    likelihood metrics when a scorer is supplied, and a knowledge-graph
    slot that stays unavailable here."""
    registry = MetricRegistry()
    registry.register(MetricDescriptor("rouge1", "unigram overlap F1"),
                      lambda c, r: rouge_n(c, r, 1))
    registry.register(MetricDescriptor("rouge2", "bigram overlap F1"),
                      lambda c, r: rouge_n(c, r, 2))
    registry.register(MetricDescriptor("rougeL", "longest-common-subsequence F1"),
                      rouge_l)
    registry.register(MetricDescriptor("bleu4", "4-gram precision with brevity penalty"),
                      bleu4)
    registry.register(MetricDescriptor("chrf", "character n-gram F-score"), chrf)
    registry.register(MetricDescriptor("token_f1", "distinct-token overlap F1"),
                      token_f1)
    enc = encoder or HashTokenEncoder()
    registry.register(
        MetricDescriptor("embed_greedy", "greedy cosine matching over hashed embeddings"),
        lambda c, r: greedy_match_f(c, r, enc))
    if scorer is not None:
        for direction, label in (("p", "candidate given reference"),
                                 ("r", "reference given candidate"),
                                 ("f", "bidirectional")):
            registry.register(
                MetricDescriptor(f"gen_{direction}",
                                 f"scorer mean log-likelihood, {label}",
                                 needs_model=True),
                lambda c, r, d=direction: gen_score(scorer, c, r, d))
    registry.register(
        MetricDescriptor("radgraph_f", "entity/relation graph overlap",
                         available=False,
                         unavailable_reason="requires a pretrained information "
                                            "extraction model not shipped here"))
    return registry
