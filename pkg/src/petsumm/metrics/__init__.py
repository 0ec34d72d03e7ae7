"""Reference-based and model-based summary quality metrics."""

from .normalize import normalize_text, tokenize
from .lexical import (bleu4, chrf, ngram_counts, rouge_l, rouge_n, token_f1)
from .embedding import HashTokenEncoder, greedy_match_f
from .genscore import adapt_scorer, gen_score, train_scorer
from .registry import (MetricDescriptor, MetricRegistry, MetricResult,
                       ScoreTable, default_registry, score_corpus)

__all__ = [
    "normalize_text", "tokenize", "ngram_counts",
    "rouge_n", "rouge_l", "bleu4", "chrf", "token_f1",
    "HashTokenEncoder", "greedy_match_f",
    "gen_score", "adapt_scorer", "train_scorer",
    "MetricDescriptor", "MetricResult", "MetricRegistry", "ScoreTable",
    "default_registry", "score_corpus",
]
