"""Embedding-similarity metric with a deterministic hashed encoder.

The encoder needs no trained weights: each token hashes to a seed that
draws a fixed unit vector, so identical tokens match at cosine 1 and
the metric is reproducible across processes.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .normalize import tokenize


class HashTokenEncoder:
    """Maps tokens to unit vectors drawn from a token-keyed RNG."""

    def __init__(self, dim: int = 64, seed: int = 0):
        self.dim = dim
        self.seed = seed
        self._cache: dict[str, np.ndarray] = {}

    def encode(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            digest = hashlib.blake2b(f"{self.seed}:{token}".encode(),
                                     digest_size=8).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            vec = rng.standard_normal(self.dim)
            vec /= np.linalg.norm(vec)
            self._cache[token] = vec
        return vec

    def encode_all(self, tokens: list[str]) -> np.ndarray:
        if not tokens:
            return np.zeros((0, self.dim))
        return np.stack([self.encode(t) for t in tokens])


def greedy_match_f(candidate: str, reference: str,
                   encoder: HashTokenEncoder | None = None) -> float:
    """Greedy max-cosine token matching, combined as harmonic mean.

    Precision averages each candidate token's best match against the
    reference; recall mirrors it. Empty sides score 0.0.
    """
    encoder = encoder or HashTokenEncoder()
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0
    sims = encoder.encode_all(cand) @ encoder.encode_all(ref).T
    precision = float(np.mean(np.max(sims, axis=1)))
    recall = float(np.mean(np.max(sims, axis=0)))
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)
