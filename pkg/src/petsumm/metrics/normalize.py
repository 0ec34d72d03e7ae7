"""Shared text normalization for the lexical metrics.

Every overlap metric tokenizes through this module so that candidate
and reference are compared under one canonical form: casefolded,
punctuation split off, whitespace collapsed.
"""

from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:[.,][0-9]+)*|%")


def normalize_text(text: str) -> str:
    return " ".join(text.lower().split())


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens; decimals like '2.5' stay one token."""
    return _TOKEN_RE.findall(text.lower())
