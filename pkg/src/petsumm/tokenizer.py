"""Whitespace word tokenizer for the toy models.

Tokens are whitespace-separated chunks, so bracketed style tokens stay
atomic and ``decode(encode(s))`` equals ``s`` up to whitespace
normalization. Vocabulary is built from a corpus; unknown words map to
``<unk>``.
"""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path
from typing import Iterable, Sequence

from .errors import TokenCollisionError

PAD, BOS, EOS, UNK = "<pad>", "<s>", "</s>", "<unk>"
SPECIALS = (PAD, BOS, EOS, UNK)


class WordTokenizer:

    def __init__(self, vocab: Sequence[str] | None = None):
        words = list(vocab) if vocab else []
        self._tokens: list[str] = list(SPECIALS) + [w for w in words if w not in SPECIALS]
        self._ids = {tok: i for i, tok in enumerate(self._tokens)}
        if len(self._ids) != len(self._tokens):
            raise ValueError("vocabulary contains duplicates")

    @classmethod
    def build(cls, texts: Iterable[str], min_freq: int = 1,
              extra_tokens: Sequence[str] = ()) -> "WordTokenizer":
        counts = Counter()
        for text in texts:
            counts.update(text.split())
        words = sorted(w for w, c in counts.items() if c >= min_freq)
        tok = cls(words)
        if extra_tokens:
            tok.add_tokens(extra_tokens)
        return tok

    @property
    def pad_id(self) -> int:
        return self._ids[PAD]

    @property
    def bos_id(self) -> int:
        return self._ids[BOS]

    @property
    def eos_id(self) -> int:
        return self._ids[EOS]

    @property
    def unk_id(self) -> int:
        return self._ids[UNK]

    def __len__(self):
        return len(self._tokens)

    def __contains__(self, token: str):
        return token in self._ids

    def token_to_id(self, token: str) -> int:
        return self._ids.get(token, self._ids[UNK])

    def id_to_token(self, idx: int) -> str:
        return self._tokens[idx]

    def add_tokens(self, tokens: Sequence[str]) -> list[int]:
        """Append new whole-word tokens; existing ones keep their id."""
        ids = []
        for token in tokens:
            if len(token.split()) != 1:
                raise TokenCollisionError(
                    f"token {token!r} is not a single whitespace-free word")
            if token not in self._ids:
                self._ids[token] = len(self._tokens)
                self._tokens.append(token)
            ids.append(self._ids[token])
        return ids

    def encode(self, text: str, add_bos: bool = False, add_eos: bool = False) -> list[int]:
        ids = [self.token_to_id(w) for w in text.split()]
        if add_bos:
            ids.insert(0, self.bos_id)
        if add_eos:
            ids.append(self.eos_id)
        return ids

    def decode(self, ids: Iterable[int], skip_special: bool = True) -> str:
        special_ids = {self.pad_id, self.bos_id, self.eos_id} if skip_special else set()
        return " ".join(self._tokens[i] for i in ids if i not in special_ids)

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps({"tokens": self._tokens}) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "WordTokenizer":
        tokens = json.loads(Path(path).read_text(encoding="utf-8"))["tokens"]
        tok = cls.__new__(cls)
        tok._tokens = list(tokens)
        tok._ids = {t: i for i, t in enumerate(tok._tokens)}
        return tok
