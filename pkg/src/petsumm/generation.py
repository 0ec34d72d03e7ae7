"""Beam-search decoding for the toy bundles.

Beam scores are summed token log-probabilities; final ranking divides
by ``len ** length_penalty`` where ``len`` counts generated tokens
including the end-of-sequence token. When more than one beam is
requested a greedy rollout joins the final candidate pool, so the
returned score never falls below the greedy score.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import torch
import torch.nn.functional as F

from .errors import ConfigError
from .models import ModelBundle
from .prompts import ENCODER_DECODER, FormattedExample


@dataclass(frozen=True)
class DecodeConfig:
    num_beams: int = 4
    max_new_tokens: int = 256
    length_penalty: float = 1.0
    no_repeat_ngram: int = 3

    def __post_init__(self):
        if self.num_beams < 1:
            raise ConfigError("num_beams must be >= 1")
        if self.max_new_tokens < 1:
            raise ConfigError("max_new_tokens must be >= 1")
        if self.no_repeat_ngram < 0:
            raise ConfigError("no_repeat_ngram must be >= 0")


@dataclass
class Generation:
    report_id: str | None
    text: str
    token_ids: list[int] = field(default_factory=list)
    score: float = float("-inf")
    sum_logprob: float = float("-inf")
    truncated: bool = False
    finish_reason: str = "length"
    error: str | None = None


@dataclass
class _Beam:
    tokens: list[int]
    sum_logprob: float
    finished: bool = False


def _banned_next_tokens(tokens: Sequence[int], n: int) -> set[int]:
    """Tokens that would close a repeated n-gram in ``tokens``."""
    if n <= 0 or len(tokens) < n - 1:
        return set()
    prefix = tuple(tokens[len(tokens) - (n - 1):])
    banned = set()
    for i in range(len(tokens) - n + 1):
        if tuple(tokens[i:i + n - 1]) == prefix:
            banned.add(tokens[i + n - 1])
    return banned


def _rank_score(sum_logprob: float, length: int, penalty: float) -> float:
    return sum_logprob / (max(length, 1) ** penalty)


def _make_step_fn(bundle: ModelBundle,
                  example: FormattedExample) -> tuple[Callable, int]:
    """Return (step_fn, budget) where step_fn maps generated-token rows
    to next-token logits and budget caps how many tokens fit."""
    tokenizer = bundle.tokenizer
    model = bundle.model
    max_len = model.hparams["max_len"]
    if bundle.arch == ENCODER_DECODER:
        src_ids = tokenizer.encode(example.input_text)[:max_len]
        if not src_ids:
            raise ConfigError("input encodes to zero tokens")
        src = torch.tensor([src_ids], dtype=torch.long)
        memory = model.encode(src)

        def step(rows: list[list[int]]) -> torch.Tensor:
            dec_in = torch.tensor(
                [[tokenizer.bos_id] + row for row in rows], dtype=torch.long)
            mem = memory.expand(len(rows), -1, -1)
            logits = model.decode_logits(dec_in, mem)
            return logits[:, -1, :]

        return step, max_len - 1
    prompt = tokenizer.encode(example.input_text)[:max_len - 1]
    if not prompt:
        raise ConfigError("input encodes to zero tokens")

    def step(rows: list[list[int]]) -> torch.Tensor:
        ids = torch.tensor([prompt + row for row in rows], dtype=torch.long)
        logits = model(ids)
        return logits[:, -1, :]

    return step, max_len - len(prompt)


@torch.no_grad()
def _greedy(step_fn, bundle: ModelBundle, config: DecodeConfig,
            budget: int) -> list[_Beam]:
    """Pure argmax rollout; the chain never deviates for exploration."""
    tokenizer = bundle.tokenizer
    never = [tokenizer.pad_id, tokenizer.bos_id]
    beam = _Beam([], 0.0)
    for _ in range(min(config.max_new_tokens, budget)):
        lp = F.log_softmax(step_fn([beam.tokens]).double(), dim=-1)[0]
        lp[never] = float("-inf")
        for tok in _banned_next_tokens(beam.tokens, config.no_repeat_ngram):
            lp[tok] = float("-inf")
        val, tok = torch.max(lp, dim=-1)
        if float(val) == float("-inf"):
            break
        beam = _Beam(beam.tokens + [int(tok)], beam.sum_logprob + float(val),
                     finished=int(tok) == tokenizer.eos_id)
        if beam.finished:
            break
    return [beam] if beam.tokens else []


@torch.no_grad()
def _search(step_fn, bundle: ModelBundle, config: DecodeConfig,
            num_beams: int, budget: int) -> list[_Beam]:
    tokenizer = bundle.tokenizer
    never = [tokenizer.pad_id, tokenizer.bos_id]
    max_new = min(config.max_new_tokens, budget)
    alive = [_Beam([], 0.0)]
    finished: list[_Beam] = []
    for _ in range(max_new):
        rows = [b.tokens for b in alive]
        logprobs = F.log_softmax(step_fn(rows).double(), dim=-1)
        candidates: list[_Beam] = []
        for beam, lp in zip(alive, logprobs):
            lp = lp.clone()
            lp[never] = float("-inf")
            for tok in _banned_next_tokens(beam.tokens, config.no_repeat_ngram):
                lp[tok] = float("-inf")
            k = min(num_beams + 1, lp.shape[0])
            top = torch.topk(lp, k)
            for val, tok in zip(top.values.tolist(), top.indices.tolist()):
                if val == float("-inf"):
                    continue
                candidates.append(_Beam(beam.tokens + [tok],
                                        beam.sum_logprob + val,
                                        finished=tok == tokenizer.eos_id))
        if not candidates:
            break
        candidates.sort(key=lambda b: b.sum_logprob, reverse=True)
        alive = []
        for cand in candidates:
            if cand.finished:
                finished.append(cand)
            elif len(alive) < num_beams:
                alive.append(cand)
        if not alive or len(finished) >= num_beams:
            break
    return finished + alive


def generate(bundle: ModelBundle, example: FormattedExample,
             config: DecodeConfig | None = None) -> Generation:
    config = config or DecodeConfig()
    if example.arch != bundle.arch:
        raise ConfigError(
            f"example arch {example.arch!r} does not match bundle {bundle.arch!r}")
    was_training = bundle.model.training
    bundle.model.eval()
    try:
        step_fn, budget = _make_step_fn(bundle, example)
        if budget < 1:
            raise ConfigError("prompt leaves no room for new tokens")
        candidates = _greedy(step_fn, bundle, config, budget)
        if config.num_beams > 1:
            candidates.extend(
                _search(step_fn, bundle, config, config.num_beams, budget))
    finally:
        bundle.model.train(was_training)
    if not candidates:
        return Generation(example.report_id, "", error="no candidates produced")
    best = max(candidates, key=lambda b: _rank_score(
        b.sum_logprob, len(b.tokens), config.length_penalty))
    text = bundle.tokenizer.decode(best.tokens, skip_special=True)
    return Generation(
        report_id=example.report_id,
        text=text,
        token_ids=list(best.tokens),
        score=_rank_score(best.sum_logprob, len(best.tokens),
                          config.length_penalty),
        sum_logprob=best.sum_logprob,
        truncated=not best.finished,
        finish_reason="eos" if best.finished else "length",
    )


def batch_generate(bundle: ModelBundle, examples: Sequence[FormattedExample],
                   config: DecodeConfig | None = None) -> list[Generation]:
    """Decode each example in order; failures become error records."""
    out = []
    for ex in examples:
        try:
            out.append(generate(bundle, ex, config))
        except Exception as exc:  # per-example isolation, order preserved
            out.append(Generation(ex.report_id, "", error=str(exc)))
    return out
