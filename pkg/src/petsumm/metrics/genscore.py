"""Likelihood-based generation scoring with a small seq2seq scorer.

A score in one direction is the mean token log-probability of the
scored text given the conditioning text under a trained scorer. The
bidirectional value converts each direction to a per-token probability
and returns the log of their harmonic mean, so it stays on the
log-probability scale and is dominated by the weaker direction.
"""

from __future__ import annotations

import copy
import math
from typing import Sequence

import numpy as np

from ..errors import UndefinedScoreError
from ..models import ModelBundle
from ..prompts import ENCODER_DECODER, FormattedExample
from ..training import TrainConfig, train

DIRECTIONS = ("p", "r", "f")


def _mean_logprob(bundle: ModelBundle, conditioning: str, scored: str) -> float:
    logprobs = bundle.token_logprobs(conditioning, scored)
    return float(np.mean(logprobs))


def gen_score(bundle: ModelBundle, candidate: str, reference: str,
              direction: str = "f") -> float:
    """Score ``candidate`` against ``reference`` under the scorer.

    ``p`` reads candidate given reference, ``r`` the reverse, ``f``
    combines both. Empty or whitespace-only text on either side is
    undefined and raises.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    if not candidate.strip() or not reference.strip():
        raise UndefinedScoreError("gen_score is undefined for empty text")
    if direction == "p":
        return _mean_logprob(bundle, reference, candidate)
    if direction == "r":
        return _mean_logprob(bundle, candidate, reference)
    lp_p = _mean_logprob(bundle, reference, candidate)
    lp_r = _mean_logprob(bundle, candidate, reference)
    pa, pb = math.exp(lp_p), math.exp(lp_r)
    if pa + pb == 0:
        raise UndefinedScoreError("both directions underflowed to zero")
    return math.log(2 * pa * pb / (pa + pb))


def _pair_examples(pairs: Sequence[tuple[str, str]]) -> list[FormattedExample]:
    out = []
    for i, (source, target) in enumerate(pairs):
        out.append(FormattedExample(input_text=source, target_text=target,
                                    arch=ENCODER_DECODER, style_token=None,
                                    report_id=f"pair-{i}"))
    return out


def train_scorer(pairs: Sequence[tuple[str, str]], seed: int = 0,
                 max_steps: int = 200, batch_size: int = 16,
                 learning_rate: float = 3e-4,
                 model_params: dict | None = None) -> ModelBundle:
    """Fit a fresh scorer on (conditioning, scored) text pairs."""
    params = {"d_model": 96, "n_heads": 4, "n_encoder_layers": 2,
              "n_decoder_layers": 2, "d_ff": 192, "dropout": 0.0}
    if model_params:
        params.update(model_params)
    config = TrainConfig(model_ref="tiny-seq2seq", arch=ENCODER_DECODER,
                         max_steps=max_steps, batch_size=batch_size,
                         learning_rate=learning_rate, seed=seed,
                         model_params=params)
    return train(config, _pair_examples(pairs)).bundle


def adapt_scorer(bundle: ModelBundle, pairs: Sequence[tuple[str, str]],
                 steps: int = 50, learning_rate: float = 1e-4,
                 seed: int = 0) -> ModelBundle:
    """Continue training a copy of the scorer on in-domain pairs.

    The input bundle is never mutated. ``steps=0`` returns a copy with
    bit-identical weights.
    """
    adapted = ModelBundle(copy.deepcopy(bundle.model),
                          copy.deepcopy(bundle.tokenizer),
                          bundle.arch, meta=dict(bundle.meta))
    if steps == 0:
        adapted.model.eval()
        return adapted
    examples = _pair_examples(pairs)
    for ex in examples:
        for word in (ex.input_text + " " + ex.target_text).split():
            if word not in adapted.tokenizer:
                adapted.tokenizer.add_tokens([word])
    adapted.model.resize_vocab(len(adapted.tokenizer))
    config = TrainConfig(model_ref="unused", arch=adapted.arch,
                         max_steps=steps, learning_rate=learning_rate,
                         seed=seed)
    _finetune_in_place(adapted, config, examples)
    adapted.model.eval()
    return adapted


def _finetune_in_place(bundle: ModelBundle, config: TrainConfig,
                       examples: list[FormattedExample]) -> None:
    # train() builds or loads its own bundle, so the short adaptation
    # loop lives here instead.
    import torch

    from ..training import _batch_loss, _encode_all, _batches

    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    bundle.model.train()
    optimizer = torch.optim.AdamW(bundle.model.parameters(),
                                  lr=config.learning_rate)
    encoded = _encode_all(bundle, config, examples)
    step = 0
    while step < config.max_steps:
        for idx in _batches(len(examples), config.batch_size, rng):
            loss = _batch_loss(bundle, encoded, list(idx))
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            step += 1
            if step >= config.max_steps:
                break
