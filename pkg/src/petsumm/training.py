"""Supervised fine-tuning with teacher forcing, plus checkpointing.

Supports full fine-tuning and low-rank adapter training for both toy
architectures. For decoder-only examples the loss is computed only on
tokens after the ``Response:`` prefix.
"""

from __future__ import annotations

import copy
import csv
import json
import os
import shutil
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F

from .errors import ConfigError, TrainingDivergedError
from .models import (ModelBundle, apply_lora, base_state_dict, build_model,
                     lora_state_dict, trainable_parameters)
from .prompts import (DECODER_ONLY, ENCODER_DECODER, FormattedExample,
                      RESPONSE_PREFIX, STYLE_TOKEN_RE)
from .tokenizer import WordTokenizer

IGNORE_INDEX = -100
FRESH_MODEL_REFS = ("tiny-seq2seq", "tiny-causal")


@dataclass
class TrainConfig:
    """Hyperparameters for one fine-tuning run.

    ``model_ref`` is either a checkpoint directory or one of the fresh
    toy specs (``tiny-seq2seq`` / ``tiny-causal``); ``model_params``
    override architecture defaults for fresh builds.
    """

    model_ref: str = "tiny-seq2seq"
    arch: str = ENCODER_DECODER
    adaptation: str = "full"
    lora_rank: int | None = None
    lora_alpha: float = 16.0
    learning_rate: float | None = None
    batch_size: int = 16
    max_steps: int = 300
    seed: int = 0
    token_budget: int = 512
    max_target_tokens: int = 128
    eval_every: int = 0
    model_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.arch not in (ENCODER_DECODER, DECODER_ONLY):
            raise ConfigError(f"unknown arch {self.arch!r}")
        if self.adaptation not in ("full", "lora"):
            raise ConfigError(f"unknown adaptation {self.adaptation!r}")
        if self.adaptation == "lora":
            if not self.lora_rank or self.lora_rank < 1:
                raise ConfigError("lora adaptation requires lora_rank >= 1")
        elif self.lora_rank is not None:
            raise ConfigError("lora_rank is only valid with adaptation='lora'")
        if self.learning_rate is None:
            self.learning_rate = 1e-4 if self.adaptation == "lora" else 5e-5
        # 0.0 is allowed so null-update diagnostics can assert bit-identical
        # weights; negative rates are rejected.
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be non-negative")
        for name in ("batch_size", "max_steps", "token_budget", "max_target_tokens"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be strictly positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


@dataclass
class VocabDelta:
    added: list[str]
    vocab_size: int


@dataclass
class TrainRun:
    config: TrainConfig
    bundle: ModelBundle
    loss_curve: list[tuple[int, float]]
    checkpoint_dir: Path | None
    best_checkpoint: Path | None
    style_tokens: list[str]
    registry_hash: str | None
    initial_loss: float
    final_loss: float


def _style_tokens_in(tokenizer: WordTokenizer) -> list[str]:
    return [t for t in (tokenizer.id_to_token(i) for i in range(len(tokenizer)))
            if STYLE_TOKEN_RE.fullmatch(t)]


def add_style_tokens(bundle: ModelBundle, registry) -> VocabDelta:
    """Grow vocabulary and embeddings with the registry's tokens.

    Idempotent; new embedding rows start at the mean of existing rows.
    """
    added = [t for t in registry.tokens() if t not in bundle.tokenizer]
    bundle.tokenizer.add_tokens(registry.tokens())
    bundle.model.resize_vocab(len(bundle.tokenizer))
    return VocabDelta(added=added, vocab_size=len(bundle.tokenizer))


def _build_fresh_bundle(config: TrainConfig,
                        examples: Sequence[FormattedExample]) -> ModelBundle:
    texts = []
    for ex in examples:
        texts.append(ex.input_text)
        if ex.target_text:
            texts.append(ex.target_text)
    tokenizer = WordTokenizer.build(texts)
    params = dict(config.model_params)
    params.setdefault("dropout", 0.1)
    model = build_model(config.arch, len(tokenizer), pad_id=tokenizer.pad_id,
                        **params)
    return ModelBundle(model, tokenizer, config.arch,
                       meta={"model_params": params})


def resolve_bundle(config: TrainConfig,
                   examples: Sequence[FormattedExample]) -> ModelBundle:
    ref = config.model_ref
    if ref in FRESH_MODEL_REFS:
        expected = "tiny-seq2seq" if config.arch == ENCODER_DECODER else "tiny-causal"
        if ref != expected:
            raise ConfigError(f"model_ref {ref!r} does not match arch {config.arch!r}")
        return _build_fresh_bundle(config, examples)
    path = Path(ref)
    if (path / "meta.json").exists():
        bundle = load_checkpoint(path)
        if bundle.arch != config.arch:
            raise ConfigError(
                f"checkpoint arch {bundle.arch!r} does not match config {config.arch!r}")
        return bundle
    raise ConfigError(f"model_ref {ref!r} is neither a known spec nor a checkpoint")


def _encode_encoder_decoder(ex, tokenizer, budget, max_target):
    src = tokenizer.encode(ex.input_text)[:budget]
    tgt = tokenizer.encode(ex.target_text)[:max_target - 1] + [tokenizer.eos_id]
    return src, tgt, None


def _encode_decoder_only(ex, tokenizer, budget, _max_target):
    resp_id = tokenizer.token_to_id(RESPONSE_PREFIX)
    if resp_id == tokenizer.unk_id and RESPONSE_PREFIX not in tokenizer:
        raise ConfigError("tokenizer lacks the 'Response:' prefix token")
    ids = tokenizer.encode(ex.input_text)[:budget - 1] + [tokenizer.eos_id]
    boundary = max(i for i, t in enumerate(ids) if t == resp_id)
    return ids, None, boundary


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def _pad_rows(rows, pad_value):
    width = max(len(r) for r in rows)
    out = torch.full((len(rows), width), pad_value, dtype=torch.long)
    for i, row in enumerate(rows):
        out[i, :len(row)] = torch.tensor(row, dtype=torch.long)
    return out


def _batch_loss(bundle, encoded, idx):
    tokenizer = bundle.tokenizer
    if bundle.arch == ENCODER_DECODER:
        srcs = [encoded[i][0] for i in idx]
        tgts = [encoded[i][1] for i in idx]
        src = _pad_rows(srcs, tokenizer.pad_id)
        tgt = _pad_rows(tgts, tokenizer.pad_id)
        labels = tgt.masked_fill(tgt == tokenizer.pad_id, IGNORE_INDEX)
        bos = torch.full((len(idx), 1), tokenizer.bos_id, dtype=torch.long)
        dec_in = torch.cat([bos, tgt[:, :-1]], dim=1)
        logits = bundle.model(src, dec_in, src_pad_mask=src == tokenizer.pad_id)
    else:
        seqs = [encoded[i][0] for i in idx]
        bounds = [encoded[i][2] for i in idx]
        ids = _pad_rows(seqs, tokenizer.pad_id)
        labels = ids[:, 1:].clone()
        labels[labels == tokenizer.pad_id] = IGNORE_INDEX
        for row, bound in enumerate(bounds):
            labels[row, :bound] = IGNORE_INDEX
        logits = bundle.model(ids[:, :-1])
    return F.cross_entropy(logits.reshape(-1, logits.shape[-1]),
                           labels.reshape(-1), ignore_index=IGNORE_INDEX)


def _encode_all(bundle, config, examples):
    encode = (_encode_encoder_decoder if bundle.arch == ENCODER_DECODER
              else _encode_decoder_only)
    return [encode(ex, bundle.tokenizer, config.token_budget,
                   config.max_target_tokens) for ex in examples]


@torch.no_grad()
def evaluate_loss(bundle: ModelBundle, config: TrainConfig,
                  examples: Sequence[FormattedExample]) -> float:
    encoded = _encode_all(bundle, config, examples)
    was_training = bundle.model.training
    bundle.model.eval()
    losses = []
    try:
        for start in range(0, len(examples), config.batch_size):
            idx = range(start, min(start + config.batch_size, len(examples)))
            losses.append(float(_batch_loss(bundle, encoded, list(idx))))
    finally:
        bundle.model.train(was_training)
    return float(np.mean(losses))


def train(config: TrainConfig, examples: Sequence[FormattedExample],
          val_examples: Sequence[FormattedExample] | None = None,
          out_dir=None, registry_hash: str | None = None) -> TrainRun:
    """Teacher-forcing optimization of token cross-entropy."""
    if not examples:
        raise ConfigError("no training examples")
    for ex in examples:
        if ex.arch != config.arch:
            raise ConfigError(
                f"example arch {ex.arch!r} does not match config arch {config.arch!r}")
        if not ex.target_text:
            raise ConfigError(f"example {ex.report_id!r} has no target text")

    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    bundle = resolve_bundle(config, examples)
    bundle.model.train()

    if config.adaptation == "lora":
        apply_lora(bundle.model, config.lora_rank, config.lora_alpha)
        params = trainable_parameters(bundle.model)
    else:
        params = list(bundle.model.parameters())
    optimizer = torch.optim.AdamW(params, lr=config.learning_rate)

    encoded = _encode_all(bundle, config, examples)
    loss_curve: list[tuple[int, float]] = []
    best_val = float("inf")
    best_state = None
    last_good_state = copy.deepcopy(bundle.model.state_dict())
    eval_every = config.eval_every or config.max_steps

    out_dir = Path(out_dir) if out_dir is not None else None
    step = 0
    while step < config.max_steps:
        for idx in _batches(len(examples), config.batch_size, rng):
            loss = _batch_loss(bundle, encoded, list(idx))
            value = float(loss.detach())
            if not np.isfinite(value):
                ckpt = None
                if out_dir is not None:
                    bundle.model.load_state_dict(last_good_state)
                    ckpt = save_checkpoint(bundle, out_dir / "last-good", config,
                                           loss_curve, registry_hash)
                raise TrainingDivergedError(
                    f"non-finite loss at step {step}", checkpoint=ckpt)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            step += 1
            loss_curve.append((step, value))
            if step % 25 == 0:
                last_good_state = copy.deepcopy(bundle.model.state_dict())
            if val_examples and step % eval_every == 0:
                val = evaluate_loss(bundle, config, val_examples)
                if val < best_val:
                    best_val = val
                    best_state = copy.deepcopy(bundle.model.state_dict())
            if step >= config.max_steps:
                break

    if val_examples:
        val = evaluate_loss(bundle, config, val_examples)
        if val < best_val:
            best_val = val
            best_state = copy.deepcopy(bundle.model.state_dict())

    checkpoint_dir = best_dir = None
    if out_dir is not None:
        checkpoint_dir = save_checkpoint(bundle, out_dir / "final", config,
                                         loss_curve, registry_hash)
        if best_state is not None:
            final_state = copy.deepcopy(bundle.model.state_dict())
            bundle.model.load_state_dict(best_state)
            best_dir = save_checkpoint(bundle, out_dir / "best", config,
                                       loss_curve, registry_hash,
                                       extra_meta={"val_loss": best_val})
            bundle.model.load_state_dict(final_state)

    bundle.model.eval()
    return TrainRun(
        config=config,
        bundle=bundle,
        loss_curve=loss_curve,
        checkpoint_dir=checkpoint_dir,
        best_checkpoint=best_dir,
        style_tokens=_style_tokens_in(bundle.tokenizer),
        registry_hash=registry_hash,
        initial_loss=loss_curve[0][1],
        final_loss=loss_curve[-1][1],
    )


def save_checkpoint(bundle: ModelBundle, dir_path, config: TrainConfig | None = None,
                    loss_curve=None, registry_hash=None, extra_meta=None) -> Path:
    """Write a checkpoint directory via a temp dir and a single rename."""
    dir_path = Path(dir_path)
    dir_path.parent.mkdir(parents=True, exist_ok=True)
    tmp = dir_path.parent / f".{dir_path.name}.tmp-{os.getpid()}"
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir(parents=True)

    torch.save(base_state_dict(bundle.model), tmp / "model.pt")
    adapters = lora_state_dict(bundle.model)
    lora_meta = None
    if adapters:
        torch.save(adapters, tmp / "adapters.pt")
        lora_meta = {"rank": config.lora_rank if config else None,
                     "alpha": config.lora_alpha if config else None}
    bundle.tokenizer.save(tmp / "tokenizer.json")
    model_config = {"arch": bundle.arch, "hparams": bundle.model.hparams}
    (tmp / "model_config.json").write_text(json.dumps(model_config, indent=2))
    if config is not None:
        (tmp / "config.json").write_text(json.dumps(config.to_dict(), indent=2))
    meta = {
        "registry_hash": registry_hash,
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "lora": lora_meta,
        "style_tokens": _style_tokens_in(bundle.tokenizer),
    }
    if extra_meta:
        meta.update(extra_meta)
    (tmp / "meta.json").write_text(json.dumps(meta, indent=2))
    if loss_curve:
        with (tmp / "loss_curve.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "loss"])
            writer.writerows(loss_curve)

    if dir_path.exists():
        shutil.rmtree(dir_path)
    os.rename(tmp, dir_path)
    return dir_path


def load_checkpoint(dir_path) -> ModelBundle:
    dir_path = Path(dir_path)
    model_config = json.loads((dir_path / "model_config.json").read_text())
    meta = json.loads((dir_path / "meta.json").read_text())
    tokenizer = WordTokenizer.load(dir_path / "tokenizer.json")
    hparams = dict(model_config["hparams"])
    arch = model_config["arch"]
    vocab_size = hparams.pop("vocab_size")
    pad_id = hparams.pop("pad_id")
    model = build_model(arch, vocab_size, pad_id=pad_id, **hparams)
    model.load_state_dict(torch.load(dir_path / "model.pt", weights_only=True))
    adapters_path = dir_path / "adapters.pt"
    if adapters_path.exists():
        lora_meta = meta.get("lora") or {}
        apply_lora(model, lora_meta.get("rank") or 8,
                   lora_meta.get("alpha") or 16.0)
        model.load_state_dict(torch.load(adapters_path, weights_only=True),
                              strict=False)
    model.eval()
    return ModelBundle(model, tokenizer, arch, meta=meta)
