"""Model + tokenizer pairing shared by training, generation, and scoring."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from ..tokenizer import WordTokenizer
from .transformer import TinyCausalLM, TinySeq2Seq


@dataclass
class ModelBundle:
    model: torch.nn.Module
    tokenizer: WordTokenizer
    arch: str
    meta: dict = field(default_factory=dict)

    @torch.no_grad()
    def token_logprobs(self, conditioning: str, scored: str) -> np.ndarray:
        """Per-token log-probabilities of ``scored`` given ``conditioning``
        under teacher forcing (end-of-sequence token included)."""
        if self.arch != TinySeq2Seq.arch:
            raise ValueError("likelihood scoring requires a seq2seq bundle")
        tok = self.tokenizer
        scored_ids = tok.encode(scored, add_eos=True)
        if len(scored_ids) <= 1 and not scored.split():
            raise ValueError("scored text is empty")
        src = torch.tensor([tok.encode(conditioning)], dtype=torch.long)
        tgt = torch.tensor([scored_ids], dtype=torch.long)
        dec_in = torch.cat(
            [torch.full((1, 1), tok.bos_id, dtype=torch.long), tgt[:, :-1]], dim=1)
        was_training = self.model.training
        self.model.eval()
        try:
            logits = self.model(src, dec_in)
        finally:
            self.model.train(was_training)
        logprobs = torch.log_softmax(logits, dim=-1)
        picked = logprobs.gather(-1, tgt[:, :, None]).squeeze(-1).squeeze(0)
        return picked.numpy().astype(np.float64)


def bundle_arch_class(arch: str):
    return {TinySeq2Seq.arch: TinySeq2Seq, TinyCausalLM.arch: TinyCausalLM}[arch]
