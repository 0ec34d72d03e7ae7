"""Tiny transformer building blocks and the two toy architectures.

Attention projections are explicit ``nn.Linear`` modules (q/k/v/o) so
low-rank adapters can wrap them by name. Both models tie the output
projection to the token embedding, which keeps vocabulary resizing a
single-matrix operation.
"""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import nn


def _pad_to_additive(key_padding_mask: torch.Tensor | None) -> torch.Tensor | None:
    """(B, S) bool, True = pad -> additive mask broadcastable to (B, H, T, S)."""
    if key_padding_mask is None:
        return None
    mask = torch.zeros(key_padding_mask.shape, dtype=torch.float32,
                       device=key_padding_mask.device)
    mask.masked_fill_(key_padding_mask, float("-inf"))
    return mask[:, None, None, :]


class MultiHeadAttention(nn.Module):

    def __init__(self, d_model: int, n_heads: int, dropout: float = 0.0):
        super().__init__()
        if d_model % n_heads:
            raise ValueError(f"d_model {d_model} not divisible by n_heads {n_heads}")
        self.n_heads = n_heads
        self.head_dim = d_model // n_heads
        self.q_proj = nn.Linear(d_model, d_model)
        self.k_proj = nn.Linear(d_model, d_model)
        self.v_proj = nn.Linear(d_model, d_model)
        self.o_proj = nn.Linear(d_model, d_model)
        self.dropout = dropout

    def forward(self, query, keyvalue, key_padding_mask=None, is_causal=False):
        bsz, q_len, d_model = query.shape
        kv_len = keyvalue.shape[1]

        def split(x, length):
            return x.view(bsz, length, self.n_heads, self.head_dim).transpose(1, 2)

        q = split(self.q_proj(query), q_len)
        k = split(self.k_proj(keyvalue), kv_len)
        v = split(self.v_proj(keyvalue), kv_len)
        attn_mask = _pad_to_additive(key_padding_mask)
        out = F.scaled_dot_product_attention(
            q, k, v, attn_mask=attn_mask,
            dropout_p=self.dropout if self.training else 0.0,
            is_causal=is_causal)
        out = out.transpose(1, 2).reshape(bsz, q_len, d_model)
        return self.o_proj(out)


class FeedForward(nn.Module):

    def __init__(self, d_model: int, d_ff: int, dropout: float = 0.0):
        super().__init__()
        self.lin1 = nn.Linear(d_model, d_ff)
        self.lin2 = nn.Linear(d_ff, d_model)
        self.drop = nn.Dropout(dropout)

    def forward(self, x):
        return self.lin2(self.drop(F.gelu(self.lin1(x))))


class EncoderBlock(nn.Module):

    def __init__(self, d_model, n_heads, d_ff, dropout):
        super().__init__()
        self.norm1 = nn.LayerNorm(d_model)
        self.attn = MultiHeadAttention(d_model, n_heads, dropout)
        self.norm2 = nn.LayerNorm(d_model)
        self.ffn = FeedForward(d_model, d_ff, dropout)
        self.drop = nn.Dropout(dropout)

    def forward(self, x, pad_mask=None):
        h = self.norm1(x)
        x = x + self.drop(self.attn(h, h, key_padding_mask=pad_mask))
        x = x + self.drop(self.ffn(self.norm2(x)))
        return x


class DecoderBlock(nn.Module):

    def __init__(self, d_model, n_heads, d_ff, dropout, cross_attention=True):
        super().__init__()
        self.norm1 = nn.LayerNorm(d_model)
        self.self_attn = MultiHeadAttention(d_model, n_heads, dropout)
        self.cross_attn = None
        if cross_attention:
            self.norm_cross = nn.LayerNorm(d_model)
            self.cross_attn = MultiHeadAttention(d_model, n_heads, dropout)
        self.norm2 = nn.LayerNorm(d_model)
        self.ffn = FeedForward(d_model, d_ff, dropout)
        self.drop = nn.Dropout(dropout)

    def forward(self, x, memory=None, memory_pad_mask=None):
        h = self.norm1(x)
        x = x + self.drop(self.self_attn(h, h, is_causal=True))
        if self.cross_attn is not None:
            h = self.norm_cross(x)
            x = x + self.drop(self.cross_attn(h, memory,
                                              key_padding_mask=memory_pad_mask))
        x = x + self.drop(self.ffn(self.norm2(x)))
        return x


class _EmbeddingMixin:

    def _init_embeddings(self) -> None:
        # keeps tied-projection logits near zero at init
        nn.init.normal_(self.tok_emb.weight, std=0.02)
        nn.init.normal_(self.pos_emb.weight, std=0.02)

    def _embed(self, ids: torch.Tensor) -> torch.Tensor:
        positions = torch.arange(ids.shape[1], device=ids.device)
        return self.tok_emb(ids) * self.emb_scale + self.pos_emb(positions)[None]

    def _project(self, hidden: torch.Tensor) -> torch.Tensor:
        return hidden @ self.tok_emb.weight.T

    @torch.no_grad()
    def resize_vocab(self, new_size: int) -> None:
        """Grow the tied embedding; new rows start at the mean embedding."""
        old = self.tok_emb.weight
        if new_size < old.shape[0]:
            raise ValueError("vocabulary can only grow")
        if new_size == old.shape[0]:
            return
        new = nn.Embedding(new_size, old.shape[1])
        new.weight[:old.shape[0]] = old
        new.weight[old.shape[0]:] = old.mean(dim=0, keepdim=True)
        new = new.to(old.device)
        self.tok_emb = new
        self.vocab_size = new_size


class TinySeq2Seq(nn.Module, _EmbeddingMixin):
    """Encoder-decoder transformer sized for desk-scale experiments."""

    arch = "encoder_decoder"

    def __init__(self, vocab_size: int, d_model: int = 128, n_heads: int = 4,
                 n_encoder_layers: int = 2, n_decoder_layers: int = 2,
                 d_ff: int = 256, dropout: float = 0.1, max_len: int = 1024,
                 pad_id: int = 0):
        super().__init__()
        self.vocab_size = vocab_size
        self.pad_id = pad_id
        self.max_len = max_len
        self.emb_scale = math.sqrt(d_model)
        self.tok_emb = nn.Embedding(vocab_size, d_model)
        self.pos_emb = nn.Embedding(max_len, d_model)
        self.encoder = nn.ModuleList(
            EncoderBlock(d_model, n_heads, d_ff, dropout)
            for _ in range(n_encoder_layers))
        self.decoder = nn.ModuleList(
            DecoderBlock(d_model, n_heads, d_ff, dropout)
            for _ in range(n_decoder_layers))
        self.enc_norm = nn.LayerNorm(d_model)
        self.dec_norm = nn.LayerNorm(d_model)
        self._init_embeddings()
        self.hparams = {
            "vocab_size": vocab_size, "d_model": d_model, "n_heads": n_heads,
            "n_encoder_layers": n_encoder_layers,
            "n_decoder_layers": n_decoder_layers, "d_ff": d_ff,
            "dropout": dropout, "max_len": max_len, "pad_id": pad_id,
        }

    def encode(self, src_ids: torch.Tensor, src_pad_mask: torch.Tensor | None = None):
        x = self._embed(src_ids)
        for block in self.encoder:
            x = block(x, pad_mask=src_pad_mask)
        return self.enc_norm(x)

    def decode_logits(self, tgt_in_ids: torch.Tensor, memory: torch.Tensor,
                      memory_pad_mask: torch.Tensor | None = None):
        x = self._embed(tgt_in_ids)
        for block in self.decoder:
            x = block(x, memory=memory, memory_pad_mask=memory_pad_mask)
        return self._project(self.dec_norm(x))

    def forward(self, src_ids, tgt_in_ids, src_pad_mask=None):
        memory = self.encode(src_ids, src_pad_mask)
        return self.decode_logits(tgt_in_ids, memory, src_pad_mask)


class TinyCausalLM(nn.Module, _EmbeddingMixin):
    """Decoder-only transformer for the instruction-prompt route."""

    arch = "decoder_only"

    def __init__(self, vocab_size: int, d_model: int = 128, n_heads: int = 4,
                 n_layers: int = 2, d_ff: int = 256, dropout: float = 0.1,
                 max_len: int = 1024, pad_id: int = 0):
        super().__init__()
        self.vocab_size = vocab_size
        self.pad_id = pad_id
        self.max_len = max_len
        self.emb_scale = math.sqrt(d_model)
        self.tok_emb = nn.Embedding(vocab_size, d_model)
        self.pos_emb = nn.Embedding(max_len, d_model)
        self.blocks = nn.ModuleList(
            DecoderBlock(d_model, n_heads, d_ff, dropout, cross_attention=False)
            for _ in range(n_layers))
        self.norm = nn.LayerNorm(d_model)
        self._init_embeddings()
        self.hparams = {
            "vocab_size": vocab_size, "d_model": d_model, "n_heads": n_heads,
            "n_layers": n_layers, "d_ff": d_ff, "dropout": dropout,
            "max_len": max_len, "pad_id": pad_id,
        }

    def forward(self, ids: torch.Tensor):
        x = self._embed(ids)
        for block in self.blocks:
            x = block(x)
        return self._project(self.norm(x))


def count_parameters(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())


def build_model(arch: str, vocab_size: int, pad_id: int = 0, **hparams) -> nn.Module:
    if arch == TinySeq2Seq.arch:
        return TinySeq2Seq(vocab_size, pad_id=pad_id, **hparams)
    if arch == TinyCausalLM.arch:
        return TinyCausalLM(vocab_size, pad_id=pad_id, **hparams)
    raise ValueError(f"unknown arch {arch!r}")
