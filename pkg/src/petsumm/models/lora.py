"""Low-rank adapters over frozen linear layers.

``apply_lora`` wraps the named projection layers in-place; base weights
are frozen and only the adapter matrices receive gradients. Checkpoints
store base weights under their pre-wrap names so a base model file is
byte-stable across adapter training.
"""

from __future__ import annotations

import hashlib

import torch
from torch import nn

DEFAULT_TARGETS = ("q_proj", "v_proj")


class LoRALinear(nn.Module):

    def __init__(self, base: nn.Linear, rank: int, alpha: float = 16.0):
        super().__init__()
        if rank < 1:
            raise ValueError(f"rank must be >= 1, got {rank}")
        self.base = base
        for p in self.base.parameters():
            p.requires_grad_(False)
        self.rank = rank
        self.alpha = alpha
        self.scaling = alpha / rank
        self.lora_a = nn.Parameter(torch.empty(rank, base.in_features))
        self.lora_b = nn.Parameter(torch.zeros(base.out_features, rank))
        nn.init.normal_(self.lora_a, std=1.0 / rank)

    def forward(self, x):
        delta = torch.nn.functional.linear(
            torch.nn.functional.linear(x, self.lora_a), self.lora_b)
        return self.base(x) + delta * self.scaling


def apply_lora(model: nn.Module, rank: int, alpha: float = 16.0,
               targets: tuple[str, ...] = DEFAULT_TARGETS) -> int:
    """Wrap matching linear layers and freeze everything else.

    Returns the number of layers wrapped.
    """
    wrapped = 0
    for name, module in list(model.named_modules()):
        for child_name, child in list(module.named_children()):
            if child_name in targets and isinstance(child, nn.Linear):
                setattr(module, child_name, LoRALinear(child, rank, alpha))
                wrapped += 1
    if wrapped == 0:
        raise ValueError(f"no linear layers matched targets {targets}")
    for pname, param in model.named_parameters():
        param.requires_grad_("lora_" in pname)
    return wrapped


def _canonical_name(name: str) -> str:
    # LoRALinear stores the original layer as ".base"; strip it so keys
    # match the unwrapped model.
    return name.replace(".base.", ".")


def base_state_dict(model: nn.Module) -> dict[str, torch.Tensor]:
    return {_canonical_name(k): v for k, v in model.state_dict().items()
            if "lora_" not in k}


def lora_state_dict(model: nn.Module) -> dict[str, torch.Tensor]:
    return {k: v for k, v in model.state_dict().items() if "lora_" in k}


def base_weights_digest(model: nn.Module) -> str:
    """Order-independent sha256 over base (non-adapter) weights."""
    digest = hashlib.sha256()
    state = base_state_dict(model)
    for key in sorted(state):
        digest.update(key.encode())
        digest.update(state[key].detach().cpu().contiguous().numpy().tobytes())
    return digest.hexdigest()


def trainable_parameters(model: nn.Module):
    return [p for p in model.parameters() if p.requires_grad]
