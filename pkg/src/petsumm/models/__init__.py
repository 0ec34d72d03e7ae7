from .bundle import ModelBundle
from .lora import (apply_lora, base_state_dict, base_weights_digest,
                   lora_state_dict, LoRALinear, trainable_parameters)
from .transformer import (build_model, count_parameters, TinyCausalLM,
                          TinySeq2Seq)

__all__ = [
    "ModelBundle", "apply_lora", "base_state_dict", "base_weights_digest",
    "lora_state_dict", "LoRALinear", "trainable_parameters", "build_model",
    "count_parameters", "TinyCausalLM", "TinySeq2Seq",
]
