"""Model backends: byte vocabulary, tiny trainable LM, memorizing oracle, remote client."""

from __future__ import annotations

import json
from pathlib import Path

from .oracle import MemorizingBackend
from .remote import remote_generate, remote_info
from .tinylm import TinyLM, TinyLMConfig, TrainResult, init_params, loss_and_grads, tiny_lm_train
from .vocab import BOS, EOS, SEP, VOCAB_SIZE, Vocab, encode_example, encode_prompt

__all__ = [
    "BOS", "SEP", "EOS", "VOCAB_SIZE", "Vocab",
    "encode_example", "encode_prompt",
    "TinyLM", "TinyLMConfig", "TrainResult", "tiny_lm_train", "init_params", "loss_and_grads",
    "MemorizingBackend",
    "remote_generate", "remote_info",
    "load_model",
]


def load_model(path: str | Path):
    """Load a saved backend, dispatching on the header's ``kind`` field."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
    kind = header.get("kind")
    if kind == "tiny":
        return TinyLM.load(path)
    if kind == "memorize":
        return MemorizingBackend.load(path)
    raise ValueError(f"unknown model kind {kind!r} in {path}")
