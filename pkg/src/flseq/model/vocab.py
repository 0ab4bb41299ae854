"""Byte-level vocabulary and training-sequence layout for the built-in backends.

Token ids 0-255 are raw bytes; BOS/SEP/EOS are appended specials. Byte-level
round-trips are exact, so no tokenizer ships with the workbench.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TooLong
from ..sgcodec import SGExample

BOS = 256
SEP = 257
EOS = 258
VOCAB_SIZE = 259


@dataclass(frozen=True)
class Vocab:
    """Fixed byte vocabulary; instances exist so backends can carry one."""

    bos: int = BOS
    sep: int = SEP
    eos: int = EOS
    size: int = VOCAB_SIZE

    def encode_text(self, text: str) -> list[int]:
        return list(text.encode("utf-8"))

    def decode_tokens(self, tokens: list[int]) -> str:
        """Bytes back to text; specials are dropped, invalid UTF-8 replaced."""
        return bytes(t for t in tokens if t < 256).decode("utf-8", errors="replace")


def encode_example(
    example: SGExample, vocab: Vocab, context_len: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Token ids and loss mask for one example.

    Layout: [BOS] bytes(input_text) [SEP] bytes(target_text) [EOS]. The mask
    is True exactly on target bytes and EOS, the positions the model is
    trained to predict.
    """
    ids = (
        [vocab.bos]
        + vocab.encode_text(example.input_text)
        + [vocab.sep]
        + vocab.encode_text(example.target_text)
        + [vocab.eos]
    )
    n_target = len(example.target_text.encode("utf-8")) + 1  # target bytes + EOS
    if context_len is not None and len(ids) > context_len:
        raise TooLong(required=len(ids), available=context_len)
    mask = np.zeros(len(ids), dtype=bool)
    mask[len(ids) - n_target:] = True
    return np.asarray(ids, dtype=np.int64), mask


def encode_prompt(input_text: str, vocab: Vocab) -> list[int]:
    """The generation prefix: [BOS] bytes(input_text) [SEP]."""
    return [vocab.bos] + vocab.encode_text(input_text) + [vocab.sep]
