"""Memorizing oracle backend: reproduces its training targets exactly.

A trie over [BOS] input [SEP] target [EOS] token sequences. On a known
state the next-token distribution puts all but a vanishing epsilon of mass
on the recorded continuations (log-prob exactly 0.0 for a unique successor,
in double precision); off-trie states fall back to the uniform distribution.
Useful as a perfect-model reference for end-to-end pipeline checks.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from ..sgcodec import SGExample
from .vocab import EOS, VOCAB_SIZE, Vocab, encode_prompt

_EPSILON = 1e-30  # off-path probability; small enough that 1 - 258*eps == 1.0


class MemorizingBackend:
    """Next-token backend that has memorized a set of (input, target) pairs."""

    def __init__(self, pairs: Sequence[tuple[str, str]] | None = None, vocab: Vocab | None = None):
        self.vocab = vocab if vocab is not None else Vocab()
        self.vocab_size = VOCAB_SIZE
        self.eos_id = EOS
        self.context_len = 1 << 30
        self._root: dict = {}
        self._pairs: list[tuple[str, str]] = []
        for input_text, target_text in pairs or ():
            self.add(input_text, target_text)

    @classmethod
    def from_examples(cls, examples: Sequence[SGExample]) -> "MemorizingBackend":
        return cls([(ex.input_text, ex.target_text) for ex in examples])

    def add(self, input_text: str, target_text: str) -> None:
        self._pairs.append((input_text, target_text))
        tokens = encode_prompt(input_text, self.vocab) + self.vocab.encode_text(target_text) + [EOS]
        node = self._root
        for tok in tokens:
            node = node.setdefault(tok, {})

    def _walk(self, seq: Sequence[int]) -> dict | None:
        node = self._root
        for tok in seq:
            node = node.get(tok)
            if node is None:
                return None
        return node

    def next_token_logprobs(self, seqs: Sequence[Sequence[int]]) -> np.ndarray:
        out = np.empty((len(seqs), VOCAB_SIZE), dtype=np.float64)
        uniform = -math.log(VOCAB_SIZE)
        log_eps = math.log(_EPSILON)
        for row, seq in enumerate(seqs):
            node = self._walk(seq)
            if not node:  # unknown state, or a fully consumed sequence
                out[row, :] = uniform
                continue
            successors = list(node.keys())
            p_hit = (1.0 - _EPSILON * (VOCAB_SIZE - len(successors))) / len(successors)
            out[row, :] = log_eps
            out[row, successors] = math.log(p_hit)
        return out

    def next_token(self, prefix: Sequence[int]) -> np.ndarray:
        return self.next_token_logprobs([prefix])[0]

    # --- model-file format: single JSON header line, no binary section

    def save(self, path: str | Path) -> None:
        header = {
            "format": "flseq-model",
            "kind": "memorize",
            "examples": [[i, t] for i, t in self._pairs],
        }
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(json.dumps(header, ensure_ascii=False).encode("utf-8"))
            fh.write(b"\n")

    @classmethod
    def load(cls, path: str | Path) -> "MemorizingBackend":
        with open(path, "rb") as fh:
            header = json.loads(fh.readline().decode("utf-8"))
        if header.get("kind") != "memorize":
            raise ValueError(f"not a memorizing model file: {path}")
        return cls([(i, t) for i, t in header["examples"]])
