"""Auto-regressive beam search over any next-token backend.

Scores are raw sums of per-token log-probabilities (no length
normalization), so small search spaces can be checked exactly against
exhaustive enumeration. All ties break toward the lexicographically smaller
token-id sequence, making rankings reproducible byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .errors import ContextOverflow, NoHypotheses
from .model.vocab import Vocab, encode_prompt
from .sgcodec import PatchCandidate, parse_patch


class TokenBackend(Protocol):
    """What beam search needs from a model backend."""

    vocab_size: int
    eos_id: int
    context_len: int

    def next_token_logprobs(self, seqs: Sequence[Sequence[int]]) -> np.ndarray:
        """[len(seqs), vocab_size] normalized log-probabilities."""
        ...


@dataclass(frozen=True)
class BeamConfig:
    beam_width: int = 10
    num_return: int = 5
    max_new_tokens: int = 64

    def __post_init__(self):
        if self.beam_width <= 0 or self.num_return <= 0 or self.max_new_tokens <= 0:
            raise ValueError("beam_width, num_return and max_new_tokens must be positive")
        if self.num_return > self.beam_width:
            raise ValueError(f"num_return {self.num_return} exceeds beam_width {self.beam_width}")


def beam_decode(
    backend: TokenBackend,
    prefix: Sequence[int],
    config: BeamConfig,
) -> list[tuple[tuple[int, ...], float]]:
    """Up to ``num_return`` finished (generated tokens, total log-prob) pairs.

    A hypothesis finishes on EOS (the EOS token is kept and its log-prob is
    part of the score), at ``max_new_tokens`` generated tokens, or when it
    exhausts the backend context. Results are sorted by score descending,
    ties by lexicographically smaller token sequence. Zero-probability
    continuations are pruned; search stops early only when no live
    hypothesis could still enter the returned top ``num_return``.
    """
    prefix = tuple(prefix)
    if len(prefix) >= backend.context_len:
        raise ContextOverflow(
            f"prefix length {len(prefix)} leaves no room in context {backend.context_len}"
        )

    def sort_key(item: tuple[tuple[int, ...], float]):
        return (-item[1], item[0])

    active: list[tuple[tuple[int, ...], float]] = [((), 0.0)]
    finished: list[tuple[tuple[int, ...], float]] = []

    for step in range(1, config.max_new_tokens + 1):
        if not active:
            break
        logps = np.asarray(
            backend.next_token_logprobs([prefix + gen for gen, _ in active]), dtype=np.float64
        )
        totals = np.array([score for _, score in active])[:, None] + logps

        # All live hypotheses were generated in lockstep and share a length,
        # so lexicographic order of child sequences is (parent order, token);
        # selection can therefore run entirely inside one lexsort.
        parent_rank = np.empty(len(active), dtype=np.int64)
        parent_rank[sorted(range(len(active)), key=lambda i: active[i][0])] = np.arange(len(active))
        rows, cols = np.indices(totals.shape)
        order = np.lexsort((cols.ravel(), parent_rank[rows.ravel()], -totals.ravel()))

        selected: list[tuple[tuple[int, ...], float]] = []
        flat_totals = totals.ravel()
        n_vocab = totals.shape[1]
        for flat_idx in order[: config.beam_width]:
            score = float(flat_totals[flat_idx])
            if score == -np.inf:
                break  # candidates are score-sorted; the rest are impossible too
            gen = active[flat_idx // n_vocab][0] + (int(flat_idx % n_vocab),)
            selected.append((gen, score))
        if not selected:
            break

        active = []
        for gen, score in selected:
            hit_eos = gen[-1] == backend.eos_id
            out_of_context = len(prefix) + len(gen) >= backend.context_len
            if hit_eos or step == config.max_new_tokens or out_of_context:
                finished.append((gen, score))
            else:
                active.append((gen, score))

        if active and len(finished) >= config.num_return:
            kth_score = sorted(finished, key=sort_key)[config.num_return - 1][1]
            if max(score for _, score in active) < kth_score:
                break  # no live hypothesis can still displace the kept top-k

    if not finished:
        raise NoHypotheses("backend assigned probability zero to every continuation")
    finished.sort(key=sort_key)
    return finished[: config.num_return]


def generate_patches(
    backend: TokenBackend,
    input_text: str,
    config: BeamConfig | None = None,
    vocab: Vocab | None = None,
    dedupe: bool = True,
) -> list[PatchCandidate]:
    """Ranked, deduplicated patch candidates for one line-numbered input.

    Decodes from [BOS] bytes(input_text) [SEP] with the full beam width of
    finished hypotheses, so deduplication losses come out of the headroom
    between beam_width and num_return; the final list is truncated to
    ``num_return``. Deduplication keeps the best-scoring candidate per parsed
    line number (per raw text for unparsed candidates); disable it with
    ``dedupe=False`` for sensitivity runs.
    """
    config = config if config is not None else BeamConfig()
    vocab = vocab if vocab is not None else Vocab()
    prefix = encode_prompt(input_text, vocab)
    wide = BeamConfig(
        beam_width=config.beam_width,
        num_return=config.beam_width,
        max_new_tokens=config.max_new_tokens,
    )
    hypotheses = beam_decode(backend, prefix, wide)

    candidates = []
    for gen, score in hypotheses:
        tokens = list(gen)
        if tokens and tokens[-1] == backend.eos_id:
            tokens = tokens[:-1]
        candidates.append(parse_patch(vocab.decode_tokens(tokens), score))

    if dedupe:
        seen: set = set()
        unique = []
        for cand in candidates:  # already in rank order
            key = ("line", cand.line_number) if cand.line_number is not None else ("raw", cand.raw_text)
            if key in seen:
                continue
            seen.add(key)
            unique.append(cand)
        candidates = unique
    return candidates[: config.num_return]
