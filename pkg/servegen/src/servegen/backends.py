"""Generation backends: a deterministic stub and a Hugging Face wrapper.

A backend turns one input text into ranked (text, log_prob) candidates with
finite log-probabilities <= 0, sorted descending. Generation is not
reentrant; the server calls it from a single thread.
"""

from __future__ import annotations

import math
from typing import Protocol

from .config import ServerConfig


class GenerationBackend(Protocol):
    name: str
    context_length: int

    def count_tokens(self, text: str) -> int: ...

    def generate(
        self, input_text: str, num_candidates: int, max_new_tokens: int
    ) -> list[tuple[str, float]]: ...


class EchoLinesBackend:
    """Deterministic dependency-free model for protocol tests and dry runs.

    Emits the input's lines as "k<TAB>line" patches in a fixed order
    (middle lines first, which is where faults in short functions tend to
    live), with strictly decreasing log-probabilities.
    """

    def __init__(self, config: ServerConfig):
        self.name = "stub-lines"
        self.context_length = config.max_context

    def count_tokens(self, text: str) -> int:
        return len(text.encode("utf-8"))

    def generate(self, input_text, num_candidates, max_new_tokens):
        lines = [ln for ln in input_text.split("\n") if ln != ""]
        numbered: list[tuple[int, str]] = []
        for i, line in enumerate(lines, start=1):
            head, sep, rest = line.partition("\t")
            if sep and head.isascii() and head.isdigit():
                numbered.append((int(head), rest))
            else:
                numbered.append((i, line))
        mid = (len(numbered) + 1) // 2
        ordered = sorted(numbered, key=lambda kv: (abs(kv[0] - mid), kv[0]))
        out = []
        for rank, (k, text) in enumerate(ordered[:num_candidates]):
            patch = f"{k}\t{text}"
            if max_new_tokens < len(patch.encode("utf-8")):
                patch = patch.encode("utf-8")[:max_new_tokens].decode("utf-8", errors="ignore")
            out.append((patch, -0.05 * (rank + 1)))
        return out


class HFBackend:
    """Wraps a pre-trained causal or seq2seq code model with beam search.

    Candidate scores are raw sums of per-token log-probabilities taken from
    the transition scores of the beam, so they are finite and <= 0.
    """

    def __init__(self, config: ServerConfig, model_name: str):
        import torch
        from transformers import AutoConfig, AutoModelForCausalLM, AutoModelForSeq2SeqLM, AutoTokenizer

        self._torch = torch
        self.beam_width = config.beam_width
        self.tokenizer = AutoTokenizer.from_pretrained(model_name)
        model_config = AutoConfig.from_pretrained(model_name)
        self.is_seq2seq = getattr(model_config, "is_encoder_decoder", False)
        cls = AutoModelForSeq2SeqLM if self.is_seq2seq else AutoModelForCausalLM
        self.model = cls.from_pretrained(model_name).to(config.device).eval()
        self.name = model_name
        model_max = getattr(self.tokenizer, "model_max_length", config.max_context)
        if not isinstance(model_max, int) or model_max > 1_000_000:
            model_max = config.max_context
        self.context_length = min(config.max_context, model_max)
        if self.tokenizer.pad_token_id is None:
            self.tokenizer.pad_token = self.tokenizer.eos_token

    def count_tokens(self, text: str) -> int:
        return len(self.tokenizer(text, add_special_tokens=True)["input_ids"])

    def generate(self, input_text, num_candidates, max_new_tokens):
        torch = self._torch
        inputs = self.tokenizer(input_text, return_tensors="pt").to(self.model.device)
        with torch.no_grad():
            out = self.model.generate(
                **inputs,
                num_beams=max(self.beam_width, num_candidates),
                num_return_sequences=num_candidates,
                max_new_tokens=max_new_tokens,
                do_sample=False,
                output_scores=True,
                return_dict_in_generate=True,
                pad_token_id=self.tokenizer.pad_token_id,
            )
            transition = self.model.compute_transition_scores(
                out.sequences, out.scores, out.beam_indices, normalize_logits=True
            )
        prompt_len = 0 if self.is_seq2seq else inputs["input_ids"].shape[1]
        candidates = []
        for row in range(out.sequences.shape[0]):
            text = self.tokenizer.decode(
                out.sequences[row][prompt_len:], skip_special_tokens=True
            )
            steps = transition[row]
            finite = steps[self._torch.isfinite(steps)]
            log_prob = float(finite.sum().item()) if finite.numel() else -1e9
            log_prob = min(log_prob, 0.0)
            if not math.isfinite(log_prob):
                log_prob = -1e9
            candidates.append((text, log_prob))
        candidates.sort(key=lambda c: -c[1])
        return candidates


def load_backend(config: ServerConfig) -> GenerationBackend:
    if config.model_id == "stub":
        return EchoLinesBackend(config)
    if config.model_id.startswith("hf:"):
        return HFBackend(config, config.model_id[3:])
    raise ValueError(f"unknown model id {config.model_id!r} (use 'stub' or 'hf:<name>')")
