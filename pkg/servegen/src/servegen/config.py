"""Server configuration."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ServerConfig:
    """How to load and expose one generation model.

    ``model_id`` selects the backend: "stub" for the built-in deterministic
    line-echo model, or "hf:<name-or-path>" for a Hugging Face checkpoint.
    Requests asking for more candidates than ``beam_width`` are rejected.
    """

    model_id: str = "stub"
    device: str = "cpu"
    beam_width: int = 10
    max_context: int = 4096
    port: int = 8765
    host: str = "127.0.0.1"

    def __post_init__(self):
        if self.beam_width <= 0:
            raise ValueError("beam_width must be positive")
        if self.max_context <= 0:
            raise ValueError("max_context must be positive")
        if not (0 <= self.port < 65536):  # 0 = bind any free port
            raise ValueError(f"port {self.port} out of range")
