"""Sidecar configuration."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SidecarConfig:
    """Model identities and serving limits.

    Model ids starting with "hash" select the built-in deterministic
    backends ("hash" or "hash:<dim>" for embeddings); anything else is
    treated as a Hugging Face model id and loaded through transformers.
    """

    ner_model_id: str = "hash"
    embed_model_id: str = "hash:64"
    port: int = 8900
    max_batch: int = 64
    device: str = "cpu"

    def __post_init__(self) -> None:
        if self.max_batch < 1:
            raise ValueError("max_batch must be >= 1")
        if not 1 <= self.port <= 65535:
            raise ValueError("port outside the valid range")
        if self.device not in ("cpu", "gpu"):
            raise ValueError("device must be 'cpu' or 'gpu'")
