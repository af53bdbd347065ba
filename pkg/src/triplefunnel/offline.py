"""Deterministic stand-ins for the model-backed services.

Both stand-ins derive their outputs from SHA-256 of the input text, so they
are reproducible everywhere, need no network, and have a documented rule that
an independent script can re-apply to generate golden files:

* ``StubScorer``: probability of a phrase = the first 8 bytes of
  sha256(utf-8 phrase), read big-endian, divided by 2^64.  Uniform over
  phrases, constant per phrase.
* ``HashEmbedder``: tokens come from the shared alphanumeric tokenizer; each
  token's vector is drawn from a SplitMix64 stream seeded with the first
  8 bytes of sha256(utf-8 token), components mapped to [-1, 1), then
  L2-normalized.  Distinct tokens get nearly orthogonal directions, identical
  tokens identical vectors, which is all BERTScore needs for exercising the
  actual-vs-random contrast.

The sidecar service implements the same two rules for its built-in backend,
so recorded goldens transfer between in-process and over-the-wire runs.
"""

from __future__ import annotations

import hashlib
from typing import Sequence

import numpy as np

from .metrics import TokenEmbeddings, tokenize_for_rouge
from .rng import SplitMix64


def hash_probability(phrase: str) -> float:
    """First 8 bytes of sha256(phrase) as a uniform float in [0, 1)."""
    digest = hashlib.sha256(phrase.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2.0**64


def hash_token_vector(token: str, dim: int) -> np.ndarray:
    """Unit vector for one token, drawn from a token-seeded SplitMix64."""
    seed = int.from_bytes(
        hashlib.sha256(token.encode("utf-8")).digest()[:8], "big"
    )
    gen = SplitMix64(seed)
    raw = np.array(
        [gen.next_u64() / 2.0**63 - 1.0 for _ in range(dim)], dtype=np.float64
    )
    norm = float(np.linalg.norm(raw))
    if norm == 0.0:  # probability ~0, but stay total
        raw[0] = 1.0
        norm = 1.0
    return raw / norm


class StubScorer:
    """Entity scorer returning the documented hash-derived probabilities."""

    name = "hash-stub-scorer"

    def score_phrases(self, phrases: Sequence[str]) -> list[float]:
        return [hash_probability(p) for p in phrases]


class HashEmbedder:
    """Token embedder mapping each distinct token to a fixed unit vector."""

    def __init__(self, dim: int = 64) -> None:
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self.name = f"hash-embedder-{dim}d"
        self._token_cache: dict[str, np.ndarray] = {}

    def _vector(self, token: str) -> np.ndarray:
        vec = self._token_cache.get(token)
        if vec is None:
            vec = hash_token_vector(token, self.dim)
            self._token_cache[token] = vec
        return vec

    def embed_one(self, text: str) -> TokenEmbeddings:
        tokens = tokenize_for_rouge(text)
        if not tokens:
            return TokenEmbeddings([], np.zeros((0, self.dim)))
        vectors = np.stack([self._vector(t) for t in tokens])
        return TokenEmbeddings(tokens, vectors)

    def embed(self, texts: Sequence[str]) -> list[TokenEmbeddings]:
        return [self.embed_one(t) for t in texts]
