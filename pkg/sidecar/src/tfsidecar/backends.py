"""Model backends: deterministic hash stand-ins and transformers loaders.

The hash backends implement the documented cross-package rules so recorded
goldens transfer between this service and any in-process stand-in:

* phrase probability: first 8 bytes of sha256(utf-8 phrase), big-endian,
  divided by 2^64;
* token embedding: SplitMix64 stream seeded with the first 8 bytes of
  sha256(utf-8 token), each of d components mapped to [-1, 1), then
  L2-normalized; tokens are lowercase alphanumeric runs.

The transformers backends load real models when a Hugging Face id is
configured; they are optional and never exercised by the contract tests.
"""

from __future__ import annotations

import hashlib
from typing import Protocol, Sequence

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64_stream(seed: int, count: int) -> list[int]:
    state = seed & _MASK64
    out = []
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        out.append(z ^ (z >> 31))
    return out


def tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    current: list[str] = []
    for ch in text.lower():
        if ch.isalnum():
            current.append(ch)
        elif current:
            tokens.append("".join(current))
            current = []
    if current:
        tokens.append("".join(current))
    return tokens


def hash_probability(phrase: str) -> float:
    digest = hashlib.sha256(phrase.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2.0**64


def hash_token_vector(token: str, dim: int) -> np.ndarray:
    seed = int.from_bytes(hashlib.sha256(token.encode("utf-8")).digest()[:8], "big")
    raw = np.array(
        [u / 2.0**63 - 1.0 for u in _splitmix64_stream(seed, dim)], dtype=np.float64
    )
    norm = float(np.linalg.norm(raw))
    if norm == 0.0:
        raw[0] = 1.0
        norm = 1.0
    return raw / norm


class NerBackend(Protocol):
    model_id: str

    def score(self, phrases: Sequence[str]) -> list[float]: ...


class EmbedBackend(Protocol):
    model_id: str
    dim: int

    def embed(self, texts: Sequence[str]) -> list[tuple[list[str], np.ndarray]]: ...


class HashNerBackend:
    """Deterministic phrase scorer used for contract tests and offline runs."""

    def __init__(self, model_id: str = "hash") -> None:
        self.model_id = model_id

    def score(self, phrases: Sequence[str]) -> list[float]:
        return [hash_probability(p) for p in phrases]


class HashEmbedBackend:
    """Deterministic token embedder; vectors are unit-norm by construction."""

    def __init__(self, model_id: str = "hash:64") -> None:
        self.model_id = model_id
        self.dim = int(model_id.split(":", 1)[1]) if ":" in model_id else 64
        if self.dim < 1:
            raise ValueError("embedding dimension must be >= 1")

    def embed(self, texts: Sequence[str]) -> list[tuple[list[str], np.ndarray]]:
        results = []
        for text in texts:
            tokens = tokenize(text)
            if tokens:
                vectors = np.stack([hash_token_vector(t, self.dim) for t in tokens])
            else:
                vectors = np.zeros((0, self.dim))
            results.append((tokens, vectors))
        return results


class TransformersNerBackend:
    """Token-classification scorer: max entity-class probability per phrase.

    The phrase score is the maximum, over the phrase's tokens, of the
    probability mass on non-"O" entity classes.  Simple max-pooling keeps
    the reduction transparent; swap this class out for anything smarter.
    """

    def __init__(self, model_id: str, device: str = "cpu") -> None:
        from transformers import AutoModelForTokenClassification, AutoTokenizer
        import torch

        self.model_id = model_id
        self._torch = torch
        self._tokenizer = AutoTokenizer.from_pretrained(model_id)
        self._model = AutoModelForTokenClassification.from_pretrained(model_id)
        self._model.eval()
        self._device = "cuda" if device == "gpu" else "cpu"
        self._model.to(self._device)
        labels = self._model.config.id2label
        self._entity_class_ids = [i for i, name in labels.items() if name != "O"]

    def score(self, phrases: Sequence[str]) -> list[float]:
        torch = self._torch
        scores = []
        with torch.no_grad():
            for phrase in phrases:
                encoded = self._tokenizer(
                    phrase, return_tensors="pt", truncation=True
                ).to(self._device)
                logits = self._model(**encoded).logits[0]
                probs = torch.softmax(logits, dim=-1)
                entity_mass = probs[:, self._entity_class_ids].sum(dim=-1)
                scores.append(float(entity_mass.max().item()))
        return scores


class TransformersEmbedBackend:
    """Contextual token embeddings from a masked-LM encoder, L2-normalized."""

    def __init__(self, model_id: str, device: str = "cpu") -> None:
        from transformers import AutoModel, AutoTokenizer
        import torch

        self.model_id = model_id
        self._torch = torch
        self._tokenizer = AutoTokenizer.from_pretrained(model_id)
        self._model = AutoModel.from_pretrained(model_id)
        self._model.eval()
        self._device = "cuda" if device == "gpu" else "cpu"
        self._model.to(self._device)
        self.dim = int(self._model.config.hidden_size)

    def embed(self, texts: Sequence[str]) -> list[tuple[list[str], np.ndarray]]:
        torch = self._torch
        results = []
        with torch.no_grad():
            for text in texts:
                encoded = self._tokenizer(text, return_tensors="pt", truncation=True)
                tokens = self._tokenizer.convert_ids_to_tokens(
                    encoded["input_ids"][0], skip_special_tokens=False
                )
                hidden = self._model(
                    **{k: v.to(self._device) for k, v in encoded.items()}
                ).last_hidden_state[0]
                keep = [
                    i
                    for i, tok in enumerate(tokens)
                    if tok not in self._tokenizer.all_special_tokens
                ]
                vectors = hidden[keep].cpu().numpy().astype(np.float64)
                norms = np.linalg.norm(vectors, axis=1, keepdims=True)
                norms[norms == 0.0] = 1.0
                results.append(([tokens[i] for i in keep], vectors / norms))
        return results


def build_ner_backend(model_id: str, device: str = "cpu") -> NerBackend:
    if model_id.startswith("hash"):
        return HashNerBackend(model_id)
    return TransformersNerBackend(model_id, device)


def build_embed_backend(model_id: str, device: str = "cpu") -> EmbedBackend:
    if model_id.startswith("hash"):
        return HashEmbedBackend(model_id)
    return TransformersEmbedBackend(model_id, device)
