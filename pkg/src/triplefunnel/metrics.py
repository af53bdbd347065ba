"""Lexical (ROUGE-1/2/L) and embedding-based (BERTScore) scoring.

All score functions are pure and operate on explicit inputs: token lists for
ROUGE, token-embedding bundles for BERTScore.  ``evaluate_file`` applies both
familles to row-aligned prediction/gold CSVs and aggregates arithmetic means.

BERTScore here is the raw variant: no IDF weighting and no baseline
rescaling.  Absolute levels therefore depend on the embedding provider, which
is recorded in the report manifest.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptySide, RowMisalignment


@dataclass(frozen=True)
class ScorePair:
    """Precision / recall / F1 triple; f1 is always the harmonic mean."""

    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "ScorePair":
        denom = precision + recall
        f1 = 2.0 * precision * recall / denom if denom > 0 else 0.0
        return cls(precision, recall, f1)

    def as_dict(self) -> dict[str, float]:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


def tokenize_for_rouge(text: str) -> list[str]:
    """Lowercase and split on any non-alphanumeric character.

    Empty tokens are dropped; single-character tokens are kept (the relevance
    module layers its own length filter on top of this same split).
    """
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


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> ScorePair:
    """ROUGE-N with count-clipped overlap.

    overlap = sum over n-gram types of min(candidate count, reference count);
    precision divides by the candidate n-gram total, recall by the reference
    total (an empty side scores 0, never NaN).
    """
    if n not in (1, 2):
        raise ValueError(f"n must be 1 or 2, got {n}")
    cand = _ngram_counts(candidate, n)
    ref = _ngram_counts(reference, n)
    overlap = sum(min(count, ref[gram]) for gram, count in cand.items())
    precision = overlap / max(1, sum(cand.values()))
    recall = overlap / max(1, sum(ref.values()))
    return ScorePair.from_pr(precision, recall)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    # Classic DP, one rolling row.
    if not a or not b:
        return 0
    row = [0] * (len(b) + 1)
    for x in a:
        prev = 0
        for j, y in enumerate(b, start=1):
            cur = row[j]
            row[j] = prev + 1 if x == y else max(row[j], row[j - 1])
            prev = cur
    return row[-1]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> ScorePair:
    """ROUGE-L from the longest common subsequence of the token lists."""
    lcs = _lcs_length(candidate, reference)
    precision = lcs / len(candidate) if candidate else 0.0
    recall = lcs / len(reference) if reference else 0.0
    return ScorePair.from_pr(precision, recall)


class TokenEmbeddings:
    """Tokens of one text plus one embedding vector per token.

    ``vectors`` is a float64 array of shape (len(tokens), d), d >= 1 for
    non-empty inputs.  NaN or infinite components are rejected at
    construction so score code can assume finite arithmetic.
    """

    __slots__ = ("tokens", "vectors")

    def __init__(self, tokens: Sequence[str], vectors) -> None:
        self.tokens = list(tokens)
        arr = np.asarray(vectors, dtype=np.float64)
        if arr.size == 0:
            arr = arr.reshape(len(self.tokens), 0) if self.tokens else arr.reshape(0, 0)
        if arr.ndim != 2:
            raise ValueError("vectors must be a 2-D array (tokens x dimensions)")
        if arr.shape[0] != len(self.tokens):
            raise ValueError(
                f"{len(self.tokens)} tokens but {arr.shape[0]} vectors"
            )
        if self.tokens and arr.shape[1] < 1:
            raise ValueError("embedding dimension must be >= 1")
        if not np.isfinite(arr).all():
            raise ValueError("embedding vectors contain NaN or Inf")
        self.vectors = arr

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


class EmbeddingProvider(Protocol):
    """Anything that can turn texts into token embeddings."""

    name: str

    def embed(self, texts: Sequence[str]) -> list[TokenEmbeddings]: ...


def _unit_rows(arr: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(arr, axis=1, keepdims=True)
    # Zero vectors stay zero; their cosine with anything is 0.
    safe = np.where(norms > 0, norms, 1.0)
    return arr / safe


def bertscore(candidate: TokenEmbeddings, reference: TokenEmbeddings) -> ScorePair:
    """Greedy-matching BERTScore over cosine similarity.

    precision = mean over candidate tokens of the best cosine against any
    reference token; recall is the transpose; f1 the harmonic mean.  Both
    means are clamped to [-1, 1] before f1, and f1 is 0 when p + r <= 0.
    """
    if len(candidate) == 0 or len(reference) == 0:
        raise EmptySide("bertscore requires non-empty candidate and reference")
    if candidate.dim != reference.dim:
        raise DimensionMismatch(
            f"candidate dim {candidate.dim} != reference dim {reference.dim}"
        )
    sim = _unit_rows(candidate.vectors) @ _unit_rows(reference.vectors).T
    precision = float(np.clip(sim.max(axis=1).mean(), -1.0, 1.0))
    recall = float(np.clip(sim.max(axis=0).mean(), -1.0, 1.0))
    denom = precision + recall
    f1 = 2.0 * precision * recall / denom if denom > 0 else 0.0
    return ScorePair(precision, recall, f1)


ROUGE_METRICS = ("rouge1", "rouge2", "rougeL")
ALL_METRICS = ROUGE_METRICS + ("bertscore",)


@dataclass
class EvalReport:
    """Per-row scores plus aggregate means for one prediction/gold pairing."""

    rows: list[dict[str, ScorePair]]
    aggregates: dict[str, ScorePair]
    manifest: dict[str, object]

    def as_dict(self) -> dict:
        return {
            "rows": [
                {metric: pair.as_dict() for metric, pair in row.items()}
                for row in self.rows
            ],
            "aggregates": {
                metric: pair.as_dict() for metric, pair in self.aggregates.items()
            },
            "manifest": self.manifest,
        }

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    def write_csv(self, path: str | Path) -> None:
        """Spreadsheet mirror: one row per input row, one column per component."""
        fields = ["row"]
        for metric in ALL_METRICS:
            for comp in ("precision", "recall", "f1"):
                fields.append(f"{metric}_{comp}")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(fields)
            for i, row in enumerate(self.rows):
                out: list[object] = [i]
                for metric in ALL_METRICS:
                    pair = row[metric]
                    out.extend([pair.precision, pair.recall, pair.f1])
                writer.writerow(out)


class CachingEmbedder:
    """Wraps a provider so each distinct text is embedded at most once."""

    def __init__(self, provider: EmbeddingProvider) -> None:
        self._provider = provider
        self._cache: dict[str, TokenEmbeddings] = {}
        self.name = getattr(provider, "name", provider.__class__.__name__)

    def embed(self, texts: Sequence[str]) -> list[TokenEmbeddings]:
        missing = sorted({t for t in texts if t not in self._cache})
        if missing:
            for text, emb in zip(missing, self._provider.embed(missing)):
                self._cache[text] = emb
        return [self._cache[t] for t in texts]


def score_object_pair(
    predicted: str, gold: str, embeddings: tuple[TokenEmbeddings, TokenEmbeddings]
) -> dict[str, ScorePair]:
    """Score one prediction/gold object pair with all four metrics.

    A side with no tokens scores (0, 0, 0) on every metric: an empty
    prediction earns nothing, and nothing can be recalled from an empty gold.
    """
    cand_tokens = tokenize_for_rouge(predicted)
    ref_tokens = tokenize_for_rouge(gold)
    row = {
        "rouge1": rouge_n(cand_tokens, ref_tokens, 1),
        "rouge2": rouge_n(cand_tokens, ref_tokens, 2),
        "rougeL": rouge_l(cand_tokens, ref_tokens),
    }
    cand_emb, ref_emb = embeddings
    if len(cand_emb) == 0 or len(ref_emb) == 0:
        row["bertscore"] = ScorePair(0.0, 0.0, 0.0)
    else:
        row["bertscore"] = bertscore(cand_emb, ref_emb)
    return row


def _mean_pair(pairs: Iterable[ScorePair]) -> ScorePair:
    pairs = list(pairs)
    if not pairs:
        return ScorePair(0.0, 0.0, 0.0)
    n = len(pairs)
    return ScorePair(
        sum(p.precision for p in pairs) / n,
        sum(p.recall for p in pairs) / n,
        sum(p.f1 for p in pairs) / n,
    )


def evaluate_rows(
    predictions: Sequence,
    gold: Sequence,
    embedder: EmbeddingProvider,
) -> EvalReport:
    """Score aligned prediction/gold triples on their object fields.

    Rows must agree pairwise on subject and relation; a count or key mismatch
    raises RowMisalignment.  Aggregates are plain arithmetic means of the
    per-row scores.
    """
    if len(predictions) != len(gold):
        raise RowMisalignment(
            f"{len(predictions)} prediction rows vs {len(gold)} gold rows"
        )
    for i, (p, g) in enumerate(zip(predictions, gold)):
        if p.subject != g.subject or p.relation != g.relation:
            raise RowMisalignment(
                f"row {i}: subject/relation differ between prediction and gold"
            )
    cached = CachingEmbedder(embedder)
    texts = [p.object for p in predictions] + [g.object for g in gold]
    embedded = cached.embed(texts)
    n = len(predictions)
    rows = [
        score_object_pair(
            predictions[i].object, gold[i].object, (embedded[i], embedded[n + i])
        )
        for i in range(n)
    ]
    aggregates = {
        metric: _mean_pair(row[metric] for row in rows) for metric in ALL_METRICS
    }
    manifest: dict[str, object] = {"rows": n, "embedder": cached.name}
    return EvalReport(rows=rows, aggregates=aggregates, manifest=manifest)


def evaluate_file(
    predictions_path: str | Path,
    gold_path: str | Path,
    embedder: EmbeddingProvider,
) -> EvalReport:
    """``evaluate_rows`` over two subject,relation,object CSV files."""
    from .dataset import read_split_csv

    predictions = read_split_csv(predictions_path)
    gold = read_split_csv(gold_path)
    report = evaluate_rows(predictions, gold, embedder)
    report.manifest["predictions"] = str(predictions_path)
    report.manifest["gold"] = str(gold_path)
    return report
