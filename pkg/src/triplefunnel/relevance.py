"""Relevance filtering: TF-IDF vectors, cosine similarity, top-k selection.

The query is a small set of thesaurus terms (for the shipped defaults, the
five lung-cancer headings); documents are ranked by cosine similarity between
their TF-IDF vector and the vectorized query, and the top k survive.  Plain
term-frequency counts and a dependency-free sparse representation keep the
ranking deterministic; the scorer is small enough to swap out for an
embedding backend without touching the stage contract.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Document
from .errors import EmptyCorpus
from .metrics import tokenize_for_rouge

DEFAULT_QUERY_TERMS = (
    "lung neoplasms",
    "lung cancer",
    "pulmonary neoplasms",
    "pulmonary cancer",
    "cancer of the lung",
)


def tokenize(text: str) -> list[str]:
    """Vectorization tokens: the shared alphanumeric split, minus 1-char tokens."""
    return [t for t in tokenize_for_rouge(text) if len(t) > 1]


@dataclass(frozen=True)
class TermQuery:
    """Query terms driving the relevance ranking."""

    terms: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.terms:
            raise ValueError("query needs at least one term")
        if any(not tokenize(t) for t in self.terms):
            raise ValueError("every term must be non-empty after normalization")

    @property
    def text(self) -> str:
        return " ".join(self.terms)

    def phrases(self) -> list[list[str]]:
        """Token sequences of the multi-word terms, for phrase matching."""
        return [toks for toks in (tokenize(t) for t in self.terms) if len(toks) > 1]


@dataclass
class Vocabulary:
    """Token -> index map with smoothed IDF weights.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1 where N is the number of
    documents seen at build time.
    """

    index: dict[str, int]
    idf: list[float]
    doc_count: int

    def __len__(self) -> int:
        return len(self.index)


def build_vocabulary(docs: Iterable[Document], min_df: int = 1) -> Vocabulary:
    """Collect tokens with document frequency >= min_df, in sorted token order."""
    doc_freq: dict[str, int] = {}
    n_docs = 0
    for doc in docs:
        n_docs += 1
        for token in set(tokenize(doc.text)):
            doc_freq[token] = doc_freq.get(token, 0) + 1
    if n_docs == 0:
        raise EmptyCorpus("cannot build a vocabulary from zero documents")
    kept = sorted(t for t, df in doc_freq.items() if df >= min_df)
    index = {t: i for i, t in enumerate(kept)}
    idf = [math.log((1 + n_docs) / (1 + doc_freq[t])) + 1.0 for t in kept]
    return Vocabulary(index=index, idf=idf, doc_count=n_docs)


@dataclass(frozen=True)
class SparseVector:
    """TF-IDF weights keyed by vocabulary index, with the norm cached."""

    entries: dict[int, float] = field(default_factory=dict)
    norm: float = 0.0

    @classmethod
    def from_entries(cls, entries: dict[int, float]) -> "SparseVector":
        nonzero = {i: w for i, w in entries.items() if w != 0.0}
        norm = math.sqrt(sum(w * w for w in nonzero.values()))
        return cls(entries=nonzero, norm=norm)


def _counts_to_vector(counts: dict[str, float], vocab: Vocabulary) -> SparseVector:
    entries: dict[int, float] = {}
    for token, count in counts.items():
        idx = vocab.index.get(token)
        if idx is not None:
            entries[idx] = count * vocab.idf[idx]
    return SparseVector.from_entries(entries)


def vectorize(text: str, vocab: Vocabulary) -> SparseVector:
    """Raw term counts times IDF; out-of-vocabulary tokens are ignored."""
    counts: dict[str, float] = {}
    for token in tokenize(text):
        counts[token] = counts.get(token, 0.0) + 1.0
    return _counts_to_vector(counts, vocab)


def _count_phrase(tokens: Sequence[str], phrase: Sequence[str]) -> int:
    hits = 0
    span = len(phrase)
    for i in range(len(tokens) - span + 1):
        if list(tokens[i : i + span]) == list(phrase):
            hits += 1
    return hits


def vectorize_with_phrases(
    text: str, vocab: Vocabulary, phrases: Sequence[Sequence[str]]
) -> SparseVector:
    """``vectorize`` plus a phrase bonus.

    Each exact occurrence of a multi-word phrase adds one extra count to each
    of its constituent tokens, so documents using the full term outrank
    documents that merely mention the unigrams.
    """
    tokens = tokenize(text)
    counts: dict[str, float] = {}
    for token in tokens:
        counts[token] = counts.get(token, 0.0) + 1.0
    for phrase in phrases:
        hits = _count_phrase(tokens, phrase)
        if hits:
            for token in phrase:
                counts[token] = counts.get(token, 0.0) + hits
    return _counts_to_vector(counts, vocab)


def cosine_similarity(a: SparseVector, b: SparseVector) -> float:
    """dot(a, b) / (|a| |b|); 0 when either side has zero norm.

    Accumulates over the smaller support in sorted index order, so both
    argument orders add the same products in the same sequence and the
    result is exactly symmetric.
    """
    if a.norm == 0.0 or b.norm == 0.0:
        return 0.0
    small, large = (a, b) if len(a.entries) <= len(b.entries) else (b, a)
    dot = 0.0
    for idx in sorted(small.entries):
        other = large.entries.get(idx)
        if other is not None:
            dot += small.entries[idx] * other
    return dot / (a.norm * b.norm)


def knn_filter(
    docs: Sequence[Document],
    query: TermQuery,
    vocab: Vocabulary,
    k: int,
    min_score: float | None = None,
) -> list[tuple[str, float]]:
    """Rank documents against the query and keep the best k.

    Returns (doc id, score) pairs sorted by score descending, ties broken by
    ascending id.  A k larger than the corpus degrades to ranking everything;
    ``min_score`` optionally drops low-similarity tail entries.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    query_vec = vectorize(query.text, vocab)
    phrases = query.phrases()
    scored = [
        (
            doc.id,
            cosine_similarity(
                vectorize_with_phrases(doc.text, vocab, phrases), query_vec
            ),
        )
        for doc in docs
    ]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    top = scored[: min(k, len(scored))]
    if min_score is not None:
        top = [(doc_id, score) for doc_id, score in top if score >= min_score]
    return top


def write_ranked_csv(ranked: Sequence[tuple[str, float]], path: str | Path) -> None:
    """Ranked output contract: doc_id,score with 6-decimal scores."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["doc_id", "score"])
        for doc_id, score in ranked:
            writer.writerow([doc_id, f"{score:.6f}"])
