"""Biomedical-entity probability scoring and threshold filtering.

Subject and object phrases are scored by an external service (or stub);
relations are never scored.  Phrases repeat heavily across a large triplet
set, so each distinct phrase is scored once per run and optionally persisted
to a JSONL cache for cheap reruns.
"""

from __future__ import annotations

import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator, Protocol, Sequence

from .errors import ProtocolError, ScorerUnavailable
from .extraction import Triplet
from .funnel import FunnelCounter
from .wire import call_with_retries, default_session, json_body

DEFAULT_BATCH_SIZE = 32
DEFAULT_IN_FLIGHT = 2


@dataclass(frozen=True)
class ScoredTriplet:
    """A triplet plus entity probabilities for its subject and object."""

    triplet: Triplet
    subject_prob: float
    object_prob: float

    def __post_init__(self) -> None:
        for name in ("subject_prob", "object_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} {value} outside [0, 1]")


class EntityScorer(Protocol):
    name: str

    def score_phrases(self, phrases: Sequence[str]) -> list[float]: ...


class HttpEntityScorer:
    """Client for the sidecar's POST /ner_score contract.

    Request {"phrases": [...]} must come back as {"probs": [...]} of equal
    length with every probability in [0, 1]; anything else is a protocol
    error.  Connection exhaustion raises ScorerUnavailable: entity scores
    are never fabricated locally.
    """

    name = "http-ner-scorer"

    def __init__(
        self,
        base_url: str,
        session=None,
        attempts: int = 3,
        backoff_s: float = 1.0,
        sleep: Callable[[float], None] = time.sleep,
        timeout_s: float = 60.0,
    ) -> None:
        if not base_url:
            raise ValueError("base_url is required")
        self.base_url = base_url.rstrip("/")
        self._session = session or default_session()
        self._attempts = attempts
        self._backoff_s = backoff_s
        self._sleep = sleep
        self._timeout_s = timeout_s

    def score_phrases(self, phrases: Sequence[str]) -> list[float]:
        def send():
            return self._session.post(
                f"{self.base_url}/ner_score",
                json={"phrases": list(phrases)},
                timeout=self._timeout_s,
            )

        response = call_with_retries(
            send,
            unavailable=ScorerUnavailable,
            attempts=self._attempts,
            backoff_s=self._backoff_s,
            sleep=self._sleep,
        )
        body = json_body(response)
        probs = body.get("probs")
        if not isinstance(probs, list) or len(probs) != len(phrases):
            raise ProtocolError(
                f"expected {len(phrases)} probs, got "
                f"{len(probs) if isinstance(probs, list) else 'non-list'}"
            )
        values = [float(p) for p in probs]
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise ProtocolError("probability outside [0, 1] in scorer response")
        return values


class PhraseScoreCache:
    """Persisted phrase -> probability map (JSON lines, append-only)."""

    def __init__(self, path: str | Path | None = None) -> None:
        self._path = Path(path) if path is not None else None
        self._scores: dict[str, float] = {}
        self._lock = threading.Lock()
        if self._path is not None and self._path.exists():
            for line in self._path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                obj = json.loads(line)
                self._scores[obj["phrase"]] = float(obj["prob"])

    def get(self, phrase: str) -> float | None:
        return self._scores.get(phrase)

    def put(self, phrase: str, prob: float) -> None:
        with self._lock:
            self._scores[phrase] = prob
            if self._path is not None:
                with open(self._path, "a", encoding="utf-8") as fh:
                    fh.write(
                        json.dumps(
                            {"phrase": phrase, "prob": prob},
                            sort_keys=True,
                            ensure_ascii=False,
                        )
                        + "\n"
                    )

    def __len__(self) -> int:
        return len(self._scores)


def _chunks(items: list[str], size: int) -> list[list[str]]:
    return [items[i : i + size] for i in range(0, len(items), size)]


def score_triplets(
    triplets: Iterable[Triplet],
    scorer: EntityScorer,
    batch_size: int = DEFAULT_BATCH_SIZE,
    cache: PhraseScoreCache | None = None,
    in_flight: int = DEFAULT_IN_FLIGHT,
) -> list[ScoredTriplet]:
    """Score every subject/object phrase and attach the probabilities.

    Each distinct phrase is sent to the scorer at most once per run (and not
    at all when the persisted cache already has it).  Batches are dispatched
    with a small in-flight window; output order equals input order.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    items = list(triplets)
    cache = cache if cache is not None else PhraseScoreCache()
    pending: list[str] = []
    seen: set[str] = set()
    for t in items:
        for phrase in (t.subject, t.object):
            if phrase not in seen and cache.get(phrase) is None:
                seen.add(phrase)
                pending.append(phrase)
    if pending:
        batches = _chunks(pending, batch_size)
        if in_flight > 1 and len(batches) > 1:
            with ThreadPoolExecutor(max_workers=in_flight) as pool:
                results = list(pool.map(scorer.score_phrases, batches))
        else:
            results = [scorer.score_phrases(batch) for batch in batches]
        for batch, probs in zip(batches, results):
            for phrase, prob in zip(batch, probs):
                cache.put(phrase, prob)
    scored = []
    for t in items:
        subject_prob = cache.get(t.subject)
        object_prob = cache.get(t.object)
        assert subject_prob is not None and object_prob is not None
        scored.append(
            ScoredTriplet(triplet=t, subject_prob=subject_prob, object_prob=object_prob)
        )
    return scored


def filter_scored(
    scored: Iterable[ScoredTriplet],
    threshold: float,
    counter: FunnelCounter | None = None,
) -> Iterator[Triplet]:
    """Keep triplets where both probabilities strictly exceed the threshold.

    The inequality is strict: a probability exactly equal to the threshold
    is rejected.  Raising the threshold can only shrink the kept set.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold {threshold} outside [0, 1]")
    for item in scored:
        passed = item.subject_prob > threshold and item.object_prob > threshold
        if counter is not None:
            counter.count(passed)
        if passed:
            yield item.triplet


def write_scored_jsonl(scored: Iterable[ScoredTriplet], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for item in scored:
            t = item.triplet
            fh.write(
                json.dumps(
                    {
                        "doc_id": t.doc_id,
                        "sentence_index": t.sentence_index,
                        "subject": t.subject,
                        "relation": t.relation,
                        "object": t.object,
                        "confidence": t.confidence,
                        "subject_prob": item.subject_prob,
                        "object_prob": item.object_prob,
                    },
                    sort_keys=True,
                    ensure_ascii=False,
                )
                + "\n"
            )
            count += 1
    return count


def read_scored_jsonl(path: str | Path) -> list[ScoredTriplet]:
    scored = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            scored.append(
                ScoredTriplet(
                    triplet=Triplet(
                        subject=obj["subject"],
                        relation=obj["relation"],
                        object=obj["object"],
                        confidence=obj["confidence"],
                        doc_id=obj["doc_id"],
                        sentence_index=obj["sentence_index"],
                    ),
                    subject_prob=obj["subject_prob"],
                    object_prob=obj["object_prob"],
                )
            )
    return scored
