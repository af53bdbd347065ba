"""Sentence splitting and (subject, relation, object) extraction.

The extractor backend is pluggable: ``RemoteBackend`` speaks the de-facto
HTTP contract of open-relation annotation servers, while ``NaiveBackend``
is a self-contained rule extractor (first known verb form splits the clause)
that exists so the rest of the pipeline can run and be tested with no
external service.  The naive rules trade recall for transparency; they are a
scaffold, not an extraction contribution.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Protocol, Sequence

from .corpus import Document
from .errors import BackendError, BackendUnavailable, ProtocolError
from .wire import call_with_retries, default_session, json_body


@dataclass(frozen=True)
class Triplet:
    """One extracted (subject, relation, object) with provenance."""

    subject: str
    relation: str
    object: str
    confidence: float = 1.0
    doc_id: str = ""
    sentence_index: int = 0

    def __post_init__(self) -> None:
        for name in ("subject", "relation", "object"):
            if not getattr(self, name).strip():
                raise ValueError(f"{name} must be non-empty")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")

    def key(self) -> tuple[str, str, str]:
        return (self.subject, self.relation, self.object)


# ---------------------------------------------------------------------------
# Sentence splitting


# Tokens that end with a period without ending a sentence.  Single alphabetic
# letters (initials, species abbreviations) are guarded separately.
_ABBREVIATIONS = {
    "al",
    "approx",
    "ca",
    "cf",
    "dr",
    "e.g",
    "eq",
    "eqs",
    "fig",
    "figs",
    "i.e",
    "jr",
    "mr",
    "mrs",
    "ms",
    "prof",
    "ref",
    "refs",
    "resp",
    "sr",
    "st",
    "vol",
    "vs",
}

_BOUNDARY = re.compile(r"([.!?]+)(\s+)(?=[A-Z0-9])")


def _preceding_word(text: str, end: int) -> str:
    start = end
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start:end]


def split_sentences(text: str) -> list[str]:
    """Split prose on sentence-final punctuation.

    A boundary is . ! or ? followed by whitespace and an uppercase letter or
    digit, unless the period terminates a known abbreviation or a single
    initial.  Sentences are verbatim slices of the input (stripped), so
    joining them with single spaces reproduces the input modulo whitespace.
    """
    sentences: list[str] = []
    start = 0
    for match in _BOUNDARY.finditer(text):
        punct = match.group(1)
        if punct.endswith("."):
            word = _preceding_word(text, match.start(1)).lstrip("([{'\"")
            if word.lower() in _ABBREVIATIONS:
                continue
            # Single uppercase letters are treated as initials ("J. Smith",
            # "T. Yamada"); lowercase ones end sentences normally.
            if len(word) == 1 and word.isalpha() and word.isupper():
                continue
        if match.start(1) < start:
            continue
        sentence = text[start : match.end(1)].strip()
        if sentence:
            sentences.append(sentence)
        start = match.end(0)
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


# ---------------------------------------------------------------------------
# Naive rule-based extraction


_VERB_STEMS = (
    # general scientific prose
    "be", "have", "do", "use", "show", "find", "make", "take", "give",
    "provide", "include", "contain", "require", "need", "allow", "enable",
    "suggest", "indicate", "demonstrate", "reveal", "confirm", "report",
    "describe", "present", "propose", "observe", "measure", "estimate",
    "evaluate", "assess", "analyze", "examine", "investigate", "study",
    "compare", "determine", "identify", "detect", "predict", "explain",
    "support", "remain", "appear", "seem", "become", "result", "lead",
    "cause", "affect", "influence", "change", "alter", "modify", "improve",
    "reduce", "decrease", "increase", "enhance", "lower", "raise", "limit",
    "prevent", "avoid", "produce", "generate", "create", "form", "develop",
    "occur", "arise", "exist", "depend", "relate", "associate", "correlate",
    "link", "connect", "involve", "play", "act", "serve", "represent",
    "consist", "comprise", "constitute", "define", "classify", "characterize",
    "differ", "vary", "range", "tend", "follow", "precede", "accompany",
    "yield", "achieve", "obtain", "receive", "undergo", "perform", "conduct",
    "carry", "apply", "employ", "test", "validate", "verify", "record",
    "collect", "select", "assign", "divide", "combine", "add", "remove",
    # biomedical
    "inhibit", "activate", "induce", "suppress", "promote", "regulate",
    "mediate", "modulate", "stimulate", "block", "bind", "target", "encode",
    "express", "overexpress", "silence", "mutate", "phosphorylate",
    "methylate", "acetylate", "degrade", "stabilize", "destabilize",
    "upregulate", "downregulate", "trigger", "attenuate", "abolish",
    "accelerate", "aggravate", "alleviate", "ameliorate", "antagonize",
    "effect", "impair", "enrich", "deplete", "sensitize", "inactivate",
    "treat", "cure", "heal", "kill", "damage", "protect", "infect",
    "metastasize", "proliferate", "differentiate", "migrate", "invade",
    "secrete", "release", "absorb", "metabolize", "synthesize", "transport",
    "signal", "interact", "respond", "resist", "recur", "progress",
    "survive", "die", "grow", "spread", "transform", "repair", "replicate",
    "transcribe", "translate", "cleave", "fuse", "recruit", "localize",
)

_IRREGULAR_FORMS = {
    "is", "are", "was", "were", "am", "been", "being",
    "has", "had", "having",
    "does", "did", "done", "doing",
    "shows", "shown",
    "finds", "found",
    "makes", "made", "making",
    "takes", "took", "taken", "taking",
    "gives", "gave", "given", "giving",
    "leads", "led", "leading",
    "becomes", "became", "becoming",
    "arises", "arose", "arisen", "arising",
    "undergoes", "underwent", "undergone", "undergoing",
    "carries", "carried", "carrying",
    "grows", "grew", "grown", "growing",
    "spreads", "spread", "spreading",
    "dies", "died", "dying",
    "kills", "killed", "killing",
    "binds", "bound", "binding",
}

_VOWELS = set("aeiou")


def _inflections(stem: str) -> set[str]:
    forms = {stem}
    if stem.endswith(("s", "x", "z", "ch", "sh")):
        forms.add(stem + "es")
    elif stem.endswith("y") and len(stem) > 1 and stem[-2] not in _VOWELS:
        forms.add(stem[:-1] + "ies")
    else:
        forms.add(stem + "s")
    if stem.endswith("e"):
        forms.add(stem + "d")
        forms.add(stem[:-1] + "ing")
    elif stem.endswith("y") and len(stem) > 1 and stem[-2] not in _VOWELS:
        forms.add(stem[:-1] + "ied")
        forms.add(stem + "ing")
    else:
        forms.add(stem + "ed")
        forms.add(stem + "ing")
    return forms


VERB_FORMS: frozenset[str] = frozenset(
    form for stem in _VERB_STEMS for form in _inflections(stem)
) | frozenset(_IRREGULAR_FORMS)


def _looks_like_verb(token: str) -> bool:
    lowered = token.lower()
    if lowered in VERB_FORMS:
        return True
    # Suffix heuristics against the stem list catch doubled consonants and
    # dropped-e forms the precomputed table misses.
    stems = set(_VERB_STEMS)
    for suffix in ("ing", "ed", "es", "s"):
        if lowered.endswith(suffix) and len(lowered) > len(suffix) + 1:
            base = lowered[: -len(suffix)]
            candidates = {base, base + "e"}
            if len(base) > 1 and base[-1] == base[-2]:
                candidates.add(base[:-1])
            if candidates & stems:
                return True
    return False


_SUBORDINATORS = {
    "because", "although", "though", "while", "whereas", "if", "unless",
    "until", "when", "since", "that", "which", "who", "whom", "whose",
    "where",
}

_CLAUSE_SPLIT = re.compile(r",\s+and\s+|;\s+")
_WORD = re.compile(r"[A-Za-z0-9][A-Za-z0-9'\-/]*")


def naive_extract(sentence: str) -> list[Triplet]:
    """Rule extraction: first known verb form splits subject from object.

    The sentence is cut into clauses on ", and" and "; "; each clause yields
    at most one triplet with the verb token as the relation, everything
    before it as the subject, and everything after it (up to the first
    subordinating conjunction) as the object.  Confidence is fixed at 1.0.
    All emitted phrases are subsequences of the clause's word tokens.
    """
    triplets: list[Triplet] = []
    for clause in _CLAUSE_SPLIT.split(sentence):
        tokens = _WORD.findall(clause)
        verb_at = next(
            (i for i, tok in enumerate(tokens) if _looks_like_verb(tok)), None
        )
        if verb_at is None or verb_at == 0:
            continue
        subject = " ".join(tokens[:verb_at])
        object_tokens: list[str] = []
        for token in tokens[verb_at + 1 :]:
            if token.lower() in _SUBORDINATORS:
                break
            object_tokens.append(token)
        if not object_tokens:
            continue
        triplets.append(
            Triplet(
                subject=subject,
                relation=tokens[verb_at],
                object=" ".join(object_tokens),
            )
        )
    return triplets


# ---------------------------------------------------------------------------
# Backends


class ExtractorBackend(Protocol):
    name: str

    def extract(self, sentence: str) -> list[Triplet]: ...


class NaiveBackend:
    """Offline scaffold backend wrapping ``naive_extract``."""

    name = "naive"

    def extract(self, sentence: str) -> list[Triplet]:
        return naive_extract(sentence)


class RemoteBackend:
    """Client for an open-relation annotation server.

    Wire contract: POST the raw sentence text with a ``properties`` query
    parameter requesting open-relation annotation in JSON; the response maps
    each sentence to a list of {subject, relation, object, confidence}
    objects (confidence defaults to 1.0 when the server omits it).
    Response-shape violations raise BackendError (callers skip the
    sentence); connection exhaustion raises BackendUnavailable, aborting
    the document.
    """

    name = "remote"

    _PROPERTIES = json.dumps(
        {"annotators": "openie", "outputFormat": "json"}, sort_keys=True
    )

    def __init__(
        self,
        base_url: str,
        session=None,
        attempts: int = 3,
        backoff_s: float = 1.0,
        sleep=None,
        timeout_s: float = 60.0,
    ) -> None:
        if not base_url:
            raise ValueError("base_url is required")
        self.base_url = base_url
        self._session = session or default_session()
        self._attempts = attempts
        self._backoff_s = backoff_s
        self._sleep = sleep
        self._timeout_s = timeout_s

    def extract(self, sentence: str) -> list[Triplet]:
        def send():
            return self._session.post(
                self.base_url,
                params={"properties": self._PROPERTIES},
                data=sentence.encode("utf-8"),
                timeout=self._timeout_s,
            )

        kwargs = {"unavailable": BackendUnavailable, "attempts": self._attempts,
                  "backoff_s": self._backoff_s}
        if self._sleep is not None:
            kwargs["sleep"] = self._sleep
        response = call_with_retries(send, **kwargs)
        try:
            body = json_body(response)
        except ProtocolError as exc:
            raise BackendError(str(exc)) from exc
        sentences = body.get("sentences")
        if not isinstance(sentences, list):
            raise BackendError("response lacks a 'sentences' list")
        triplets: list[Triplet] = []
        for entry in sentences:
            for raw in entry.get("openie", []):
                try:
                    triplets.append(
                        Triplet(
                            subject=str(raw["subject"]),
                            relation=str(raw["relation"]),
                            object=str(raw["object"]),
                            confidence=float(raw.get("confidence", 1.0)),
                        )
                    )
                except (KeyError, TypeError, ValueError) as exc:
                    raise BackendError(f"malformed triple object: {raw!r}") from exc
        return triplets


def extract_triplets(
    doc: Document,
    backend: ExtractorBackend,
    on_sentence_error: Callable[[int, Exception], None] | None = None,
) -> list[Triplet]:
    """Extract triplets from every sentence of the document body.

    Output order is (sentence_index ascending, backend-native order) and
    every triplet is stamped with the document id.  A BackendError skips
    that sentence (reported through ``on_sentence_error``); anything else
    propagates and fails the document.
    """
    triplets: list[Triplet] = []
    for index, sentence in enumerate(split_sentences(doc.body)):
        try:
            extracted = backend.extract(sentence)
        except BackendError as exc:
            if on_sentence_error is not None:
                on_sentence_error(index, exc)
            continue
        for triplet in extracted:
            triplets.append(replace(triplet, doc_id=doc.id, sentence_index=index))
    return triplets


# ---------------------------------------------------------------------------
# Intermediate triplet files (restart points between stages)


def write_triplets_jsonl(triplets: Iterable[Triplet], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for t in triplets:
            fh.write(
                json.dumps(
                    {
                        "doc_id": t.doc_id,
                        "sentence_index": t.sentence_index,
                        "subject": t.subject,
                        "relation": t.relation,
                        "object": t.object,
                        "confidence": t.confidence,
                    },
                    sort_keys=True,
                    ensure_ascii=False,
                )
                + "\n"
            )
            count += 1
    return count


def read_triplets_jsonl(path: str | Path) -> list[Triplet]:
    triplets = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            triplets.append(
                Triplet(
                    subject=obj["subject"],
                    relation=obj["relation"],
                    object=obj["object"],
                    confidence=obj["confidence"],
                    doc_id=obj["doc_id"],
                    sentence_index=obj["sentence_index"],
                )
            )
    return triplets


def dedup_triplets(triplets: Sequence[Triplet]) -> list[Triplet]:
    """Drop exact (subject, relation, object) duplicates, keeping first seen."""
    seen: set[tuple[str, str, str]] = set()
    unique: list[Triplet] = []
    for t in triplets:
        if t.key() in seen:
            continue
        seen.add(t.key())
        unique.append(t)
    return unique
