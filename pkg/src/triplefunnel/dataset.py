"""Shuffle, split, and serialize triplets; build the randomized-gold variant.

Every randomized operation here is driven by the SplitMix64 generator in
``rng`` so splits and permutations reproduce bit-for-bit across platforms and
languages.  CSV files carry exactly the three knowledge columns
(subject, relation, object) with RFC-4180 quoting, UTF-8, LF line endings.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence, TypeVar

from .errors import InsufficientRecords, TooFewRecords
from .rng import SplitMix64


@dataclass(frozen=True)
class TripleRow:
    """One (subject, relation, object) record as stored in split CSVs."""

    subject: str
    relation: str
    object: str


@dataclass(frozen=True)
class SplitSpec:
    """Requested train/test/validation sizes plus the shuffle seed."""

    train: int = 10_000
    test: int = 1_000
    validation: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.train, self.test, self.validation) < 0:
            raise ValueError("split sizes must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    @property
    def total(self) -> int:
        return self.train + self.test + self.validation


RecordT = TypeVar("RecordT")


def shuffle_and_split(
    records: Sequence[RecordT], spec: SplitSpec
) -> dict[str, list[RecordT]]:
    """Fisher-Yates shuffle with SplitMix64(spec.seed), then cut by position.

    The first ``spec.train`` shuffled records become the train split, the
    next ``spec.test`` the test split, the next ``spec.validation`` the
    validation split; leftovers are dropped.  Same records + same seed gives
    identical splits on every platform.
    """
    if len(records) < spec.total:
        raise InsufficientRecords(
            f"need {spec.total} records for spec, have {len(records)}"
        )
    shuffled = SplitMix64(spec.seed).shuffled(list(records))
    a, b = spec.train, spec.train + spec.test
    return {
        "train": shuffled[:a],
        "test": shuffled[a:b],
        "validation": shuffled[b : b + spec.validation],
    }


def write_split_csv(records: Sequence, path: str | Path) -> None:
    """Write subject,relation,object rows (RFC-4180, UTF-8, LF endings).

    Accepts anything with subject/relation/object attributes, so both
    ``TripleRow`` and provenance-carrying ``Triplet`` records serialize the
    same way; provenance fields are not part of the split file format.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["subject", "relation", "object"])
        for rec in records:
            writer.writerow([rec.subject, rec.relation, rec.object])


def read_split_csv(path: str | Path) -> list[TripleRow]:
    """Inverse of ``write_split_csv``: header-checked, returns TripleRows."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["subject", "relation", "object"]:
            raise ValueError(f"unexpected header {header!r} in {path}")
        return [TripleRow(*row) for row in reader]


def randomize_gold(records: Sequence[RecordT], seed: int) -> list[RecordT]:
    """Permute the object column uniformly at random; all else untouched.

    Fixed points are allowed (a uniform permutation leaves ~1 row in place on
    average); callers that care report the fixed-point count via
    ``count_fixed_points``.  Subjects, relations, and the object multiset are
    preserved exactly.
    """
    if len(records) < 2:
        raise TooFewRecords("randomizing gold needs at least 2 records")
    perm = SplitMix64(seed).permutation(len(records))
    return [replace(rec, object=records[j].object) for rec, j in zip(records, perm)]


def count_fixed_points(original: Sequence, randomized: Sequence) -> int:
    """How many rows kept their own object after randomization."""
    return sum(
        1 for a, b in zip(original, randomized) if a.object == b.object
    )
