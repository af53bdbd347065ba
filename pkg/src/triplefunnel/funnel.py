"""Funnel bookkeeping: per-stage counts and the run manifest.

Every filtering stage accounts for its inputs exactly: kept plus rejected
equals seen.  The manifest collects one record per stage and is the artifact
that mirrors the staged article/triplet reduction of a full run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class FunnelCounter:
    """Kept/rejected tally maintained by a streaming filter."""

    seen: int = 0
    kept: int = 0

    def count(self, passed: bool) -> None:
        self.seen += 1
        if passed:
            self.kept += 1

    @property
    def rejected(self) -> int:
        return self.seen - self.kept


@dataclass
class StageRecord:
    stage: str
    articles_in: int | None = None
    articles_out: int | None = None
    triplets_in: int | None = None
    triplets_out: int | None = None
    wall_time_s: float = 0.0
    config_hash: str = ""
    cached: bool = False

    def as_dict(self) -> dict:
        return {
            "stage": self.stage,
            "articles_in": self.articles_in,
            "articles_out": self.articles_out,
            "triplets_in": self.triplets_in,
            "triplets_out": self.triplets_out,
            "wall_time_s": self.wall_time_s,
            "config_hash": self.config_hash,
            "cached": self.cached,
        }


@dataclass
class FunnelManifest:
    """Ordered stage records for one pipeline run."""

    records: list[StageRecord] = field(default_factory=list)

    def add(self, record: StageRecord) -> None:
        if any(r.stage == record.stage for r in self.records):
            raise ValueError(f"stage {record.stage!r} recorded twice")
        self.records.append(record)

    def get(self, stage: str) -> StageRecord:
        for record in self.records:
            if record.stage == stage:
                return record
        raise KeyError(stage)

    def article_counts_monotone(self) -> bool:
        """Article counts never grow across the filtering stages."""
        counts = [
            r.articles_out for r in self.records if r.articles_out is not None
        ]
        return all(a >= b for a, b in zip(counts, counts[1:]))

    def as_dict(self) -> dict:
        return {"stages": [r.as_dict() for r in self.records]}

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "FunnelManifest":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        manifest = cls()
        for row in data["stages"]:
            manifest.add(StageRecord(**row))
        return manifest
