"""End-to-end pipeline: ingest -> relevance -> license -> extract ->
ner-filter -> dedup -> split, driven by one INI config file.

Every stage writes its artifacts plus a small meta file recording the config
hash and input-file hashes it ran with.  A rerun skips any stage whose meta
still matches, so interrupting and resuming a long run never repeats
finished work.  Stage errors abort the run with the stage name; artifacts
already on disk are left in place.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .corpus import LicenseTag, SkipLog, load_corpus, read_documents_jsonl, write_documents_jsonl
from .dataset import SplitSpec, shuffle_and_split, write_split_csv
from .errors import ConfigError, FunnelError
from .extraction import (
    NaiveBackend,
    RemoteBackend,
    dedup_triplets,
    extract_triplets,
    read_triplets_jsonl,
    write_triplets_jsonl,
)
from .funnel import FunnelCounter, FunnelManifest, StageRecord
from .licensing import CachedResolver, RegistryClient, StaticResolver, filter_by_license
from .nerfilter import (
    HttpEntityScorer,
    PhraseScoreCache,
    filter_scored,
    score_triplets,
    write_scored_jsonl,
)
from .offline import StubScorer
from .relevance import (
    DEFAULT_QUERY_TERMS,
    TermQuery,
    build_vocabulary,
    knn_filter,
    write_ranked_csv,
)

STAGES = ("ingest", "relevance", "license", "extract", "ner-filter", "dedup", "split")


class StageFailure(FunnelError):
    """Wraps the failing stage's name around the original error."""

    def __init__(self, stage: str, cause: Exception) -> None:
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    """Validated view of the INI config; see README for the schema."""

    corpus_root: Path
    sections: str
    terms: tuple[str, ...]
    min_df: int
    top_k: int
    min_score: float | None
    allowed: frozenset[LicenseTag]
    registry_url: str
    api_key: str
    license_politeness_s: float
    license_concurrency: int
    backend: str
    remote_url: str
    min_confidence: float
    scorer: str
    scorer_url: str
    threshold: float
    batch_size: int
    train: int
    test: int
    validation: int
    seed: int
    out_dir: Path
    config_hash: str


_REQUIRED = object()


def _get(parser: configparser.ConfigParser, section: str, key: str, fallback=_REQUIRED):
    if parser.has_option(section, key):
        value = parser.get(section, key).strip()
        if value != "":
            return value
    if fallback is _REQUIRED:
        raise ConfigError(f"missing required config key [{section}] {key}")
    return fallback


def config_hash_of(parser: configparser.ConfigParser) -> str:
    lines = []
    for section in sorted(parser.sections()):
        for key in sorted(parser.options(section)):
            lines.append(f"{section}.{key}={parser.get(section, key)}")
    digest = hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()
    return digest[:16]


def load_config(path: str | Path) -> PipelineConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    base = Path(path).resolve().parent

    def resolve(p: str) -> Path:
        candidate = Path(p)
        return candidate if candidate.is_absolute() else base / candidate

    try:
        terms_raw = _get(parser, "relevance", "terms", "; ".join(DEFAULT_QUERY_TERMS))
        terms = tuple(t.strip() for t in terms_raw.split(";") if t.strip())
        allowed_raw = _get(parser, "license", "allowed", "CC0")
        try:
            allowed = frozenset(
                LicenseTag[t.strip()] for t in allowed_raw.split(",") if t.strip()
            )
        except KeyError as exc:
            raise ConfigError(f"unknown license tag in allowed set: {exc}")
        if not allowed:
            raise ConfigError("license allowed set is empty")
        min_score_raw = _get(parser, "relevance", "min_score", "")
        backend = _get(parser, "extract", "backend", "naive")
        if backend not in ("naive", "remote"):
            raise ConfigError(f"extract backend must be naive or remote: {backend}")
        scorer = _get(parser, "nerfilter", "scorer", "stub")
        if scorer not in ("stub", "http"):
            raise ConfigError(f"nerfilter scorer must be stub or http: {scorer}")
        sections = _get(parser, "corpus", "sections", "body")
        config = PipelineConfig(
            corpus_root=resolve(_get(parser, "corpus", "root")),
            sections=sections,
            terms=terms,
            min_df=int(_get(parser, "relevance", "min_df", "1")),
            top_k=int(_get(parser, "relevance", "top_k", "20")),
            min_score=None if not min_score_raw else float(min_score_raw),
            allowed=allowed,
            registry_url=_get(parser, "license", "registry_url", ""),
            api_key=_get(parser, "license", "api_key", ""),
            license_politeness_s=float(_get(parser, "license", "politeness_s", "0.35")),
            license_concurrency=int(_get(parser, "license", "concurrency", "4")),
            backend=backend,
            remote_url=_get(parser, "extract", "remote_url", ""),
            min_confidence=float(_get(parser, "extract", "min_confidence", "0")),
            scorer=scorer,
            scorer_url=_get(parser, "nerfilter", "url", ""),
            threshold=float(_get(parser, "nerfilter", "threshold", "0.8")),
            batch_size=int(_get(parser, "nerfilter", "batch_size", "32")),
            train=int(_get(parser, "split", "train", "10000")),
            test=int(_get(parser, "split", "test", "1000")),
            validation=int(_get(parser, "split", "validation", "200")),
            seed=int(_get(parser, "split", "seed", "0")),
            out_dir=resolve(_get(parser, "output", "dir", "out")),
            config_hash=config_hash_of(parser),
        )
    except (ValueError, configparser.Error) as exc:
        raise ConfigError(str(exc)) from exc
    if not 0.0 <= config.threshold <= 1.0:
        raise ConfigError("nerfilter threshold must be in [0, 1]")
    return config


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class _StageRunner:
    """Skip-or-run decision for one stage, based on the meta file."""

    def __init__(self, out_dir: Path, config_hash: str) -> None:
        self.out_dir = out_dir
        self.config_hash = config_hash

    def _meta_path(self, stage: str) -> Path:
        return self.out_dir / f"{stage}.meta.json"

    def cached_counts(self, stage: str, inputs: list[Path], outputs: list[Path]):
        meta_path = self._meta_path(stage)
        if not meta_path.exists():
            return None
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        except (OSError, ValueError):
            return None
        if meta.get("config_hash") != self.config_hash:
            return None
        if not all(p.exists() for p in outputs):
            return None
        recorded = meta.get("inputs", {})
        current = {str(p): _sha256_file(p) for p in inputs if p.exists()}
        if recorded != current:
            return None
        return meta.get("counts", {})

    def save(self, stage: str, inputs: list[Path], counts: dict) -> None:
        meta = {
            "config_hash": self.config_hash,
            "inputs": {str(p): _sha256_file(p) for p in inputs if p.exists()},
            "counts": counts,
        }
        self._meta_path(stage).write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


def _build_resolver(config: PipelineConfig, out_dir: Path):
    if config.registry_url:
        client = RegistryClient(config.registry_url, api_key=config.api_key or None)
        return CachedResolver(client, out_dir / "license_cache.jsonl")
    # No registry configured: in-document evidence only, unknown stays unknown.
    return StaticResolver({})


def _build_scorer(config: PipelineConfig):
    if config.scorer == "http":
        url = config.scorer_url or os.environ.get("TF_NER_URL", "")
        if not url:
            raise ConfigError("nerfilter scorer is http but no url configured")
        return HttpEntityScorer(url)
    return StubScorer()


def _build_backend(config: PipelineConfig):
    if config.backend == "remote":
        url = config.remote_url or os.environ.get("TF_OPENIE_URL", "")
        if not url:
            raise ConfigError("extract backend is remote but no url configured")
        return RemoteBackend(url)
    return NaiveBackend()


def run_pipeline(
    config_path: str | Path,
    log: Callable[[str], None] = lambda msg: None,
) -> FunnelManifest:
    """Run every stage in order, skipping stages whose outputs are current.

    Returns the funnel manifest (also written to ``funnel_manifest.json`` in
    the output directory).  Any stage error aborts the run as StageFailure,
    leaving earlier artifacts on disk.
    """
    config = load_config(config_path)
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    runner = _StageRunner(out, config.config_hash)
    manifest = FunnelManifest()

    docs_path = out / "documents.jsonl"
    skip_path = out / "skip_log.jsonl"
    ranked_path = out / "relevance_ranked.csv"
    relevant_path = out / "relevant_docs.jsonl"
    licensed_path = out / "licensed_docs.jsonl"
    triplets_path = out / "triplets.jsonl"
    scored_path = out / "scored_triplets.jsonl"
    kept_path = out / "kept_triplets.jsonl"
    dedup_path = out / "dedup_triplets.jsonl"
    split_paths = {name: out / f"{name}.csv" for name in ("train", "test", "validation")}

    def run_stage(stage, inputs, outputs, work):
        start = time.monotonic()
        cached = runner.cached_counts(stage, inputs, outputs)
        if cached is not None:
            log(f"{stage}: cached")
            record = StageRecord(stage=stage, cached=True, config_hash=config.config_hash, **cached)
            manifest.add(record)
            return
        try:
            counts = work()
        except FunnelError as exc:
            raise StageFailure(stage, exc) from exc
        except OSError as exc:
            raise StageFailure(stage, exc) from exc
        runner.save(stage, inputs, counts)
        record = StageRecord(
            stage=stage,
            cached=False,
            config_hash=config.config_hash,
            wall_time_s=round(time.monotonic() - start, 6),
            **counts,
        )
        manifest.add(record)
        log(f"{stage}: done in {record.wall_time_s}s")

    # --- ingest ---------------------------------------------------------
    def do_ingest():
        skip_log = SkipLog(skip_path)
        docs = list(
            load_corpus(config.corpus_root, sections=config.sections, on_skip=skip_log)
        )
        write_documents_jsonl(docs, docs_path)
        return {
            "articles_in": len(docs) + len(skip_log),
            "articles_out": len(docs),
        }

    run_stage("ingest", [], [docs_path, skip_path], do_ingest)

    # --- relevance ------------------------------------------------------
    def do_relevance():
        docs = read_documents_jsonl(docs_path)
        query = TermQuery(terms=config.terms)
        vocab = build_vocabulary(iter(docs), min_df=config.min_df)
        ranked = knn_filter(docs, query, vocab, config.top_k, config.min_score)
        write_ranked_csv(ranked, ranked_path)
        kept_ids = {doc_id for doc_id, _ in ranked}
        by_id = {d.id: d for d in docs}
        write_documents_jsonl(
            [by_id[doc_id] for doc_id, _ in ranked], relevant_path
        )
        return {"articles_in": len(docs), "articles_out": len(kept_ids)}

    run_stage("relevance", [docs_path], [ranked_path, relevant_path], do_relevance)

    # --- license --------------------------------------------------------
    def do_license():
        docs = read_documents_jsonl(relevant_path)
        resolver = _build_resolver(config, out)
        if isinstance(resolver, CachedResolver):
            resolver.prefetch(
                [d.id for d in docs if d.license is LicenseTag.UNKNOWN],
                concurrency=config.license_concurrency,
                politeness_s=config.license_politeness_s,
            )
        counter = FunnelCounter()
        kept = list(filter_by_license(docs, config.allowed, resolver, counter))
        write_documents_jsonl(kept, licensed_path)
        return {"articles_in": counter.seen, "articles_out": counter.kept}

    run_stage("license", [relevant_path], [licensed_path], do_license)

    # --- extract --------------------------------------------------------
    def do_extract():
        docs = read_documents_jsonl(licensed_path)
        backend = _build_backend(config)
        all_triplets = []
        skipped_sentences = 0

        def on_error(index, exc):
            nonlocal skipped_sentences
            skipped_sentences += 1

        for doc in docs:
            all_triplets.extend(extract_triplets(doc, backend, on_error))
        if config.min_confidence > 0:
            all_triplets = [
                t for t in all_triplets if t.confidence >= config.min_confidence
            ]
        write_triplets_jsonl(all_triplets, triplets_path)
        return {
            "articles_in": len(docs),
            "articles_out": len(docs),
            "triplets_out": len(all_triplets),
        }

    run_stage("extract", [licensed_path], [triplets_path], do_extract)

    # --- ner-filter -----------------------------------------------------
    def do_ner_filter():
        triplets = read_triplets_jsonl(triplets_path)
        scorer = _build_scorer(config)
        cache = PhraseScoreCache(out / "phrase_scores.jsonl")
        scored = score_triplets(
            triplets, scorer, batch_size=config.batch_size, cache=cache
        )
        write_scored_jsonl(scored, scored_path)
        counter = FunnelCounter()
        kept = list(filter_scored(scored, config.threshold, counter))
        write_triplets_jsonl(kept, kept_path)
        articles_in = len({t.doc_id for t in triplets})
        return {
            "articles_in": articles_in,
            "articles_out": len({t.doc_id for t in kept}),
            "triplets_in": counter.seen,
            "triplets_out": counter.kept,
        }

    run_stage("ner-filter", [triplets_path], [scored_path, kept_path], do_ner_filter)

    # --- dedup ----------------------------------------------------------
    def do_dedup():
        kept = read_triplets_jsonl(kept_path)
        unique = dedup_triplets(kept)
        write_triplets_jsonl(unique, dedup_path)
        return {
            "articles_in": len({t.doc_id for t in kept}),
            "articles_out": len({t.doc_id for t in unique}),
            "triplets_in": len(kept),
            "triplets_out": len(unique),
        }

    run_stage("dedup", [kept_path], [dedup_path], do_dedup)

    # --- split ----------------------------------------------------------
    def do_split():
        unique = read_triplets_jsonl(dedup_path)
        spec = SplitSpec(
            train=config.train,
            test=config.test,
            validation=config.validation,
            seed=config.seed,
        )
        splits = shuffle_and_split(unique, spec)
        for name, records in splits.items():
            write_split_csv(records, split_paths[name])
        (out / "split_manifest.json").write_text(
            json.dumps(
                {
                    "seed": spec.seed,
                    "sizes": {k: len(v) for k, v in splits.items()},
                    "source_triplets": len(unique),
                },
                indent=2,
                sort_keys=True,
            )
            + "\n",
            encoding="utf-8",
        )
        return {
            "triplets_in": len(unique),
            "triplets_out": sum(len(v) for v in splits.values()),
        }

    run_stage("split", [dedup_path], list(split_paths.values()), do_split)

    manifest.write_json(out / "funnel_manifest.json")
    (out / "run_manifest.json").write_text(
        json.dumps(
            {
                "config_hash": config.config_hash,
                "relevance": {
                    "terms": list(config.terms),
                    "top_k": config.top_k,
                    "min_score": config.min_score,
                    "selection": "top_k" if config.min_score is None
                    else "top_k+min_score",
                },
                "license_allowed": sorted(tag.name for tag in config.allowed),
                "ner_threshold": config.threshold,
                "split_seed": config.seed,
                "extract_backend": config.backend,
                "ner_scorer": config.scorer,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    return manifest
