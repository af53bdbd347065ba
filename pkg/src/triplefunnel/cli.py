"""Command-line entry points for every pipeline stage and evaluation tool.

Each subcommand is a thin wrapper over one module operation with explicit
input/output paths.  Usage errors exit 2 (argparse's convention); stage
errors print the failure and exit 1.  Service URLs fall back to the
TF_NER_URL, TF_EMBED_URL, and TF_OPENIE_URL environment variables.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .corpus import LicenseTag, SkipLog, load_corpus, read_documents_jsonl, write_documents_jsonl
from .dataset import (
    SplitSpec,
    count_fixed_points,
    randomize_gold,
    read_split_csv,
    shuffle_and_split,
    write_split_csv,
)
from .errors import FunnelError
from .extraction import (
    NaiveBackend,
    RemoteBackend,
    dedup_triplets,
    extract_triplets,
    read_triplets_jsonl,
    write_triplets_jsonl,
)
from .funnel import FunnelCounter
from .licensing import CachedResolver, RegistryClient, StaticResolver, filter_by_license
from .metrics import evaluate_file
from .mspt import attach_baseline, mann_whitney_u, run_mspt
from .nerfilter import HttpEntityScorer, PhraseScoreCache, filter_scored, score_triplets
from .offline import HashEmbedder, StubScorer
from .pipeline import run_pipeline
from .relevance import (
    DEFAULT_QUERY_TERMS,
    TermQuery,
    build_vocabulary,
    knn_filter,
    write_ranked_csv,
)
from .rng import SplitMix64
from .svgplot import emit_distribution_plot
from .wire import default_session


def _env_url(name: str) -> str:
    return os.environ.get(name, "")


def _embedder_from_args(args):
    if args.embedder == "hash":
        return HashEmbedder(dim=args.hash_dim)
    url = args.embed_url or _env_url("TF_EMBED_URL")
    if not url:
        raise FunnelError("embedder is http but no --embed-url / TF_EMBED_URL set")
    from .embedclient import HttpEmbeddingProvider

    return HttpEmbeddingProvider(url)


def _add_embedder_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--embedder",
        choices=("hash", "http"),
        default="hash",
        help="token embedding source: deterministic hash vectors or the sidecar",
    )
    parser.add_argument("--embed-url", default="", help="sidecar base URL for http")
    parser.add_argument(
        "--hash-dim", type=int, default=64, help="dimension of hash embeddings"
    )


def cmd_ingest(args) -> int:
    skip_log = SkipLog(args.skip_log)
    docs = list(
        load_corpus(args.root, sections=args.sections, on_skip=skip_log, workers=args.workers)
    )
    write_documents_jsonl(docs, args.out)
    print(f"ingested {len(docs)} documents, skipped {len(skip_log)}")
    return 0


def cmd_relevance(args) -> int:
    docs = read_documents_jsonl(args.docs)
    terms = tuple(t.strip() for t in args.terms.split(";") if t.strip())
    query = TermQuery(terms=terms or DEFAULT_QUERY_TERMS)
    vocab = build_vocabulary(iter(docs), min_df=args.min_df)
    ranked = knn_filter(docs, query, vocab, args.top_k, args.min_score)
    write_ranked_csv(ranked, args.out)
    if args.out_docs:
        by_id = {d.id: d for d in docs}
        write_documents_jsonl([by_id[i] for i, _ in ranked], args.out_docs)
    print(f"ranked {len(docs)} documents, kept {len(ranked)}")
    return 0


def cmd_license(args) -> int:
    docs = read_documents_jsonl(args.docs)
    allowed = frozenset(LicenseTag[t.strip()] for t in args.allowed.split(",") if t.strip())
    if args.registry_url:
        resolver = CachedResolver(
            RegistryClient(args.registry_url, api_key=args.api_key or None),
            args.cache,
        )
        resolver.prefetch(
            [d.id for d in docs if d.license is LicenseTag.UNKNOWN],
            concurrency=args.concurrency,
            politeness_s=args.politeness,
        )
    else:
        resolver = StaticResolver({})
    counter = FunnelCounter()
    kept = list(filter_by_license(docs, allowed, resolver, counter))
    write_documents_jsonl(kept, args.out)
    print(f"license filter kept {counter.kept} of {counter.seen}")
    return 0


def cmd_extract(args) -> int:
    docs = read_documents_jsonl(args.docs)
    if args.backend == "remote":
        url = args.remote_url or _env_url("TF_OPENIE_URL")
        if not url:
            raise FunnelError("backend is remote but no --remote-url / TF_OPENIE_URL set")
        backend = RemoteBackend(url)
    else:
        backend = NaiveBackend()
    triplets = []
    skipped = 0

    def on_error(index, exc):
        nonlocal skipped
        skipped += 1

    for doc in docs:
        triplets.extend(extract_triplets(doc, backend, on_error))
    if args.min_confidence > 0:
        triplets = [t for t in triplets if t.confidence >= args.min_confidence]
    write_triplets_jsonl(triplets, args.out)
    print(f"extracted {len(triplets)} triplets from {len(docs)} documents"
          + (f" ({skipped} sentences skipped)" if skipped else ""))
    return 0


def cmd_ner_filter(args) -> int:
    triplets = read_triplets_jsonl(args.triplets)
    if args.scorer == "http":
        url = args.url or _env_url("TF_NER_URL")
        if not url:
            raise FunnelError("scorer is http but no --url / TF_NER_URL set")
        scorer = HttpEntityScorer(url)
    else:
        scorer = StubScorer()
    cache = PhraseScoreCache(args.cache) if args.cache else None
    scored = score_triplets(triplets, scorer, batch_size=args.batch_size, cache=cache)
    counter = FunnelCounter()
    kept = list(filter_scored(scored, args.threshold, counter))
    if args.dedup:
        kept = dedup_triplets(kept)
    write_triplets_jsonl(kept, args.out)
    print(f"entity filter kept {counter.kept} of {counter.seen}"
          + (f", {len(kept)} after dedup" if args.dedup else ""))
    return 0


def cmd_split(args) -> int:
    triplets = read_triplets_jsonl(args.triplets)
    spec = SplitSpec(train=args.train, test=args.test, validation=args.validation, seed=args.seed)
    splits = shuffle_and_split(triplets, spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, records in splits.items():
        write_split_csv(records, out_dir / f"{name}.csv")
    print(
        "split sizes: "
        + ", ".join(f"{name}={len(records)}" for name, records in splits.items())
    )
    return 0


def cmd_randomize(args) -> int:
    gold = read_split_csv(args.gold)
    if args.pool:
        # Draw replacement objects from the pool file instead of permuting
        # within the evaluated set.
        pool_objects = [r.object for r in read_split_csv(args.pool)]
        if len(pool_objects) < len(gold):
            raise FunnelError("pool has fewer objects than the gold file")
        order = SplitMix64(args.seed).permutation(len(pool_objects))
        randomized = [
            type(rec)(rec.subject, rec.relation, pool_objects[order[i]])
            for i, rec in enumerate(gold)
        ]
    else:
        randomized = randomize_gold(gold, args.seed)
    write_split_csv(randomized, args.out)
    fixed = count_fixed_points(gold, randomized)
    manifest = {
        "seed": args.seed,
        "rows": len(gold),
        "fixed_points": fixed,
        "pool": args.pool or None,
    }
    if args.manifest:
        Path(args.manifest).write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    print(f"randomized {len(gold)} rows, {fixed} fixed points")
    return 0


def cmd_eval(args) -> int:
    embedder = _embedder_from_args(args)
    report = evaluate_file(args.pred, args.gold, embedder)
    report.write_json(args.out)
    if args.csv_out:
        report.write_csv(args.csv_out)
    for metric, pair in report.aggregates.items():
        print(f"{metric}: p={pair.precision:.4f} r={pair.recall:.4f} f1={pair.f1:.4f}")
    return 0


def cmd_mspt(args) -> int:
    embedder = _embedder_from_args(args)
    report, actual, random_baseline = run_mspt(args.pred, args.gold, args.seed, embedder)
    if args.test == "mannwhitney":
        report.extras["mann_whitney"] = mann_whitney_u(actual, random_baseline)
    if args.baseline:
        attach_baseline(report, json.loads(Path(args.baseline).read_text(encoding="utf-8")))
    if args.arrays_out:
        Path(args.arrays_out).write_text(
            json.dumps({"actual": actual, "random": random_baseline}, indent=2) + "\n",
            encoding="utf-8",
        )
        report.extras["arrays"] = str(args.arrays_out)
    report.write_json(args.out)
    if args.plot:
        emit_distribution_plot(actual, random_baseline, args.plot)
    print(
        f"n={report.n} mean_actual={report.mean_actual:.4f} "
        f"mean_random={report.mean_random:.4f} gap={report.gap_pct:.2f}pp "
        f"p={report.p_value:.3g}"
    )
    if args.assert_significant and report.p_value > args.alpha:
        print(f"NOT significant at alpha={args.alpha}", file=sys.stderr)
        return 1
    return 0


def cmd_plot(args) -> int:
    arrays = json.loads(Path(args.arrays).read_text(encoding="utf-8"))
    emit_distribution_plot(arrays["actual"], arrays["random"], args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_run(args) -> int:
    manifest = run_pipeline(args.config, log=print)
    for record in manifest.records:
        state = "cached" if record.cached else f"{record.wall_time_s}s"
        print(
            f"{record.stage}: articles {record.articles_in}->{record.articles_out} "
            f"triplets {record.triplets_in}->{record.triplets_out} [{state}]"
        )
    return 0


def check_services() -> int:
    """Ping the configured sidecar health endpoint(s); exit 0 when all pass."""
    session = default_session()
    urls = {}
    for var in ("TF_NER_URL", "TF_EMBED_URL"):
        url = _env_url(var)
        if url:
            urls.setdefault(url.rstrip("/"), []).append(var)
    if not urls:
        print("no TF_NER_URL / TF_EMBED_URL configured", file=sys.stderr)
        return 1
    ok = True
    for base, vars_ in urls.items():
        try:
            response = session.get(f"{base}/health", timeout=10)
            healthy = response.status_code == 200
            detail = response.json() if healthy else response.status_code
        except Exception as exc:  # connection errors included
            healthy, detail = False, exc
        print(f"{'+'.join(vars_)} {base}/health: {'ok' if healthy else 'FAIL'} ({detail})")
        ok = ok and healthy
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triplefunnel",
        description="knowledge-triplet pipeline and evaluation harness",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--check-services",
        action="store_true",
        help="ping configured sidecar /health endpoints and exit",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("ingest", help="parse a corpus directory into documents")
    p.add_argument("--root", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--skip-log", default=None)
    p.add_argument("--sections", choices=("body", "abstract"), default="body")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("relevance", help="rank documents against query terms")
    p.add_argument("--docs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--out-docs", default=None)
    p.add_argument("--terms", default="; ".join(DEFAULT_QUERY_TERMS))
    p.add_argument("--top-k", type=int, default=20)
    p.add_argument("--min-score", type=float, default=None)
    p.add_argument("--min-df", type=int, default=1)
    p.set_defaults(func=cmd_relevance)

    p = sub.add_parser("license", help="keep documents with permitted licenses")
    p.add_argument("--docs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--allowed", default="CC0")
    p.add_argument("--registry-url", default="")
    p.add_argument("--api-key", default="")
    p.add_argument("--cache", default="license_cache.jsonl")
    p.add_argument("--concurrency", type=int, default=4)
    p.add_argument("--politeness", type=float, default=0.35)
    p.set_defaults(func=cmd_license)

    p = sub.add_parser("extract", help="extract triplets from documents")
    p.add_argument("--docs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--backend", choices=("naive", "remote"), default="naive")
    p.add_argument("--remote-url", default="")
    p.add_argument("--min-confidence", type=float, default=0.0)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("ner-filter", help="score phrases and filter by probability")
    p.add_argument("--triplets", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scorer", choices=("stub", "http"), default="stub")
    p.add_argument("--url", default="")
    p.add_argument("--threshold", type=float, default=0.8)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--cache", default=None)
    p.add_argument("--dedup", action="store_true")
    p.set_defaults(func=cmd_ner_filter)

    p = sub.add_parser("split", help="shuffle and split triplets into CSVs")
    p.add_argument("--triplets", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--train", type=int, default=10000)
    p.add_argument("--test", type=int, default=1000)
    p.add_argument("--validation", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("randomize", help="permute the object column of a gold CSV")
    p.add_argument("--gold", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--pool", default=None, help="draw objects from this CSV instead")
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=cmd_randomize)

    p = sub.add_parser("eval", help="score predictions against gold")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out", default="eval_report.json")
    p.add_argument("--csv-out", default=None)
    _add_embedder_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("mspt", help="actual-vs-randomized significance test")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default="mspt_report.json")
    p.add_argument("--plot", default=None)
    p.add_argument("--arrays-out", default=None)
    p.add_argument("--test", choices=("welch", "mannwhitney"), default="welch")
    p.add_argument("--baseline", default=None)
    p.add_argument("--assert-significant", action="store_true")
    p.add_argument("--alpha", type=float, default=0.05)
    _add_embedder_args(p)
    p.set_defaults(func=cmd_mspt)

    p = sub.add_parser("plot", help="render distribution SVG from an arrays file")
    p.add_argument("--arrays", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("run", help="run the full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.check_services:
        return check_services()
    if not getattr(args, "command", None):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except FunnelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
