"""Acceptance suite: one test per release criterion, one printed line each.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
PASS lines; any assertion failure marks the criterion failed.  Everything
here runs offline against the stub scorer and the deterministic hash
embedder; no sidecar or network is required.
"""

import math
import time

import mpmath as mp
import numpy as np

from test_metrics import oracle_lcs_exhaustive, oracle_rouge_n, random_token_pairs
from test_mspt import fixed_sample_pairs, oracle_histogram, welch_oracle
from test_pipeline import SPLIT, write_config
from triplefunnel.dataset import (
    SplitSpec,
    TripleRow,
    shuffle_and_split,
    write_split_csv,
)
from triplefunnel.extraction import Triplet
from triplefunnel.metrics import TokenEmbeddings, bertscore, rouge_l, rouge_n
from triplefunnel.mspt import histogram, kde_curve, run_mspt, welch_t_test
from triplefunnel.nerfilter import ScoredTriplet, filter_scored
from triplefunnel.offline import HashEmbedder
from triplefunnel.pipeline import run_pipeline
from triplefunnel.rng import SplitMix64
from triplefunnel.svgplot import emit_distribution_plot

from test_dataset import GOLDEN_SPLIT_HASHES, _digest, _records

mp.mp.dps = 50


def _report(criterion: str) -> None:
    print(f"[PASS] {criterion}")


# ---------------------------------------------------------------------------


def test_funnel_fidelity_at_desk_scale(tmp_path, corpus_fixture):
    root, truth = corpus_fixture
    config = write_config(tmp_path / "run.ini", root, tmp_path / "out")
    started = time.monotonic()
    manifest = run_pipeline(config)
    elapsed = time.monotonic() - started

    expected = {
        "ingest": (truth.files_total, truth.docs_total, None, None),
        "relevance": (truth.docs_total, len(truth.relevant_ids), None, None),
        "license": (
            len(truth.relevant_ids), len(truth.licensed_relevant_ids), None, None,
        ),
        "extract": (
            len(truth.licensed_relevant_ids), len(truth.licensed_relevant_ids),
            None, truth.triplets_total,
        ),
        "ner-filter": (
            len(truth.licensed_relevant_ids), len(truth.kept_doc_ids),
            truth.triplets_total, len(truth.kept_triplets),
        ),
        "dedup": (
            len(truth.kept_doc_ids), len(truth.kept_doc_ids),
            len(truth.kept_triplets), truth.dedup_total,
        ),
        "split": (None, None, truth.dedup_total, sum(SPLIT.values())),
    }
    for stage, (a_in, a_out, t_in, t_out) in expected.items():
        record = manifest.get(stage)
        assert record.articles_in == a_in, stage
        assert record.articles_out == a_out, stage
        assert record.triplets_in == t_in, stage
        assert record.triplets_out == t_out, stage
    assert manifest.article_counts_monotone()
    assert elapsed < 60.0
    _report(
        f"funnel fidelity: 7 stages match planted ground truth, "
        f"monotone, {elapsed:.2f}s < 60s"
    )


def test_rouge_oracle_equivalence():
    pairs = random_token_pairs(500, max_len=12, seed=0xACCE)
    for cand, ref in pairs:
        for n in (1, 2):
            expected = oracle_rouge_n(cand, ref, n)
            got = rouge_n(cand, ref, n)
            assert abs(got.precision - expected[0]) <= 1e-9
            assert abs(got.recall - expected[1]) <= 1e-9
            assert abs(got.f1 - expected[2]) <= 1e-9
        lcs = oracle_lcs_exhaustive(cand, ref)
        got_l = rouge_l(cand, ref)
        assert abs(got_l.precision - (lcs / len(cand) if cand else 0.0)) <= 1e-9
        assert abs(got_l.recall - (lcs / len(ref) if ref else 0.0)) <= 1e-9
    identical = ["egfr", "signaling", "pathway"]
    assert rouge_n(identical, identical, 1).f1 == 1.0
    assert rouge_n(identical, identical, 2) == rouge_l(identical, identical)
    assert rouge_l(identical, identical).precision == 1.0
    _report("ROUGE oracle equivalence: 500 random pairs within 1e-9, identity exact")


def test_bertscore_aggregation():
    embedder = HashEmbedder(dim=48)
    emb = embedder.embed(["egfr mutation drives resistance"])[0]
    pair = bertscore(emb, emb)
    assert abs(pair.precision - 1.0) <= 1e-9
    assert abs(pair.recall - 1.0) <= 1e-9
    assert abs(pair.f1 - 1.0) <= 1e-9

    permuted = embedder.embed(["resistance drives mutation egfr"])[0]
    assert bertscore(emb, permuted) == bertscore(permuted, emb)
    assert bertscore(emb, permuted).f1 == 1.0

    e1, e2 = [1.0, 0.0], [0.0, 1.0]
    mixed = [1 / math.sqrt(2), 1 / math.sqrt(2)]
    hand = bertscore(
        TokenEmbeddings(["c1", "c2"], [e1, e2]),
        TokenEmbeddings(["r1", "r2"], [e1, mixed]),
    )
    expected = (1 + 1 / math.sqrt(2)) / 2
    assert abs(hand.precision - expected) <= 1e-9
    assert abs(hand.recall - expected) <= 1e-9
    _report("BERTScore aggregation: identity, permutation invariance, 2x2 hand case")


def test_welch_numerical_accuracy():
    for a, b in fixed_sample_pairs(50):
        got = welch_t_test(a, b)
        t, dof, p = welch_oracle(a, b)
        assert abs(got.t_stat - t) <= 1e-10 * max(1.0, abs(t))
        assert abs(got.dof - dof) <= 1e-10 * max(1.0, abs(dof))
        assert abs(got.p_value - p) <= 1e-10
        rev = welch_t_test(b, a)
        assert got.t_stat == -rev.t_stat
    _report("Welch accuracy: 50 pairs match mpmath within 1e-10, antisymmetry exact")


def test_mspt_qualitative_reproduction(tmp_path):
    n = 200
    gold_rows = [
        TripleRow(f"s{i}", f"r{i}", f"term{i} marker{i % 13} note{i % 7}")
        for i in range(n)
    ]
    gold_path = tmp_path / "gold.csv"
    write_split_csv(gold_rows, gold_path)
    perfect_path = tmp_path / "perfect.csv"
    write_split_csv(gold_rows, perfect_path)
    constant_path = tmp_path / "constant.csv"
    write_split_csv(
        [TripleRow(f"s{i}", f"r{i}", "unrelated constant answer") for i in range(n)],
        constant_path,
    )
    embedder = HashEmbedder(dim=64)
    seeds = list(range(10, 20))
    for seed in seeds:
        report, _, _ = run_mspt(perfect_path, gold_path, seed, embedder)
        assert report.mean_actual - report.mean_random > 0, seed
        assert report.p_value < 0.01, seed
        null_report, _, _ = run_mspt(constant_path, gold_path, seed, embedder)
        assert null_report.p_value > 0.05, seed
    _report(
        "MSPT qualitative: gap>0 and p<0.01 for matched predictions, "
        "p>0.05 for unrelated, across 10 seeds"
    )


def test_split_determinism_and_shape():
    records = _records(11_200)
    spec = SplitSpec(10_000, 1_000, 200, seed=42)
    splits = shuffle_and_split(records, spec)
    assert [len(splits[k]) for k in ("train", "test", "validation")] == [
        10_000, 1_000, 200,
    ]
    seen = set()
    for part in splits.values():
        ids = {r.subject for r in part}
        assert not ids & seen
        seen |= ids
    for name, expected in GOLDEN_SPLIT_HASHES.items():
        assert _digest(splits[name]) == expected, name
    again = shuffle_and_split(records, spec)
    assert again == splits
    _report("split determinism: exact sizes, disjoint, golden hashes stable")


def test_threshold_semantics():
    gen = SplitMix64(0x7EEE)

    def rand_prob():
        # Mix exact-boundary values in with uniform draws.
        roll = gen.randbelow(10)
        if roll == 0:
            return 0.8
        return gen.next_u64() / 2.0**64

    scored = [
        ScoredTriplet(Triplet(f"s{i}", "r", f"o{i}"), rand_prob(), rand_prob())
        for i in range(500)
    ]
    kept = {t.subject for t in filter_scored(scored, 0.80)}
    for item in scored:
        expected = item.subject_prob > 0.80 and item.object_prob > 0.80
        assert (item.triplet.subject in kept) == expected
    boundary = ScoredTriplet(Triplet("sb", "r", "ob"), 0.80, 0.95)
    assert list(filter_scored([boundary], 0.80)) == []
    thresholds = sorted(gen.next_u64() / 2.0**64 for _ in range(8))
    previous = None
    for threshold in thresholds:
        current = {t.subject for t in filter_scored(scored, threshold)}
        if previous is not None:
            assert current <= previous
        previous = current
    _report("threshold semantics: strict > at 0.80, monotone in threshold")


def test_kde_histogram_and_svg(tmp_path):
    gen = SplitMix64(0xF00D)
    rng = np.random.default_rng(7)
    fixtures = {
        "uniform": [gen.next_u64() / 2.0**64 for _ in range(200)],
        "normal": rng.normal(0.6, 0.12, 200).tolist(),
        "skewed": (rng.beta(2, 8, 150)).tolist(),
        "two-point": [0.0, 1.0],
        "constant": [0.42] * 50,
    }
    for name, samples in fixtures.items():
        curve = kde_curve(samples, points=512)
        xs = np.array([x for x, _ in curve])
        ys = np.array([y for _, y in curve])
        integral = float(np.trapezoid(ys, xs))
        assert 0.98 <= integral <= 1.02, (name, integral)
        if len(samples) > 1 and min(samples) < max(samples):
            assert histogram(samples, 20) == oracle_histogram(samples, 20), name
    plots = []
    for i in range(2):
        path = tmp_path / f"plot{i}.svg"
        emit_distribution_plot(fixtures["normal"], fixtures["skewed"], path)
        plots.append(path.read_bytes())
    assert plots[0] == plots[1]
    _report("KDE integral within 2%, histogram oracle equal, SVG byte-stable")
