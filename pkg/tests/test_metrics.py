"""ROUGE and BERTScore behavior, checked against independent oracles."""

import math
import re

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from triplefunnel.dataset import TripleRow
from triplefunnel.errors import DimensionMismatch, EmptySide, RowMisalignment
from triplefunnel.metrics import (
    CachingEmbedder,
    ScorePair,
    TokenEmbeddings,
    bertscore,
    evaluate_rows,
    rouge_l,
    rouge_n,
    tokenize_for_rouge,
)
from triplefunnel.offline import HashEmbedder
from triplefunnel.rng import SplitMix64

# ---------------------------------------------------------------------------
# Oracles


def oracle_ngram_overlap(cand, ref, n):
    """Clipped overlap via plain list.count, no Counter involved."""
    cand_grams = [tuple(cand[i : i + n]) for i in range(len(cand) - n + 1)]
    ref_grams = [tuple(ref[i : i + n]) for i in range(len(ref) - n + 1)]
    overlap = sum(
        min(cand_grams.count(g), ref_grams.count(g)) for g in set(cand_grams)
    )
    return overlap, len(cand_grams), len(ref_grams)


def oracle_rouge_n(cand, ref, n):
    overlap, n_cand, n_ref = oracle_ngram_overlap(cand, ref, n)
    p = overlap / max(1, n_cand)
    r = overlap / max(1, n_ref)
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


def _is_subsequence(needle, haystack):
    it = iter(haystack)
    return all(x in it for x in needle)


def oracle_lcs_exhaustive(cand, ref):
    """Enumerate every subsequence of the shorter list (lengths <= 12)."""
    short, long_ = (cand, ref) if len(cand) <= len(ref) else (ref, cand)
    assert len(short) <= 12
    best = 0
    for mask in range(1 << len(short)):
        sub = [short[i] for i in range(len(short)) if mask >> i & 1]
        if len(sub) > best and _is_subsequence(sub, long_):
            best = len(sub)
    return best


def random_token_pairs(count, max_len=12, alphabet=("a", "b", "c", "d"), seed=7):
    gen = SplitMix64(seed)
    pairs = []
    for _ in range(count):
        la = gen.randbelow(max_len + 1)
        lb = gen.randbelow(max_len + 1)
        a = [alphabet[gen.randbelow(len(alphabet))] for _ in range(la)]
        b = [alphabet[gen.randbelow(len(alphabet))] for _ in range(lb)]
        pairs.append((a, b))
    return pairs


# ---------------------------------------------------------------------------
# Tokenizer


def test_tokenizer_rule_trace():
    assert tokenize_for_rouge("EGFR-mutant tumors.") == ["egfr", "mutant", "tumors"]
    assert tokenize_for_rouge("") == []


def test_tokenizer_matches_regex_reference():
    # Reference restatement of the rule: lowercase, alnum runs.
    samples = [
        "EGFR-mutant tumors.",
        "p53/KRAS double-mutant",
        "  spaces   and\ttabs ",
        "already lower case",
        "MixedCASE Words",
        "digits 123 mix3d t0kens",
        "punctuation!?;:,()[]",
        "a b c single letters",
        "hyphen-ated co-occurring re-analysis",
        "Unicode naïve café",  # non-ASCII letters are alnum in Python
        "trailing.",
        ".leading",
        "double..dots",
        "UPPER",
        "x",
        "",
        "   ",
        "5-fluorouracil",
        "IL-6 and TNF-alpha",
        "end-to-end",
    ]
    for text in samples:
        expected = re.findall(r"[^\W_]+", text.lower(), re.UNICODE)
        assert tokenize_for_rouge(text) == expected, text


# ---------------------------------------------------------------------------
# ROUGE-N


def test_rouge_n_identical():
    tokens = ["lung", "cancer", "therapy"]
    assert rouge_n(tokens, tokens, 1) == ScorePair(1.0, 1.0, 1.0)
    assert rouge_n(tokens, tokens, 2) == ScorePair(1.0, 1.0, 1.0)


def test_rouge_n_disjoint():
    assert rouge_n(["a", "b"], ["c", "d"], 1) == ScorePair(0.0, 0.0, 0.0)


def test_rouge_n_hand_case():
    pair = rouge_n(["the", "cat", "sat"], ["the", "cat"], 1)
    assert pair.precision == pytest.approx(2 / 3, abs=1e-12)
    assert pair.recall == pytest.approx(1.0, abs=1e-12)
    assert pair.f1 == pytest.approx(0.8, abs=1e-12)


def test_rouge_n_empty_sides_zero():
    assert rouge_n([], ["a"], 1) == ScorePair(0.0, 0.0, 0.0)
    assert rouge_n(["a"], [], 1) == ScorePair(0.0, 0.0, 0.0)
    assert rouge_n([], [], 2) == ScorePair(0.0, 0.0, 0.0)


def test_rouge_n_rejects_other_n():
    with pytest.raises(ValueError):
        rouge_n(["a"], ["a"], 3)


def test_rouge_n_matches_oracle_on_random_pairs():
    for cand, ref in random_token_pairs(200, seed=11):
        for n in (1, 2):
            expected = oracle_rouge_n(cand, ref, n)
            got = rouge_n(cand, ref, n)
            assert got.precision == pytest.approx(expected[0], abs=1e-9)
            assert got.recall == pytest.approx(expected[1], abs=1e-9)
            assert got.f1 == pytest.approx(expected[2], abs=1e-9)


@given(
    st.lists(st.sampled_from("abcd"), max_size=20),
    st.lists(st.sampled_from("abcd"), max_size=20),
)
def test_rouge_swap_symmetry(cand, ref):
    for n in (1, 2):
        assert rouge_n(cand, ref, n).precision == rouge_n(ref, cand, n).recall
    assert rouge_l(cand, ref).precision == rouge_l(ref, cand).recall


@given(
    st.lists(st.sampled_from("ab"), max_size=15),
    st.lists(st.sampled_from("ab"), max_size=15),
)
def test_rouge_overlap_sanity_band(cand, ref):
    overlap1, _, _ = oracle_ngram_overlap(cand, ref, 1)
    overlap2, _, _ = oracle_ngram_overlap(cand, ref, 2)
    assert 0 <= overlap2 <= overlap1 + 1
    for n in (1, 2):
        pair = rouge_n(cand, ref, n)
        for value in (pair.precision, pair.recall, pair.f1):
            assert 0.0 <= value <= 1.0


# ---------------------------------------------------------------------------
# ROUGE-L


def test_rouge_l_identical():
    tokens = ["a", "b", "c"]
    assert rouge_l(tokens, tokens) == ScorePair(1.0, 1.0, 1.0)


def test_rouge_l_hand_dp_case():
    pair = rouge_l(["a", "b", "c"], ["a", "c"])
    assert pair.precision == pytest.approx(2 / 3, abs=1e-12)
    assert pair.recall == pytest.approx(1.0, abs=1e-12)


def test_rouge_l_empty():
    assert rouge_l([], ["a"]) == ScorePair(0.0, 0.0, 0.0)


def test_rouge_l_matches_exhaustive_oracle():
    for cand, ref in random_token_pairs(50, seed=23):
        lcs = oracle_lcs_exhaustive(cand, ref)
        got = rouge_l(cand, ref)
        expected_p = lcs / len(cand) if cand else 0.0
        expected_r = lcs / len(ref) if ref else 0.0
        assert got.precision == pytest.approx(expected_p, abs=1e-9)
        assert got.recall == pytest.approx(expected_r, abs=1e-9)


# ---------------------------------------------------------------------------
# BERTScore


def _embs(tokens, vectors):
    return TokenEmbeddings(tokens, np.asarray(vectors, dtype=float))


def test_bertscore_identical_embeddings():
    emb = HashEmbedder(dim=32).embed(["egfr inhibition slows growth"])[0]
    pair = bertscore(emb, emb)
    assert pair.precision == pytest.approx(1.0, abs=1e-9)
    assert pair.recall == pytest.approx(1.0, abs=1e-9)
    assert pair.f1 == pytest.approx(1.0, abs=1e-9)


def test_bertscore_permutation_invariance():
    embedder = HashEmbedder(dim=16)
    a = embedder.embed(["alpha beta gamma delta"])[0]
    b = embedder.embed(["delta gamma beta alpha"])[0]
    pair = bertscore(a, b)
    assert pair == ScorePair(1.0, 1.0, 1.0)


def test_bertscore_two_by_two_hand_case():
    # candidate {e1, e2}, reference {e1, (e1+e2)/sqrt(2)}; the four cosines
    # are 1, 1/sqrt2, 0, 1/sqrt2, giving p = r = (1 + 1/sqrt2) / 2.
    e1 = [1.0, 0.0]
    e2 = [0.0, 1.0]
    mixed = [1 / math.sqrt(2), 1 / math.sqrt(2)]
    pair = bertscore(_embs(["t1", "t2"], [e1, e2]), _embs(["r1", "r2"], [e1, mixed]))
    expected = (1 + 1 / math.sqrt(2)) / 2
    assert pair.precision == pytest.approx(expected, abs=1e-9)
    assert pair.recall == pytest.approx(expected, abs=1e-9)
    assert pair.f1 == pytest.approx(expected, abs=1e-9)


def test_bertscore_errors():
    a = _embs(["x"], [[1.0, 0.0]])
    with pytest.raises(EmptySide):
        bertscore(a, _embs([], np.zeros((0, 2))))
    with pytest.raises(DimensionMismatch):
        bertscore(a, _embs(["y"], [[1.0, 0.0, 0.0]]))


def test_token_embeddings_validation():
    with pytest.raises(ValueError):
        TokenEmbeddings(["a"], [[float("nan"), 1.0]])
    with pytest.raises(ValueError):
        TokenEmbeddings(["a", "b"], [[1.0, 0.0]])


# ---------------------------------------------------------------------------
# evaluate_rows


def _rows(objects):
    return [TripleRow(f"s{i}", f"r{i}", obj) for i, obj in enumerate(objects)]


def test_evaluate_identical_files_all_ones():
    rows = _rows(["tumor growth", "egfr expression", "cell death"])
    report = evaluate_rows(rows, rows, HashEmbedder(dim=32))
    for metric, pair in report.aggregates.items():
        assert pair.f1 == pytest.approx(1.0, abs=1e-9), metric


def test_evaluate_aggregate_is_mean_of_rows():
    preds = _rows(["tumor growth", "egfr", "x y z", "cell death"])
    gold = _rows(["tumor invasion", "egfr expression", "q", "apoptosis death"])
    report = evaluate_rows(preds, gold, HashEmbedder(dim=32))
    for metric in ("rouge1", "rouge2", "rougeL", "bertscore"):
        mean_f1 = sum(r[metric].f1 for r in report.rows) / len(report.rows)
        assert abs(report.aggregates[metric].f1 - mean_f1) < 1e-12


def test_evaluate_hand_computed_rouge1_aggregate():
    preds = _rows(["a b", "a"])
    gold = _rows(["a", "b"])
    report = evaluate_rows(preds, gold, HashEmbedder(dim=8))
    # row 0: overlap 1, p=1/2, r=1, f1=2/3; row 1: overlap 0 -> 0.
    assert report.aggregates["rouge1"].f1 == pytest.approx((2 / 3) / 2, abs=1e-12)


def test_evaluate_row_misalignment():
    with pytest.raises(RowMisalignment):
        evaluate_rows(_rows(["a"]), _rows(["a", "b"]), HashEmbedder())
    preds = [TripleRow("s", "r", "o")]
    gold = [TripleRow("DIFFERENT", "r", "o")]
    with pytest.raises(RowMisalignment):
        evaluate_rows(preds, gold, HashEmbedder())


def test_evaluate_empty_object_scores_zero():
    preds = _rows([""])
    gold = _rows(["tumor"])
    report = evaluate_rows(preds, gold, HashEmbedder(dim=8))
    assert report.rows[0]["bertscore"] == ScorePair(0.0, 0.0, 0.0)
    assert report.rows[0]["rouge1"] == ScorePair(0.0, 0.0, 0.0)


class CountingEmbedder:
    def __init__(self):
        self.calls = []
        self.inner = HashEmbedder(dim=8)
        self.name = "counting"

    def embed(self, texts):
        self.calls.append(list(texts))
        return self.inner.embed(texts)


def test_caching_embedder_embeds_each_text_once():
    counting = CountingEmbedder()
    cached = CachingEmbedder(counting)
    cached.embed(["a", "b", "a"])
    cached.embed(["b", "c"])
    seen = [t for call in counting.calls for t in call]
    assert sorted(seen) == ["a", "b", "c"]
