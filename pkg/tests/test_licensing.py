"""License gating, registry client behavior, and the disk cache."""

import json

import pytest
import requests

from triplefunnel.corpus import Document, LicenseTag, load_corpus
from triplefunnel.errors import ProtocolError, ResolverUnavailable
from triplefunnel.funnel import FunnelCounter
from triplefunnel.licensing import (
    CachedResolver,
    RegistryClient,
    StaticResolver,
    filter_by_license,
    resolve_license,
)


def _doc(doc_id, license_tag):
    return Document(doc_id, "t", "body", license_tag, f"{doc_id}.xml")


class FakeResponse:
    def __init__(self, status_code=200, payload=None):
        self.status_code = status_code
        self._payload = payload if payload is not None else {}

    def json(self):
        if isinstance(self._payload, Exception):
            raise self._payload
        return self._payload


class FakeSession:
    """Scripted GET responses: one entry per call, exceptions raised as-is."""

    def __init__(self, script):
        self.script = list(script)
        self.calls = []

    def get(self, url, params=None, timeout=None):
        self.calls.append({"url": url, "params": params})
        action = self.script.pop(0)
        if isinstance(action, Exception):
            raise action
        return action


# ---------------------------------------------------------------------------
# filter_by_license


def test_cc0_document_kept():
    docs = [_doc("PMC1", LicenseTag.CC0)]
    kept = list(filter_by_license(docs, {LicenseTag.CC0}, StaticResolver({})))
    assert [d.id for d in kept] == ["PMC1"]


def test_unknown_resolved_to_disallowed_rejected():
    docs = [_doc("PMC1", LicenseTag.UNKNOWN)]
    resolver = StaticResolver({"PMC1": LicenseTag.CC_BY_NC})
    assert list(filter_by_license(docs, {LicenseTag.CC0}, resolver)) == []


def test_unknown_after_resolution_rejected_even_if_allowed():
    docs = [_doc("PMC1", LicenseTag.UNKNOWN)]
    kept = list(
        filter_by_license(docs, {LicenseTag.CC0, LicenseTag.UNKNOWN}, StaticResolver({}))
    )
    assert kept == []


def test_in_document_evidence_wins_over_resolver():
    docs = [_doc("PMC1", LicenseTag.CC0)]

    class Exploding:
        def resolve(self, article_id):
            raise AssertionError("resolver must not be called")

    assert len(list(filter_by_license(docs, {LicenseTag.CC0}, Exploding()))) == 1


def test_fixture_corpus_thirty_cc0_kept(corpus_fixture):
    root, truth = corpus_fixture
    docs = list(load_corpus(root))
    counter = FunnelCounter()
    kept = list(filter_by_license(docs, {LicenseTag.CC0}, StaticResolver({}), counter))
    assert len(kept) == 30
    assert {d.id for d in kept} == truth.cc0_ids
    assert counter.seen == len(docs)
    assert counter.kept + counter.rejected == counter.seen
    assert {d.id for d in kept} <= {d.id for d in docs}


def test_empty_allowed_set_rejected():
    with pytest.raises(ValueError):
        list(filter_by_license([], set(), StaticResolver({})))


def test_resolver_failure_fails_stage():
    docs = [_doc("PMC1", LicenseTag.UNKNOWN)]

    class Unavailable:
        def resolve(self, article_id):
            raise ResolverUnavailable("down")

    with pytest.raises(ResolverUnavailable):
        list(filter_by_license(docs, {LicenseTag.CC0}, Unavailable()))


# ---------------------------------------------------------------------------
# RegistryClient


def test_recorded_accessions_match_expected_tags(golden_dir):
    recording = json.loads((golden_dir / "license_registry.json").read_text())
    for accession, body in recording["responses"].items():
        client = RegistryClient(
            "https://registry.test/licenses",
            session=FakeSession([FakeResponse(200, body)]),
            sleep=lambda s: None,
        )
        expected = LicenseTag[recording["expected_tags"][accession]]
        assert client.resolve(accession) is expected, accession


def test_registry_request_shape():
    session = FakeSession([FakeResponse(200, {"license": "CC0"})])
    client = RegistryClient("https://r.test/api", api_key="k123", session=session)
    client.resolve("PMC77")
    call = session.calls[0]
    assert call["url"] == "https://r.test/api"
    assert call["params"] == {"id": "PMC77", "api_key": "k123"}


def test_registry_404_means_unknown():
    session = FakeSession([FakeResponse(404)])
    client = RegistryClient("https://r.test", session=session, sleep=lambda s: None)
    assert client.resolve("PMCX") is LicenseTag.UNKNOWN


def test_registry_retries_with_exponential_backoff():
    sleeps = []
    session = FakeSession(
        [
            requests.ConnectionError("boom"),
            FakeResponse(503),
            FakeResponse(200, {"license": "CC0"}),
        ]
    )
    client = RegistryClient(
        "https://r.test", session=session, sleep=sleeps.append
    )
    assert client.resolve("PMC1") is LicenseTag.CC0
    assert sleeps == [1.0, 2.0]


def test_registry_unavailable_after_three_attempts():
    session = FakeSession([requests.ConnectionError("x")] * 3)
    client = RegistryClient("https://r.test", session=session, sleep=lambda s: None)
    with pytest.raises(ResolverUnavailable):
        client.resolve("PMC1")
    assert len(session.calls) == 3


def test_registry_malformed_json_is_protocol_error():
    session = FakeSession([FakeResponse(200, ValueError("not json"))])
    client = RegistryClient("https://r.test", session=session, sleep=lambda s: None)
    with pytest.raises(ProtocolError):
        client.resolve("PMC1")


def test_resolve_license_requires_id():
    with pytest.raises(ValueError):
        resolve_license("", StaticResolver({}))


# ---------------------------------------------------------------------------
# CachedResolver


def test_cache_write_through_and_format(tmp_path):
    cache_path = tmp_path / "cache.jsonl"
    resolver = CachedResolver(StaticResolver({"PMC1": LicenseTag.CC0}), cache_path)
    assert resolver.resolve("PMC1") is LicenseTag.CC0
    record = json.loads(cache_path.read_text().splitlines()[0])
    assert record["id"] == "PMC1"
    assert record["license"] == "CC0"
    assert "fetched_at" in record


def test_warm_cache_never_touches_network(tmp_path):
    cache_path = tmp_path / "cache.jsonl"
    CachedResolver(StaticResolver({"PMC1": LicenseTag.CC_BY}), cache_path).resolve("PMC1")

    class Offline:
        def resolve(self, article_id):
            raise AssertionError("network disabled")

    warm = CachedResolver(Offline(), cache_path)
    assert warm.resolve("PMC1") is LicenseTag.CC_BY


def test_warm_cache_replay_is_deterministic(tmp_path, corpus_fixture):
    root, truth = corpus_fixture
    docs = list(load_corpus(root))
    cache_path = tmp_path / "cache.jsonl"
    mapping = {d.id: LicenseTag.CC_BY for d in docs}
    first = list(
        filter_by_license(
            docs, {LicenseTag.CC0, LicenseTag.CC_BY},
            CachedResolver(StaticResolver(mapping), cache_path),
        )
    )

    class Offline:
        def resolve(self, article_id):
            raise AssertionError("network disabled")

    second = list(
        filter_by_license(
            docs, {LicenseTag.CC0, LicenseTag.CC_BY}, CachedResolver(Offline(), cache_path)
        )
    )
    assert [d.id for d in first] == [d.id for d in second]


def test_prefetch_respects_politeness_and_caches(tmp_path):
    sleeps = []
    cache_path = tmp_path / "cache.jsonl"
    mapping = {f"PMC{i}": LicenseTag.CC0 for i in range(8)}
    resolver = CachedResolver(StaticResolver(mapping), cache_path)
    resolver.prefetch(list(mapping), concurrency=2, politeness_s=0.25, sleep=sleeps.append)
    assert sleeps == [0.25] * 8
    class Offline:
        def resolve(self, article_id):
            raise AssertionError("already prefetched")

    warm = CachedResolver(Offline(), cache_path)
    for article_id in mapping:
        assert warm.resolve(article_id) is LicenseTag.CC0
