"""License gating: keep only documents whose license permits reuse.

Resolution order per document: the license parsed from the article itself,
then the external registry.  Anything still UNKNOWN is rejected; this stage
exists for compliance, so uncertainty never passes.  Registry lookups are
cached on disk as append-only JSON lines, which makes warm reruns fully
offline-reproducible.
"""

from __future__ import annotations

import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping, Protocol, Sequence

from .corpus import Document, LicenseTag, classify_license_evidence
from .errors import ProtocolError, ResolverUnavailable
from .funnel import FunnelCounter
from .wire import call_with_retries, default_session, json_body

DEFAULT_CONCURRENCY = 4
DEFAULT_POLITENESS_S = 0.35


class LicenseResolver(Protocol):
    def resolve(self, article_id: str) -> LicenseTag: ...


@dataclass
class StaticResolver:
    """Resolver over a fixed id -> tag mapping; unknown ids give UNKNOWN."""

    mapping: Mapping[str, LicenseTag]

    def resolve(self, article_id: str) -> LicenseTag:
        return self.mapping.get(article_id, LicenseTag.UNKNOWN)


class RegistryClient:
    """HTTP client for a license registry.

    Issues GET <base_url>?id=<article id> (plus the configured API key) and
    reads the license designator from the JSON response: either a top-level
    "license" field or the first entry of a "records" list.  A missing
    record maps to UNKNOWN; transport failures raise ResolverUnavailable
    after 3 attempts with exponential backoff starting at 1 s.
    """

    def __init__(
        self,
        base_url: str,
        api_key: str | None = None,
        session=None,
        attempts: int = 3,
        backoff_s: float = 1.0,
        sleep: Callable[[float], None] = time.sleep,
        timeout_s: float = 30.0,
    ) -> None:
        if not base_url:
            raise ValueError("base_url is required")
        self.base_url = base_url
        self.api_key = api_key
        self._session = session or default_session()
        self._attempts = attempts
        self._backoff_s = backoff_s
        self._sleep = sleep
        self._timeout_s = timeout_s

    def resolve(self, article_id: str) -> LicenseTag:
        if not article_id:
            raise ValueError("article id is required")
        params = {"id": article_id}
        if self.api_key:
            params["api_key"] = self.api_key

        def send():
            return self._session.get(
                self.base_url, params=params, timeout=self._timeout_s
            )

        try:
            response = call_with_retries(
                send,
                unavailable=ResolverUnavailable,
                attempts=self._attempts,
                backoff_s=self._backoff_s,
                sleep=self._sleep,
            )
        except ProtocolError as exc:
            if "404" in str(exc):
                return LicenseTag.UNKNOWN
            raise
        body = json_body(response)
        designator = body.get("license")
        if designator is None:
            records = body.get("records")
            if isinstance(records, list) and records:
                designator = records[0].get("license")
        if not designator:
            return LicenseTag.UNKNOWN
        return classify_license_evidence(str(designator))


class CachedResolver:
    """Write-through disk cache in front of any resolver.

    Cache format: one JSON object per line, {"id", "license", "fetched_at"},
    append-only so runs are diff-able.  With a warm cache the inner resolver
    is never consulted, so reruns work with networking disabled.
    """

    def __init__(self, inner: LicenseResolver, cache_path: str | Path) -> None:
        self._inner = inner
        self._path = Path(cache_path)
        self._lock = threading.Lock()
        self._cache: dict[str, LicenseTag] = {}
        if self._path.exists():
            for line in self._path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                obj = json.loads(line)
                self._cache[obj["id"]] = LicenseTag(obj["license"])

    def resolve(self, article_id: str) -> LicenseTag:
        with self._lock:
            cached = self._cache.get(article_id)
        if cached is not None:
            return cached
        tag = self._inner.resolve(article_id)
        record = {
            "id": article_id,
            "license": tag.value,
            "fetched_at": datetime.now(timezone.utc).isoformat(),
        }
        with self._lock:
            self._cache[article_id] = tag
            with open(self._path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
        return tag

    def prefetch(
        self,
        article_ids: Sequence[str],
        concurrency: int = DEFAULT_CONCURRENCY,
        politeness_s: float = DEFAULT_POLITENESS_S,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        """Resolve many ids concurrently, politely spacing request slots."""
        with self._lock:
            missing = [i for i in article_ids if i not in self._cache]
        if not missing:
            return

        def fetch(article_id: str) -> None:
            if politeness_s > 0:
                sleep(politeness_s)
            self.resolve(article_id)

        with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
            # Materialize to surface the first error, if any.
            list(pool.map(fetch, missing))


def resolve_license(article_id: str, client: LicenseResolver) -> LicenseTag:
    """Resolve one article id through the given client or resolver stack."""
    if not article_id:
        raise ValueError("article id is required")
    return client.resolve(article_id)


def filter_by_license(
    docs: Iterable[Document],
    allowed: frozenset[LicenseTag] | set[LicenseTag],
    resolver: LicenseResolver,
    counter: FunnelCounter | None = None,
) -> Iterator[Document]:
    """Yield documents whose resolved license is in ``allowed``.

    In-document evidence wins; only UNKNOWN documents hit the resolver.
    UNKNOWN after resolution is rejected.  Resolver failures propagate:
    license compliance must not silently degrade.
    """
    if not allowed:
        raise ValueError("allowed license set must be non-empty")
    for doc in docs:
        tag = doc.license
        if tag is LicenseTag.UNKNOWN:
            tag = resolver.resolve(doc.id)
        passed = tag is not LicenseTag.UNKNOWN and tag in allowed
        if counter is not None:
            counter.count(passed)
        if passed:
            yield doc
