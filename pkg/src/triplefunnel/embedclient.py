"""Client for the sidecar's token-embedding endpoint.

Wire contract: POST <base>/embed with {"texts": [...]} returns
{"results": [{"tokens": [...], "vectors": [[...], ...]}, ...]} with one
result per text, token/vector lists of equal length, and a shared vector
dimension.  The sidecar normalizes vectors server-side; this client only
validates shape.
"""

from __future__ import annotations

import time
from typing import Callable, Sequence

from .errors import ProtocolError, ScorerUnavailable
from .metrics import TokenEmbeddings
from .wire import call_with_retries, default_session, json_body


class HttpEmbeddingProvider:
    def __init__(
        self,
        base_url: str,
        session=None,
        attempts: int = 3,
        backoff_s: float = 1.0,
        sleep: Callable[[float], None] = time.sleep,
        timeout_s: float = 120.0,
    ) -> None:
        if not base_url:
            raise ValueError("base_url is required")
        self.base_url = base_url.rstrip("/")
        self.name = f"http-embedder({self.base_url})"
        self._session = session or default_session()
        self._attempts = attempts
        self._backoff_s = backoff_s
        self._sleep = sleep
        self._timeout_s = timeout_s

    def embed(self, texts: Sequence[str]) -> list[TokenEmbeddings]:
        def send():
            return self._session.post(
                f"{self.base_url}/embed",
                json={"texts": list(texts)},
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
        results = body.get("results")
        if not isinstance(results, list) or len(results) != len(texts):
            raise ProtocolError(
                f"expected {len(texts)} embedding results, got "
                f"{len(results) if isinstance(results, list) else 'non-list'}"
            )
        out = []
        for entry in results:
            try:
                out.append(TokenEmbeddings(entry["tokens"], entry["vectors"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise ProtocolError(f"malformed embedding result: {exc}") from exc
        return out
