"""Thin HTTP plumbing shared by the service clients.

Every remote call in the pipeline goes through ``call_with_retries``:
bounded attempts, exponential backoff, and a caller-chosen exception once the
budget is exhausted.  Transport objects only need ``get``/``post`` returning
a response with ``status_code`` and ``json()``, which keeps recorded-fixture
fakes trivial in tests.
"""

from __future__ import annotations

import time
from typing import Any, Callable

import requests

from .errors import ProtocolError

DEFAULT_ATTEMPTS = 3
DEFAULT_BACKOFF_S = 1.0


def default_session() -> requests.Session:
    return requests.Session()


def call_with_retries(
    send: Callable[[], Any],
    *,
    unavailable: type[Exception],
    attempts: int = DEFAULT_ATTEMPTS,
    backoff_s: float = DEFAULT_BACKOFF_S,
    sleep: Callable[[float], None] = time.sleep,
) -> Any:
    """Run ``send`` until it returns a usable response.

    Connection failures and 5xx responses are retried with exponential
    backoff (backoff_s, 2*backoff_s, ...); other non-200 statuses are wire
    contract violations and raise ProtocolError immediately.  After the last
    attempt the caller's ``unavailable`` error is raised, chained to the
    final cause.
    """
    if attempts < 1:
        raise ValueError("attempts must be >= 1")
    last_error: Exception | None = None
    for attempt in range(attempts):
        try:
            response = send()
        except requests.RequestException as exc:
            last_error = exc
        else:
            status = response.status_code
            if status == 200:
                return response
            if status >= 500:
                last_error = ProtocolError(f"server returned {status}")
            else:
                raise ProtocolError(f"unexpected status {status}")
        if attempt < attempts - 1:
            sleep(backoff_s * (2**attempt))
    raise unavailable(f"gave up after {attempts} attempts") from last_error


def json_body(response: Any) -> dict:
    try:
        body = response.json()
    except ValueError as exc:
        raise ProtocolError("response body is not valid JSON") from exc
    if not isinstance(body, dict):
        raise ProtocolError("response JSON is not an object")
    return body
