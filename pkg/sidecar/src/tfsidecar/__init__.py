"""tf-sidecar: a small inference service exposing biomedical-entity
probability scoring (/ner_score) and token embeddings (/embed) over JSON
HTTP, with deterministic hash backends for offline and test use.
"""

__version__ = "0.1.0"

from .app import create_app
from .config import SidecarConfig

__all__ = ["SidecarConfig", "create_app"]
