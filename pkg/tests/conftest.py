import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fixture_corpus import build_fixture  # noqa: E402

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def corpus_fixture(tmp_path_factory):
    """(corpus root, ground truth) for the planted 200-document corpus."""
    root = tmp_path_factory.mktemp("fixture") / "corpus"
    truth = build_fixture(root)
    return root, truth


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN_DIR
