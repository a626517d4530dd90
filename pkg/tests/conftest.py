import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
FIXTURES = TESTS_DIR / "fixtures"

sys.path.insert(0, str(TESTS_DIR))

from seda.embedding import FixtureEmbedder, HashedNgramEmbedder
from seda.store import Store


@pytest.fixture(scope="session")
def default_embedder():
    return HashedNgramEmbedder()


@pytest.fixture(scope="session")
def fixture_embedder():
    """Recorded vectors for the pinned scenarios, hashed n-grams otherwise."""
    return FixtureEmbedder(
        FIXTURES / "embedding_vectors.json", fallback=HashedNgramEmbedder()
    )


@pytest.fixture
def tmp_store(tmp_path):
    return Store(tmp_path / "store.jsonl")
