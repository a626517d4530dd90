"""Text embedders behind one small interface.

The default embedder is fully deterministic and offline: character n-grams
hashed into a fixed number of signed buckets, unit-normalized. External
sentence encoders can be plugged in behind the same protocol; precomputed
vectors can be served from a fixture file.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from .errors import EmbedderFailure

DEFAULT_DIM = 256
DEFAULT_SEED = 42
_WS = re.compile(r"\s+")


class Embedder(Protocol):
    dim: int

    def embed(self, text: str) -> np.ndarray:  # pragma: no cover - interface
        ...


@dataclass
class EmbeddingVector:
    """Unit-normalized embedding with its norm invariant checked on creation."""

    values: np.ndarray

    def __post_init__(self) -> None:
        norm = float(np.linalg.norm(self.values))
        if abs(norm - 1.0) > 1e-6:
            raise EmbedderFailure(f"embedding not unit-normalized (norm={norm})")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


class HashedNgramEmbedder:
    """Character 3-5 gram vectors hashed into signed buckets.

    Deterministic for a fixed seed; no corpus state, so the same text always
    embeds to the same vector. Empty text maps to a fixed basis vector to
    keep the unit-norm invariant total.
    """

    def __init__(self, dim: int = DEFAULT_DIM, seed: int = DEFAULT_SEED):
        self.dim = dim
        self.seed = seed

    def _ngrams(self, text: str) -> dict[str, int]:
        text = _WS.sub(" ", text.lower()).strip()
        counts: dict[str, int] = {}
        for n in (3, 4, 5):
            for i in range(len(text) - n + 1):
                gram = text[i : i + n]
                counts[gram] = counts.get(gram, 0) + 1
        return counts

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        counts = self._ngrams(text)
        if not counts:
            vec[0] = 1.0
            return vec
        prefix = f"{self.seed}:".encode("utf-8")
        for gram, count in counts.items():
            digest = hashlib.md5(prefix + gram.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:4], "big") % self.dim
            sign = 1.0 if digest[4] & 1 else -1.0
            vec[bucket] += sign * count
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            vec[0] = 1.0
            return vec
        return vec / norm


class FixtureEmbedder:
    """Serves precomputed vectors keyed by exact text, with a fallback embedder.

    Used where a specific external encoder's geometry must be reproduced
    offline (the vectors are recorded once and shipped as a JSON fixture).
    """

    def __init__(self, path: str | Path, fallback: Embedder | None = None):
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        self.vectors = {
            key: np.asarray(values, dtype=np.float64)
            for key, values in data["vectors"].items()
        }
        dims = {v.shape[0] for v in self.vectors.values()}
        if len(dims) > 1:
            raise EmbedderFailure(f"fixture vectors disagree on dimension: {dims}")
        self.dim = dims.pop() if dims else (fallback.dim if fallback else DEFAULT_DIM)
        self.fallback = fallback

    def embed(self, text: str) -> np.ndarray:
        if text in self.vectors:
            return self.vectors[text]
        if self.fallback is not None:
            return self.fallback.embed(text)
        raise EmbedderFailure(f"no fixture vector for text: {text[:80]!r}")


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))
