"""Three-stage deduplication over the unified catalog.

Stage one links records sharing an identifier (normalized name or canonical
URL). Stage two prunes the pairwise space with two hash-blocking schemes:
SimHash bands over character shingles, and random-hyperplane LSH over
corpus TF-IDF vectors. Stage three scores surviving candidate pairs by
embedding cosine against a threshold. Relations feed a union-find; each
connected component elects one canonical record and the rest are
soft-deleted by pointing canonical_of at it.
"""

from __future__ import annotations

import hashlib
import itertools
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .embedding import DEFAULT_SEED, Embedder, EmbeddingVector, HashedNgramEmbedder, cosine
from .schema import UNIFIED_FIELDS, DatasetRecord, normalize_name

THETA_DEFAULT = 0.85

SIMHASH_BITS = 64
SIMHASH_BANDS = 4          # contiguous 16-bit bands
LSH_BANDS = 8
LSH_HYPERPLANES_PER_BAND = 8

_WORD = re.compile(r"[a-z0-9]+")


@dataclass
class TextSignature:
    simhash: int
    tfidf_sketch: list[int]


@dataclass
class DedupRelation:
    id_a: str
    id_b: str
    stage: str  # identifier | semantic
    score: float

    def __post_init__(self) -> None:
        if self.id_b < self.id_a:
            self.id_a, self.id_b = self.id_b, self.id_a

    def pair(self) -> tuple[str, str]:
        return (self.id_a, self.id_b)


@dataclass
class DedupCluster:
    member_ids: set[str]
    canonical_id: str
    aliases: list[str] = field(default_factory=list)


def unified_text(d: DatasetRecord) -> str:
    """Name and description joined into one comparison string, name normalized."""
    return f"{normalize_name(d.dataset_name)} {d.dataset_desc}".strip()


def identifier_match(records: list[DatasetRecord]) -> list[DedupRelation]:
    """Pairs sharing a normalized name or a canonical URL."""
    by_name: dict[str, list[str]] = defaultdict(list)
    by_url: dict[str, list[str]] = defaultdict(list)
    for r in records:
        name = normalize_name(r.dataset_name)
        if name:
            by_name[name].append(r.id)
        if r.dataset_url:
            by_url[r.dataset_url].append(r.id)
    pairs: set[tuple[str, str]] = set()
    for group in itertools.chain(by_name.values(), by_url.values()):
        for a, b in itertools.combinations(sorted(group), 2):
            pairs.add((a, b))
    return [DedupRelation(a, b, "identifier", 1.0) for a, b in sorted(pairs)]


def simhash(text: str, seed: int = DEFAULT_SEED) -> int:
    """64-bit SimHash over character 3-gram shingles. Empty text hashes to 0."""
    cleaned = re.sub(r"\s+", " ", text.lower()).strip()
    grams: dict[str, int] = {}
    for i in range(len(cleaned) - 2):
        gram = cleaned[i : i + 3]
        grams[gram] = grams.get(gram, 0) + 1
    if not grams:
        return 0
    acc = [0] * SIMHASH_BITS
    prefix = f"{seed}:".encode("utf-8")
    for gram, count in grams.items():
        digest = hashlib.md5(prefix + gram.encode("utf-8")).digest()
        value = int.from_bytes(digest[:8], "big")
        for bit in range(SIMHASH_BITS):
            acc[bit] += count if (value >> bit) & 1 else -count
    sig = 0
    for bit in range(SIMHASH_BITS):
        if acc[bit] > 0:
            sig |= 1 << bit
    return sig


def _tfidf_vectors(texts: list[str]) -> tuple[list[dict[int, float]], int]:
    """Sparse word TF-IDF vectors over the corpus vocabulary, sorted term order."""
    tokenized = [_WORD.findall(t.lower()) for t in texts]
    vocab = sorted({w for words in tokenized for w in words})
    index = {w: i for i, w in enumerate(vocab)}
    df = [0] * len(vocab)
    for words in tokenized:
        for w in set(words):
            df[index[w]] += 1
    n = len(texts)
    vectors: list[dict[int, float]] = []
    for words in tokenized:
        counts: dict[int, int] = defaultdict(int)
        for w in words:
            counts[index[w]] += 1
        vec = {
            i: tf * math.log((1 + n) / (1 + df[i])) for i, tf in counts.items()
        }
        vectors.append(vec)
    return vectors, len(vocab)


def text_signature(text: str, sketch: list[int], seed: int = DEFAULT_SEED) -> TextSignature:
    return TextSignature(simhash=simhash(text, seed), tfidf_sketch=list(sketch))


def block_candidates(
    records: list[DatasetRecord], seed: int = DEFAULT_SEED
) -> set[tuple[str, str]]:
    """Candidate pairs from SimHash band collisions union TF-IDF LSH collisions."""
    if len(records) < 2:
        return set()
    texts = [unified_text(r) for r in records]
    ids = [r.id for r in records]

    buckets: dict[tuple, list[int]] = defaultdict(list)
    for pos, text in enumerate(texts):
        sig = simhash(text, seed)
        for band in range(SIMHASH_BANDS):
            value = (sig >> (16 * band)) & 0xFFFF
            buckets[("sim", band, value)].append(pos)

    vectors, dim = _tfidf_vectors(texts)
    if dim > 0:
        rng = np.random.default_rng(seed)
        planes = rng.standard_normal((LSH_BANDS * LSH_HYPERPLANES_PER_BAND, dim))
        for pos, vec in enumerate(vectors):
            if vec:
                cols = np.fromiter(vec.keys(), dtype=np.int64)
                vals = np.fromiter(vec.values(), dtype=np.float64)
                dots = planes[:, cols] @ vals
            else:
                dots = np.zeros(LSH_BANDS * LSH_HYPERPLANES_PER_BAND)
            bits = (dots >= 0).astype(np.uint8)
            for band in range(LSH_BANDS):
                chunk = bits[band * LSH_HYPERPLANES_PER_BAND : (band + 1) * LSH_HYPERPLANES_PER_BAND]
                value = int(np.packbits(chunk)[0])
                buckets[("lsh", band, value)].append(pos)

    pairs: set[tuple[str, str]] = set()
    for members in buckets.values():
        if len(members) < 2:
            continue
        for i, j in itertools.combinations(members, 2):
            a, b = ids[i], ids[j]
            pairs.add((a, b) if a < b else (b, a))
    return pairs


def embed(text: str, embedder: Embedder) -> EmbeddingVector:
    return EmbeddingVector(values=embedder.embed(text))


def semantic_match(
    pairs: set[tuple[str, str]],
    theta: float,
    records_by_id: dict[str, DatasetRecord],
    embedder: Embedder,
) -> list[DedupRelation]:
    """Cosine-score candidate pairs; keep those at or above the threshold."""
    cache: dict[str, np.ndarray] = {}

    def vec(record_id: str) -> np.ndarray:
        if record_id not in cache:
            cache[record_id] = embedder.embed(unified_text(records_by_id[record_id]))
        return cache[record_id]

    relations = []
    for a, b in sorted(pairs):
        score = cosine(vec(a), vec(b))
        if score >= theta:
            relations.append(DedupRelation(a, b, "semantic", min(1.0, max(0.0, score))))
    return relations


def build_components(relations: list[DedupRelation]) -> list[DedupCluster]:
    """Union-find over relation endpoints.

    Every returned cluster has at least two members; canonical_id is set
    provisionally to the smallest member id until election runs.
    """
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: str, b: str) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for rel in relations:
        parent.setdefault(rel.id_a, rel.id_a)
        parent.setdefault(rel.id_b, rel.id_b)
        union(rel.id_a, rel.id_b)

    groups: dict[str, set[str]] = defaultdict(set)
    for node in parent:
        groups[find(node)].add(node)
    clusters = [
        DedupCluster(member_ids=members, canonical_id=min(members))
        for members in groups.values()
        if len(members) >= 2
    ]
    clusters.sort(key=lambda c: c.canonical_id)
    return clusters


def select_canonical(
    cluster: DedupCluster,
    records_by_id: dict[str, DatasetRecord],
    source_priority: list[str] | None = None,
) -> tuple[str, list[str]]:
    """Elect the cluster representative.

    Order: most filled fields, then best source-priority rank, then longest
    description, then smallest id. Non-canonical URLs are kept as aliases.
    """
    priority = source_priority or []

    def rank(source: str) -> int:
        # earlier in the priority list is better; unlisted sources rank last
        return len(priority) - priority.index(source) if source in priority else 0

    def sort_key(record_id: str):
        r = records_by_id[record_id]
        filled = sum(1 for f in UNIFIED_FIELDS if getattr(r, f).strip())
        return (-filled, -rank(r.source_name), -len(r.dataset_desc), r.id)

    canonical_id = min(cluster.member_ids, key=sort_key)
    canonical_url = records_by_id[canonical_id].dataset_url
    aliases = sorted(
        {
            records_by_id[m].dataset_url
            for m in cluster.member_ids
            if m != canonical_id
            and records_by_id[m].dataset_url
            and records_by_id[m].dataset_url != canonical_url
        }
    )
    return canonical_id, aliases


def find_relations(
    records: list[DatasetRecord],
    theta: float = THETA_DEFAULT,
    seed: int = DEFAULT_SEED,
    embedder: Embedder | None = None,
) -> list[DedupRelation]:
    """All duplicate relations over a record set (stages one to three)."""
    embedder = embedder or HashedNgramEmbedder(seed=seed)
    by_id = {r.id: r for r in records}
    relations = identifier_match(records)
    identified = {rel.pair() for rel in relations}
    candidates = block_candidates(records, seed) - identified
    relations.extend(semantic_match(candidates, theta, by_id, embedder))
    return relations


def dedup_run(
    store,
    theta: float = THETA_DEFAULT,
    seed: int = DEFAULT_SEED,
    embedder: Embedder | None = None,
    source_priority: list[str] | None = None,
) -> list[DatasetRecord]:
    """Deduplicate the store's surviving records and persist the outcome.

    Only records without a canonical_of pointer participate, so a repeat
    run over an already-deduplicated store finds nothing new. Duplicates
    are soft-deleted: flagged with the canonical id, never removed.
    """
    records = [r for r in store.all_records() if r.canonical_of is None]
    by_id = {r.id: r for r in records}
    relations = find_relations(records, theta=theta, seed=seed, embedder=embedder)
    clusters = build_components(relations)

    scores: dict[tuple[str, str], float] = {}
    for rel in relations:
        key = rel.pair()
        scores[key] = max(scores.get(key, 0.0), rel.score)

    survivors = dict(by_id)
    for cluster in clusters:
        canonical_id, aliases = select_canonical(cluster, by_id, source_priority)
        cluster.canonical_id = canonical_id
        cluster.aliases = aliases
        member_scores = [
            s for pair, s in scores.items() if pair[0] in cluster.member_ids
        ]
        store.put_cluster(
            {
                "canonical_id": canonical_id,
                "member_ids": sorted(cluster.member_ids),
                "aliases": aliases,
                "min_score": min(member_scores) if member_scores else 1.0,
                "max_score": max(member_scores) if member_scores else 1.0,
            }
        )
        for member_id in cluster.member_ids:
            if member_id == canonical_id:
                continue
            duplicate = by_id[member_id]
            duplicate.canonical_of = canonical_id
            store.put(duplicate)
            survivors.pop(member_id, None)
    return [survivors[k] for k in sorted(survivors)]
