"""BM25 search with tag refinement and multi-entity navigation.

The index covers only visible records: alive (or not yet checked) and
canonical. Navigation walks from one dataset to others sharing its source
or one of its selected tags; weak tags are exploratory only and never
drive association. Entity cards enrich results with source-level context.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DegenerateQuery, MalformedResponse, UnknownDataset, UnknownTag
from .llm import LanguageModelClient
from .schema import Aliveness, DatasetRecord, EntityKind
from .tagging import tag_norm

KAPPA_DEFAULT = 1.2
BETA_DEFAULT = 0.75

_TOKEN = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


@dataclass
class ScoredHit:
    dataset_id: str
    score: float


@dataclass
class EntityCard:
    name: str
    kind: str
    description: str = ""
    domain: str = ""
    activity_focus: str = ""

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("entity name must be non-empty")
        EntityKind(self.kind)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "description": self.description,
            "domain": self.domain,
            "activity_focus": self.activity_focus,
        }


@dataclass
class KnowledgeSpace:
    entities: dict[str, EntityCard] = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: str | Path) -> "KnowledgeSpace":
        ks = cls()
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            doc = json.loads(line)
            card = EntityCard(
                name=doc["name"],
                kind=doc["kind"],
                description=doc.get("description", ""),
                domain=doc.get("domain", ""),
                activity_focus=doc.get("activity_focus", ""),
            )
            ks.entities[card.name] = card
        return ks


@dataclass
class NavigationBundle:
    query: str
    initial: list[ScoredHit]
    related: list[str]
    entities: list[EntityCard]
    summary: str
    exploration_gain: float


class SearchIndex:
    """Immutable BM25 snapshot over the visible records."""

    def __init__(
        self,
        records: list[DatasetRecord],
        kappa: float = KAPPA_DEFAULT,
        beta: float = BETA_DEFAULT,
    ):
        self.kappa = kappa
        self.beta = beta
        self.postings: dict[str, list[tuple[str, int]]] = {}
        self.doc_lengths: dict[str, int] = {}
        visible = [
            r
            for r in records
            if r.alive != Aliveness.DEAD.value and r.canonical_of is None
        ]
        for record in sorted(visible, key=lambda r: r.id):
            tokens = tokenize(f"{record.dataset_name} {record.dataset_desc}")
            self.doc_lengths[record.id] = len(tokens)
            counts: dict[str, int] = {}
            for tok in tokens:
                counts[tok] = counts.get(tok, 0) + 1
            for term, tf in counts.items():
                self.postings.setdefault(term, []).append((record.id, tf))
        self.n_docs = len(self.doc_lengths)
        self.avgdl = (
            sum(self.doc_lengths.values()) / self.n_docs if self.n_docs else 0.0
        )

    def idf(self, term: str) -> float:
        n_t = len(self.postings.get(term, ()))
        return math.log((self.n_docs - n_t + 0.5) / (n_t + 0.5) + 1.0)

    def term_frequency(self, term: str, doc_id: str) -> int:
        for candidate, tf in self.postings.get(term, ()):
            if candidate == doc_id:
                return tf
        return 0


def index(records: list[DatasetRecord], kappa: float = KAPPA_DEFAULT, beta: float = BETA_DEFAULT) -> SearchIndex:
    return SearchIndex(records, kappa=kappa, beta=beta)


def bm25_score(query: str, doc_id: str, idx: SearchIndex) -> float:
    if doc_id not in idx.doc_lengths or idx.n_docs == 0:
        return 0.0
    length = idx.doc_lengths[doc_id]
    score = 0.0
    for term in tokenize(query):
        f = idx.term_frequency(term, doc_id)
        if f == 0:
            continue
        denom = f + idx.kappa * (1 - idx.beta + idx.beta * length / idx.avgdl)
        score += idx.idf(term) * f * (idx.kappa + 1) / denom
    return score


def search(query: str, k: int, idx: SearchIndex) -> list[ScoredHit]:
    """Top-k by BM25, ties broken by ascending id; zero scores dropped."""
    if k < 1:
        raise ValueError("k must be at least 1")
    matched: set[str] = set()
    for term in set(tokenize(query)):
        for doc_id, _ in idx.postings.get(term, ()):
            matched.add(doc_id)
    scored = [
        ScoredHit(doc_id, bm25_score(query, doc_id, idx)) for doc_id in matched
    ]
    scored = [h for h in scored if h.score > 0.0]
    scored.sort(key=lambda h: (-h.score, h.dataset_id))
    return scored[:k]


def refine_by_tag(query: str, tag: str, k: int, idx: SearchIndex, store) -> list[ScoredHit]:
    """Re-rank a widened result pool down to hits carrying the tag."""
    norm = tag_norm(tag)
    if norm not in store.tags():
        raise UnknownTag(f"tag not in vocabulary: {norm!r}")
    widened = search(query, max(10 * k, 100), idx)
    kept = []
    for hit in widened:
        record = store.get(hit.dataset_id)
        if record is not None and norm in record.tags_selected:
            kept.append(hit)
    return kept[:k]


def navigate(dataset_id: str, store) -> list[DatasetRecord]:
    """Visible records sharing the anchor's source or one selected tag."""
    anchor = store.get(dataset_id)
    if anchor is None:
        raise UnknownDataset(f"no such dataset: {dataset_id}")
    anchor_tags = set(anchor.tags_selected)
    related = []
    for record in store.all_records():
        if record.id == dataset_id:
            continue
        if record.alive == Aliveness.DEAD.value or record.canonical_of is not None:
            continue
        if record.source_name == anchor.source_name or (
            anchor_tags & set(record.tags_selected)
        ):
            related.append(record)
    return related


def source_info(source_name: str, ks: KnowledgeSpace) -> EntityCard | None:
    return ks.entities.get(source_name)


def summarize(
    query: str,
    hits: list[DatasetRecord],
    related: list[DatasetRecord],
    entities: list[EntityCard],
    lm: LanguageModelClient,
) -> str:
    """LM summary over the combined result set, provider part optional."""
    seen: set[str] = set()
    lines = []
    for record in list(hits) + list(related):
        if record.id in seen:
            continue
        seen.add(record.id)
        lines.append(f"{record.dataset_name}: {record.dataset_desc}")
    provider_lines = [f"{e.name}: {e.description}" for e in entities]
    prompt = lm.render(
        "summarize_results",
        {
            "user_query": query,
            "dataset_records": "\n".join(lines),
            "provider_info": "\n".join(provider_lines),
        },
    )
    text = lm.complete(prompt)
    if not text.strip():
        raise MalformedResponse("empty summary from client", raw_response=text)
    return text


def exploration_gain(initial_count: int, related_count: int) -> float:
    """Additional datasets surfaced by navigation, as a percentage."""
    if initial_count == 0:
        raise DegenerateQuery("no initial results to compare against")
    return 100.0 * related_count / initial_count
