"""Topic annotation over a dataset-tag graph.

A controlled vocabulary is seeded from trusted tags and LM-generated
topics, then a graph ties datasets to tags (D2T), datasets to similar
datasets (D2D, cosine gated), and tags to co-occurring tags (T2T, count
gated). Annotation recalls candidates along those paths, asks the LM to
pick exactly two, and writes any new tags back so the vocabulary grows
over time.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .dedup import unified_text
from .embedding import Embedder, HashedNgramEmbedder, cosine
from .errors import ContractViolation, MalformedResponse
from .llm import LanguageModelClient
from .schema import MIN_DESC_LENGTH, DatasetRecord

log = logging.getLogger(__name__)

DELTA_DEFAULT = 0.80      # D2D similarity gate
TAU_CO_DEFAULT = 2        # T2T edges need co-occurrence strictly above this
K_DT_DEFAULT = 5          # tags recalled by direct similarity
MAX_CANDIDATES_DEFAULT = 10

PROVENANCES = ("seed", "canonical_gen", "llm_new")


def tag_norm(label: str) -> str:
    return " ".join(label.lower().split())


@dataclass
class TagLimits:
    k_dt: int = K_DT_DEFAULT
    max_candidates: int = MAX_CANDIDATES_DEFAULT


class Vocabulary:
    """Controlled tag set with per-tag provenance. Labels are normalized."""

    def __init__(self) -> None:
        self.provenance: dict[str, str] = {}

    def add(self, label: str, provenance: str) -> bool:
        """Insert a tag; returns False when it was already present."""
        if provenance not in PROVENANCES:
            raise ValueError(f"unknown tag provenance: {provenance}")
        norm = tag_norm(label)
        if not norm or norm in self.provenance:
            return False
        self.provenance[norm] = provenance
        return True

    def __contains__(self, label: str) -> bool:
        return tag_norm(label) in self.provenance

    def __len__(self) -> int:
        return len(self.provenance)

    def tags(self) -> set[str]:
        return set(self.provenance)


@dataclass
class TagAssignment:
    dataset_id: str
    selected: list[str]
    weakly_related: list[str]
    discarded: list[str]
    new_tags: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(self.selected) != 2:
            raise ContractViolation(
                f"assignment must select exactly 2 tags, got {len(self.selected)}"
            )
        sets = [set(self.selected), set(self.weakly_related), set(self.discarded)]
        for i in range(3):
            for j in range(i + 1, 3):
                if sets[i] & sets[j]:
                    raise ContractViolation("tag partitions overlap")
        if not set(self.new_tags) <= (sets[0] | sets[1]):
            raise ContractViolation("new tags must come from selected or weakly related")


class TagGraph:
    """Dataset and tag nodes with D2T, D2D, and co-occurrence-gated T2T edges."""

    def __init__(self, delta: float = DELTA_DEFAULT, tau_co: int = TAU_CO_DEFAULT):
        self.delta = delta
        self.tau_co = tau_co
        self.dataset_vecs: dict[str, np.ndarray] = {}
        self.tag_vecs: dict[str, np.ndarray] = {}
        self.d2t: dict[str, set[str]] = {}
        self.d2d: dict[str, set[str]] = {}
        self.cooccur: dict[tuple[str, str], int] = {}

    def add_dataset_node(self, dataset_id: str, vec: np.ndarray) -> None:
        self.dataset_vecs[dataset_id] = vec
        self.d2t.setdefault(dataset_id, set())
        self.d2d.setdefault(dataset_id, set())

    def add_tag_node(self, label: str, vec: np.ndarray) -> None:
        self.tag_vecs[label] = vec

    def add_d2t(self, dataset_id: str, label: str) -> None:
        self.d2t.setdefault(dataset_id, set()).add(label)

    def bump_cooccur(self, tag_a: str, tag_b: str, by: int = 1) -> None:
        if tag_a == tag_b:
            return
        key = (tag_a, tag_b) if tag_a < tag_b else (tag_b, tag_a)
        self.cooccur[key] = self.cooccur.get(key, 0) + by

    def t2t_edges(self) -> set[tuple[str, str]]:
        return {pair for pair, count in self.cooccur.items() if count > self.tau_co}

    def t2t_neighbors(self, label: str) -> set[str]:
        out = set()
        for (a, b), count in self.cooccur.items():
            if count > self.tau_co:
                if a == label:
                    out.add(b)
                elif b == label:
                    out.add(a)
        return out

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "tau_co": self.tau_co,
            "d2t": {k: sorted(v) for k, v in sorted(self.d2t.items())},
            "d2d": {k: sorted(v) for k, v in sorted(self.d2d.items())},
            "cooccur": [[a, b, c] for (a, b), c in sorted(self.cooccur.items())],
            "tags": sorted(self.tag_vecs),
        }

    @classmethod
    def from_dict(
        cls,
        data: dict,
        records_by_id: dict[str, DatasetRecord],
        embedder: Embedder,
    ) -> "TagGraph":
        graph = cls(delta=data["delta"], tau_co=data["tau_co"])
        for label in data["tags"]:
            graph.add_tag_node(label, embedder.embed(label))
        for dataset_id, tags in data["d2t"].items():
            record = records_by_id.get(dataset_id)
            if record is None:
                continue
            graph.add_dataset_node(dataset_id, embedder.embed(unified_text(record)))
            for label in tags:
                graph.add_d2t(dataset_id, label)
        for dataset_id, neighbors in data["d2d"].items():
            if dataset_id in graph.d2d:
                graph.d2d[dataset_id] = {n for n in neighbors if n in records_by_id}
        for a, b, count in data["cooccur"]:
            graph.cooccur[(a, b) if a < b else (b, a)] = count
        return graph


def generate_topics(record: DatasetRecord, lm: LanguageModelClient) -> list[str]:
    """Ask the LM for two topical phrases for one dataset."""
    prompt = lm.render(
        "generate_topics",
        {"dataset_name": record.dataset_name, "dataset_description": record.dataset_desc},
    )
    raw = lm.complete(prompt)
    try:
        topics = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedResponse(f"topics response not parsable: {exc}", raw_response=raw) from exc
    if not isinstance(topics, list) or not all(isinstance(t, str) for t in topics):
        raise MalformedResponse("topics response must be a list of strings", raw_response=raw)
    return [tag_norm(t) for t in topics if tag_norm(t)]


def build_tag_pool(
    seed_datasets: list[DatasetRecord],
    canonical_datasets: list[DatasetRecord],
    lm: LanguageModelClient,
    allowed_seed_tags: set[str] | None = None,
) -> Vocabulary:
    """Seed tags plus LM-generated topics, normalized and merged."""
    vocab = Vocabulary()
    for record in seed_datasets:
        for label in record.tags_selected:
            if allowed_seed_tags is not None and tag_norm(label) not in allowed_seed_tags:
                continue
            vocab.add(label, "seed")
    for record in canonical_datasets:
        for label in generate_topics(record, lm):
            vocab.add(label, "canonical_gen")
    return vocab


def build_graph(
    datasets: list[DatasetRecord],
    vocab: Vocabulary,
    delta: float = DELTA_DEFAULT,
    tau_co: int = TAU_CO_DEFAULT,
    embedder: Embedder | None = None,
) -> TagGraph:
    """Embed datasets and tags, then materialize all three edge kinds.

    Base T2T co-occurrence counts the datasets whose description mentions
    both tags; later annotation bumps the same counters per selected pair.
    """
    embedder = embedder or HashedNgramEmbedder()
    graph = TagGraph(delta=delta, tau_co=tau_co)
    for label in sorted(vocab.tags()):
        graph.add_tag_node(label, embedder.embed(label))
    for record in datasets:
        graph.add_dataset_node(record.id, embedder.embed(unified_text(record)))
        for label in record.tags_selected:
            norm = tag_norm(label)
            if norm in vocab:
                graph.add_d2t(record.id, norm)

    ordered = sorted(graph.dataset_vecs)
    for i, id_a in enumerate(ordered):
        for id_b in ordered[i + 1 :]:
            if cosine(graph.dataset_vecs[id_a], graph.dataset_vecs[id_b]) >= delta:
                graph.d2d[id_a].add(id_b)
                graph.d2d[id_b].add(id_a)

    by_id = {r.id: r for r in datasets}
    labels = sorted(vocab.tags())
    descs = {rid: by_id[rid].dataset_desc.lower() for rid in by_id}
    for i, tag_a in enumerate(labels):
        for tag_b in labels[i + 1 :]:
            count = sum(1 for d in descs.values() if tag_a in d and tag_b in d)
            if count:
                graph.bump_cooccur(tag_a, tag_b, by=count)
    return graph


def recall_candidates(
    record: DatasetRecord,
    graph: TagGraph,
    limits: TagLimits | None = None,
    embedder: Embedder | None = None,
) -> list[str]:
    """Candidate tags via direct similarity, similar datasets, and tag adjacency.

    Returned in descending similarity to the dataset embedding, capped at
    limits.max_candidates.
    """
    limits = limits or TagLimits()
    embedder = embedder or HashedNgramEmbedder()
    if not graph.tag_vecs:
        return []
    e_d = graph.dataset_vecs.get(record.id)
    if e_d is None:
        e_d = embedder.embed(unified_text(record))

    sims = {label: cosine(e_d, vec) for label, vec in graph.tag_vecs.items()}
    ranked = sorted(sims, key=lambda t: (-sims[t], t))
    direct = set(ranked[: limits.k_dt])

    neighbors = graph.d2d.get(record.id)
    if neighbors is None:
        neighbors = {
            other
            for other, vec in graph.dataset_vecs.items()
            if other != record.id and cosine(e_d, vec) >= graph.delta
        }
    via_neighbors = set()
    for other in neighbors:
        via_neighbors |= graph.d2t.get(other, set())

    adjacent = set()
    for label in direct | via_neighbors:
        adjacent |= graph.t2t_neighbors(label)

    candidates = direct | via_neighbors | adjacent
    ordered = sorted(candidates, key=lambda t: (-sims.get(t, 0.0), t))
    return ordered[: limits.max_candidates]


def refine_tags(
    record: DatasetRecord, candidates: list[str], lm: LanguageModelClient
) -> TagAssignment:
    """LM pass that turns candidates into the final two-tag assignment."""
    prompt = lm.render(
        "refine_tags",
        {
            "dataset_name": record.dataset_name,
            "dataset_description": record.dataset_desc,
            "candidate_tags": json.dumps(candidates),
        },
    )
    raw = lm.complete(prompt)
    try:
        parsed = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedResponse(
            f"refinement response not parsable: {exc}", raw_response=raw
        ) from exc
    if not isinstance(parsed, dict) or not {"selected", "weakly_related", "discarded"} <= set(parsed):
        raise MalformedResponse(
            "refinement response missing required keys", raw_response=raw
        )
    entries = parsed["selected"]
    if not isinstance(entries, list):
        raise MalformedResponse("selected must be a list", raw_response=raw)
    selected, new_tags = [], []
    for entry in entries:
        if not isinstance(entry, dict) or "tag" not in entry:
            raise MalformedResponse("selected entries must carry a tag", raw_response=raw)
        label = tag_norm(str(entry["tag"]))
        selected.append(label)
        if entry.get("is_new"):
            new_tags.append(label)
    weakly = [tag_norm(str(t)) for t in parsed["weakly_related"]]
    discarded = [tag_norm(str(t)) for t in parsed["discarded"]]
    return TagAssignment(
        dataset_id=record.id,
        selected=selected,
        weakly_related=weakly,
        discarded=discarded,
        new_tags=new_tags,
    )


def evolve_vocabulary(
    assignment: TagAssignment,
    vocab: Vocabulary,
    graph: TagGraph,
    record: DatasetRecord,
    embedder: Embedder | None = None,
) -> tuple[Vocabulary, TagGraph]:
    """Write an assignment back: new tags join the vocabulary and the graph."""
    embedder = embedder or HashedNgramEmbedder()
    for label in assignment.new_tags:
        if vocab.add(label, "llm_new"):
            graph.add_tag_node(label, embedder.embed(label))
    if record.id not in graph.dataset_vecs:
        graph.add_dataset_node(record.id, embedder.embed(unified_text(record)))
    for label in assignment.selected:
        graph.add_d2t(record.id, label)
    graph.bump_cooccur(assignment.selected[0], assignment.selected[1])
    return vocab, graph


def annotate(
    record: DatasetRecord,
    graph: TagGraph,
    vocab: Vocabulary,
    lm: LanguageModelClient,
    limits: TagLimits | None = None,
    embedder: Embedder | None = None,
) -> TagAssignment:
    """Full per-dataset pass: recall, refine, evolve."""
    candidates = recall_candidates(record, graph, limits=limits, embedder=embedder)
    assignment = refine_tags(record, candidates, lm)
    evolve_vocabulary(assignment, vocab, graph, record, embedder=embedder)
    missing = [t for t in assignment.selected if t not in vocab]
    if missing:
        # selected tags the client did not flag as new still enter the
        # vocabulary, otherwise the assignment would dangle
        for label in missing:
            vocab.add(label, "llm_new")
            graph.add_tag_node(label, (embedder or HashedNgramEmbedder()).embed(label))
            log.warning("selected tag %r was unknown and not flagged new", label)
    return assignment


def tag_run(
    store,
    lm: LanguageModelClient,
    embedder: Embedder | None = None,
    delta: float = DELTA_DEFAULT,
    tau_co: int = TAU_CO_DEFAULT,
    limits: TagLimits | None = None,
    allowed_seed_tags: set[str] | None = None,
) -> dict[str, TagAssignment]:
    """Annotate every canonical record in the store and persist the results."""
    embedder = embedder or HashedNgramEmbedder()
    records = [r for r in store.all_records() if r.canonical_of is None]
    seeds = [r for r in records if r.tags_selected]
    rich = [
        r
        for r in records
        if not r.tags_selected and len(r.dataset_desc) >= MIN_DESC_LENGTH
    ]
    vocab = build_tag_pool(seeds, rich, lm, allowed_seed_tags=allowed_seed_tags)
    for label, provenance in store.tags().items():
        vocab.add(label, provenance)
    graph = build_graph(
        seeds + rich, vocab, delta=delta, tau_co=tau_co, embedder=embedder
    )

    assignments: dict[str, TagAssignment] = {}
    for record in records:
        assignment = annotate(record, graph, vocab, lm, limits=limits, embedder=embedder)
        assignments[record.id] = assignment
        record.tags_selected = list(assignment.selected)
        record.tags_weak = list(assignment.weakly_related)
        store.put(record)
    for label in sorted(vocab.tags()):
        store.put_tag(label, vocab.provenance[label])
    store.put_graph(graph.to_dict())
    return assignments
