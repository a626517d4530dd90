"""Three-stage duplicate detection: identifiers, blocking, semantics."""

import json
import random

import pytest

from seda.dedup import (
    DedupCluster,
    DedupRelation,
    block_candidates,
    build_components,
    dedup_run,
    find_relations,
    identifier_match,
    select_canonical,
    semantic_match,
    simhash,
    unified_text,
)
from seda.schema import DatasetRecord, SourceDescriptor, to_unified

from conftest import FIXTURES
from corpus import make_dedup_corpus


def _rec(id, name="", desc="", url="", source="s", **kw):
    return DatasetRecord(
        id=id, dataset_name=name, dataset_desc=desc, dataset_url=url,
        source_name=source, **kw,
    )


def _load_merge_pair():
    rows = json.loads((FIXTURES / "merge_pair.json").read_text(encoding="utf-8"))
    out = []
    for i, row in enumerate(rows):
        out.append(
            to_unified(row, SourceDescriptor(source_name=row["source_name"]),
                       timestamp="2026-01-01T00:00:00Z")
        )
    return out


def test_unified_text_normalizes_name_only():
    r = _rec("1", name="Tiny_ImageNet", desc="Subset of ImageNet.")
    assert unified_text(r) == "tiny imagenet Subset of ImageNet."
    assert unified_text(_rec("2")) == ""


def test_relation_orders_endpoints():
    rel = DedupRelation("zz", "aa", "identifier", 1.0)
    assert (rel.id_a, rel.id_b) == ("aa", "zz")
    assert rel.pair() == ("aa", "zz")


def test_identifier_match_on_shared_name_and_url():
    records = [
        _rec("a", name="Tiny ImageNet", url="https://e.org/1"),
        _rec("b", name="tiny_imagenet", url="https://e.org/2"),
        _rec("c", name="Other Set", url="https://e.org/2"),
        _rec("d", name="Unrelated", url="https://e.org/4"),
    ]
    rels = identifier_match(records)
    assert {r.pair() for r in rels} == {("a", "b"), ("b", "c")}
    assert all(r.stage == "identifier" and r.score == 1.0 for r in rels)


def test_identifier_match_ignores_empty_keys():
    records = [_rec("a"), _rec("b"), _rec("c", name="X"), _rec("d", name="X")]
    assert {r.pair() for r in identifier_match(records)} == {("c", "d")}


def test_simhash_pinned_value_and_determinism():
    text = "tiny imagenet a subset of imagenet"
    assert simhash(text, seed=42) == 0x88341183AF5F5409
    assert simhash(text, seed=42) == simhash("TINY  imagenet a subset of imagenet ", seed=42)
    assert simhash(text, seed=7) != simhash(text, seed=42)
    assert simhash("", seed=42) == 0
    assert simhash("ab", seed=42) == 0  # below shortest shingle


def test_simhash_distance_tracks_similarity():
    base = "street level camera recordings of dense urban traffic scenes"
    near = "street level camera recordings of sparse urban traffic scenes"
    far = "whole genome sequencing variant calls collected from maize cohorts"
    d_near = bin(simhash(base) ^ simhash(near)).count("1")
    d_far = bin(simhash(base) ^ simhash(far)).count("1")
    assert d_near < d_far


def test_block_candidates_small_inputs():
    assert block_candidates([]) == set()
    assert block_candidates([_rec("a", name="X", desc="y z")]) == set()


def test_block_candidates_finds_identical_and_near_texts():
    base_desc = (
        "weekly aggregated shoreline imagery archive covering two years of "
        "coastal monitoring with calibrated georeferenced validated frames"
    )
    near_desc = base_desc.replace(" of ", " ")
    twin_a = _rec("a", name="Shore Set", desc=base_desc)
    twin_b = _rec("b", name="Shore Set", desc=base_desc)
    near = _rec("c", name="Shore Set v2", desc=near_desc)
    noise = [
        _rec(f"n{i}", name=f"Noise {i}", desc=f"entirely unrelated text {i} " * 3)
        for i in range(10)
    ]
    pairs = block_candidates([twin_a, twin_b, near] + noise)
    assert ("a", "b") in pairs
    assert ("a", "c") in pairs and ("b", "c") in pairs


def test_semantic_match_applies_threshold(fixture_embedder):
    a, b = _load_merge_pair()
    by_id = {a.id: a, b.id: b}
    pair = tuple(sorted((a.id, b.id)))

    kept = semantic_match({pair}, 0.85, by_id, fixture_embedder)
    assert len(kept) == 1
    assert kept[0].stage == "semantic"
    assert kept[0].score == pytest.approx(0.89, abs=1e-9)

    assert semantic_match({pair}, 0.895, by_id, fixture_embedder) == []


def test_build_components_matches_reachability_oracle():
    rng = random.Random(3)
    nodes = [f"n{i:02d}" for i in range(40)]
    edges = {
        tuple(sorted(rng.sample(nodes, 2)))
        for _ in range(50)
    }
    relations = [DedupRelation(a, b, "identifier", 1.0) for a, b in sorted(edges)]

    # breadth-first reachability, written independently of the union-find
    adjacency = {}
    for a, b in edges:
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)
    seen, expected = set(), []
    for node in sorted(adjacency):
        if node in seen:
            continue
        frontier, component = [node], set()
        while frontier:
            current = frontier.pop()
            if current in component:
                continue
            component.add(current)
            frontier.extend(adjacency[current] - component)
        seen |= component
        if len(component) > 1:
            expected.append(frozenset(component))

    clusters = build_components(relations)
    assert {frozenset(c.member_ids) for c in clusters} == set(expected)
    for cluster in clusters:
        assert cluster.canonical_id == min(cluster.member_ids)
    assert [c.canonical_id for c in clusters] == sorted(c.canonical_id for c in clusters)


def test_build_components_disjoint_pairs():
    rels = [
        DedupRelation("a", "b", "identifier", 1.0),
        DedupRelation("c", "d", "semantic", 0.9),
    ]
    clusters = build_components(rels)
    assert [sorted(c.member_ids) for c in clusters] == [["a", "b"], ["c", "d"]]


def test_select_canonical_completeness_dominates():
    full = _rec("zz", name="X", desc="d" * 30, url="https://e.org/a",
                source="low", data_type="image", scale="10k")
    sparse = _rec("aa", name="X", desc="d" * 99, url="https://e.org/b", source="high")
    cluster = DedupCluster(member_ids={"zz", "aa"}, canonical_id="aa")
    winner, aliases = select_canonical(
        cluster, {"zz": full, "aa": sparse}, source_priority=["high", "low"]
    )
    assert winner == "zz"
    assert aliases == ["https://e.org/b"]


def test_select_canonical_priority_then_length_then_id():
    a = _rec("mm", name="X", desc="d" * 30, url="https://e.org/a", source="beta")
    b = _rec("nn", name="X", desc="d" * 30, url="https://e.org/b", source="alpha")
    cluster = DedupCluster(member_ids={"mm", "nn"}, canonical_id="mm")
    winner, _ = select_canonical(cluster, {"mm": a, "nn": b}, ["alpha", "beta"])
    assert winner == "nn"  # alpha outranks beta

    c = _rec("mm", name="X", desc="d" * 40, url="https://e.org/a", source="alpha")
    d = _rec("nn", name="X", desc="d" * 30, url="https://e.org/b", source="alpha")
    winner, _ = select_canonical(cluster, {"mm": c, "nn": d}, ["alpha"])
    assert winner == "mm"  # longer description

    e = _rec("mm", name="X", desc="d" * 30, url="https://e.org/a", source="alpha")
    f = _rec("nn", name="X", desc="e" * 30, url="https://e.org/b", source="alpha")
    winner, _ = select_canonical(cluster, {"mm": e, "nn": f}, ["alpha"])
    assert winner == "mm"  # full tie, smallest id


def test_select_canonical_unlisted_sources_rank_last():
    a = _rec("mm", name="X", desc="d" * 30, url="https://e.org/a", source="stranger")
    b = _rec("nn", name="X", desc="d" * 30, url="https://e.org/b", source="beta")
    cluster = DedupCluster(member_ids={"mm", "nn"}, canonical_id="mm")
    winner, _ = select_canonical(cluster, {"mm": a, "nn": b}, ["alpha", "beta"])
    assert winner == "nn"


def test_known_near_duplicate_pair_merges(fixture_embedder, tmp_store):
    """The recorded high-similarity pair crosses the threshold and merges."""
    a, b = _load_merge_pair()
    for r in (a, b):
        tmp_store.put(r)
    survivors = dedup_run(
        tmp_store, theta=0.85, embedder=fixture_embedder,
        source_priority=["paperswithcode", "figshare"],
    )
    assert len(survivors) == 1
    clusters = tmp_store.clusters()
    assert len(clusters) == 1
    cluster = next(iter(clusters.values()))
    assert sorted(cluster["member_ids"]) == sorted([a.id, b.id])

    # both carry 4 filled fields; paperswithcode outranks figshare by priority
    assert survivors[0].source_name == "paperswithcode"
    assert cluster["canonical_id"] == survivors[0].id
    loser_url = a.dataset_url if survivors[0].id == b.id else b.dataset_url
    assert cluster["aliases"] == [loser_url]

    loser = tmp_store.get(a.id if survivors[0].id == b.id else b.id)
    assert loser.canonical_of == survivors[0].id


def test_dedup_run_is_idempotent(fixture_embedder, tmp_store):
    a, b = _load_merge_pair()
    for r in (a, b):
        tmp_store.put(r)
    first = dedup_run(tmp_store, embedder=fixture_embedder)
    second = dedup_run(tmp_store, embedder=fixture_embedder)
    assert [r.id for r in first] == [r.id for r in second]
    assert len(tmp_store.clusters()) == 1


def test_find_relations_covers_both_stages(fixture_embedder):
    a, b = _load_merge_pair()
    same_name = _rec("x1", name="Tiny_Imagenet", desc="another listing",
                     url="https://other.example.org/t", source="other")
    rels = find_relations([a, b, same_name], embedder=fixture_embedder)
    stages = {(r.pair(), r.stage) for r in rels}
    # the fixture pair also identifier-matches: both names normalize equal
    assert (tuple(sorted((a.id, b.id))), "identifier") in stages
    assert (tuple(sorted((a.id, same_name.id))), "identifier") in stages


def test_planted_corpus_pipeline_matches_closure_of_relations():
    """A fast structural check on the shared corpus; the full brute-force
    comparison runs in the acceptance suite."""
    records, planted = make_dedup_corpus(seed=1, n_total=120, n_clusters=15)
    relations = find_relations(records)
    clusters = build_components(relations)
    covered = {m for c in clusters for m in c.member_ids}
    for rel in relations:
        assert rel.id_a in covered and rel.id_b in covered
    # clusters partition their members
    assert sum(len(c.member_ids) for c in clusters) == len(covered)
