"""HTTP service over the engine: search, navigation, entities, admin.

Read endpoints serve from an immutable index snapshot; admin endpoints
mutate the store behind a single-writer lock and swap in a fresh snapshot
when done. Error responses carry machine-readable codes.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import Config
from .dedup import dedup_run
from .embedding import HashedNgramEmbedder
from .errors import BindFailure, NoWeight, UnknownTag
from .linkhealth import run_inspection
from .schema import DatasetRecord
from .searchnav import (
    EntityCard,
    KnowledgeSpace,
    SearchIndex,
    exploration_gain,
    navigate,
    refine_by_tag,
    search,
    source_info,
    summarize,
)
from .store import Store
from .tagging import TagLimits, tag_run


def record_doc(r: DatasetRecord) -> dict:
    return {
        "id": r.id,
        "name": r.dataset_name,
        "desc": r.dataset_desc,
        "url": r.dataset_url,
        "source": r.source_name,
        "data_type": r.data_type,
        "scale": r.scale,
        "tags": list(r.tags_selected),
        "tags_weak": list(r.tags_weak),
        "alive": r.alive,
    }


def _error(status: int, code: str, message: str = "") -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


class LinkcheckRequest(BaseModel):
    budget: int | None = None
    seed: int | None = None
    base_url: str | None = None


class DedupRequest(BaseModel):
    theta: float | None = None


class TagRequest(BaseModel):
    pass


def create_app(config: Config, store: Store) -> FastAPI:
    app = FastAPI(title="dataset catalog service")
    lm = config.make_lm()
    embedder = HashedNgramEmbedder(seed=config.dedup.seed)
    state = {
        "index": SearchIndex(
            store.all_records(), kappa=config.search.kappa, beta=config.search.beta
        )
    }
    write_lock = threading.Lock()

    def reindex() -> None:
        state["index"] = SearchIndex(
            store.all_records(), kappa=config.search.kappa, beta=config.search.beta
        )

    def knowledge_space() -> KnowledgeSpace:
        ks = KnowledgeSpace()
        for name, doc in store.entities().items():
            ks.entities[name] = EntityCard(
                name=doc["name"],
                kind=doc["kind"],
                description=doc.get("description", ""),
                domain=doc.get("domain", ""),
                activity_focus=doc.get("activity_focus", ""),
            )
        return ks

    @app.get("/api/search")
    def api_search(q: str, k: int = 10, tag: str | None = None):
        if not q.strip():
            return _error(400, "empty_query", "q must be non-empty")
        if k < 1:
            return _error(400, "bad_k", "k must be at least 1")
        idx = state["index"]
        try:
            if tag:
                hits = refine_by_tag(q, tag, k, idx, store)
            else:
                hits = search(q, k, idx)
        except UnknownTag as exc:
            return _error(404, "unknown_tag", str(exc))
        docs = []
        for hit in hits:
            record = store.get(hit.dataset_id)
            doc = record_doc(record)
            doc["score"] = hit.score
            docs.append(doc)
        return {"query": q, "hits": docs}

    @app.get("/api/datasets/{dataset_id}")
    def api_dataset(dataset_id: str):
        record = store.get(dataset_id)
        if record is None:
            return _error(404, "unknown_dataset", dataset_id)
        return record_doc(record)

    @app.get("/api/datasets/{dataset_id}/related")
    def api_related(dataset_id: str):
        record = store.get(dataset_id)
        if record is None:
            return _error(404, "unknown_dataset", dataset_id)
        related = navigate(dataset_id, store)
        ks = knowledge_space()
        cards = []
        seen_sources = []
        for r in [record] + related:
            if r.source_name not in seen_sources:
                seen_sources.append(r.source_name)
                card = source_info(r.source_name, ks)
                if card is not None:
                    cards.append(card.to_dict())
        summary = summarize(
            record.dataset_name,
            [record],
            related,
            [EntityCard(**c) for c in cards],
            lm,
        )
        return {
            "dataset_id": dataset_id,
            "related": [record_doc(r) for r in related],
            "entities": cards,
            "summary": summary,
        }

    @app.get("/api/entities/{source_name}")
    def api_entity(source_name: str):
        card = store.entity(source_name)
        if card is None:
            return _error(404, "unknown_entity", source_name)
        return card

    @app.get("/api/tags/{tag}/datasets")
    def api_tag_datasets(tag: str, offset: int = 0, limit: int = 20):
        from .tagging import tag_norm

        norm = tag_norm(tag)
        if norm not in store.tags():
            return _error(404, "unknown_tag", norm)
        idx = state["index"]
        matches = [
            record_doc(r)
            for r in store.all_records()
            if r.id in idx.doc_lengths and norm in r.tags_selected
        ]
        return {
            "tag": norm,
            "total": len(matches),
            "datasets": matches[offset : offset + limit],
        }

    @app.get("/api/summary")
    def api_summary(q: str, k: int = 10):
        if not q.strip():
            return _error(400, "empty_query", "q must be non-empty")
        idx = state["index"]
        hits = search(q, k, idx)
        hit_records = [store.get(h.dataset_id) for h in hits]
        initial_ids = {h.dataset_id for h in hits}
        related_records: list[DatasetRecord] = []
        for h in hits:
            for r in navigate(h.dataset_id, store):
                if r.id not in initial_ids and all(x.id != r.id for x in related_records):
                    related_records.append(r)
        ks = knowledge_space()
        cards = []
        seen_sources = []
        for r in hit_records + related_records:
            if r.source_name not in seen_sources:
                seen_sources.append(r.source_name)
                card = source_info(r.source_name, ks)
                if card is not None:
                    cards.append(card)
        summary_text = summarize(q, hit_records, related_records, cards, lm)
        gain = (
            exploration_gain(len(hit_records), len(related_records))
            if hit_records
            else 0.0
        )
        return {
            "query": q,
            "initial": [
                {**record_doc(r), "score": h.score}
                for r, h in zip(hit_records, hits)
            ],
            "related": [record_doc(r) for r in related_records],
            "entities": [c.to_dict() for c in cards],
            "summary": summary_text,
            "exploration_gain": gain,
        }

    @app.post("/api/admin/dedup")
    def api_admin_dedup(body: DedupRequest):
        with write_lock:
            theta = body.theta if body.theta is not None else config.dedup.theta
            survivors = dedup_run(
                store,
                theta=theta,
                seed=config.dedup.seed,
                source_priority=config.source_priority,
            )
            reindex()
            return {"survivors": len(survivors), "clusters": len(store.clusters())}

    @app.post("/api/admin/tag")
    def api_admin_tag(body: TagRequest):
        with write_lock:
            assignments = tag_run(
                store,
                lm,
                embedder=embedder,
                delta=config.tagging.delta,
                tau_co=config.tagging.tau_co,
                limits=TagLimits(
                    k_dt=config.tagging.k_dt,
                    max_candidates=config.tagging.max_candidates,
                ),
            )
            reindex()
            return {"annotated": len(assignments)}

    @app.post("/api/admin/linkcheck")
    def api_admin_linkcheck(body: LinkcheckRequest):
        with write_lock:
            params = config.weight_params()
            if body.budget is not None:
                params.k_total = body.budget
            sites = sorted({r.source_name for r in store.all_records() if r.source_name})
            try:
                report = run_inspection(
                    sites,
                    params,
                    store,
                    rng_seed=body.seed if body.seed is not None else config.dedup.seed,
                    base_url=body.base_url,
                )
            except NoWeight as exc:
                return _error(400, "no_weight", str(exc))
            reindex()
            return {
                "cycle_timestamp": report.cycle_timestamp,
                "sites": [
                    {
                        "source": s.source_name,
                        "sampled": s.sampled,
                        "alive": s.alive,
                        "alive_rate": s.alive_rate,
                        "gate": s.gate,
                    }
                    for s in report.sites
                ],
            }

    return app


def serve(config: Config, store: Store, port: int = 8000, host: str = "127.0.0.1") -> None:
    """Run the service until interrupted."""
    import uvicorn

    app = create_app(config, store)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:
        raise BindFailure(f"cannot bind {host}:{port}: {exc}") from exc
