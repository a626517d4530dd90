"""HTTP API contracts: responses, error codes, admin mutations."""

import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest
from fastapi.testclient import TestClient

from seda.api import create_app
from seda.config import Config
from seda.schema import (
    DatasetRecord,
    canonicalize_url,
    normalize_name,
    record_id_for,
)
from seda.store import Store

RECORD_KEYS = {
    "id",
    "name",
    "desc",
    "url",
    "source",
    "data_type",
    "scale",
    "tags",
    "tags_weak",
    "alive",
}


def _rec(
    source: str,
    url: str,
    name: str,
    desc: str,
    tags_selected: list[str] | None = None,
    alive: str = "unknown",
    canonical_of: str | None = None,
) -> DatasetRecord:
    rid = record_id_for(source, canonicalize_url(url), normalize_name(name))
    return DatasetRecord(
        id=rid,
        dataset_name=name,
        dataset_desc=desc,
        dataset_url=url,
        source_name=source,
        tags_selected=list(tags_selected or []),
        alive=alive,
        canonical_of=canonical_of,
        created_at="2026-01-01T00:00:00Z",
        updated_at="2026-01-01T00:00:00Z",
    )


def _join(names: list[str]) -> str:
    if len(names) == 1:
        return names[0]
    return ", ".join(names[:-1]) + " and " + names[-1]


@pytest.fixture()
def catalog(tmp_path):
    store = Store(tmp_path / "api.jsonl")
    records = {
        "tides": _rec(
            "figshare",
            "https://figshare.example.org/tides",
            "Harbor Tides",
            "Tidal gauge readings from harbor stations.",
            ["ocean monitoring"],
        ),
        "winds": _rec(
            "figshare",
            "https://figshare.example.org/winds",
            "Harbor Winds",
            "Anemometer series from harbor masts.",
            ["ocean monitoring", "weather sensing"],
        ),
        "faces": _rec(
            "figshare",
            "https://figshare.example.org/faces",
            "Quarry Faces",
            "Photographs of quarry rock walls.",
            ["geology imaging"],
        ),
        "transit": _rec(
            "city_sensing_lab",
            "https://citysensing.example.edu/transit",
            "Harbor Transit",
            "Bus arrival logs near the harbor district.",
            ["urban mobility", "ocean monitoring"],
        ),
        "noise": _rec(
            "city_sensing_lab",
            "https://citysensing.example.edu/noise",
            "Harbor Noise",
            "Hydrophone noise levels in the harbor basin.",
            ["ocean monitoring"],
            alive="dead",
        ),
        "mirror": _rec(
            "city_sensing_lab",
            "https://citysensing.example.edu/mirror",
            "Harbor Tides Mirror",
            "Tidal gauge readings from harbor stations.",
            canonical_of="0" * 32,
        ),
        "drones": _rec(
            "unlisted_portal",
            "https://drones.example.net/harbor",
            "Harbor Drones",
            "Aerial harbor imagery captured weekly.",
            ["ocean monitoring"],
        ),
    }
    for record in records.values():
        store.put(record)
    for tag in (
        "ocean monitoring",
        "weather sensing",
        "geology imaging",
        "urban mobility",
    ):
        store.put_tag(tag, "seed")
    store.put_entity(
        {
            "name": "figshare",
            "kind": "site",
            "description": "General research repository.",
            "domain": "figshare.example.org",
            "activity_focus": "open data hosting",
        }
    )
    store.put_entity(
        {
            "name": "city_sensing_lab",
            "kind": "institution",
            "description": "Urban sensing laboratory.",
            "domain": "citysensing.example.edu",
            "activity_focus": "urban sensing",
        }
    )
    client = TestClient(create_app(Config(), store))
    return client, store, records


class TestSearchEndpoint:
    def test_hits_carry_full_record_document(self, catalog):
        client, _, records = catalog
        body = client.get("/api/search", params={"q": "harbor", "k": 10}).json()
        assert body["query"] == "harbor"
        hits = body["hits"]
        visible = {records[k].id for k in ("tides", "winds", "transit", "drones")}
        assert {h["id"] for h in hits} == visible
        scores = [h["score"] for h in hits]
        assert scores == sorted(scores, reverse=True)
        for hit in hits:
            assert set(hit) == RECORD_KEYS | {"score"}

    def test_k_truncates(self, catalog):
        client, _, _ = catalog
        body = client.get("/api/search", params={"q": "harbor", "k": 2}).json()
        assert len(body["hits"]) == 2

    def test_hidden_records_never_served(self, catalog):
        client, _, records = catalog
        body = client.get("/api/search", params={"q": "harbor", "k": 50}).json()
        served = {h["id"] for h in body["hits"]}
        assert records["noise"].id not in served
        assert records["mirror"].id not in served

    def test_blank_query_rejected(self, catalog):
        client, _, _ = catalog
        resp = client.get("/api/search", params={"q": "   "})
        assert resp.status_code == 400
        assert resp.json()["code"] == "empty_query"

    def test_bad_k_rejected(self, catalog):
        client, _, _ = catalog
        resp = client.get("/api/search", params={"q": "harbor", "k": 0})
        assert resp.status_code == 400
        assert resp.json()["code"] == "bad_k"

    def test_tag_refinement(self, catalog):
        client, _, records = catalog
        body = client.get(
            "/api/search", params={"q": "harbor", "k": 10, "tag": "weather sensing"}
        ).json()
        assert [h["id"] for h in body["hits"]] == [records["winds"].id]

    def test_unknown_tag_is_404(self, catalog):
        client, _, _ = catalog
        resp = client.get(
            "/api/search", params={"q": "harbor", "tag": "quantum biology"}
        )
        assert resp.status_code == 404
        assert resp.json()["code"] == "unknown_tag"

    def test_read_endpoints_leave_store_untouched(self, catalog):
        client, store, records = catalog
        before = store.path.read_bytes()
        client.get("/api/search", params={"q": "harbor"})
        client.get(f"/api/datasets/{records['tides'].id}")
        client.get(f"/api/datasets/{records['tides'].id}/related")
        client.get("/api/summary", params={"q": "harbor"})
        assert store.path.read_bytes() == before


class TestDatasetEndpoints:
    def test_lookup_returns_record_document(self, catalog):
        client, _, records = catalog
        body = client.get(f"/api/datasets/{records['faces'].id}").json()
        assert set(body) == RECORD_KEYS
        assert body["name"] == "Quarry Faces"
        assert body["source"] == "figshare"
        assert body["tags"] == ["geology imaging"]

    def test_unknown_dataset_is_404(self, catalog):
        client, _, _ = catalog
        resp = client.get("/api/datasets/" + "f" * 32)
        assert resp.status_code == 404
        assert resp.json()["code"] == "unknown_dataset"

    def test_related_bundle_composition(self, catalog):
        client, store, records = catalog
        anchor = records["tides"]
        body = client.get(f"/api/datasets/{anchor.id}/related").json()

        expected_related = [
            r
            for r in store.all_records()
            if r.id != anchor.id
            and r.alive != "dead"
            and r.canonical_of is None
            and (
                r.source_name == anchor.source_name
                or set(anchor.tags_selected) & set(r.tags_selected)
            )
        ]
        assert [d["id"] for d in body["related"]] == [r.id for r in expected_related]

        # entity cards follow first-seen source order, anchor's source first,
        # and sources without a card are skipped
        assert [c["name"] for c in body["entities"]] == [
            "figshare",
            "city_sensing_lab",
        ]
        assert body["entities"][1]["kind"] == "institution"

        names = [anchor.dataset_name] + [r.dataset_name for r in expected_related]
        assert body["summary"] == (
            f"Datasets relevant to 'Harbor Tides' include {_join(names)}."
            " Providers include figshare and city_sensing_lab."
        )

    def test_related_for_unknown_dataset_is_404(self, catalog):
        client, _, _ = catalog
        resp = client.get("/api/datasets/" + "f" * 32 + "/related")
        assert resp.status_code == 404


class TestEntityEndpoint:
    def test_known_entity_card(self, catalog):
        client, _, _ = catalog
        body = client.get("/api/entities/figshare").json()
        assert body["kind"] == "site"
        assert body["domain"] == "figshare.example.org"

    def test_unknown_entity_is_404(self, catalog):
        client, _, _ = catalog
        resp = client.get("/api/entities/unlisted_portal")
        assert resp.status_code == 404
        assert resp.json()["code"] == "unknown_entity"


class TestTagListing:
    def test_visible_datasets_with_total(self, catalog):
        client, _, records = catalog
        body = client.get("/api/tags/ocean monitoring/datasets").json()
        assert body["tag"] == "ocean monitoring"
        assert body["total"] == 4  # dead and canonicalized carriers excluded
        expected = {records[k].id for k in ("tides", "winds", "transit", "drones")}
        assert {d["id"] for d in body["datasets"]} == expected

    def test_offset_and_limit_slice(self, catalog):
        client, _, _ = catalog
        full = client.get("/api/tags/ocean monitoring/datasets").json()["datasets"]
        page = client.get(
            "/api/tags/ocean monitoring/datasets", params={"offset": 1, "limit": 2}
        ).json()
        assert [d["id"] for d in page["datasets"]] == [d["id"] for d in full[1:3]]
        assert page["total"] == 4
        beyond = client.get(
            "/api/tags/ocean monitoring/datasets", params={"offset": 10}
        ).json()
        assert beyond["datasets"] == []

    def test_tag_label_normalized(self, catalog):
        client, _, _ = catalog
        body = client.get("/api/tags/Ocean  MONITORING/datasets").json()
        assert body["tag"] == "ocean monitoring"
        assert body["total"] == 4

    def test_unknown_tag_is_404(self, catalog):
        client, _, _ = catalog
        resp = client.get("/api/tags/quantum biology/datasets")
        assert resp.status_code == 404
        assert resp.json()["code"] == "unknown_tag"


class TestSummaryEndpoint:
    def test_bundle_fields_and_gain(self, catalog):
        client, _, records = catalog
        body = client.get("/api/summary", params={"q": "harbor"}).json()
        initial_ids = {h["id"] for h in body["initial"]}
        assert initial_ids == {
            records[k].id for k in ("tides", "winds", "transit", "drones")
        }
        # navigation adds the one figshare sibling that "harbor" missed
        assert [d["id"] for d in body["related"]] == [records["faces"].id]
        assert body["exploration_gain"] == pytest.approx(100.0 * 1 / 4)
        assert {c["name"] for c in body["entities"]} == {
            "figshare",
            "city_sensing_lab",
        }
        assert body["summary"].startswith(
            "Datasets relevant to 'harbor' include "
        )
        assert body["summary"].count("Quarry Faces") == 1

    def test_blank_query_rejected(self, catalog):
        client, _, _ = catalog
        resp = client.get("/api/summary", params={"q": ""})
        assert resp.status_code == 400
        assert resp.json()["code"] == "empty_query"

    def test_no_hits_degrades_gracefully(self, catalog):
        client, _, _ = catalog
        body = client.get("/api/summary", params={"q": "zzzunknown"}).json()
        assert body["initial"] == []
        assert body["related"] == []
        assert body["exploration_gain"] == 0.0
        assert body["summary"] == "No datasets found for 'zzzunknown'."


class TestAdminDedup:
    def test_merge_then_reindex(self, tmp_path):
        store = Store(tmp_path / "dedup.jsonl")
        keeper = _rec(
            "paperswithcode",
            "https://pwc.example.org/sets/tiny",
            "Tiny Nimbus",
            "Cloud formation crops for weather models.",
        )
        keeper.data_type = "image"
        keeper.scale = "100k"
        loser = _rec(
            "figshare",
            "https://figshare.example.org/9",
            "Tiny_Nimbus",
            "Cloud formation crops for weather models.",
        )
        lone = _rec(
            "figshare",
            "https://figshare.example.org/12",
            "Granite Ledger",
            "Rock face inventory with strata labels.",
        )
        for record in (keeper, loser, lone):
            store.put(record)
        config = Config()
        config.source_priority = ["paperswithcode", "figshare"]
        client = TestClient(create_app(config, store))

        before = client.get("/api/search", params={"q": "nimbus"}).json()
        assert len(before["hits"]) == 2

        body = client.post("/api/admin/dedup", json={}).json()
        assert body == {"survivors": 2, "clusters": 1}
        assert store.get(loser.id).canonical_of == keeper.id

        after = client.get("/api/search", params={"q": "nimbus"}).json()
        assert [h["id"] for h in after["hits"]] == [keeper.id]


class TestAdminTag:
    def test_annotates_canonical_records(self, catalog):
        client, store, records = catalog
        body = client.post("/api/admin/tag", json={}).json()
        canonical = [r for r in store.all_records() if r.canonical_of is None]
        assert body == {"annotated": len(canonical)}
        for record in canonical:
            assert len(record.tags_selected) == 2
        assert records["mirror"].id not in {
            r.id for r in canonical
        }


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        pass

    def _serve(self):
        try:
            code = 404 if self.path.startswith("/bad/") else 200
            self.send_response(code)
            self.send_header("Content-Length", "0")
            self.end_headers()
        except OSError:
            pass

    do_HEAD = _serve
    do_GET = _serve


class TestAdminLinkcheck:
    def test_empty_store_reports_no_weight(self, tmp_path):
        store = Store(tmp_path / "empty.jsonl")
        client = TestClient(create_app(Config(), store))
        resp = client.post("/api/admin/linkcheck", json={})
        assert resp.status_code == 400
        assert resp.json()["code"] == "no_weight"

    def test_cycle_report_and_gating(self, tmp_path):
        store = Store(tmp_path / "lc.jsonl")
        for i in range(4):
            store.put(
                _rec(
                    "quarry",
                    f"https://quarry.example.org/bad/{i}",
                    f"Quarry Series {i}",
                    f"Granite blast ledger window {i}.",
                )
            )
        for i in range(4):
            store.put(
                _rec(
                    "harbor",
                    f"https://harbor.example.org/good/{i}",
                    f"Harbor Series {i}",
                    f"Tidal berth logistics window {i}.",
                )
            )
        config = Config()
        config.linkhealth.k_min = 1
        config.linkhealth.timeout = 5.0
        config.linkhealth.retries = 0
        client = TestClient(create_app(config, store))

        server = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            resp = client.post(
                "/api/admin/linkcheck",
                json={
                    "budget": 8,
                    "seed": 3,
                    "base_url": f"http://127.0.0.1:{server.server_address[1]}",
                },
            )
        finally:
            server.shutdown()
            server.server_close()

        body = resp.json()
        assert resp.status_code == 200
        by_site = {s["source"]: s for s in body["sites"]}
        assert set(by_site) == {"harbor", "quarry"}
        assert by_site["quarry"]["gate"] == "DEAD"
        assert by_site["quarry"]["alive_rate"] == 0.0
        assert by_site["harbor"]["gate"] == "ALIVE"
        assert body["cycle_timestamp"]

        hits = client.get("/api/search", params={"q": "granite"}).json()["hits"]
        assert hits == []
        alive_hits = client.get("/api/search", params={"q": "tidal"}).json()["hits"]
        assert len(alive_hits) == 4
