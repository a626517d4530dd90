"""Append-only JSONL persistence for the whole engine state.

Every mutation appends one typed line; loading replays the log with
later-wins semantics per object key. This keeps fixtures diff-able and
makes every store state reproducible from its history. Compaction rewrites
the log to one line per live object without changing the replayed state.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Any, Iterator

from .errors import CorruptStore, StoreUnavailable
from .schema import DatasetRecord

KINDS = ("record", "cluster", "tag", "graph", "site_obs", "site_flag", "entity")


class Store:
    """Single-file engine state with serialized writes."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: dict[str, DatasetRecord] = {}
        self._clusters: dict[str, dict] = {}
        self._tags: dict[str, str] = {}  # label -> provenance
        self._graph: dict | None = None
        self._site_history: dict[str, list[list]] = {}  # source -> [[ts, rate], ...]
        self._site_flags: dict[str, dict] = {}
        self._entities: dict[str, dict] = {}
        if self.path.exists():
            self._replay()

    # -- log machinery -------------------------------------------------------

    def _replay(self) -> None:
        with self.path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    doc = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorruptStore(
                        f"unparsable store line: {exc}", line_number=lineno
                    ) from exc
                if not isinstance(doc, dict) or doc.get("kind") not in KINDS:
                    raise CorruptStore(
                        f"unknown store line kind: {doc.get('kind')!r}"
                        if isinstance(doc, dict)
                        else "store line is not an object",
                        line_number=lineno,
                    )
                self._apply(doc)

    def _apply(self, doc: dict) -> None:
        kind = doc["kind"]
        if kind == "record":
            record = DatasetRecord.from_dict(doc["record"])
            self._records[record.id] = record
        elif kind == "cluster":
            self._clusters[doc["cluster"]["canonical_id"]] = doc["cluster"]
        elif kind == "tag":
            self._tags[doc["label"]] = doc["provenance"]
        elif kind == "graph":
            self._graph = doc["graph"]
        elif kind == "site_obs":
            self._site_history.setdefault(doc["source_name"], []).append(
                [doc["timestamp"], doc["alive_rate"], doc.get("n_datasets", 0)]
            )
        elif kind == "site_flag":
            self._site_flags[doc["source_name"]] = {
                "gate": doc["gate"],
                "recheck": doc["recheck"],
            }
        elif kind == "entity":
            self._entities[doc["entity"]["name"]] = doc["entity"]

    def _append(self, doc: dict) -> None:
        with self._lock:
            try:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(doc, ensure_ascii=False, sort_keys=True) + "\n")
            except OSError as exc:
                raise StoreUnavailable(f"cannot write store {self.path}: {exc}") from exc
            self._apply(doc)

    # -- records --------------------------------------------------------------

    def put(self, record: DatasetRecord) -> None:
        self._append({"kind": "record", "record": record.to_dict()})

    def get(self, record_id: str) -> DatasetRecord | None:
        return self._records.get(record_id)

    def all_records(self) -> list[DatasetRecord]:
        return [self._records[k] for k in sorted(self._records)]

    def iter_records(self) -> Iterator[DatasetRecord]:
        for key in sorted(self._records):
            yield self._records[key]

    # -- dedup clusters --------------------------------------------------------

    def put_cluster(self, cluster: dict) -> None:
        self._append({"kind": "cluster", "cluster": cluster})

    def clusters(self) -> dict[str, dict]:
        return dict(self._clusters)

    # -- vocabulary + tag graph -------------------------------------------------

    def put_tag(self, label: str, provenance: str) -> None:
        self._append({"kind": "tag", "label": label, "provenance": provenance})

    def tags(self) -> dict[str, str]:
        return dict(self._tags)

    def put_graph(self, graph: dict) -> None:
        self._append({"kind": "graph", "graph": graph})

    def graph(self) -> dict | None:
        return self._graph

    # -- link health -------------------------------------------------------------

    def add_site_observation(
        self, source_name: str, timestamp: str, alive_rate: float, n_datasets: int = 0
    ) -> None:
        self._append(
            {
                "kind": "site_obs",
                "source_name": source_name,
                "timestamp": timestamp,
                "alive_rate": alive_rate,
                "n_datasets": n_datasets,
            }
        )

    def site_history(self, source_name: str) -> list[list]:
        return [list(x) for x in self._site_history.get(source_name, [])]

    def set_site_flag(self, source_name: str, gate: str, recheck: bool) -> None:
        self._append(
            {"kind": "site_flag", "source_name": source_name, "gate": gate, "recheck": recheck}
        )

    def site_flag(self, source_name: str) -> dict:
        return dict(self._site_flags.get(source_name, {"gate": "ALIVE", "recheck": False}))

    def site_flags(self) -> dict[str, dict]:
        return {k: dict(v) for k, v in self._site_flags.items()}

    # -- knowledge space ------------------------------------------------------------

    def put_entity(self, entity: dict) -> None:
        self._append({"kind": "entity", "entity": entity})

    def entity(self, name: str) -> dict | None:
        card = self._entities.get(name)
        return dict(card) if card else None

    def entities(self) -> dict[str, dict]:
        return {k: dict(v) for k, v in self._entities.items()}

    # -- snapshot equality + compaction -----------------------------------------------

    def state_dict(self) -> dict[str, Any]:
        return {
            "records": {k: r.to_dict() for k, r in sorted(self._records.items())},
            "clusters": dict(sorted(self._clusters.items())),
            "tags": dict(sorted(self._tags.items())),
            "graph": self._graph,
            "site_history": dict(sorted(self._site_history.items())),
            "site_flags": dict(sorted(self._site_flags.items())),
            "entities": dict(sorted(self._entities.items())),
        }

    def compact_lines(self) -> list[dict]:
        lines: list[dict] = []
        for key in sorted(self._records):
            lines.append({"kind": "record", "record": self._records[key].to_dict()})
        for key in sorted(self._clusters):
            lines.append({"kind": "cluster", "cluster": self._clusters[key]})
        for label in sorted(self._tags):
            lines.append({"kind": "tag", "label": label, "provenance": self._tags[label]})
        if self._graph is not None:
            lines.append({"kind": "graph", "graph": self._graph})
        for source in sorted(self._site_history):
            for timestamp, rate, n_datasets in self._site_history[source]:
                lines.append(
                    {
                        "kind": "site_obs",
                        "source_name": source,
                        "timestamp": timestamp,
                        "alive_rate": rate,
                        "n_datasets": n_datasets,
                    }
                )
        for source in sorted(self._site_flags):
            flag = self._site_flags[source]
            lines.append(
                {
                    "kind": "site_flag",
                    "source_name": source,
                    "gate": flag["gate"],
                    "recheck": flag["recheck"],
                }
            )
        for name in sorted(self._entities):
            lines.append({"kind": "entity", "entity": self._entities[name]})
        return lines


def load_store(path: str | Path) -> Store:
    return Store(path)


def save_store(store: Store, path: str | Path) -> None:
    """Write a compacted copy of the store's current state."""
    target = Path(path)
    try:
        with target.open("w", encoding="utf-8") as fh:
            for doc in store.compact_lines():
                fh.write(json.dumps(doc, ensure_ascii=False, sort_keys=True) + "\n")
    except OSError as exc:
        raise StoreUnavailable(f"cannot write store {target}: {exc}") from exc
