"""Unified dataset schema and the normalization rules that map raw records onto it.

Every record in the catalog, whatever its origin, is reduced to one
:class:`DatasetRecord` shape so that dedup, tagging, link health and search
can treat the corpus uniformly.
"""

from __future__ import annotations

import hashlib
import re
import unicodedata
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Mapping
from urllib.parse import parse_qsl, urlencode, urlsplit, urlunsplit

from .errors import Unidentifiable, UnparsableUrl

# Content fields of the unified schema, in canonical order.
UNIFIED_FIELDS = (
    "dataset_name",
    "dataset_desc",
    "dataset_url",
    "source_name",
    "data_type",
    "scale",
)

# Descriptions shorter than this are treated as incomplete and flagged
# for enrichment.
MIN_DESC_LENGTH = 20

_WS_RUN = re.compile(r"[_\-\s]+")
_DEFAULT_PORTS = {"http": "80", "https": "443"}


class Aliveness(str, Enum):
    ALIVE = "alive"
    DEAD = "dead"
    UNKNOWN = "unknown"


class AcquisitionMode(str, Enum):
    API = "api"
    SITE_CRAWL = "site_crawl"


class UpdateMode(str, Enum):
    ONE_TIME = "one_time"
    PERIODIC = "periodic"


class EntityKind(str, Enum):
    SITE = "site"
    INSTITUTION = "institution"
    ENTERPRISE = "enterprise"


@dataclass
class DatasetRecord:
    """One dataset entity in the unified schema."""

    id: str
    dataset_name: str = ""
    dataset_desc: str = ""
    dataset_url: str = ""
    source_name: str = ""
    data_type: str = ""
    scale: str = ""
    tags_selected: list[str] = field(default_factory=list)
    tags_weak: list[str] = field(default_factory=list)
    alive: str = Aliveness.UNKNOWN.value
    canonical_of: str | None = None
    created_at: str = ""
    updated_at: str = ""

    def content_fields(self) -> dict[str, str]:
        return {name: getattr(self, name) for name in UNIFIED_FIELDS}

    def same_content(self, other: "DatasetRecord") -> bool:
        """Equality over everything except the two timestamps."""
        ours = replace(self, created_at="", updated_at="")
        theirs = replace(other, created_at="", updated_at="")
        return ours == theirs

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "dataset_name": self.dataset_name,
            "dataset_desc": self.dataset_desc,
            "dataset_url": self.dataset_url,
            "source_name": self.source_name,
            "data_type": self.data_type,
            "scale": self.scale,
            "tags_selected": list(self.tags_selected),
            "tags_weak": list(self.tags_weak),
            "alive": self.alive,
            "canonical_of": self.canonical_of,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DatasetRecord":
        return cls(
            id=data["id"],
            dataset_name=data.get("dataset_name", ""),
            dataset_desc=data.get("dataset_desc", ""),
            dataset_url=data.get("dataset_url", ""),
            source_name=data.get("source_name", ""),
            data_type=data.get("data_type", ""),
            scale=data.get("scale", ""),
            tags_selected=list(data.get("tags_selected", [])),
            tags_weak=list(data.get("tags_weak", [])),
            alive=data.get("alive", Aliveness.UNKNOWN.value),
            canonical_of=data.get("canonical_of"),
            created_at=data.get("created_at", ""),
            updated_at=data.get("updated_at", ""),
        )


@dataclass
class ValidationReport:
    """Outcome of checking a raw record against the unified schema."""

    record_id: str
    missing_fields: list[str]
    enrichment_needed: bool
    notes: str = ""


@dataclass
class SourceDescriptor:
    """How a source is acquired and how it updates."""

    source_name: str
    acquisition_mode: str = AcquisitionMode.API.value
    update_mode: str = UpdateMode.ONE_TIME.value
    entity_kind: str = EntityKind.SITE.value

    def __post_init__(self) -> None:
        if not self.source_name:
            raise ValueError("source_name must be non-empty")
        AcquisitionMode(self.acquisition_mode)
        UpdateMode(self.update_mode)
        EntityKind(self.entity_kind)


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def normalize_name(name: str) -> str:
    """Collapse a dataset name to its matching key.

    Lowercase, diacritics stripped (compatibility decomposition then
    combining-mark removal), underscores/hyphens/whitespace runs collapsed
    to single spaces, ends trimmed. Total and idempotent.
    """
    text = unicodedata.normalize("NFKD", name)
    text = "".join(ch for ch in text if not unicodedata.combining(ch))
    text = text.lower()
    text = _WS_RUN.sub(" ", text)
    return text.strip()


def canonicalize_url(url: str) -> str:
    """Reduce a URL to canonical form so trivially-different spellings compare equal.

    Scheme/host lowercased, default ports dropped, fragment dropped, query
    pairs sorted, trailing slash removed except on the bare root.
    Raises UnparsableUrl unless the input is an absolute http(s)/ftp URL.
    """
    parts = urlsplit(url.strip())
    if not parts.scheme or not parts.netloc:
        raise UnparsableUrl(f"not an absolute URL: {url!r}")
    scheme = parts.scheme.lower()
    host = parts.hostname.lower() if parts.hostname else ""
    if not host:
        raise UnparsableUrl(f"no host in URL: {url!r}")
    netloc = host
    if parts.port is not None and str(parts.port) != _DEFAULT_PORTS.get(scheme):
        netloc = f"{host}:{parts.port}"
    if parts.username:
        cred = parts.username + (f":{parts.password}" if parts.password else "")
        netloc = f"{cred}@{netloc}"
    path = parts.path or "/"
    if path != "/" and path.endswith("/"):
        path = path.rstrip("/") or "/"
    query = urlencode(sorted(parse_qsl(parts.query, keep_blank_values=True)))
    return urlunsplit((scheme, netloc, path, query, ""))


def validate_record(raw: Mapping[str, Any]) -> ValidationReport:
    """Check which unified-schema fields a raw record is missing.

    Raises Unidentifiable when the record has neither a name nor a URL,
    since nothing downstream could anchor it.
    """
    name = str(raw.get("dataset_name") or "").strip()
    url = str(raw.get("dataset_url") or "").strip()
    if not name and not url:
        raise Unidentifiable("record has neither dataset_name nor dataset_url")
    missing = [
        f for f in UNIFIED_FIELDS if not str(raw.get(f) or "").strip()
    ]
    desc = str(raw.get("dataset_desc") or "").strip()
    enrichment_needed = "dataset_desc" in missing or len(desc) < MIN_DESC_LENGTH
    return ValidationReport(
        record_id=name or url,
        missing_fields=missing,
        enrichment_needed=enrichment_needed,
    )


def apply_aliases(raw: Mapping[str, Any], aliases: Mapping[str, str]) -> dict[str, Any]:
    """Rename raw keys onto unified field names per a source alias table.

    Unified names always map to themselves; aliased values never clobber a
    value already present under the unified name.
    """
    out: dict[str, Any] = {k: v for k, v in raw.items() if k not in aliases}
    for key, value in raw.items():
        target = aliases.get(key)
        if target is None:
            continue
        if not str(out.get(target) or "").strip():
            out[target] = value
    return out


def record_id_for(source_name: str, canonical_url: str, normalized_name: str) -> str:
    """Stable 128-bit content id so re-ingestion is deterministic."""
    payload = "\x1f".join((source_name, canonical_url, normalized_name))
    return hashlib.md5(payload.encode("utf-8")).hexdigest()


def to_unified(
    raw: Mapping[str, Any],
    source: SourceDescriptor,
    aliases: Mapping[str, str] | None = None,
    timestamp: str | None = None,
) -> DatasetRecord:
    """Map a raw field-map onto a DatasetRecord.

    The caller is expected to have run validate_record first. Propagates
    UnparsableUrl for a non-empty URL that fails canonicalization.
    """
    mapped = apply_aliases(raw, aliases or {})
    name = str(mapped.get("dataset_name") or "").strip()
    url = str(mapped.get("dataset_url") or "").strip()
    canonical = canonicalize_url(url) if url else ""
    norm_name = normalize_name(name)
    ts = timestamp if timestamp is not None else now_iso()
    return DatasetRecord(
        id=record_id_for(source.source_name, canonical, norm_name),
        dataset_name=name,
        dataset_desc=str(mapped.get("dataset_desc") or "").strip(),
        dataset_url=canonical,
        source_name=source.source_name,
        data_type=str(mapped.get("data_type") or "").strip(),
        scale=str(mapped.get("scale") or "").strip(),
        created_at=ts,
        updated_at=ts,
    )
