"""Source adapters: raw dumps, HTML pages, and free text into DatasetRecords.

Three input formats are supported. Structured dumps map rows straight onto
the unified schema; HTML pages go through JSON-LD extraction with an
LM-backed description fallback; free-text corpora go through LM extraction
with a cheap keyword prefilter so most non-dataset text never reaches the
client.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .errors import AdapterFailure, MalformedDocument, MalformedResponse, SedaError
from .llm import LanguageModelClient
from .schema import (
    DatasetRecord,
    SourceDescriptor,
    apply_aliases,
    now_iso,
    to_unified,
    validate_record,
)

log = logging.getLogger(__name__)

EXTRACTION_FIELDS = ("is_dataset", "dataset_name", "dataset_desc", "dataset_url", "analysis")

# Cheap prefilter for free-text corpora; only matching blocks reach the LM.
TEXT_CORPUS_KEYWORDS = re.compile(r"\b(dataset|benchmark)\b", re.IGNORECASE)

_JSONLD_BLOCK = re.compile(
    r"<script[^>]*type\s*=\s*[\"']application/ld\+json[\"'][^>]*>(.*?)</script>",
    re.IGNORECASE | re.DOTALL,
)
_ANY_TAG = re.compile(r"<[a-zA-Z!/]")


@dataclass
class ExtractionResult:
    """What the extraction prompt yields for one text record."""

    is_dataset: str
    dataset_name: str = ""
    dataset_desc: str = ""
    dataset_url: str = ""
    analysis: str = ""

    def __post_init__(self) -> None:
        # A negative verdict carries no dataset fields.
        if self.is_dataset == "No":
            self.dataset_name = ""
            self.dataset_desc = ""
            self.dataset_url = ""


@dataclass
class SourceAdapterConfig:
    descriptor: SourceDescriptor
    input_path: str
    format: str
    source_hint: str = ""
    aliases: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.format not in ("record_dump", "html_pages", "text_corpus"):
            raise ValueError(f"unknown adapter format: {self.format}")


def _type_names(value: Any) -> list[str]:
    types = value if isinstance(value, list) else [value]
    names = []
    for t in types:
        if isinstance(t, str):
            # strip schema.org prefixes like "https://schema.org/Dataset"
            names.append(re.split(r"[/#:]", t)[-1].lower())
    return names


def _first_text(value: Any) -> str:
    if isinstance(value, str):
        return value.strip()
    if isinstance(value, list):
        for item in value:
            text = _first_text(item)
            if text:
                return text
    if isinstance(value, dict):
        return _first_text(value.get("name") or value.get("@id") or "")
    return ""


def _jsonld_objects(parsed: Any) -> list[dict]:
    """Flatten a JSON-LD document into candidate objects, @graph included."""
    if isinstance(parsed, list):
        out = []
        for item in parsed:
            out.extend(_jsonld_objects(item))
        return out
    if isinstance(parsed, dict):
        if "@graph" in parsed and isinstance(parsed["@graph"], list):
            return _jsonld_objects(parsed["@graph"])
        return [parsed]
    return []


def _dataset_fields(obj: dict) -> dict[str, str] | None:
    name = _first_text(obj.get("name"))
    url = _first_text(obj.get("url"))
    if not url:
        dist = obj.get("distribution")
        items = dist if isinstance(dist, list) else [dist]
        for item in items:
            if isinstance(item, dict):
                url = _first_text(item.get("contentUrl"))
                if url:
                    break
    if not name and not url:
        return None
    fields: dict[str, str] = {
        "dataset_name": name,
        "dataset_desc": _first_text(obj.get("description")),
        "dataset_url": url,
    }
    provider = _first_text(
        obj.get("provider") or obj.get("publisher") or obj.get("creator")
    )
    if provider:
        fields["provider"] = provider
    return fields


def extract_jsonld(html: str) -> list[dict[str, str]]:
    """Pull schema.org Dataset objects out of a page's JSON-LD blocks.

    Individually malformed blocks are skipped (counted in a warning);
    MalformedDocument fires only when the input has no markup at all.
    """
    if not _ANY_TAG.search(html):
        raise MalformedDocument("input contains no markup")
    results: list[dict[str, str]] = []
    bad_blocks = 0
    for match in _JSONLD_BLOCK.finditer(html):
        try:
            parsed = json.loads(match.group(1))
        except json.JSONDecodeError:
            bad_blocks += 1
            continue
        for obj in _jsonld_objects(parsed):
            if "dataset" not in _type_names(obj.get("@type")):
                continue
            fields = _dataset_fields(obj)
            if fields is not None:
                results.append(fields)
    if bad_blocks:
        log.warning("extract_jsonld: skipped %d malformed JSON-LD block(s)", bad_blocks)
    return results


def extract_from_text(
    record_text: str, source_hint: str, lm: LanguageModelClient
) -> ExtractionResult:
    """Run the LM extraction prompt over one text record."""
    prompt = lm.render(
        "extract_dataset", {"source_hint": source_hint, "record_text": record_text}
    )
    raw = lm.complete(prompt)
    try:
        parsed = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedResponse(
            f"extraction response is not structured: {exc}", raw_response=raw
        ) from exc
    if not isinstance(parsed, dict) or set(parsed) != set(EXTRACTION_FIELDS):
        raise MalformedResponse(
            "extraction response must carry exactly the five extraction fields",
            raw_response=raw,
        )
    verdict = str(parsed["is_dataset"])
    if verdict not in ("Yes", "No", "Uncertain"):
        raise MalformedResponse(
            f"invalid is_dataset value: {verdict!r}", raw_response=raw
        )
    return ExtractionResult(
        is_dataset=verdict,
        dataset_name=str(parsed["dataset_name"] or ""),
        dataset_desc=str(parsed["dataset_desc"] or ""),
        dataset_url=str(parsed["dataset_url"] or ""),
        analysis=str(parsed["analysis"] or ""),
    )


def generate_description(
    dataset_url: str, html_content: str, lm: LanguageModelClient
) -> str:
    """Ask the LM for a page-grounded description of a dataset."""
    prompt = lm.render(
        "describe_dataset",
        {"dataset_url": dataset_url, "html_content": html_content},
    )
    text = lm.complete(prompt)
    if not text.strip():
        raise MalformedResponse("empty description from client", raw_response=text)
    return text


def _read_input(path: Path, suffix: str) -> list[tuple[str, str]]:
    """(label, content) pairs from a file or a directory of `suffix` files."""
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix == suffix)
        return [(p.name, p.read_text(encoding="utf-8")) for p in files]
    return [(path.name, path.read_text(encoding="utf-8"))]


def run_source(cfg: SourceAdapterConfig, lm: LanguageModelClient) -> list[DatasetRecord]:
    """Produce unified records from one configured source.

    Per-item failures are logged and skipped; only an unreadable input is
    fatal.
    """
    path = Path(cfg.input_path)
    try:
        if cfg.format == "record_dump":
            inputs = _read_input(path, ".jsonl")
        elif cfg.format == "html_pages":
            inputs = _read_input(path, ".html")
        else:
            inputs = _read_input(path, ".txt")
    except OSError as exc:
        raise AdapterFailure(f"cannot read source input {cfg.input_path}: {exc}") from exc

    records: list[DatasetRecord] = []
    failures = 0
    if cfg.format == "record_dump":
        for label, content in inputs:
            for lineno, line in enumerate(content.splitlines(), start=1):
                if not line.strip():
                    continue
                try:
                    raw = json.loads(line)
                    validate_record(apply_aliases(raw, cfg.aliases))
                    records.append(to_unified(raw, cfg.descriptor, aliases=cfg.aliases))
                except (json.JSONDecodeError, SedaError, TypeError, AttributeError) as exc:
                    failures += 1
                    log.warning("%s line %d skipped: %s", label, lineno, exc)
    elif cfg.format == "html_pages":
        for label, content in inputs:
            try:
                field_maps = extract_jsonld(content)
            except MalformedDocument as exc:
                failures += 1
                log.warning("%s skipped: %s", label, exc)
                continue
            for fields in field_maps:
                try:
                    record = to_unified(fields, cfg.descriptor, aliases=cfg.aliases)
                except SedaError as exc:
                    failures += 1
                    log.warning("%s object skipped: %s", label, exc)
                    continue
                if not record.dataset_desc:
                    try:
                        record.dataset_desc = generate_description(
                            record.dataset_url, content, lm
                        ).strip()
                    except MalformedResponse:
                        log.warning("%s: no description recoverable", label)
                records.append(record)
    else:
        for label, content in inputs:
            blocks = (
                [content] if path.is_dir() else re.split(r"\n\s*\n", content)
            )
            for block in blocks:
                block = block.strip()
                if not block or not TEXT_CORPUS_KEYWORDS.search(block):
                    continue
                try:
                    result = extract_from_text(block, cfg.source_hint, lm)
                except MalformedResponse as exc:
                    failures += 1
                    log.warning("%s block skipped: %s", label, exc)
                    continue
                if result.is_dataset != "Yes":
                    continue
                raw = {
                    "dataset_name": result.dataset_name,
                    "dataset_desc": result.dataset_desc,
                    "dataset_url": result.dataset_url,
                }
                try:
                    validate_record(raw)
                    records.append(to_unified(raw, cfg.descriptor))
                except SedaError as exc:
                    failures += 1
                    log.warning("%s block skipped: %s", label, exc)
    if failures:
        log.warning("run_source(%s): %d item(s) skipped", cfg.descriptor.source_name, failures)
    return records


def ingest_batch(records: list[DatasetRecord], store) -> dict[str, int]:
    """Upsert records by id.

    Adapters own only the six content fields; tags, aliveness, and
    canonical pointers belong to later pipeline stages and survive
    re-ingestion untouched. Unchanged records are not rewritten.
    """
    counts = {"inserted": 0, "updated": 0, "skipped": 0}
    for record in records:
        existing = store.get(record.id)
        if existing is None:
            store.put(record)
            counts["inserted"] += 1
        elif existing.content_fields() == record.content_fields():
            counts["skipped"] += 1
        else:
            merged = dataclasses.replace(
                existing,
                **record.content_fields(),
                updated_at=now_iso(),
            )
            store.put(merged)
            counts["updated"] += 1
    return counts
