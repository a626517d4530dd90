"""Command-line pipeline driver.

Exit codes: 0 success, 1 usage error, 2 pipeline error. argparse exits
with 2 on bad usage by default, so the parser class overrides that.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .api import serve
from .config import load_config, resolve_store_path
from .dedup import dedup_run
from .errors import SedaError
from .ingest import SourceAdapterConfig, ingest_batch, run_source
from .linkhealth import run_inspection
from .schema import SourceDescriptor
from .searchnav import EntityCard, SearchIndex, refine_by_tag, search
from .store import Store
from .tagging import TagLimits, tag_run


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _infer_format(input_path: str) -> str:
    path = Path(input_path)
    suffixes = (
        {path.suffix}
        if path.is_file()
        else {p.suffix for p in path.iterdir()} if path.is_dir() else set()
    )
    if ".jsonl" in suffixes:
        return "record_dump"
    if ".html" in suffixes:
        return "html_pages"
    return "text_corpus"


def build_parser() -> _Parser:
    parser = _Parser(prog="seda", description="dataset catalog engine")
    parser.add_argument("--store", help="store file path (overrides SEDA_STORE)")
    parser.add_argument("--config", help="INI config file")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_ingest = sub.add_parser("ingest", help="run a source adapter into the store")
    p_ingest.add_argument("--source", required=True, help="source name")
    p_ingest.add_argument("--input", required=True, help="input file or directory")
    p_ingest.add_argument(
        "--format",
        choices=["record_dump", "html_pages", "text_corpus"],
        help="adapter format (inferred from the input when omitted)",
    )
    p_ingest.add_argument("--hint", default="", help="adapter text for the extraction prompt")

    p_dedup = sub.add_parser("dedup", help="deduplicate the store")
    p_dedup.add_argument("--theta", type=float, help="semantic match threshold")

    p_tag = sub.add_parser("tag", help="annotate records with topic tags")
    p_tag.add_argument("--seed-tags", help="allow-list file of seed tag labels")

    p_link = sub.add_parser("linkcheck", help="run a link-health inspection cycle")
    p_link.add_argument("--budget", type=int, required=True, help="total probe budget")
    p_link.add_argument("--seed", type=int, help="sampling seed")
    p_link.add_argument("--base-url", help="remap probes onto this origin")

    p_search = sub.add_parser("search", help="query the catalog")
    p_search.add_argument("query")
    p_search.add_argument("--k", type=int, default=10)
    p_search.add_argument("--tag", help="restrict hits to a selected tag")

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")

    p_entities = sub.add_parser("entities", help="knowledge-space management")
    entities_sub = p_entities.add_subparsers(
        dest="entities_command", required=True, parser_class=_Parser
    )
    p_load = entities_sub.add_parser("load", help="load entity cards from a file")
    p_load.add_argument("file")

    return parser


def _cmd_ingest(args, config, store) -> int:
    fmt = args.format or _infer_format(args.input)
    descriptor = SourceDescriptor(source_name=args.source)
    cfg = SourceAdapterConfig(
        descriptor=descriptor,
        input_path=args.input,
        format=fmt,
        source_hint=args.hint or f"records from {args.source}",
        aliases=config.aliases.get(args.source, {}),
    )
    records = run_source(cfg, config.make_lm())
    counts = ingest_batch(records, store)
    print(
        f"ingested {args.source}: inserted={counts['inserted']} "
        f"updated={counts['updated']} skipped={counts['skipped']}"
    )
    return 0


def _cmd_dedup(args, config, store) -> int:
    theta = args.theta if args.theta is not None else config.dedup.theta
    survivors = dedup_run(
        store,
        theta=theta,
        seed=config.dedup.seed,
        source_priority=config.source_priority,
    )
    clusters = store.clusters()
    for canonical_id in sorted(clusters):
        c = clusters[canonical_id]
        print(
            f"{canonical_id}\t{len(c['member_ids'])}\t"
            f"{c['min_score']:.4f}\t{c['max_score']:.4f}"
        )
    print(f"clusters={len(clusters)} survivors={len(survivors)}")
    return 0


def _cmd_tag(args, config, store) -> int:
    allowed = None
    if args.seed_tags:
        lines = Path(args.seed_tags).read_text(encoding="utf-8").splitlines()
        allowed = {" ".join(l.lower().split()) for l in lines if l.strip()}
    assignments = tag_run(
        store,
        config.make_lm(),
        delta=config.tagging.delta,
        tau_co=config.tagging.tau_co,
        limits=TagLimits(
            k_dt=config.tagging.k_dt, max_candidates=config.tagging.max_candidates
        ),
        allowed_seed_tags=allowed,
    )
    print(f"annotated={len(assignments)}")
    return 0


def _cmd_linkcheck(args, config, store) -> int:
    params = config.weight_params()
    params.k_total = args.budget
    sites = sorted({r.source_name for r in store.all_records() if r.source_name})
    report = run_inspection(
        sites,
        params,
        store,
        rng_seed=args.seed if args.seed is not None else config.dedup.seed,
        base_url=args.base_url,
    )
    for site in report.sites:
        print(f"{site.source_name}\t{site.sampled}\t{site.alive_rate:.4f}\t{site.gate}")
    return 0


def _cmd_search(args, config, store) -> int:
    idx = SearchIndex(
        store.all_records(), kappa=config.search.kappa, beta=config.search.beta
    )
    if args.tag:
        hits = refine_by_tag(args.query, args.tag, args.k, idx, store)
    else:
        hits = search(args.query, args.k, idx)
    for hit in hits:
        record = store.get(hit.dataset_id)
        print(f"{hit.dataset_id}\t{hit.score:.6f}\t{record.dataset_name}")
    return 0


def _cmd_serve(args, config, store) -> int:
    serve(config, store, port=args.port, host=args.host)
    return 0


def _cmd_entities(args, config, store) -> int:
    count = 0
    for line in Path(args.file).read_text(encoding="utf-8").splitlines():
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
        store.put_entity(card.to_dict())
        count += 1
    print(f"loaded {count} entities")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_config(args.config)
        store = Store(resolve_store_path(args.store))
        if args.command == "ingest":
            return _cmd_ingest(args, config, store)
        if args.command == "dedup":
            return _cmd_dedup(args, config, store)
        if args.command == "tag":
            return _cmd_tag(args, config, store)
        if args.command == "linkcheck":
            return _cmd_linkcheck(args, config, store)
        if args.command == "search":
            return _cmd_search(args, config, store)
        if args.command == "serve":
            return _cmd_serve(args, config, store)
        if args.command == "entities":
            return _cmd_entities(args, config, store)
        parser.error(f"unknown command {args.command!r}")
        return 1
    except SedaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
