"""Dataset catalog engine: ingestion, dedup, tagging, link health, search."""

__version__ = "0.1.0"
