"""Engine configuration.

INI sections mirror the pipeline stages; every key maps onto a typed
field and unknown keys are rejected loudly rather than ignored, so a
typo in a config file cannot silently fall back to defaults. Per-source
field alias tables live in ``[aliases:<source>]`` sections.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ContractViolation
from .linkhealth import WeightParams
from .llm import ExternalLanguageModel, LanguageModelClient, StubLanguageModel

ENV_STORE = "SEDA_STORE"
DEFAULT_STORE_PATH = "seda_store.jsonl"


@dataclass
class DedupConfig:
    theta: float = 0.85
    seed: int = 42
    simhash_bands: int = 4
    lsh_bands: int = 8
    lsh_hyperplanes: int = 8


@dataclass
class TaggingConfig:
    delta: float = 0.80
    tau_co: int = 2
    k_dt: int = 5
    max_candidates: int = 10


@dataclass
class LinkhealthConfig:
    lambda1: float = 1.0
    lambda2: float = 1.0
    epsilon: float = 1.0
    k_total: int = 100
    k_min: int = 30
    k_max: int = 3000
    tau_alive: float = 0.9
    timeout: float = 10.0
    retries: int = 2
    max_inflight: int = 4


@dataclass
class SearchConfig:
    kappa: float = 1.2
    beta: float = 0.75


@dataclass
class LmConfig:
    provider: str = "stub"
    endpoint: str = ""
    timeout: float = 30.0


@dataclass
class Config:
    dedup: DedupConfig = field(default_factory=DedupConfig)
    tagging: TaggingConfig = field(default_factory=TaggingConfig)
    linkhealth: LinkhealthConfig = field(default_factory=LinkhealthConfig)
    search: SearchConfig = field(default_factory=SearchConfig)
    lm: LmConfig = field(default_factory=LmConfig)
    source_priority: list[str] = field(default_factory=list)
    aliases: dict[str, dict[str, str]] = field(default_factory=dict)

    def weight_params(self) -> WeightParams:
        lh = self.linkhealth
        return WeightParams(
            lambda1=lh.lambda1,
            lambda2=lh.lambda2,
            epsilon=lh.epsilon,
            k_total=lh.k_total,
            k_min=lh.k_min,
            k_max=lh.k_max,
            tau_alive=lh.tau_alive,
            timeout=lh.timeout,
            retries=lh.retries,
            max_inflight=lh.max_inflight,
        )

    def make_lm(self) -> LanguageModelClient:
        if self.lm.provider == "stub":
            return StubLanguageModel()
        if self.lm.provider == "external":
            if not self.lm.endpoint:
                raise ContractViolation("external lm provider requires an endpoint")
            return ExternalLanguageModel(self.lm.endpoint, timeout=self.lm.timeout)
        raise ContractViolation(f"unknown lm provider: {self.lm.provider!r}")


_SECTIONS = {
    "dedup": DedupConfig,
    "tagging": TaggingConfig,
    "linkhealth": LinkhealthConfig,
    "search": SearchConfig,
    "lm": LmConfig,
}


def _coerce(value: str, target_type) -> object:
    if target_type is int:
        return int(value)
    if target_type is float:
        return float(value)
    return value


def load_config(path: str | Path | None = None) -> Config:
    """Parse an INI config; a missing path yields all defaults."""
    config = Config()
    if path is None:
        return config
    parser = configparser.ConfigParser()
    read = parser.read(str(path), encoding="utf-8")
    if not read:
        raise ContractViolation(f"config file not readable: {path}")
    for section in parser.sections():
        if section in _SECTIONS:
            target = getattr(config, section)
            known = {f.name: f.type for f in fields(target)}
            types = {f.name: type(getattr(target, f.name)) for f in fields(target)}
            for key, value in parser.items(section):
                if key not in known:
                    raise ContractViolation(
                        f"unknown config key [{section}] {key}"
                    )
                try:
                    setattr(target, key, _coerce(value, types[key]))
                except ValueError as exc:
                    raise ContractViolation(
                        f"bad value for [{section}] {key}: {value!r}"
                    ) from exc
        elif section == "sources":
            for key, value in parser.items(section):
                if key != "priority":
                    raise ContractViolation(f"unknown config key [sources] {key}")
                config.source_priority = [
                    s.strip() for s in value.split(",") if s.strip()
                ]
        elif section.startswith("aliases:"):
            source = section.split(":", 1)[1].strip()
            if not source:
                raise ContractViolation("alias section needs a source name")
            config.aliases[source] = dict(parser.items(section))
        else:
            raise ContractViolation(f"unknown config section [{section}]")
    return config


def resolve_store_path(explicit: str | None = None) -> str:
    """CLI flag beats the environment override beats the default."""
    if explicit:
        return explicit
    return os.environ.get(ENV_STORE) or DEFAULT_STORE_PATH
