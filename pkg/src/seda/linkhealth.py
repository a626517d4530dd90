"""Adaptive link-health inspection.

Each site's probe budget follows a composite weight combining catalog
size, historical alive-rate volatility, and recent growth. Sampled URLs
are probed with lightweight HEAD requests; a site whose alive rate drops
below the threshold is gated DEAD, its datasets are hidden from search
(flagged, never deleted), and the next cycle rechecks it with its full
quota so recovery restores them automatically.
"""

from __future__ import annotations

import math
import random
import socket
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from urllib.parse import urlsplit, urlunsplit

from .errors import NoWeight
from .schema import Aliveness, now_iso

TAU_ALIVE_DEFAULT = 0.9
VARIANCE_WINDOW = 8  # alive-rate observations feeding sigma^2


@dataclass
class SiteStats:
    source_name: str
    n_datasets: int
    sigma2: float = 0.0
    delta_n: int = 0
    history: list[list] = field(default_factory=list)


@dataclass
class WeightParams:
    lambda1: float = 1.0
    lambda2: float = 1.0
    epsilon: float = 1.0
    k_total: int = 100
    k_min: int = 30
    k_max: int = 3000
    tau_alive: float = TAU_ALIVE_DEFAULT
    timeout: float = 10.0
    retries: int = 2
    max_inflight: int = 4

    def __post_init__(self) -> None:
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("lambda weights must be non-negative")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.k_total < 1 or self.k_min < 1 or self.k_max < 1:
            raise ValueError("budgets must be positive")
        if self.k_min > self.k_max:
            raise ValueError("k_min must not exceed k_max")
        if not (0.0 < self.tau_alive <= 1.0):
            raise ValueError("tau_alive must lie in (0, 1]")


@dataclass
class LinkStatus:
    url: str
    verdict: str  # alive | dead
    reason: str  # ok | http_error | timeout | dns_failure
    status_code: int | None = None
    latency: float = 0.0

    def __post_init__(self) -> None:
        if (self.verdict == "alive") != (self.reason == "ok"):
            raise ValueError("alive verdicts pair with reason ok and only ok")


@dataclass
class SiteReport:
    source_name: str
    sampled: int
    alive: int
    alive_rate: float
    gate: str  # ALIVE | DEAD


@dataclass
class InspectionReport:
    cycle_timestamp: str
    sites: list[SiteReport] = field(default_factory=list)


def site_weight(stats: SiteStats, p: WeightParams) -> float:
    """Composite importance weight; zero for an empty site."""
    growth = max(0, stats.delta_n)
    return (
        math.log(1 + stats.n_datasets)
        * (1 + p.lambda1 * stats.sigma2)
        * (1 + p.lambda2 * growth / (stats.n_datasets + p.epsilon))
    )


def allocate_budget(
    weights: dict[str, float],
    p: WeightParams,
    url_counts: dict[str, int] | None = None,
) -> dict[str, int]:
    """Proportional split of the probe budget, clamped per site.

    A site never gets more probes than it has URLs.
    """
    total = sum(weights.values())
    if total <= 0:
        raise NoWeight("no site carries positive weight")
    budgets: dict[str, int] = {}
    for site, w in weights.items():
        ideal = (w / total) * p.k_total
        k = min(p.k_max, max(p.k_min, round(ideal)))
        if url_counts is not None:
            k = min(k, url_counts.get(site, k))
        budgets[site] = k
    return budgets


def _resolves(host: str) -> bool:
    try:
        socket.getaddrinfo(host, None)
        return True
    except socket.gaierror:
        return False


def check_url(url: str, timeout: float = 10.0, retries: int = 2) -> LinkStatus:
    """Probe one URL: HEAD first, GET when HEAD is not supported."""
    import requests

    host = urlsplit(url).hostname or ""
    started = time.monotonic()
    if not _resolves(host):
        return LinkStatus(url, "dead", "dns_failure", latency=time.monotonic() - started)

    last_reason = "timeout"
    for _ in range(retries + 1):
        try:
            resp = requests.head(url, timeout=timeout, allow_redirects=False)
            if resp.status_code in (405, 501):
                resp = requests.get(url, timeout=timeout, allow_redirects=False, stream=True)
                resp.close()
            latency = time.monotonic() - started
            if 200 <= resp.status_code < 400:
                return LinkStatus(url, "alive", "ok", resp.status_code, latency)
            return LinkStatus(url, "dead", "http_error", resp.status_code, latency)
        except requests.Timeout:
            last_reason = "timeout"
        except requests.ConnectionError as exc:
            if "name" in str(exc).lower() and "resol" in str(exc).lower():
                last_reason = "dns_failure"
            else:
                last_reason = "timeout"
        except requests.RequestException:
            last_reason = "timeout"
    return LinkStatus(url, "dead", last_reason, latency=time.monotonic() - started)


def inspect_site(
    source_name: str,
    k_s: int,
    urls: list[str],
    rng_seed: int,
    check=check_url,
    tau_alive: float = TAU_ALIVE_DEFAULT,
    max_inflight: int = 4,
) -> tuple[float, str]:
    """Sample and probe one site's URLs; gate DEAD strictly below threshold."""
    rng = random.Random(f"{rng_seed}:{source_name}")
    sampled = rng.sample(urls, min(k_s, len(urls)))

    by_host: dict[str, list[str]] = {}
    for url in sampled:
        by_host.setdefault(urlsplit(url).hostname or "", []).append(url)

    def probe_host(host_urls: list[str]) -> int:
        return sum(1 for u in host_urls if check(u).verdict == "alive")

    with ThreadPoolExecutor(max_workers=max_inflight) as pool:
        alive = sum(pool.map(probe_host, by_host.values()))
    alive_rate = alive / len(sampled)
    gate = "DEAD" if alive_rate < tau_alive else "ALIVE"
    return alive_rate, gate


def compute_site_stats(source_name: str, n_datasets: int, history: list[list]) -> SiteStats:
    """Variance over the recent alive-rate window plus growth since last cycle."""
    window = history[-VARIANCE_WINDOW:]
    rates = [entry[1] for entry in window]
    sigma2 = statistics.variance(rates) if len(rates) >= 2 else 0.0
    if history:
        last_n = int(history[-1][2])
        delta_n = max(0, n_datasets - last_n)
    else:
        delta_n = 0
    return SiteStats(
        source_name=source_name,
        n_datasets=n_datasets,
        sigma2=sigma2,
        delta_n=delta_n,
        history=[list(e) for e in history],
    )


def remap_url(url: str, base_url: str) -> str:
    """Graft a URL's path and query onto another origin (offline probing)."""
    parts = urlsplit(url)
    base = urlsplit(base_url)
    return urlunsplit((base.scheme, base.netloc, parts.path, parts.query, ""))


def run_inspection(
    sites: list[str],
    p: WeightParams,
    store,
    rng_seed: int,
    check=None,
    base_url: str | None = None,
    timestamp: str | None = None,
) -> InspectionReport:
    """One full inspection cycle over the given sites.

    Sites flagged for recheck are probed with their full quota so a
    recovered site is restored in a single cycle.
    """
    if check is None:
        def check(url: str) -> LinkStatus:  # noqa: F811 - default probe
            return check_url(url, timeout=p.timeout, retries=p.retries)

    records = store.all_records()
    site_urls: dict[str, list[str]] = {}
    for r in records:
        if r.source_name in sites and r.dataset_url:
            site_urls.setdefault(r.source_name, []).append(r.dataset_url)
    for source in site_urls:
        site_urls[source] = sorted(set(site_urls[source]))

    stats: dict[str, SiteStats] = {}
    for source in sites:
        n = sum(
            1
            for r in records
            if r.source_name == source and r.canonical_of is None
        )
        stats[source] = compute_site_stats(source, n, store.site_history(source))

    weights = {s: site_weight(stats[s], p) for s in sites if site_urls.get(s)}
    url_counts = {s: len(site_urls[s]) for s in weights}
    budgets = allocate_budget(weights, p, url_counts=url_counts)
    for source in list(budgets):
        if store.site_flag(source)["recheck"]:
            budgets[source] = min(len(site_urls[source]), p.k_max)

    report = InspectionReport(cycle_timestamp=timestamp or now_iso())
    for source in sorted(budgets):
        urls = site_urls[source]
        if base_url:
            remapped = {u: remap_url(u, base_url) for u in urls}
            probe = lambda u: check(remapped[u])  # noqa: E731
        else:
            probe = check
        alive_rate, gate = inspect_site(
            source,
            budgets[source],
            urls,
            rng_seed,
            check=probe,
            tau_alive=p.tau_alive,
            max_inflight=p.max_inflight,
        )
        sampled = min(budgets[source], len(urls))
        report.sites.append(
            SiteReport(
                source_name=source,
                sampled=sampled,
                alive=round(alive_rate * sampled),
                alive_rate=alive_rate,
                gate=gate,
            )
        )
        store.add_site_observation(
            source, report.cycle_timestamp, alive_rate, stats[source].n_datasets
        )
        store.set_site_flag(source, gate, recheck=(gate == "DEAD"))
        flag_value = Aliveness.DEAD.value if gate == "DEAD" else Aliveness.ALIVE.value
        for r in records:
            if r.source_name == source and r.alive != flag_value:
                r.alive = flag_value
                store.put(r)
    return report
