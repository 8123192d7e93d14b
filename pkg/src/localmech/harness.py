"""Experiment orchestration: verification batteries, probe benchmarks, CSV.

Output contracts (consumed by the CLI and by external plotting scripts):

* bench records CSV — columns ``family,n,seed,query,probes,digest``, one row
  per answered query, sorted by (family, n, seed, query).  Per-query wall
  times live on the in-memory records only; timing and timestamps are
  confined to ``#`` header comments so reruns are byte-identical.
* bench summary CSV — columns ``family,n,stat,value``: per-n probe stats
  (median / p99 / max) followed by the growth diagnostics fitted to the
  per-n maxima: ``power_exponent`` (slope of log probes vs log n) and the
  ``polylog_constant`` / ``polylog_exponent`` pair of probes ≈ c·(ln n)^p.
* verify report CSV — columns ``name,instances,violations``, one row per
  invariant battery.

Cells may be evaluated in parallel (``LCMD_THREADS``); ordering of emitted
rows never depends on the execution schedule.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from hashlib import blake2b
from statistics import median
from typing import Iterable, Sequence

from . import auctions, matching, rsd, scheduling
from .instances import FAMILIES, InstanceSpec, build_instance
from .matching import ManStatus, UNMATCHED_STATUS
from .probes import ProbeCounter
from .randomness import RandomTape, sample_without_replacement

__all__ = [
    "ExperimentConfig",
    "BenchRecord",
    "BENCH_COLUMNS",
    "SUMMARY_COLUMNS",
    "VERIFY_COLUMNS",
    "canonical_family",
    "thread_budget",
    "bench_family",
    "bench_points",
    "summarize_bench",
    "fit_power_exponent",
    "fit_polylog",
    "verify_family",
    "render_csv",
    "csv_body",
]

BENCH_COLUMNS = ("family", "n", "seed", "query", "probes", "digest")
SUMMARY_COLUMNS = ("family", "n", "stat", "value")
VERIFY_COLUMNS = ("name", "instances", "violations")

# CLI-facing aliases for the canonical instance families.
_ALIASES = {
    "rsd": "housing",
    "scheduling": "scheduling-res",
    "auction": "uduv",
}


def canonical_family(name: str) -> str:
    fam = _ALIASES.get(name, name)
    if fam not in FAMILIES:
        raise ValueError(f"unknown family {name!r}")
    return fam


def thread_budget() -> int:
    """Worker cap from LCMD_THREADS (default 1)."""
    raw = os.environ.get("LCMD_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"LCMD_THREADS must be an integer, got {raw!r}") from None
    return max(1, value)


@dataclass(frozen=True)
class ExperimentConfig:
    """One orchestration request: which family, which sizes, how much work."""

    family: str
    ns: tuple[int, ...]
    seeds: int
    queries: int = 100
    k: int = 3
    d: int = 2
    rounds: int | None = None
    scheme: str = "expected"
    out: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", canonical_family(self.family))
        object.__setattr__(self, "ns", tuple(int(x) for x in self.ns))
        if not self.ns or any(x < 1 for x in self.ns):
            raise ValueError("n grid must be nonempty and positive")
        if self.seeds < 1:
            raise ValueError("seeds must be >= 1")
        if self.queries < 1:
            raise ValueError("queries must be >= 1")


@dataclass(frozen=True)
class BenchRecord:
    family: str
    n: int
    seed: int
    query: int
    probes: int
    wall_time: float
    digest: str


def _digest(text: str) -> str:
    return blake2b(text.encode("utf-8"), digest_size=8).hexdigest()


def _query_target(family: str, n: int, seed: int, k: int, d: int, rounds: int | None):
    """Build the instance for one bench cell and return (population, answer)
    where answer(entity, counter) -> canonical string."""
    if family == "matching":
        inst = matching.MatchingInstance.seeded(n, k, seed)
        budget = rounds if rounds is not None else 2 * k * k

        def answer(man: int, counter: ProbeCounter) -> str:
            st = matching.local_ags(inst, budget, man, counter)
            return f"{st.state}|{st.partner}"

        return n, answer
    if family in ("scheduling-std", "scheduling-res"):
        spec = InstanceSpec(seed=seed, family=family, n=n, m=n, k=d)
        inst = build_instance(spec)
        local = scheduling.slms_local if family == "scheduling-std" else scheduling.rlms_local

        def answer(job: int, counter: ProbeCounter) -> str:
            return str(local(inst, job, counter))

        return inst.m, answer
    if family == "uduv":
        spec = InstanceSpec(seed=seed, family=family, n=n, m=n, k=k)
        inst = build_instance(spec)

        def answer(buyer: int, counter: ProbeCounter) -> str:
            got = auctions.uduv_local(inst, ("buyer", buyer), counter)
            return f"{got['award']}|{got['payment']}"

        return n, answer
    if family in ("udubv", "ksmb"):
        spec = InstanceSpec(seed=seed, family=family, n=n, m=n, k=k)
        inst = build_instance(spec)
        local = auctions.udubv_local if family == "udubv" else auctions.ksmb_local

        def answer(buyer: int, counter: ProbeCounter) -> str:
            got = local(inst, buyer, counter)
            return f"{got['award']}|{got['payment']}"

        return n, answer
    if family == "housing":
        spec = InstanceSpec(seed=seed, family=family, n=n, m=n, k=d)
        inst = build_instance(spec)

        def answer(agent: int, counter: ProbeCounter) -> str:
            return str(rsd.rsd_local(inst, agent, counter))

        return n, answer
    raise ValueError(f"unknown family {family!r}")


def _bench_cell(
    family: str, n: int, seed: int, queries: int, k: int, d: int, rounds: int | None
) -> list[BenchRecord]:
    population, answer = _query_target(family, n, seed, k, d, rounds)
    tape = RandomTape(seed)
    picks = sample_without_replacement(
        tape, ("bench-query", family, n), population, min(queries, population)
    )
    records = []
    for q in sorted(picks):
        counter = ProbeCounter()
        t0 = time.perf_counter()
        canon = answer(q, counter)
        dt = time.perf_counter() - t0
        records.append(
            BenchRecord(
                family=family,
                n=n,
                seed=seed,
                query=q,
                probes=counter.count,
                wall_time=dt,
                digest=_digest(canon),
            )
        )
    return records


def bench_points(
    family: str,
    points: Sequence[tuple[int, int, int]],
    k: int = 3,
    d: int = 2,
    rounds: int | None = None,
) -> list[BenchRecord]:
    """Probe benchmark over explicit (n, seeds, queries) points.  Cells run
    on up to LCMD_THREADS workers; output order is schedule-independent."""
    family = canonical_family(family)
    cells = [
        (family, n, seed, queries, k, d, rounds)
        for n, seeds, queries in points
        for seed in range(seeds)
    ]
    workers = thread_budget()
    if workers > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda c: _bench_cell(*c), cells))
    else:
        chunks = [_bench_cell(*c) for c in cells]
    records = [rec for chunk in chunks for rec in chunk]
    records.sort(key=lambda r: (r.family, r.n, r.seed, r.query))
    return records


def bench_family(config: ExperimentConfig) -> list[BenchRecord]:
    points = [(n, config.seeds, config.queries) for n in config.ns]
    return bench_points(config.family, points, k=config.k, d=config.d, rounds=config.rounds)


# ---------------------------------------------------------------------------
# summaries and fits
# ---------------------------------------------------------------------------


def fit_power_exponent(ns: Sequence[int], ys: Sequence[float]) -> float:
    """Least-squares slope of log y against log n."""
    import numpy as np

    if len(ns) < 2:
        raise ValueError("need at least two grid points to fit")
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.maximum(np.asarray(ys, dtype=float), 1.0))
    return float(np.polyfit(x, y, 1)[0])


def fit_polylog(ns: Sequence[int], ys: Sequence[float]) -> tuple[float, float]:
    """Fit y ≈ c·(ln n)^p; returns (c, p)."""
    import numpy as np

    if len(ns) < 2:
        raise ValueError("need at least two grid points to fit")
    x = np.log(np.log(np.asarray(ns, dtype=float)))
    y = np.log(np.maximum(np.asarray(ys, dtype=float), 1.0))
    p, intercept = np.polyfit(x, y, 1)
    return float(math.exp(intercept)), float(p)


def summarize_bench(records: Sequence[BenchRecord]) -> list[tuple[str, str, str, str]]:
    """Summary rows (family, n, stat, value): per-n median/p99/max probes,
    then the growth fits over the per-n maxima."""
    by_fn: dict[tuple[str, int], list[int]] = {}
    for rec in records:
        by_fn.setdefault((rec.family, rec.n), []).append(rec.probes)
    rows: list[tuple[str, str, str, str]] = []
    maxima: dict[str, list[tuple[int, int]]] = {}
    for (family, n), probes in sorted(by_fn.items()):
        probes = sorted(probes)
        p99 = probes[max(0, math.ceil(0.99 * len(probes)) - 1)]
        rows.append((family, str(n), "median", f"{float(median(probes)):g}"))
        rows.append((family, str(n), "p99", str(p99)))
        rows.append((family, str(n), "max", str(probes[-1])))
        maxima.setdefault(family, []).append((n, probes[-1]))
    for family, pairs in sorted(maxima.items()):
        if len(pairs) < 2:
            continue
        ns = [n for n, _ in pairs]
        ys = [y for _, y in pairs]
        c, p = fit_polylog(ns, ys)
        rows.append((family, "", "power_exponent", f"{fit_power_exponent(ns, ys):.6f}"))
        rows.append((family, "", "polylog_constant", f"{c:.6f}"))
        rows.append((family, "", "polylog_exponent", f"{p:.6f}"))
    return rows


# ---------------------------------------------------------------------------
# CSV rendering
# ---------------------------------------------------------------------------


def render_csv(
    columns: Sequence[str],
    rows: Iterable[Sequence],
    comments: Sequence[str] = (),
) -> str:
    """Plain CSV with optional '#' header comments.  Values are str()-ed;
    none of ours contain commas."""
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(str(v) for v in row))
    return "\n".join(lines) + "\n"


def csv_body(text: str) -> str:
    """The comparison payload for determinism checks: all non-comment lines."""
    return "\n".join(line for line in text.splitlines() if not line.startswith("#"))


def bench_records_csv(records: Sequence[BenchRecord], comments: Sequence[str] = ()) -> str:
    total = sum(rec.wall_time for rec in records)
    head = [
        f"generated: {time.strftime('%Y-%m-%dT%H:%M:%S')}",
        f"total-wall-time-s: {total:.3f}",
        *comments,
    ]
    rows = [
        (rec.family, rec.n, rec.seed, rec.query, rec.probes, rec.digest) for rec in records
    ]
    return render_csv(BENCH_COLUMNS, rows, head)


# ---------------------------------------------------------------------------
# verification batteries
# ---------------------------------------------------------------------------


def _tally(rows: dict[str, list[int]], name: str, bad: int) -> None:
    row = rows.setdefault(name, [0, 0])
    row[0] += 1
    row[1] += bad


def _verify_matching(ns, seeds, k, rounds) -> dict[str, list[int]]:
    rows: dict[str, list[int]] = {}
    for n in ns:
        for seed in range(seeds):
            inst = matching.MatchingInstance.seeded(n, k, seed)
            budget = rounds if rounds is not None else 2 * k * k
            statuses, _ = matching.abridged_gs(inst, budget)
            bad = sum(
                1 for man in range(n) if matching.local_ags(inst, budget, man) != statuses[man]
            )
            _tally(rows, "man_local_matches_global", bad)
            holder = {
                st.partner: man for man, st in statuses.items() if st.state == matching.MATCHED
            }
            badw = 0
            for w in range(inst.m):
                want = ManStatus.matched(holder[w]) if w in holder else UNMATCHED_STATUS
                if matching.local_ags_woman(inst, budget, w) != want:
                    badw += 1
            _tally(rows, "woman_local_matches_global", badw)
            full, stats = matching.abridged_gs(inst, 10**6)
            mstar = matching.matched_count(full)
            _tally(
                rows,
                "round_rejections_bounded",
                sum(1 for s in stats if s.rejections > n * k / s.round_index),
            )
            _tally(
                rows,
                "truncated_size_lower_bound",
                sum(1 for s in stats if s.matched < mstar - n * k / s.round_index),
            )
            _tally(rows, "no_blocking_pairs_full_run", len(matching.blocking_pairs(inst, full)))
    return rows


def _verify_scheduling(family, ns, seeds, d) -> dict[str, list[int]]:
    rows: dict[str, list[int]] = {}
    standard = family == "scheduling-std"
    for n in ns:
        for seed in range(seeds):
            spec = InstanceSpec(seed=seed, family=family, n=n, m=n, k=d)
            inst = build_instance(spec)
            order = inst.rank_order()
            if standard:
                alloc = scheduling.slms_online(inst, order=order)
                local = scheduling.slms_local
            else:
                alloc = scheduling.rlms_online(inst, order=order)
                local = scheduling.rlms_local
            bad = sum(1 for j in range(inst.m) if local(inst, j) != alloc.assign[j])
            _tally(rows, "job_local_matches_global", bad)
            counts = [0] * inst.n
            for mach in alloc.assign:
                if mach is not None:
                    counts[mach] += 1
            _tally(rows, "heights_match_assignments", int(tuple(counts) != alloc.heights))
            if not standard:
                badm = sum(
                    1
                    for j in range(inst.m)
                    if alloc.assign[j] is not None and alloc.assign[j] not in inst.menu(j)
                )
                _tally(rows, "assignment_within_menu", badm)
    return rows


def _verify_auction(family, ns, seeds, k) -> dict[str, list[int]]:
    rows: dict[str, list[int]] = {}
    for n in ns:
        for seed in range(seeds):
            spec = InstanceSpec(seed=seed, family=family, n=n, m=n, k=k)
            inst = build_instance(spec)
            if family == "uduv":
                out = auctions.uduv_run(inst)
                bad = 0
                for b in range(inst.n):
                    got = auctions.uduv_local(inst, ("buyer", b))
                    if got["award"] != out.awards[b] or got["payment"] != out.payments[b]:
                        bad += 1
                _tally(rows, "buyer_local_matches_global", bad)
                winner_of = {jt[0]: b for b, jt in out.awards.items() if jt}
                badi = 0
                for j in range(inst.m):
                    got = auctions.uduv_local(inst, ("item", j))
                    if got["winner"] != winner_of.get(j):
                        badi += 1
                _tally(rows, "item_local_matches_global", badi)
                awarded = [j for jt in out.awards.values() for j in jt]
                _tally(rows, "items_awarded_once", len(awarded) - len(set(awarded)))
            else:
                runner = auctions.udubv_run if family == "udubv" else auctions.ksmb_run
                local = auctions.udubv_local if family == "udubv" else auctions.ksmb_local
                out = runner(inst)
                bad = 0
                for b in range(inst.n):
                    got = local(inst, b)
                    if got["award"] != out.awards[b] or got["payment"] != out.payments[b]:
                        bad += 1
                _tally(rows, "buyer_local_matches_global", bad)
                badp = sum(
                    1 for b in range(inst.n) if out.awards[b] and out.payments[b] > inst.values[b]
                )
                _tally(rows, "winner_pays_at_most_bid", badp)
                awarded = [j for jt in out.awards.values() for j in jt]
                _tally(rows, "items_awarded_once", len(awarded) - len(set(awarded)))
    return rows


def _verify_housing(ns, seeds, d) -> dict[str, list[int]]:
    rows: dict[str, list[int]] = {}
    for n in ns:
        for seed in range(seeds):
            spec = InstanceSpec(seed=seed, family="housing", n=n, m=n, k=d)
            inst = build_instance(spec)
            alloc = rsd.rsd_global(inst)
            bad = sum(1 for a in range(inst.n) if rsd.rsd_local(inst, a) != alloc[a])
            _tally(rows, "agent_local_matches_global", bad)
            taken = [h for h in alloc.values() if h is not None]
            _tally(rows, "houses_assigned_once", len(taken) - len(set(taken)))
            badl = sum(
                1 for a, h in alloc.items() if h is not None and h not in inst.lists[a]
            )
            _tally(rows, "house_within_list", badl)
    return rows


def verify_family(
    family: str,
    ns: Sequence[int],
    seeds: int,
    k: int = 3,
    d: int = 2,
    rounds: int | None = None,
) -> list[tuple[str, int, int]]:
    """Run the family's invariant battery; returns (name, instances,
    violations) rows.  A clean battery has all violation counts at 0."""
    family = canonical_family(family)
    ns = [int(n) for n in ns]
    if not ns or seeds < 1:
        raise ValueError("need a nonempty n grid and seeds >= 1")
    if family == "matching":
        rows = _verify_matching(ns, seeds, k, rounds)
    elif family in ("scheduling-std", "scheduling-res"):
        rows = _verify_scheduling(family, ns, seeds, d)
    elif family in ("uduv", "udubv", "ksmb"):
        rows = _verify_auction(family, ns, seeds, k)
    else:
        rows = _verify_housing(ns, seeds, d)
    return [(name, vals[0], vals[1]) for name, vals in rows.items()]
