"""Three greedy item auctions with critical payments and local queries.

* uduv:  private demand sets, unit values.  Items are assigned one by one in
  a seeded order (descending 64-bit item scores); each item goes to the
  smallest-id unserved buyer reporting it, and every winner pays 1/2.
* udubv: public demand sets, private values.  Buyers are served in
  descending bid order (ties to the smaller id); each takes the smallest
  free item of her set and pays the smallest level at which any of her items
  sells when the run is repeated without her (0 if one goes unsold).
* ksmb:  single-minded buyers who want their whole set.  Same bid order;
  a buyer is served iff her set is still fully free, and pays the highest
  winning bid among sets intersecting hers in the run without her.

Local queries replay only the dependency closure of the queried buyer/item
(higher-priority buyers sharing items, transitively) and agree with the
global run outcome exactly.  Payment queries additionally replay the
without-her closure.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .instances import InstanceSpec
from .probes import LEFT, AdjacencyOracle, MemoView, ProbeCounter
from .randomness import RandomTape, derive_uniform, sample_without_replacement

__all__ = [
    "AuctionInstance",
    "ReportOverlay",
    "Outcome",
    "Violation",
    "uduv_run",
    "uduv_local",
    "udubv_run",
    "udubv_local",
    "ksmb_run",
    "ksmb_local",
    "truthfulness_audit",
]

UDUV = "uduv"
UDUBV = "udubv"
KSMB = "ksmb"

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class ReportOverlay:
    """Deviating reports; absent entries default to the truth."""

    sets: Mapping[int, Sequence[int]] | None = None
    bids: Mapping[int, Fraction | int] | None = None


@dataclass(frozen=True)
class Outcome:
    awards: dict[int, tuple[int, ...]]
    payments: dict[int, Fraction]
    utilities: dict[int, Fraction]
    shadow_payments: dict[int, Fraction] | None = None


@dataclass(frozen=True)
class Violation:
    buyer: int
    report: str
    utility_truth: Fraction
    utility_deviation: Fraction


class AuctionInstance:
    def __init__(
        self,
        sets: Sequence[Sequence[int]],
        m: int,
        mode: str,
        values: Sequence[Fraction | int] | None = None,
        k: int | None = None,
        seed: int = 0,
        spec: InstanceSpec | None = None,
    ) -> None:
        if mode not in (UDUV, UDUBV, KSMB):
            raise ValueError(f"unknown auction mode {mode!r}")
        self.mode = mode
        self.sets: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(set(s))) for s in sets)
        self.n = len(self.sets)
        self.m = m
        self.k = k if k is not None else max((len(s) for s in self.sets), default=0)
        self.seed = seed
        self.spec = spec
        self.tape = RandomTape(seed)
        if mode == UDUV:
            self.values: tuple[Fraction, ...] = (Fraction(1),) * self.n
        else:
            if values is None:
                raise ValueError(f"{mode} needs buyer values")
            if len(values) != self.n:
                raise ValueError("need one value per buyer")
            self.values = tuple(Fraction(v) for v in values)
            if any(v < 0 for v in self.values):
                raise ValueError("values must be non-negative")
        self.oracle = AdjacencyOracle(self.sets, m)

    @classmethod
    def from_spec(cls, spec: InstanceSpec) -> "AuctionInstance":
        if spec.family not in (UDUV, UDUBV, KSMB):
            raise ValueError(f"not an auction spec: {spec.family!r}")
        tape = RandomTape(spec.seed)
        if spec.explicit_edges is not None:
            sets: Sequence[Sequence[int]] = spec.explicit_edges
        else:
            if not 1 <= spec.k <= spec.m:
                raise ValueError(f"need 1 <= k <= m, got k={spec.k}, m={spec.m}")
            sets = [
                sample_without_replacement(tape, ("item-set", i), spec.m, spec.k)
                for i in range(spec.n)
            ]
        values: Sequence[int] | None = None
        if spec.family != UDUV:
            if spec.valuations is not None:
                values = spec.valuations
            else:
                values = [1 + derive_uniform(tape, ("value", i), 10**6) for i in range(spec.n)]
        return cls(sets, m=spec.m, mode=spec.family, values=values, k=spec.k, seed=spec.seed, spec=spec)

    # seeded item scores; items are handled in descending score order,
    # score ties (negligible) to the smaller id
    def item_order_key(self, j: int) -> tuple[int, int]:
        return (-self.tape.u64("item-rank", j), j)

    def effective_sets(self, overlay: ReportOverlay | None) -> list[tuple[int, ...]]:
        if overlay is None or overlay.sets is None:
            return list(self.sets)
        out = list(self.sets)
        for b, s in overlay.sets.items():
            cleaned = tuple(sorted(set(int(j) for j in s)))
            if any(not 0 <= j < self.m for j in cleaned):
                raise ValueError(f"buyer {b} reports an unknown item")
            out[b] = cleaned
        return out

    def effective_bids(self, overlay: ReportOverlay | None) -> list[Fraction]:
        bids = list(self.values)
        if overlay is not None and overlay.bids is not None:
            for b, v in overlay.bids.items():
                v = Fraction(v)
                if v < 0:
                    raise ValueError("bids must be non-negative")
                bids[b] = v
        return bids


# ---------------------------------------------------------------------------
# uduv — private sets, unit values
# ---------------------------------------------------------------------------


def _uduv_value(inst: AuctionInstance, buyer: int, award: tuple[int, ...]) -> Fraction:
    return Fraction(1) if any(j in inst.sets[buyer] for j in award) else Fraction(0)


def uduv_run(inst: AuctionInstance, overlay: ReportOverlay | None = None) -> Outcome:
    if inst.mode != UDUV:
        raise ValueError("uduv_run requires uduv mode")
    sets = inst.effective_sets(overlay)
    want: dict[int, list[int]] = {}
    for b, s in enumerate(sets):
        for j in s:
            want.setdefault(j, []).append(b)  # ascending b by construction
    awards: dict[int, tuple[int, ...]] = {b: () for b in range(inst.n)}
    payments: dict[int, Fraction] = {b: Fraction(0) for b in range(inst.n)}
    served: set[int] = set()
    for j in sorted(range(inst.m), key=inst.item_order_key):
        for b in want.get(j, ()):
            if b not in served:
                served.add(b)
                awards[b] = (j,)
                payments[b] = HALF
                break
    utilities = {b: _uduv_value(inst, b, awards[b]) - payments[b] for b in range(inst.n)}
    return Outcome(awards=awards, payments=payments, utilities=utilities)


def uduv_local(
    inst: AuctionInstance,
    query: tuple[str, int],
    counter: ProbeCounter | None = None,
    overlay: ReportOverlay | None = None,
) -> dict:
    """Resolve one buyer or one item.  Buyer queries return her award and
    payment; item queries return the item's winner (or None)."""
    if inst.mode != UDUV:
        raise ValueError("uduv_local requires uduv mode")
    kind, idx = query
    overlay_sets = dict(overlay.sets) if overlay is not None and overlay.sets else {}
    overlay_sets = {b: tuple(sorted(set(s))) for b, s in overlay_sets.items()}
    if kind == "buyer":
        if not 0 <= idx < inst.n:
            raise ValueError(f"unknown buyer {idx}")
        view = MemoView(inst.oracle, counter, free=((LEFT, idx),))
    elif kind == "item":
        if not 0 <= idx < inst.m:
            raise ValueError(f"unknown item {idx}")
        view = MemoView(inst.oracle, counter)
    else:
        raise ValueError(f"query kind must be 'buyer' or 'item', got {kind!r}")

    def fwd(b: int) -> tuple[int, ...]:
        if b in overlay_sets:
            return overlay_sets[b]
        return view.fwd(b)

    def rev(j: int) -> list[int]:
        base = [b for b in view.rev(j) if b not in overlay_sets]
        base.extend(b for b, s in overlay_sets.items() if j in s)
        return sorted(base)

    okey = inst.item_order_key
    roots = list(fwd(idx)) if kind == "buyer" else [idx]
    items: set[int] = set(roots)
    stack = list(roots)
    while stack:
        j = stack.pop()
        kj = okey(j)
        for b in rev(j):
            for j2 in fwd(b):
                if j2 not in items and okey(j2) < kj:
                    items.add(j2)
                    stack.append(j2)
    served: set[int] = set()
    winner_of: dict[int, int] = {}
    for j in sorted(items, key=okey):
        for b in rev(j):
            if b not in served:
                served.add(b)
                winner_of[j] = b
                break
    if kind == "item":
        return {"item": idx, "winner": winner_of.get(idx)}
    won = [j for j, b in winner_of.items() if b == idx]
    award = (min(won, key=okey),) if won else ()
    payment = HALF if award else Fraction(0)
    return {"buyer": idx, "award": award, "payment": payment}


# ---------------------------------------------------------------------------
# udubv / ksmb — bid-ordered greedy with critical payments
# ---------------------------------------------------------------------------


def _bid_order(bids: Sequence[Fraction], skip: int | None = None) -> list[int]:
    active = [b for b in range(len(bids)) if bids[b] > 0 and b != skip]
    return sorted(active, key=lambda b: (-bids[b], b))


def _udubv_assign(
    order: Iterable[int], sets: Sequence[Sequence[int]]
) -> tuple[dict[int, int], set[int]]:
    took: dict[int, int] = {}
    taken: set[int] = set()
    for b in order:
        for j in sets[b]:
            if j not in taken:
                took[b] = j
                taken.add(j)
                break
    return took, taken


def _udubv_critical(inst: AuctionInstance, bids: Sequence[Fraction], i: int) -> Fraction:
    """Smallest level at which one of i's items sells when i is absent."""
    took, _ = _udubv_assign(_bid_order(bids, skip=i), inst.sets)
    taker_of = {j: b for b, j in took.items()}
    levels = []
    for j in inst.sets[i]:
        b = taker_of.get(j)
        if b is None:
            return Fraction(0)
        levels.append(bids[b])
    return min(levels) if levels else Fraction(0)


def udubv_run(
    inst: AuctionInstance,
    overlay: ReportOverlay | None = None,
    shadow: bool = False,
) -> Outcome:
    if inst.mode != UDUBV:
        raise ValueError("udubv_run requires udubv mode")
    if overlay is not None and overlay.sets is not None:
        raise ValueError("udubv sets are public; overlay may alter bids only")
    bids = inst.effective_bids(overlay)
    took, _ = _udubv_assign(_bid_order(bids), inst.sets)
    awards = {b: ((took[b],) if b in took else ()) for b in range(inst.n)}
    payments = {b: Fraction(0) for b in range(inst.n)}
    shadow_payments: dict[int, Fraction] | None = {} if shadow else None
    for b in range(inst.n):
        if awards[b]:
            payments[b] = _udubv_critical(inst, bids, b)
        elif shadow:
            assert shadow_payments is not None
            shadow_payments[b] = _udubv_critical(inst, bids, b)
    utilities = {
        b: (inst.values[b] - payments[b] if awards[b] else Fraction(0)) for b in range(inst.n)
    }
    return Outcome(
        awards=awards, payments=payments, utilities=utilities, shadow_payments=shadow_payments
    )


def _ksmb_assign(order: Iterable[int], sets: Sequence[Sequence[int]]) -> dict[int, tuple[int, ...]]:
    won: dict[int, tuple[int, ...]] = {}
    taken: set[int] = set()
    for b in order:
        s = sets[b]
        if s and not any(j in taken for j in s):
            won[b] = tuple(s)
            taken.update(s)
    return won


def _ksmb_critical(inst: AuctionInstance, bids: Sequence[Fraction], i: int) -> Fraction:
    won = _ksmb_assign(_bid_order(bids, skip=i), inst.sets)
    mine = set(inst.sets[i])
    levels = [bids[b] for b, s in won.items() if mine.intersection(s)]
    return max(levels) if levels else Fraction(0)


def ksmb_run(inst: AuctionInstance, overlay: ReportOverlay | None = None) -> Outcome:
    if inst.mode != KSMB:
        raise ValueError("ksmb_run requires ksmb mode")
    if overlay is not None and overlay.sets is not None:
        raise ValueError("ksmb sets are public; overlay may alter bids only")
    bids = inst.effective_bids(overlay)
    won = _ksmb_assign(_bid_order(bids), inst.sets)
    awards = {b: won.get(b, ()) for b in range(inst.n)}
    payments = {
        b: (_ksmb_critical(inst, bids, b) if awards[b] else Fraction(0)) for b in range(inst.n)
    }
    utilities = {
        b: (inst.values[b] - payments[b] if awards[b] else Fraction(0)) for b in range(inst.n)
    }
    return Outcome(awards=awards, payments=payments, utilities=utilities)


def _closure_by_priority(
    view: MemoView,
    pkey,
    seeds: Iterable[int],
) -> set[int]:
    """Buyers whose dispositions the seeds depend on: for each member, every
    strictly higher-priority buyer sharing an item, transitively."""
    closure = set(seeds)
    stack = list(closure)
    while stack:
        x = stack.pop()
        kx = pkey(x)
        for j in view.fwd(x):
            for y in view.rev(j):
                if y not in closure and pkey(y) < kx:
                    closure.add(y)
                    stack.append(y)
    return closure


def _greedy_local(
    inst: AuctionInstance,
    buyer: int,
    counter: ProbeCounter | None,
    overlay: ReportOverlay | None,
    ksmb: bool,
) -> dict:
    if not 0 <= buyer < inst.n:
        raise ValueError(f"unknown buyer {buyer}")
    if overlay is not None and overlay.sets is not None:
        raise ValueError("sets are public in this mode")
    bids = inst.effective_bids(overlay)
    pkey = lambda b: (-bids[b], b)
    view = MemoView(inst.oracle, counter, free=((LEFT, buyer),))

    # award: replay the upward closure of the queried buyer.  Sets are
    # public data in these modes, but reading another buyer's set still
    # costs a probe, so all reads go through the memoised view.
    closure = _closure_by_priority(view, pkey, [buyer]) if bids[buyer] > 0 else set()
    order = sorted((b for b in closure if bids[b] > 0), key=pkey)
    sets_read = {b: view.fwd(b) for b in order}
    if ksmb:
        won_map = _ksmb_assign(order, _SetsProxy(sets_read))
        award = won_map.get(buyer, ())
    else:
        took, _ = _udubv_assign(order, _SetsProxy(sets_read))
        award = (took[buyer],) if buyer in took else ()
    if not award:
        return {"buyer": buyer, "award": (), "payment": Fraction(0)}

    # payment: replay the without-buyer closure around the buyer's items
    seeds: set[int] = set()
    for j in view.fwd(buyer):
        seeds.update(y for y in view.rev(j) if y != buyer and bids[y] > 0)
    closure2 = _closure_by_priority(view, pkey, seeds)
    closure2.discard(buyer)
    order2 = sorted((b for b in closure2 if bids[b] > 0), key=pkey)
    sets_read2 = {b: view.fwd(b) for b in order2}
    mine = view.fwd(buyer)
    if ksmb:
        won2 = _ksmb_assign(order2, _SetsProxy(sets_read2))
        mine_set = set(mine)
        levels = [bids[b] for b, s in won2.items() if mine_set.intersection(s)]
        payment = max(levels) if levels else Fraction(0)
    else:
        took2, _ = _udubv_assign(order2, _SetsProxy(sets_read2))
        taker_of = {j: b for b, j in took2.items()}
        levels = []
        unsold = not mine
        for j in mine:
            b = taker_of.get(j)
            if b is None:
                unsold = True
                break
            levels.append(bids[b])
        payment = Fraction(0) if unsold else min(levels)
    return {"buyer": buyer, "award": award, "payment": payment}


class _SetsProxy:
    """Indexable facade over the per-query set reads used by the replays."""

    def __init__(self, read: Mapping[int, tuple[int, ...]]) -> None:
        self._read = read

    def __getitem__(self, b: int) -> tuple[int, ...]:
        return self._read[b]


def udubv_local(
    inst: AuctionInstance,
    buyer: int,
    counter: ProbeCounter | None = None,
    overlay: ReportOverlay | None = None,
) -> dict:
    if inst.mode != UDUBV:
        raise ValueError("udubv_local requires udubv mode")
    return _greedy_local(inst, buyer, counter, overlay, ksmb=False)


def ksmb_local(
    inst: AuctionInstance,
    buyer: int,
    counter: ProbeCounter | None = None,
    overlay: ReportOverlay | None = None,
) -> dict:
    if inst.mode != KSMB:
        raise ValueError("ksmb_local requires ksmb mode")
    return _greedy_local(inst, buyer, counter, overlay, ksmb=True)


# ---------------------------------------------------------------------------
# deviation audit
# ---------------------------------------------------------------------------


def _all_subsets(pool: Sequence[int], max_size: int):
    from itertools import combinations

    for size in range(max_size + 1):
        yield from combinations(pool, size)


def truthfulness_audit(
    inst: AuctionInstance,
    deviation_grid: Sequence | None = None,
    _zero_payments: bool = False,
) -> list[Violation]:
    """Enumerate unilateral deviations and report every one that strictly
    beats truth-telling.  uduv deviations are alternative reported sets (all
    subsets of the item pool up to size k+1 unless a grid of sets is given);
    udubv/ksmb deviations are alternative bids ({0, t/2, t±δ, 2t, p, p±ε}
    unless a grid of bids is given).  An empty list means no buyer can gain.
    """
    eps = Fraction(1, 1000)
    violations: list[Violation] = []

    def run(mode_overlay: ReportOverlay | None) -> Outcome:
        if inst.mode == UDUV:
            return uduv_run(inst, mode_overlay)
        if inst.mode == UDUBV:
            return udubv_run(inst, mode_overlay, shadow=True)
        return ksmb_run(inst, mode_overlay)

    def utility(outcome: Outcome, buyer: int) -> Fraction:
        award = outcome.awards[buyer]
        pay = Fraction(0) if _zero_payments else outcome.payments[buyer]
        if inst.mode == UDUV:
            return _uduv_value(inst, buyer, award) - (pay if award else Fraction(0))
        if not award:
            return Fraction(0)
        return inst.values[buyer] - pay

    truth = run(None)
    for buyer in range(inst.n):
        u_truth = utility(truth, buyer)
        if inst.mode == UDUV:
            if deviation_grid is not None:
                reports = list(deviation_grid)
            else:
                if inst.m > 12:
                    raise ValueError("full subset enumeration capped at m <= 12")
                reports = list(_all_subsets(range(inst.m), inst.k + 1))
            for rep in reports:
                out = uduv_run(inst, ReportOverlay(sets={buyer: tuple(rep)}))
                u_dev = utility(out, buyer)
                if u_dev > u_truth:
                    violations.append(Violation(buyer, f"set={tuple(rep)}", u_truth, u_dev))
        else:
            t = inst.values[buyer]
            if deviation_grid is not None:
                grid = [Fraction(x) for x in deviation_grid]
            else:
                p = truth.payments[buyer]
                if not truth.awards[buyer] and inst.mode == UDUBV:
                    assert truth.shadow_payments is not None
                    p = truth.shadow_payments.get(buyer, Fraction(0))
                grid = [
                    Fraction(0),
                    t / 2,
                    t - eps,
                    t + eps,
                    2 * t,
                    p,
                    p - eps,
                    p + eps,
                ]
            for bid in grid:
                if bid < 0 or bid == t:
                    continue
                out = run(ReportOverlay(bids={buyer: bid}))
                u_dev = utility(out, buyer)
                if u_dev > u_truth:
                    violations.append(Violation(buyer, f"bid={bid}", u_truth, u_dev))
    return violations
