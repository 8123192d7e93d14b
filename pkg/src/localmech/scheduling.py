"""Related-machines load balancing with reported integer capacities.

Two allocators over unit jobs:

* standard mode ("slot" scheme): the mechanism splits machine i into b_i
  slots, draws d distinct slots per job over the B = Σ b_i slot pool, and
  places the job on the least-loaded chosen slot (seeded uniform tie-break).
  Heights are monotone in expectation, and the payment has both an exact
  closed form and a one-draw unbiased estimator.

* restricted mode: each job arrives with a fixed menu M_j of machines and is
  placed on the menu machine minimizing the floored post-placement load
  ⌊(h_i+1)/b_i⌋, ties by a fixed machine permutation.  Flooring is what makes
  the rule universally monotone — the unfloored variant `greedy_unmodified`
  is kept because it demonstrably is not (see its regression fixtures).

Both allocators have per-job local queries that replay only the query's
rank-order dependency tree and agree exactly with the online run replayed in
rank order.

All loads and payments use exact rational arithmetic — the monotonicity
facts hinge on exact floor comparisons, so keep floats out of this module.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from itertools import accumulate
from typing import Iterable, Sequence

from .instances import InstanceSpec
from .probes import LEFT, AdjacencyOracle, MemoView, ProbeCounter
from .randomness import RandomTape, derive_uniform, sample_without_replacement

__all__ = [
    "SchedulingInstance",
    "Allocation",
    "PaymentRecord",
    "slms_online",
    "slms_local",
    "expected_height",
    "payment_slms_expected",
    "payment_slms_sampled",
    "slms_expected_utility",
    "rlms_online",
    "rlms_local",
    "greedy_unmodified",
    "payment_rlms",
    "payment_rlms_for_bid",
    "rlms_utility",
    "rerun_height",
    "monotonicity_trace",
    "makespan_ratio",
]

STANDARD = "standard"
RESTRICTED = "restricted"


@dataclass(frozen=True)
class Allocation:
    """Result of one allocator run.  `assign[j]` is None only for jobs that
    had no positive-capacity machine available (internal payment reruns with
    a zeroed bid); normal runs always place every job."""

    assign: tuple[int | None, ...]
    heights: tuple[int, ...]
    caps: tuple[int, ...]
    slot_assign: tuple[int | None, ...] | None = None
    slot_heights: tuple[int, ...] | None = None

    @property
    def loads(self) -> tuple[Fraction, ...]:
        return tuple(
            Fraction(h, c) if c else Fraction(0) for h, c in zip(self.heights, self.caps)
        )

    @property
    def makespan(self) -> Fraction:
        return max(self.loads, default=Fraction(0))


@dataclass(frozen=True)
class PaymentRecord:
    machine: int
    amount: Fraction
    scheme: str  # "expected" | "sampled" | "rerun"


class SchedulingInstance:
    """n machines with positive integer capacity claims, m unit jobs arriving
    in index order, d choices per job.

    Restricted mode fixes each job's machine menu as input data: explicit
    when given, otherwise d capacity-proportional draws (with replacement)
    made once from the *true* capacities.  Standard mode has no menus — the
    mechanism itself draws d distinct slots per job, and those draws are
    re-derived from the same keys whenever a capacity deviation changes the
    slot pool.
    """

    def __init__(
        self,
        caps: Sequence[int],
        m: int,
        d: int,
        mode: str = RESTRICTED,
        seed: int = 0,
        menus: Sequence[Sequence[int]] | None = None,
        tie_order: Sequence[int] | None = None,
        spec: InstanceSpec | None = None,
    ) -> None:
        if mode not in (STANDARD, RESTRICTED):
            raise ValueError(f"mode must be {STANDARD!r} or {RESTRICTED!r}")
        self.caps = tuple(int(c) for c in caps)
        if any(c < 1 for c in self.caps):
            raise ValueError("capacities must be positive integers")
        self.n = len(self.caps)
        self.m = m
        self.d = d
        self.mode = mode
        self.seed = seed
        self.spec = spec
        self.tape = RandomTape(seed)
        self.B = sum(self.caps)
        if mode == STANDARD and not 1 <= d <= self.B:
            raise ValueError(f"need 1 <= d <= B={self.B} slot choices")
        if tie_order is None:
            tie_order = range(self.n)
        self.tie_order = tuple(tie_order)
        if sorted(self.tie_order) != list(range(self.n)):
            raise ValueError("tie_order must be a permutation of the machines")
        self._tie_pos = [0] * self.n
        for pos, i in enumerate(self.tie_order):
            self._tie_pos[i] = pos

        self._menus: tuple[tuple[int, ...], ...] | None = None
        if mode == RESTRICTED:
            if menus is not None:
                self._menus = tuple(tuple(mu) for mu in menus)
                if len(self._menus) != m:
                    raise ValueError("need one menu per job")
                for j, mu in enumerate(self._menus):
                    if any(not 0 <= i < self.n for i in mu):
                        raise ValueError(f"menu of job {j} names an unknown machine")
            else:
                # capacity-proportional machine draws over the true slot pool
                prefix = list(accumulate(self.caps))
                self._menus = tuple(
                    tuple(
                        bisect_right(prefix, derive_uniform(self.tape, ("menu", j, t), self.B))
                        for t in range(d)
                    )
                    for j in range(m)
                )
        elif menus is not None:
            raise ValueError("standard mode draws its own slot choices; menus not accepted")

        self._oracle: AdjacencyOracle | None = None
        self._slot_choices: tuple[tuple[int, ...], ...] | None = None

    # -- construction -----------------------------------------------------

    @classmethod
    def from_spec(cls, spec: InstanceSpec) -> "SchedulingInstance":
        if spec.family not in ("scheduling-std", "scheduling-res"):
            raise ValueError(f"not a scheduling spec: {spec.family!r}")
        mode = STANDARD if spec.family == "scheduling-std" else RESTRICTED
        if spec.bids is not None:
            caps: Sequence[int] = spec.bids
            if len(caps) != spec.n:
                raise ValueError("bids length must equal n")
        else:
            tape = RandomTape(spec.seed)
            hi = max(1, spec.n.bit_length() - 1)  # caps in 1..~log2(n)
            caps = [1 + derive_uniform(tape, ("cap", i), hi) for i in range(spec.n)]
        menus = spec.explicit_edges if mode == RESTRICTED else None
        return cls(caps, m=spec.m, d=spec.k, mode=mode, seed=spec.seed, menus=menus, spec=spec)

    # -- derived data ------------------------------------------------------

    def menu(self, j: int) -> tuple[int, ...]:
        """Raw menu draws of job j, in draw order (may repeat machines)."""
        if self.mode != RESTRICTED:
            raise ValueError("menus exist only in restricted mode")
        assert self._menus is not None
        return self._menus[j]

    def slot_choices(self, j: int, caps: Sequence[int] | None = None) -> tuple[int, ...]:
        """Job j's d distinct slot choices over the (possibly deviated) pool."""
        if self.mode != STANDARD:
            raise ValueError("slot choices exist only in standard mode")
        pool = self.B if caps is None else sum(caps)
        if pool < self.d:
            raise ValueError("slot pool smaller than d")
        return tuple(sample_without_replacement(self.tape, ("slot-choice", j), pool, self.d))

    def rank_key(self, j: int) -> tuple[int, int]:
        """Simulated arrival rank used by the local queries."""
        return (self.tape.u64("job-rank", j), j)

    def rank_order(self) -> list[int]:
        return sorted(range(self.m), key=self.rank_key)

    @property
    def oracle(self) -> AdjacencyOracle:
        """job → distinct chosen slots (standard) or distinct menu machines
        (restricted), with materialized reverse lists; built on first use."""
        if self._oracle is None:
            if self.mode == RESTRICTED:
                fwd = [tuple(sorted(set(self.menu(j)))) for j in range(self.m)]
                self._oracle = AdjacencyOracle(fwd, self.n)
            else:
                self._slot_choices = tuple(self.slot_choices(j) for j in range(self.m))
                self._oracle = AdjacencyOracle(self._slot_choices, self.B)
        return self._oracle


# ---------------------------------------------------------------------------
# standard mode
# ---------------------------------------------------------------------------


def _slot_prefix(caps: Sequence[int]) -> list[int]:
    return list(accumulate(caps))


def slms_online(
    inst: SchedulingInstance,
    caps: Sequence[int] | None = None,
    order: Iterable[int] | None = None,
) -> Allocation:
    """Slot-based allocation over all jobs (index order unless given)."""
    if inst.mode != STANDARD:
        raise ValueError("slms_online requires standard mode")
    caps = inst.caps if caps is None else tuple(caps)
    pool = sum(caps)
    if pool == 0:
        raise ValueError("empty slot pool")
    prefix = _slot_prefix(caps)
    tape = inst.tape
    d = inst.d
    slot_h = [0] * pool
    heights = [0] * len(caps)
    assign: list[int | None] = [None] * inst.m
    slot_assign: list[int | None] = [None] * inst.m
    jobs = range(inst.m) if order is None else order
    for j in jobs:
        chosen = sample_without_replacement(tape, ("slot-choice", j), pool, d)
        best = min(slot_h[s] for s in chosen)
        mins = sorted(s for s in chosen if slot_h[s] == best)
        if len(mins) == 1:
            slot = mins[0]
        else:
            slot = mins[derive_uniform(tape, ("slot-tie", j), len(mins))]
        slot_h[slot] += 1
        machine = bisect_right(prefix, slot)
        heights[machine] += 1
        assign[j] = machine
        slot_assign[j] = slot
    return Allocation(
        assign=tuple(assign),
        heights=tuple(heights),
        caps=caps,
        slot_assign=tuple(slot_assign),
        slot_heights=tuple(slot_h),
    )


def slms_local(inst: SchedulingInstance, job: int, counter: ProbeCounter | None = None) -> int:
    """Machine of `job` under the rank-order replay, resolved from the jobs
    sharing a chosen slot with lower rank, transitively."""
    if inst.mode != STANDARD:
        raise ValueError("slms_local requires standard mode")
    if not 0 <= job < inst.m:
        raise ValueError(f"unknown job {job}")
    oracle = inst.oracle
    view = MemoView(oracle, counter, free=((LEFT, job),))
    rank = inst.rank_key
    closure = {job}
    stack = [job]
    while stack:
        x = stack.pop()
        rx = rank(x)
        for s in view.fwd(x):
            for y in view.rev(s):
                if y not in closure and rank(y) < rx:
                    closure.add(y)
                    stack.append(y)
    prefix = _slot_prefix(inst.caps)
    tape = inst.tape
    slot_h: dict[int, int] = {}
    result: int | None = None
    for j in sorted(closure, key=rank):
        chosen = view.fwd(j)
        best = min(slot_h.get(s, 0) for s in chosen)
        mins = sorted(s for s in chosen if slot_h.get(s, 0) == best)
        if len(mins) == 1:
            slot = mins[0]
        else:
            slot = mins[derive_uniform(tape, ("slot-tie", j), len(mins))]
        slot_h[slot] = slot_h.get(slot, 0) + 1
        if j == job:
            result = bisect_right(prefix, slot)
    assert result is not None
    return result


def expected_height(b_i: int, B_minus_i: int, m: int) -> Fraction:
    """Expected job count on a machine claiming b_i slots against a pool of
    B_minus_i others: m·b_i/(B_minus_i + b_i)."""
    if b_i < 0:
        raise ValueError("capacity must be non-negative")
    if B_minus_i + b_i < 1:
        raise ValueError("slot pool must be non-empty")
    return Fraction(m * b_i, B_minus_i + b_i)


def payment_slms_expected(inst: SchedulingInstance, i: int) -> PaymentRecord:
    """Exact expected payment: m·b²/(B₋+b) + m·Σ_{x=0}^{b} x/(B₋+x)."""
    if inst.mode != STANDARD:
        raise ValueError("expected payment applies to standard mode")
    b = inst.caps[i]
    B_minus = inst.B - b
    amount = Fraction(inst.m * b * b, B_minus + b) + inst.m * sum(
        (Fraction(x, B_minus + x) for x in range(1, b + 1)), Fraction(0)
    )
    return PaymentRecord(machine=i, amount=amount, scheme="expected")


def payment_slms_sampled(
    inst: SchedulingInstance, i: int, draw: int | None = None
) -> PaymentRecord:
    """One-draw unbiased payment: m·b²/B + m·b·k/(B₋+k) with k uniform on
    [1, b].  Averaging over all k reproduces the expected payment exactly."""
    if inst.mode != STANDARD:
        raise ValueError("sampled payment applies to standard mode")
    b = inst.caps[i]
    B_minus = inst.B - b
    if draw is None:
        k = 1 + derive_uniform(inst.tape, ("slms-pay-k", i), b)
    else:
        if not 1 <= draw <= b:
            raise ValueError(f"draw must be in [1, {b}]")
        k = draw
    amount = Fraction(inst.m * b * b, inst.B) + inst.m * b * Fraction(k, B_minus + k)
    return PaymentRecord(machine=i, amount=amount, scheme="sampled")


def slms_expected_utility(
    caps: Sequence[int], m: int, i: int, bid: int, true_cap: int
) -> Fraction:
    """Expected utility of machine i reporting `bid` slots while its true
    capacity is `true_cap`, under the quadratic cost model: a machine that
    claims x slots and carries expected height h̄ incurs cost x²·h̄/true_cap.
    The payment schedule makes truth the exact argmax of this function."""
    caps = list(caps)
    B_minus = sum(caps) - caps[i]
    if bid == 0:
        return Fraction(0)
    h_bar = expected_height(bid, B_minus, m)
    payment = Fraction(m * bid * bid, B_minus + bid) + m * sum(
        (Fraction(x, B_minus + x) for x in range(1, bid + 1)), Fraction(0)
    )
    return payment - Fraction(bid * bid, true_cap) * h_bar


# ---------------------------------------------------------------------------
# restricted mode
# ---------------------------------------------------------------------------


def _eligible(menu: Iterable[int], caps: Sequence[int]) -> list[int]:
    seen: set[int] = set()
    out = []
    for i in menu:
        if i not in seen:
            seen.add(i)
            if caps[i] >= 1:
                out.append(i)
    return out


def rlms_online(
    inst: SchedulingInstance,
    caps: Sequence[int] | None = None,
    order: Iterable[int] | None = None,
    initial_heights: Sequence[int] | None = None,
    _trace: list[tuple[int, ...]] | None = None,
) -> Allocation:
    """Floored-load allocation: job j goes to the menu machine minimizing
    ⌊(h_i+1)/b_i⌋, ties by the instance's machine permutation."""
    if inst.mode != RESTRICTED:
        raise ValueError("rlms_online requires restricted mode")
    caps = inst.caps if caps is None else tuple(caps)
    tie_pos = inst._tie_pos
    heights = [0] * inst.n if initial_heights is None else list(initial_heights)
    assign: list[int | None] = [None] * inst.m
    if _trace is not None:
        _trace.append(tuple(heights))
    jobs = range(inst.m) if order is None else order
    for j in jobs:
        menu = inst.menu(j)
        if not menu:
            raise ValueError(f"job {j} has an empty menu")
        cands = _eligible(menu, caps)
        if cands:
            best = None
            best_key: tuple[int, int] | None = None
            for i in cands:
                key = ((heights[i] + 1) // caps[i], tie_pos[i])
                if best_key is None or key < best_key:
                    best_key, best = key, i
            assert best is not None
            heights[best] += 1
            assign[j] = best
        # else: every menu machine has a zeroed bid (payment reruns only);
        # the job stays unplaced and contributes no height anywhere.
        if _trace is not None:
            _trace.append(tuple(heights))
    return Allocation(assign=tuple(assign), heights=tuple(heights), caps=caps)


def rlms_local(inst: SchedulingInstance, job: int, counter: ProbeCounter | None = None) -> int:
    """Machine of `job` under the rank-order replay, resolved from the jobs
    sharing a menu machine with lower rank, transitively."""
    if inst.mode != RESTRICTED:
        raise ValueError("rlms_local requires restricted mode")
    if not 0 <= job < inst.m:
        raise ValueError(f"unknown job {job}")
    oracle = inst.oracle
    view = MemoView(oracle, counter, free=((LEFT, job),))
    rank = inst.rank_key
    closure = {job}
    stack = [job]
    while stack:
        x = stack.pop()
        rx = rank(x)
        for i in view.fwd(x):
            for y in view.rev(i):
                if y not in closure and rank(y) < rx:
                    closure.add(y)
                    stack.append(y)
    caps = inst.caps
    tie_pos = inst._tie_pos
    heights: dict[int, int] = {}
    result: int | None = None
    for j in sorted(closure, key=rank):
        best = None
        best_key: tuple[int, int] | None = None
        for i in view.fwd(j):
            key = ((heights.get(i, 0) + 1) // caps[i], tie_pos[i])
            if best_key is None or key < best_key:
                best_key, best = key, i
        assert best is not None
        heights[best] = heights.get(best, 0) + 1
        if j == job:
            result = best
    assert result is not None
    return result


def greedy_unmodified(
    inst: SchedulingInstance,
    caps: Sequence[int] | None = None,
    initial_heights: Sequence[int] | None = None,
    tie_choices: dict[int, int] | None = None,
    _trace: list[tuple[int, ...]] | None = None,
) -> Allocation:
    """The unfloored rule: minimize (h_i+1)/b_i exactly (cross-multiplied).

    Kept as the negative exhibit: raising a bid can strictly lower the
    machine's job count under this rule, which the regression fixtures pin
    down step by step.  `tie_choices` maps job index → machine for scripted
    tie resolutions; unscripted ties fall back to the instance permutation.
    """
    if inst.mode != RESTRICTED:
        raise ValueError("greedy_unmodified runs on restricted menus")
    caps = inst.caps if caps is None else tuple(caps)
    tie_pos = inst._tie_pos
    heights = [0] * inst.n if initial_heights is None else list(initial_heights)
    assign: list[int | None] = [None] * inst.m
    if _trace is not None:
        _trace.append(tuple(heights))
    for j in range(inst.m):
        menu = inst.menu(j)
        if not menu:
            raise ValueError(f"job {j} has an empty menu")
        cands = _eligible(menu, caps)
        if cands:
            # exact argmin of (h+1)/b via cross-multiplication
            mins: list[int] = []
            for i in cands:
                if not mins:
                    mins = [i]
                    continue
                lead = mins[0]
                lhs = (heights[i] + 1) * caps[lead]
                rhs = (heights[lead] + 1) * caps[i]
                if lhs < rhs:
                    mins = [i]
                elif lhs == rhs:
                    mins.append(i)
            if len(mins) > 1 and tie_choices and j in tie_choices:
                pick = tie_choices[j]
                if pick not in mins:
                    raise ValueError(f"job {j}: scripted tie pick {pick} is not minimal")
            elif len(mins) > 1:
                pick = min(mins, key=lambda i: tie_pos[i])
            else:
                pick = mins[0]
            heights[pick] += 1
            assign[j] = pick
        if _trace is not None:
            _trace.append(tuple(heights))
    return Allocation(assign=tuple(assign), heights=tuple(heights), caps=caps)


def rerun_height(inst: SchedulingInstance, i: int, bid: int) -> int:
    """Height of machine i when its bid is replaced by `bid` (0 allowed:
    the machine is then skipped by every job and its height is 0)."""
    if bid == 0:
        return 0
    caps = list(inst.caps)
    caps[i] = bid
    return rlms_online(inst, caps=caps).heights[i]


def payment_rlms(inst: SchedulingInstance, i: int) -> PaymentRecord:
    """Rerun payment: b_i·h_i(b_i) + Σ_{x=0}^{b_i} h_i(x, b₋ᵢ)."""
    if inst.mode != RESTRICTED:
        raise ValueError("rerun payment applies to restricted mode")
    b = inst.caps[i]
    h_truth = rlms_online(inst).heights[i]
    total = b * h_truth + h_truth  # the x = b term of the sum equals the truth run
    for x in range(b):
        total += rerun_height(inst, i, x)
    return PaymentRecord(machine=i, amount=Fraction(total), scheme="rerun")


def payment_rlms_for_bid(inst: SchedulingInstance, i: int, bid: int) -> Fraction:
    """The rerun payment as machine i's bid varies (others fixed at truth)."""
    h_bid = rerun_height(inst, i, bid)
    total = bid * h_bid
    for x in range(bid + 1):
        total += rerun_height(inst, i, x)
    return Fraction(total)


def rlms_utility(inst: SchedulingInstance, i: int, bid: int, true_cap: int) -> Fraction:
    """Utility of bidding `bid` with true capacity `true_cap` under the
    quadratic cost model x²·h(x)/true_cap (same calibration as the standard
    mode's closed-form sweep)."""
    h_bid = rerun_height(inst, i, bid)
    return payment_rlms_for_bid(inst, i, bid) - Fraction(bid * bid * h_bid, true_cap)


def monotonicity_trace(
    inst: SchedulingInstance, i: int, bid_low: int, bid_high: int
) -> list[tuple[int, ...]]:
    """Per-step height deltas D^t = heights(bid_high) − heights(bid_low) for
    machine i's bid raised from bid_low to bid_high, menus and ties fixed.
    Entry t is the delta after t jobs (t = 0 … m)."""
    if bid_high < bid_low:
        raise ValueError("bid_high must be >= bid_low")
    caps_low = list(inst.caps)
    caps_low[i] = bid_low
    caps_high = list(inst.caps)
    caps_high[i] = bid_high
    trace_low: list[tuple[int, ...]] = []
    trace_high: list[tuple[int, ...]] = []
    rlms_online(inst, caps=caps_low, _trace=trace_low)
    rlms_online(inst, caps=caps_high, _trace=trace_high)
    return [
        tuple(hb - lb for hb, lb in zip(high, low))
        for high, low in zip(trace_high, trace_low)
    ]


def makespan_ratio(inst: SchedulingInstance) -> Fraction:
    """makespan(restricted allocator) / exact optimal makespan."""
    from . import oracles

    if inst.mode != RESTRICTED:
        raise ValueError("makespan_ratio is defined for restricted mode")
    alloc = rlms_online(inst)
    menus = [tuple(sorted(set(inst.menu(j)))) for j in range(inst.m)]
    opt = oracles.optimal_makespan(inst.caps, inst.m, menus=menus)
    return alloc.makespan / opt
