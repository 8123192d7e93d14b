"""Stable matching: global Gale-Shapley, the round-truncated variant, and a
per-man local simulation consistent with it.

Men hold ordered lists of at most k women; women score suitors with a strict
priority (seeded hash scores, or explicit rankings for hand-built fixtures).
Proposals within a round are simultaneous: every free, non-exhausted man
proposes to the next woman on his list, and each woman keeps the best of
{current hold} ∪ {new proposers}.  A man rejected in the final truncated
round who still has names left is reported as disqualified — his outcome is
the one thing an ℓ-round run genuinely leaves undecided.

The local query walks the radius-2ℓ neighborhood of the queried man and
replays the rounds on shrinking sub-balls (round r only simulates men within
distance 2(ℓ-r+1)).  States inside the shrinking zone are exact, so the
queried man's answer equals the truncated global run's, record for record.
Priority scores are derived from the seed and cost no probes; reading any
man's list or any woman's suitor list costs one probe per query (memoised),
except the queried entity's own record.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .instances import InstanceSpec
from .probes import LEFT, RIGHT, AdjacencyOracle, MemoView, ProbeCounter
from .randomness import RandomTape, sample_without_replacement

__all__ = [
    "ManStatus",
    "RoundStats",
    "MatchingInstance",
    "global_gs",
    "abridged_gs",
    "local_ags",
    "local_ags_woman",
    "rounds_for_epsilon",
    "blocking_pairs",
    "matched_count",
]

MATCHED = "matched"
UNMATCHED = "unmatched"
DISQUALIFIED = "disqualified"


@dataclass(frozen=True)
class ManStatus:
    """Outcome for one participant: matched (with partner), unmatched, or —
    only in truncated runs — disqualified."""

    state: str
    partner: int | None = None

    @classmethod
    def matched(cls, partner: int) -> "ManStatus":
        return cls(MATCHED, partner)

    @property
    def is_matched(self) -> bool:
        return self.state == MATCHED


UNMATCHED_STATUS = ManStatus(UNMATCHED)
DISQUALIFIED_STATUS = ManStatus(DISQUALIFIED)


@dataclass(frozen=True)
class RoundStats:
    """Per-round tallies of a truncated run.

    rejections:               men rejected in this round (R)
    rejected_with_remaining:  of those, men with names still left (C)
    exhausted_total:          men out of names by the end of this round (D, cumulative)
    matched:                  engaged couples at the end of this round (M)
    """

    round_index: int
    rejections: int
    rejected_with_remaining: int
    exhausted_total: int
    matched: int


class MatchingInstance:
    def __init__(
        self,
        men_prefs: Sequence[Sequence[int]],
        m: int,
        seed: int = 0,
        women_prefs: Sequence[Sequence[int]] | None = None,
        k: int | None = None,
        spec: InstanceSpec | None = None,
    ) -> None:
        self.men_prefs: tuple[tuple[int, ...], ...] = tuple(tuple(p) for p in men_prefs)
        self.n = len(self.men_prefs)
        self.m = m
        self.k = k if k is not None else max((len(p) for p in self.men_prefs), default=0)
        self.seed = seed
        self.spec = spec
        self.tape = RandomTape(seed)
        for i, p in enumerate(self.men_prefs):
            if len(set(p)) != len(p):
                raise ValueError(f"man {i} lists a woman twice")
            if len(p) > self.k:
                raise ValueError(f"man {i} lists more than k={self.k} women")
        self.oracle = AdjacencyOracle(self.men_prefs, m)
        # Explicit women rankings (best first) for hand fixtures; otherwise
        # priorities are seeded hash scores, strict by construction.
        self._explicit_rank: list[dict[int, int]] | None = None
        if women_prefs is not None:
            if len(women_prefs) != m:
                raise ValueError("need one ranking per woman")
            self._explicit_rank = [
                {man: len(order) - pos for pos, man in enumerate(order)}
                for order in women_prefs
            ]

    @classmethod
    def from_spec(cls, spec: InstanceSpec) -> "MatchingInstance":
        if spec.family != "matching":
            raise ValueError(f"not a matching spec: {spec.family!r}")
        n, m, k = spec.n, spec.m, spec.k
        if spec.explicit_edges is not None:
            prefs: Sequence[Sequence[int]] = spec.explicit_edges
        else:
            if not 1 <= k <= m:
                raise ValueError(f"need 1 <= k <= m, got k={k}, m={m}")
            tape = RandomTape(spec.seed)
            prefs = [
                tuple(sample_without_replacement(tape, ("men-list", i), m, k))
                for i in range(n)
            ]
        return cls(prefs, m=m, seed=spec.seed, k=k, spec=spec)

    @classmethod
    def seeded(cls, n: int, k: int, seed: int, m: int | None = None) -> "MatchingInstance":
        return cls.from_spec(
            InstanceSpec(seed=seed, family="matching", n=n, m=m if m is not None else n, k=k)
        )

    def priority_key(self, woman: int, man: int) -> tuple[int, int]:
        """Strict comparable priority of `man` for `woman`; larger wins.
        Hash-score ties (negligible but possible) go to the smaller man id."""
        if self._explicit_rank is not None:
            return (self._explicit_rank[woman].get(man, -1), -man)
        return (self.tape.u64("woman-priority", woman, man), -man)


# ---------------------------------------------------------------------------
# global engine
# ---------------------------------------------------------------------------


def _run_global(
    inst: MatchingInstance, max_rounds: int | None
) -> tuple[dict[int, ManStatus], list[RoundStats]]:
    n, k = inst.n, inst.k
    prefs = inst.men_prefs
    pkey = inst.priority_key
    next_idx = [0] * n
    holder_man: dict[int, int] = {}
    holder_key: dict[int, tuple[int, int]] = {}
    engaged: dict[int, int] = {}  # man -> woman
    proposers: list[int] = [i for i in range(n) if len(prefs[i]) > 0]
    stats: list[RoundStats] = []
    exhausted_total = sum(1 for i in range(n) if len(prefs[i]) == 0)
    r = 0
    while proposers and (max_rounds is None or r < max_rounds):
        r += 1
        byw: dict[int, list[int]] = defaultdict(list)
        for man in proposers:
            byw[prefs[man][next_idx[man]]].append(man)
        rejected: list[int] = []
        for w, cands in byw.items():
            best_man = holder_man.get(w)
            best_key = holder_key.get(w)
            incumbent = best_man
            for man in cands:
                key = pkey(w, man)
                if best_key is None or key > best_key:
                    best_key, best_man = key, man
            for man in cands:
                if man != best_man:
                    next_idx[man] += 1
                    rejected.append(man)
            if incumbent is not None and incumbent != best_man:
                next_idx[incumbent] += 1
                rejected.append(incumbent)
                del engaged[incumbent]
            if incumbent != best_man:
                holder_man[w] = best_man
                holder_key[w] = best_key
                engaged[best_man] = w
        newly_exhausted = 0
        proposers = []
        for man in rejected:
            if next_idx[man] < len(prefs[man]):
                proposers.append(man)
            else:
                newly_exhausted += 1
        exhausted_total += newly_exhausted
        stats.append(
            RoundStats(
                round_index=r,
                rejections=len(rejected),
                rejected_with_remaining=len(rejected) - newly_exhausted,
                exhausted_total=exhausted_total,
                matched=len(engaged),
            )
        )
    disqualified = set(proposers)  # non-empty iff the round cap truncated the run
    statuses: dict[int, ManStatus] = {}
    for man in range(n):
        w = engaged.get(man)
        if w is not None:
            statuses[man] = ManStatus.matched(w)
        elif man in disqualified:
            statuses[man] = DISQUALIFIED_STATUS
        else:
            statuses[man] = UNMATCHED_STATUS
    return statuses, stats


def global_gs(inst: MatchingInstance) -> dict[int, ManStatus]:
    """Run to quiescence; statuses are matched/unmatched only."""
    statuses, _ = _run_global(inst, None)
    return statuses


def abridged_gs(
    inst: MatchingInstance, rounds: int
) -> tuple[dict[int, ManStatus], list[RoundStats]]:
    """Stop after `rounds` proposal rounds; men rejected in the final round
    with names left are disqualified."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    return _run_global(inst, rounds)


def matched_count(statuses: Mapping[int, ManStatus]) -> int:
    return sum(1 for st in statuses.values() if st.state == MATCHED)


# ---------------------------------------------------------------------------
# local query
# ---------------------------------------------------------------------------


def local_ags(
    inst: MatchingInstance,
    rounds: int,
    man: int,
    counter: ProbeCounter | None = None,
    _view: MemoView | None = None,
) -> ManStatus:
    """Status of `man` after `rounds` truncated rounds, resolved from his
    radius-2·rounds neighborhood only.  Equals abridged_gs(inst, rounds)[man].
    """
    if not 0 <= man < inst.n:
        raise ValueError(f"unknown man {man}")
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    view = _view if _view is not None else MemoView(inst.oracle, counter, free=((LEFT, man),))

    # Layered BFS out to radius 2*rounds.  Women on the outermost odd layer
    # are discovered but never expanded.
    radius = 2 * rounds
    men_dist: dict[int, int] = {man: 0}
    women_dist: dict[int, int] = {}
    men_frontier = [man]
    women_frontier: list[int] = []
    for depth in range(1, radius + 1):
        if depth % 2 == 1:
            nxt = []
            for mm in men_frontier:
                for w in view.fwd(mm):
                    if w not in women_dist:
                        women_dist[w] = depth
                        nxt.append(w)
            women_frontier = nxt
        else:
            nxt = []
            for w in women_frontier:
                for mm in view.rev(w):
                    if mm not in men_dist:
                        men_dist[mm] = depth
                        nxt.append(mm)
            men_frontier = nxt
        if not nxt:
            break

    pkey = inst.priority_key
    next_idx: dict[int, int] = {}
    engaged: dict[int, int] = {}
    holder_man: dict[int, int] = {}
    holder_key: dict[int, tuple[int, int]] = {}
    proposers = [mm for mm in men_dist if len(view.fwd(mm)) > 0]
    query_rejected_last = False
    for r in range(1, rounds + 1):
        threshold = 2 * (rounds - r + 1)
        byw: dict[int, list[int]] = defaultdict(list)
        for mm in proposers:
            if men_dist[mm] > threshold:
                continue
            lst = view.fwd(mm)
            byw[lst[next_idx.get(mm, 0)]].append(mm)
        rejected: list[int] = []
        for w, cands in byw.items():
            best_man = holder_man.get(w)
            best_key = holder_key.get(w)
            incumbent = best_man
            for mm in cands:
                key = pkey(w, mm)
                if best_key is None or key > best_key:
                    best_key, best_man = key, mm
            for mm in cands:
                if mm != best_man:
                    next_idx[mm] = next_idx.get(mm, 0) + 1
                    rejected.append(mm)
            if incumbent is not None and incumbent != best_man:
                next_idx[incumbent] = next_idx.get(incumbent, 0) + 1
                rejected.append(incumbent)
                del engaged[incumbent]
            if incumbent != best_man:
                holder_man[w] = best_man
                holder_key[w] = best_key
                engaged[best_man] = w
        if r == rounds:
            query_rejected_last = man in rejected
        next_threshold = 2 * (rounds - r)
        proposers = [
            mm
            for mm in rejected
            if men_dist[mm] <= next_threshold and next_idx[mm] < len(view.fwd(mm))
        ]
    w = engaged.get(man)
    if w is not None:
        return ManStatus.matched(w)
    if query_rejected_last and next_idx.get(man, 0) < len(view.fwd(man)):
        return DISQUALIFIED_STATUS
    return UNMATCHED_STATUS


def local_ags_woman(
    inst: MatchingInstance,
    rounds: int,
    woman: int,
    counter: ProbeCounter | None = None,
) -> ManStatus:
    """The woman's partner after `rounds` truncated rounds, resolved by
    settling each of her suitors man-side and taking the unique claimant."""
    if not 0 <= woman < inst.m:
        raise ValueError(f"unknown woman {woman}")
    view = MemoView(inst.oracle, counter, free=((RIGHT, woman),))
    claimants = []
    for mm in view.rev(woman):
        st = local_ags(inst, rounds, mm, _view=view)
        if st.state == MATCHED and st.partner == woman:
            claimants.append(mm)
    if len(claimants) > 1:  # would contradict the one-holder invariant
        raise AssertionError(f"woman {woman} claimed by {claimants}")
    if claimants:
        return ManStatus.matched(claimants[0])
    return UNMATCHED_STATUS


def rounds_for_epsilon(k: int, eps: float) -> int:
    """Round budget sufficient for the final-round spillover to be at most
    an eps fraction of the full-run matching size."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0 < eps <= 1:
        raise ValueError("eps must be in (0, 1]")
    return k + 1 + math.ceil(k * (1 + 1 / eps) * math.log(2 * k * k / eps))


def blocking_pairs(
    inst: MatchingInstance, statuses: Mapping[int, ManStatus]
) -> list[tuple[int, int]]:
    """All pairs (man, woman) who strictly prefer each other to their current
    assignments.  Disqualified men are excluded as potential blockers; the
    map must assign each woman at most once."""
    man_of: dict[int, int] = {}
    for mm, st in statuses.items():
        if st.state == MATCHED:
            if st.partner in man_of:
                raise ValueError(
                    f"woman {st.partner} assigned to both {man_of[st.partner]} and {mm}"
                )
            man_of[st.partner] = mm
    pairs: list[tuple[int, int]] = []
    for mm in range(inst.n):
        st = statuses.get(mm, UNMATCHED_STATUS)
        if st.state == DISQUALIFIED:
            continue
        lst = inst.men_prefs[mm]
        if st.state == MATCHED:
            better = lst[: lst.index(st.partner)]
        else:
            better = lst
        for w in better:
            cur = man_of.get(w)
            if cur is None or inst.priority_key(w, mm) > inst.priority_key(w, cur):
                pairs.append((mm, w))
    return sorted(pairs)
