"""Serial dictatorship over houses with a seeded lottery order.

Each agent holds an ordered list of d houses; agents take turns in
increasing lottery number (seeded uniform over [1, n⁴]; the rare collision
goes to the smaller agent id) and grab their best still-available listed
house, or nothing if all d are gone.

The local query resolves an agent by recursively settling only the
earlier-arriving agents who share a listed house, transitively — the rest of
the lottery provably cannot touch her outcome.
"""

from __future__ import annotations

from typing import Sequence

from .instances import InstanceSpec
from .probes import LEFT, AdjacencyOracle, MemoView, ProbeCounter
from .randomness import RandomTape, derive_uniform, sample_without_replacement

__all__ = ["HousingInstance", "rsd_global", "rsd_local"]


class HousingInstance:
    def __init__(
        self,
        lists: Sequence[Sequence[int]],
        m: int,
        seed: int = 0,
        ranks: Sequence[int] | None = None,
        spec: InstanceSpec | None = None,
    ) -> None:
        self.lists: tuple[tuple[int, ...], ...] = tuple(tuple(p) for p in lists)
        self.n = len(self.lists)
        self.m = m
        self.seed = seed
        self.spec = spec
        self.tape = RandomTape(seed)
        for a, lst in enumerate(self.lists):
            if len(set(lst)) != len(lst):
                raise ValueError(f"agent {a} lists a house twice")
        self.d = max((len(lst) for lst in self.lists), default=0)
        if ranks is not None:
            if len(ranks) != self.n:
                raise ValueError("need one lottery number per agent")
            self.ranks: tuple[int, ...] = tuple(int(r) for r in ranks)
        else:
            span = max(1, self.n**4)
            self.ranks = tuple(
                1 + derive_uniform(self.tape, ("lottery", a), span) for a in range(self.n)
            )
        self.oracle = AdjacencyOracle(self.lists, m)

    @classmethod
    def from_spec(cls, spec: InstanceSpec) -> "HousingInstance":
        if spec.family != "housing":
            raise ValueError(f"not a housing spec: {spec.family!r}")
        if spec.explicit_edges is not None:
            lists: Sequence[Sequence[int]] = spec.explicit_edges
        else:
            if not 1 <= spec.k <= spec.m:
                raise ValueError(f"need 1 <= d <= m, got d={spec.k}, m={spec.m}")
            tape = RandomTape(spec.seed)
            lists = [
                sample_without_replacement(tape, ("house-list", a), spec.m, spec.k)
                for a in range(spec.n)
            ]
        return cls(lists, m=spec.m, seed=spec.seed, spec=spec)

    @classmethod
    def seeded(cls, n: int, d: int, seed: int, m: int | None = None) -> "HousingInstance":
        return cls.from_spec(
            InstanceSpec(seed=seed, family="housing", n=n, m=m if m is not None else n, k=d)
        )

    def arrival_key(self, agent: int) -> tuple[int, int]:
        return (self.ranks[agent], agent)


def rsd_global(inst: HousingInstance) -> dict[int, int | None]:
    allocation: dict[int, int | None] = {}
    taken: set[int] = set()
    for a in sorted(range(inst.n), key=inst.arrival_key):
        got: int | None = None
        for h in inst.lists[a]:
            if h not in taken:
                got = h
                taken.add(h)
                break
        allocation[a] = got
    return allocation


def rsd_local(
    inst: HousingInstance, agent: int, counter: ProbeCounter | None = None
) -> int | None:
    """House of `agent`, equal to rsd_global's, resolved from the closure of
    earlier-arriving agents who share a house, transitively.  Lottery
    numbers are seeded mechanism data and cost no probes; reading an agent's
    list or a house's interested-agents list costs one probe each (the
    queried agent's own list is free)."""
    if not 0 <= agent < inst.n:
        raise ValueError(f"unknown agent {agent}")
    view = MemoView(inst.oracle, counter, free=((LEFT, agent),))
    akey = inst.arrival_key
    closure = {agent}
    stack = [agent]
    while stack:
        x = stack.pop()
        kx = akey(x)
        for h in view.fwd(x):
            for y in view.rev(h):
                if y not in closure and akey(y) < kx:
                    closure.add(y)
                    stack.append(y)
    taken: set[int] = set()
    result: int | None = None
    for a in sorted(closure, key=akey):
        for h in view.fwd(a):
            if h not in taken:
                taken.add(h)
                if a == agent:
                    result = h
                break
    return result
