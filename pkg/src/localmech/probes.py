"""Probe-counted access to bipartite adjacency records.

The cost model used throughout the package: one *probe* is one access to one
entity's adjacency/preference record.  Within a single local query each
record costs at most one probe (repeat reads hit a per-query memo), and for
mechanism queries the queried entity's own forward record is free — the
query hands it over.  Reverse lists are materialized once at build time;
that setup pass is not counted, but every *access* to a reverse record is.

Entities are `(side, id)` pairs with side "L" (men / jobs / buyers / agents)
or "R" (women / machines-and-slots / items / houses).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

__all__ = ["Entity", "ProbeCounter", "AdjacencyOracle", "MemoView", "neighborhood"]

Entity = tuple[str, int]

LEFT = "L"
RIGHT = "R"


@dataclass
class ProbeCounter:
    """Mutable probe tally for one local query."""

    count: int = 0

    def tick(self, amount: int = 1) -> None:
        self.count += amount

    def reset(self) -> None:
        self.count = 0


class AdjacencyOracle:
    """Bipartite adjacency: n left records (ordered tuples of right ids)
    plus materialized reverse records."""

    __slots__ = ("n", "m", "_fwd", "_rev")

    def __init__(self, fwd: Sequence[Sequence[int]], m: int) -> None:
        self.n = len(fwd)
        self.m = m
        self._fwd: tuple[tuple[int, ...], ...] = tuple(tuple(lst) for lst in fwd)
        rev: list[list[int]] = [[] for _ in range(m)]
        for i, lst in enumerate(self._fwd):
            for j in lst:
                if not 0 <= j < m:
                    raise ValueError(f"right id {j} out of range [0, {m})")
                rev[j].append(i)
        self._rev: tuple[tuple[int, ...], ...] = tuple(tuple(r) for r in rev)

    def fwd(self, i: int, counter: ProbeCounter | None = None) -> tuple[int, ...]:
        if not 0 <= i < self.n:
            raise ValueError(f"left id {i} out of range [0, {self.n})")
        if counter is not None:
            counter.tick()
        return self._fwd[i]

    def rev(self, j: int, counter: ProbeCounter | None = None) -> tuple[int, ...]:
        if not 0 <= j < self.m:
            raise ValueError(f"right id {j} out of range [0, {self.m})")
        if counter is not None:
            counter.tick()
        return self._rev[j]

    def degree_left(self, i: int) -> int:
        return len(self._fwd[i])


class MemoView:
    """Per-query oracle view: first access to a record ticks the counter,
    repeats are free.  `free` lists records that never cost anything
    (a mechanism query's own entity)."""

    __slots__ = ("_oracle", "_counter", "_seen")

    def __init__(
        self,
        oracle: AdjacencyOracle,
        counter: ProbeCounter | None,
        free: Iterable[Entity] = (),
    ) -> None:
        self._oracle = oracle
        self._counter = counter
        self._seen: set[Entity] = set(free)

    def fwd(self, i: int) -> tuple[int, ...]:
        key = (LEFT, i)
        if key not in self._seen:
            self._seen.add(key)
            if self._counter is not None:
                self._counter.tick()
        return self._oracle._fwd[i]

    def rev(self, j: int) -> tuple[int, ...]:
        key = (RIGHT, j)
        if key not in self._seen:
            self._seen.add(key)
            if self._counter is not None:
                self._counter.tick()
        return self._oracle._rev[j]


def neighborhood(
    oracle: AdjacencyOracle,
    entity: Entity,
    radius: int,
    counter: ProbeCounter | None = None,
) -> set[Entity]:
    """All entities within `radius` hops of `entity` (inclusive).

    A vertex's list is read when the vertex is expanded, i.e. when its
    distance is < radius; each list read costs one probe, including the
    root's.  Vertices on the boundary are reported but not expanded.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    side, idx = entity
    if side not in (LEFT, RIGHT):
        raise ValueError(f"unknown side {side!r}")
    limit = oracle.n if side == LEFT else oracle.m
    if not 0 <= idx < limit:
        raise ValueError(f"entity id {idx} out of range")
    view = MemoView(oracle, counter)
    seen: set[Entity] = {entity}
    frontier: list[Entity] = [entity]
    for _ in range(radius):
        nxt: list[Entity] = []
        for s, i in frontier:
            nbrs = view.fwd(i) if s == LEFT else view.rev(i)
            other = RIGHT if s == LEFT else LEFT
            for j in nbrs:
                e = (other, j)
                if e not in seen:
                    seen.add(e)
                    nxt.append(e)
        if not nxt:
            break
        frontier = nxt
    return seen


def ball_with_distances(
    view: MemoView, oracle: AdjacencyOracle, entity: Entity, radius: int
) -> dict[Entity, int]:
    """BFS distances within `radius`, reading lists through `view`.

    Shared helper for local algorithms that need layered neighborhoods with
    memoized probe accounting.  Boundary vertices are not expanded.
    """
    dist: dict[Entity, int] = {entity: 0}
    frontier: list[Entity] = [entity]
    for r in range(radius):
        nxt: list[Entity] = []
        for s, i in frontier:
            nbrs = view.fwd(i) if s == LEFT else view.rev(i)
            other = RIGHT if s == LEFT else LEFT
            for j in nbrs:
                e = (other, j)
                if e not in dist:
                    dist[e] = r + 1
                    nxt.append(e)
        if not nxt:
            break
        frontier = nxt
    return dist
