"""Keyed deterministic randomness.

Every draw made anywhere in this package is a pure function of a global seed
and a structured key (purpose tag, entity ids, draw index).  There is no
hidden stream state: two callers that ask for the same key get the same bits,
and a local simulation that replays a subset of a global run reproduces the
global run's draws exactly.  That property is what makes per-query local
algorithms consistent with their global counterparts, so do not replace this
with `random.Random` style sequential streams.

The mixer is the splitmix64 finalizer applied to a running hash of the key
parts; string tags are folded to 64 bits with blake2b (cached, tags are few).
"""

from __future__ import annotations

from hashlib import blake2b
from typing import Iterable, Sequence, Union

__all__ = [
    "KeyPart",
    "RandomTape",
    "derive_uniform",
    "sample_without_replacement",
]

KeyPart = Union[int, str]

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix(x: int) -> int:
    """splitmix64 finalizer: full-avalanche 64-bit permutation."""
    x &= _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


class RandomTape:
    """Stateless source of keyed 64-bit values for one global seed.

    `u64(*key)` returns a uniform 64-bit integer determined entirely by
    `(seed, key)`.  Key parts may be ints (entity ids, draw indices) or
    strings (purpose tags such as "lottery" or "slot-tie").
    """

    __slots__ = ("seed", "_base", "_tags")

    def __init__(self, seed: int) -> None:
        self.seed = int(seed)
        self._base = _mix(self.seed + _GOLDEN)
        self._tags: dict[str, int] = {}

    def _fold(self, part: KeyPart) -> int:
        if type(part) is int:
            return part & _MASK
        if type(part) is str:
            v = self._tags.get(part)
            if v is None:
                v = int.from_bytes(blake2b(part.encode(), digest_size=8).digest(), "big")
                self._tags[part] = v
            return v
        if isinstance(part, int):  # bool and int subclasses
            return int(part) & _MASK
        raise TypeError(f"key parts must be int or str, got {type(part).__name__}")

    def u64(self, *key: KeyPart) -> int:
        h = self._base
        for part in key:
            h = _mix(h ^ _mix(self._fold(part) + _GOLDEN))
        return h

    def unit(self, *key: KeyPart) -> float:
        """Uniform float in [0, 1) — convenience for demos/diagnostics only."""
        return self.u64(*key) / 2.0**64

    def __repr__(self) -> str:  # pragma: no cover
        return f"RandomTape(seed={self.seed})"


def derive_uniform(tape: RandomTape, key: Sequence[KeyPart], n: int) -> int:
    """Unbiased uniform integer in [0, n), keyed by `key`.

    Uses rejection sampling on the top of the 64-bit range; the attempt
    counter is folded into the key so retries are themselves deterministic.
    """
    if n <= 0:
        raise ValueError(f"range must be positive, got {n}")
    limit = (1 << 64) - ((1 << 64) % n)
    key = tuple(key)
    attempt = 0
    while True:
        v = tape.u64(*key, attempt)
        if v < limit:
            return v % n
        attempt += 1


def sample_without_replacement(
    tape: RandomTape, key: Sequence[KeyPart], n: int, count: int
) -> list[int]:
    """`count` distinct uniform values from [0, n), in draw order.

    Duplicates are rejected and redrawn under the next draw index, so the
    result for a given key never depends on how many draws other keys made.
    """
    if count > n:
        raise ValueError(f"cannot draw {count} distinct values from range {n}")
    key = tuple(key)
    out: list[int] = []
    seen: set[int] = set()
    idx = 0
    while len(out) < count:
        v = derive_uniform(tape, (*key, idx), n)
        idx += 1
        if v not in seen:
            seen.add(v)
            out.append(v)
    return out
