"""Algebra of encoder topologies.

A cover assigns each encoder the subset of sources it observes; the union of
the subsets must be all of {1..L}. This module provides dominance and
equivalence between covers, reduction to the unique non-redundant
representative, the set of source pairs no encoder observes jointly, the
classification of every L <= 3 cover onto one of five canonical cases (up to
relabeling), and the predicted high-resolution gap coefficient
(1/2) sum of theta_ij^2 over uncovered pairs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Iterable, Sequence

from .errors import DimensionMismatch, NotACover, UnsupportedTopology
from .model import GaussianSource


@dataclass(frozen=True)
class Cover:
    """A canonicalized cover of {1..L}.

    ``sets`` is deduplicated and sorted by size then lexicographically, so
    structural equality of Cover values is semantic equality. Build through
    ``new_cover``.
    """

    L: int
    sets: tuple[frozenset[int], ...]

    def as_lists(self) -> list[list[int]]:
        """JSON-ready form: sorted lists of 1-based labels."""
        return [sorted(s) for s in self.sets]

    def __repr__(self) -> str:
        inner = ", ".join("{" + ",".join(map(str, sorted(s))) + "}" for s in self.sets)
        return f"Cover(L={self.L}, {{{inner}}})"


class Topology(enum.Enum):
    """Canonical L <= 3 encoder topologies."""

    CENTRALIZED = "Centralized"
    DISTRIBUTED = "Distributed"
    PAIR_PLUS_SINGLETON = "PairPlusSingleton"
    TWO_PAIRS = "TwoPairs"
    TRIANGLE = "Triangle"


@dataclass(frozen=True)
class TopologyClass:
    """Classification result: canonical tag plus the witnessing relabeling.

    ``relabeling`` is a permutation pi of {1..L} (as a tuple indexed by
    source: pi[i-1] is the new label of source i) such that applying it to
    the reduced input cover yields exactly the canonical cover of ``tag``.
    """

    tag: Topology
    relabeling: tuple[int, ...]


def _canonical_key(s: frozenset[int]) -> tuple:
    return (len(s), tuple(sorted(s)))


def new_cover(L: int, sets: Iterable[Iterable[int]]) -> Cover:
    """Validate and canonicalize an encoder family into a Cover.

    Raises NotACover when a set is empty, holds an out-of-range label, or
    the union misses a source. Duplicate sets collapse to one.
    """
    if L < 1:
        raise NotACover(f"source count must be >= 1, got {L}")
    frozen: set[frozenset[int]] = set()
    for raw in sets:
        s = frozenset(int(i) for i in raw)
        if not s:
            raise NotACover("encoder sets must be nonempty")
        bad = [i for i in s if not 1 <= i <= L]
        if bad:
            raise NotACover(f"labels {sorted(bad)} outside 1..{L}")
        frozen.add(s)
    if not frozen:
        raise NotACover("a cover needs at least one encoder set")
    missing = set(range(1, L + 1)) - set().union(*frozen)
    if missing:
        raise NotACover(f"sources {sorted(missing)} are not covered")
    return Cover(L=L, sets=tuple(sorted(frozen, key=_canonical_key)))


def uncovered_pairs(c: Cover) -> frozenset[tuple[int, int]]:
    """Source pairs (i, j), i < j, contained in no single encoder set."""
    return frozenset(
        (i, j)
        for i, j in combinations(range(1, c.L + 1), 2)
        if not any({i, j} <= s for s in c.sets)
    )


def _check_same_l(a: Cover, b: Cover) -> None:
    if a.L != b.L:
        raise DimensionMismatch(f"covers have L={a.L} and L={b.L}")


def dominates(a: Cover, b: Cover) -> bool:
    """True iff every encoder set of ``b`` fits inside some set of ``a``."""
    _check_same_l(a, b)
    return all(any(sb <= sa for sa in a.sets) for sb in b.sets)


def equivalent(a: Cover, b: Cover) -> bool:
    """Mutual dominance."""
    return dominates(a, b) and dominates(b, a)


def reduce(c: Cover) -> Cover:
    """Drop every set contained in another: the unique non-redundant form."""
    kept = [s for s in c.sets if not any(s < t for t in c.sets)]
    return Cover(L=c.L, sets=tuple(sorted(kept, key=_canonical_key)))


def _canonical_cases(L: int) -> list[tuple[Topology, Cover]]:
    if L == 2:
        return [
            (Topology.CENTRALIZED, new_cover(2, [[1, 2]])),
            (Topology.DISTRIBUTED, new_cover(2, [[1], [2]])),
        ]
    return [
        (Topology.CENTRALIZED, new_cover(3, [[1, 2, 3]])),
        (Topology.DISTRIBUTED, new_cover(3, [[1], [2], [3]])),
        (Topology.PAIR_PLUS_SINGLETON, new_cover(3, [[1, 2], [3]])),
        (Topology.TWO_PAIRS, new_cover(3, [[1, 2], [1, 3]])),
        (Topology.TRIANGLE, new_cover(3, [[1, 2], [1, 3], [2, 3]])),
    ]


def relabel(c: Cover, relabeling: Sequence[int]) -> Cover:
    """Apply a permutation of source labels to a cover."""
    if sorted(relabeling) != list(range(1, c.L + 1)):
        raise NotACover(f"{relabeling} is not a permutation of 1..{c.L}")
    return new_cover(c.L, [[relabeling[i - 1] for i in s] for s in c.sets])


def classify_L3(c: Cover) -> TopologyClass:
    """Classify an L in {2, 3} cover onto its canonical case.

    Reduces the cover, then brute-forces all permutations of {1..L}
    (at most 6), returning the canonical tag together with the
    lexicographically smallest witnessing relabeling.
    """
    if c.L not in (2, 3):
        raise UnsupportedTopology(f"classification implemented for L <= 3, got L={c.L}")
    reduced = reduce(c)
    cases = _canonical_cases(c.L)
    for perm in permutations(range(1, c.L + 1)):
        mapped = relabel(reduced, perm)
        for tag, canonical in cases:
            if mapped == canonical:
                return TopologyClass(tag=tag, relabeling=perm)
    raise AssertionError(f"unclassifiable reduced cover {reduced!r}")  # unreachable


def gap_coefficient(src: GaussianSource, c: Cover) -> float:
    """Predicted d^2 coefficient of the gap to centralized coding.

    (1/2) sum of squared precision entries over the uncovered pairs; zero
    exactly when some encoder observes every correlated pair jointly.
    """
    if src.L != c.L:
        raise DimensionMismatch(f"source has L={src.L}, cover has L={c.L}")
    th = src.theta.array
    return float(0.5 * sum(th[i - 1, j - 1] ** 2 for i, j in uncovered_pairs(c)))
