"""Tests for the cover algebra: dominance, reduction, classification."""

import numpy as np
import pytest
from pytest import approx

from helpers import equicorrelated, random_cover_sets, random_source
from mtrd.cover import (
    Topology,
    classify_L3,
    dominates,
    equivalent,
    gap_coefficient,
    new_cover,
    reduce,
    relabel,
    uncovered_pairs,
)
from mtrd.errors import DimensionMismatch, NotACover, UnsupportedTopology


class TestNewCover:
    def test_pair_plus_singleton_valid(self):
        cov = new_cover(3, [[1, 2], [3]])
        assert cov.as_lists() == [[3], [1, 2]]

    def test_missing_source(self):
        with pytest.raises(NotACover, match=r"\[3\]"):
            new_cover(3, [[1, 2]])

    def test_canonical_order(self):
        cov = new_cover(2, [[1, 2], [2], [1]])
        assert cov.as_lists() == [[1], [2], [1, 2]]

    def test_empty_set_rejected(self):
        with pytest.raises(NotACover):
            new_cover(2, [[1, 2], []])

    def test_out_of_range_rejected(self):
        with pytest.raises(NotACover):
            new_cover(2, [[1, 2], [3]])

    def test_duplicates_collapse(self):
        cov = new_cover(2, [[1], [1], [1, 2]])
        assert cov.as_lists() == [[1], [1, 2]]


class TestUncoveredPairs:
    def test_full_cover_empty(self):
        assert uncovered_pairs(new_cover(4, [[1, 2, 3, 4]])) == frozenset()

    def test_pair_plus_singleton(self):
        assert uncovered_pairs(new_cover(3, [[1, 2], [3]])) == {(1, 3), (2, 3)}

    def test_two_pairs(self):
        assert uncovered_pairs(new_cover(3, [[1, 2], [1, 3]])) == {(2, 3)}

    def test_distributed(self):
        assert uncovered_pairs(new_cover(3, [[1], [2], [3]])) == {
            (1, 2),
            (1, 3),
            (2, 3),
        }


class TestDominance:
    def test_two_pairs_dominates_pair_plus_singleton(self):
        a = new_cover(3, [[1, 2], [1, 3]])
        b = new_cover(3, [[1, 2], [3]])
        assert dominates(a, b)
        assert not dominates(b, a)

    def test_everything_dominates_distributed(self, rng):
        for L in (2, 3, 4, 5):
            dist = new_cover(L, [[i] for i in range(1, L + 1)])
            for _ in range(10):
                cov = new_cover(L, random_cover_sets(rng, L))
                assert dominates(cov, dist)

    def test_singletons_do_not_dominate_pairs(self):
        a = new_cover(3, [[1], [2], [3]])
        b = new_cover(3, [[1, 2], [3]])
        assert not dominates(a, b)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            dominates(new_cover(2, [[1, 2]]), new_cover(3, [[1, 2, 3]]))


class TestEquivalence:
    def test_redundant_singleton(self):
        a = new_cover(3, [[1, 2], [2, 3]])
        b = new_cover(3, [[1], [1, 2], [2, 3]])
        assert equivalent(a, b)

    def test_distinct_classes(self):
        a = new_cover(3, [[1, 2], [3]])
        b = new_cover(3, [[1], [2], [3]])
        assert not equivalent(a, b)

    def test_reflexive(self):
        cov = new_cover(3, [[1, 2], [2, 3]])
        assert equivalent(cov, cov)


class TestReduce:
    def test_drops_contained_set(self):
        cov = new_cover(3, [[1], [1, 2], [2, 3]])
        assert reduce(cov) == new_cover(3, [[1, 2], [2, 3]])

    def test_already_non_redundant(self):
        cov = new_cover(3, [[1, 2], [3]])
        assert reduce(cov) == cov

    def test_duplicate_then_reduce(self):
        cov = new_cover(2, [[1], [1], [1, 2]])
        assert reduce(cov) == new_cover(2, [[1, 2]])

    def test_idempotent(self, rng):
        for _ in range(50):
            cov = new_cover(4, random_cover_sets(rng, 4))
            assert reduce(reduce(cov)) == reduce(cov)


class TestClassify:
    def test_relabeled_two_pairs(self):
        topo = classify_L3(new_cover(3, [[1, 3], [2, 3]]))
        assert topo.tag is Topology.TWO_PAIRS
        assert topo.relabeling == (2, 3, 1)
        mapped = relabel(reduce(new_cover(3, [[1, 3], [2, 3]])), topo.relabeling)
        assert mapped == new_cover(3, [[1, 2], [1, 3]])

    def test_distributed_identity(self):
        topo = classify_L3(new_cover(3, [[1], [2], [3]]))
        assert topo.tag is Topology.DISTRIBUTED
        assert topo.relabeling == (1, 2, 3)

    def test_triangle(self):
        topo = classify_L3(new_cover(3, [[2, 3], [1, 2], [1, 3]]))
        assert topo.tag is Topology.TRIANGLE

    def test_redundant_input_classified_via_reduction(self):
        topo = classify_L3(new_cover(3, [[1], [1, 2], [1, 3]]))
        assert topo.tag is Topology.TWO_PAIRS

    def test_l2_cases(self):
        assert classify_L3(new_cover(2, [[1], [2]])).tag is Topology.DISTRIBUTED
        assert classify_L3(new_cover(2, [[1], [1, 2]])).tag is Topology.CENTRALIZED

    def test_l4_unsupported(self):
        with pytest.raises(UnsupportedTopology):
            classify_L3(new_cover(4, [[1, 2], [3, 4]]))

    def test_every_l3_cover_classifies(self, rng):
        for _ in range(100):
            cov = new_cover(3, random_cover_sets(rng, 3))
            topo = classify_L3(cov)
            assert relabel(reduce(cov), topo.relabeling) in [
                new_cover(3, s)
                for s in (
                    [[1, 2, 3]],
                    [[1], [2], [3]],
                    [[1, 2], [3]],
                    [[1, 2], [1, 3]],
                    [[1, 2], [1, 3], [2, 3]],
                )
            ]


class TestGapCoefficient:
    def test_centralized_zero(self, rng):
        src = random_source(rng, 3)
        assert gap_coefficient(src, new_cover(3, [[1, 2, 3]])) == 0.0

    def test_equicorrelated_distributed(self):
        src = equicorrelated(0.5)
        coeff = gap_coefficient(src, new_cover(3, [[1], [2], [3]]))
        assert coeff == approx(0.375, rel=1e-12)

    def test_equicorrelated_pair_plus_singleton(self):
        src = equicorrelated(0.5)
        coeff = gap_coefficient(src, new_cover(3, [[1, 2], [3]]))
        assert coeff == approx(0.25, rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            gap_coefficient(equicorrelated(0.5), new_cover(2, [[1, 2]]))


class TestAlgebraProperties:
    """Spot versions of the exact laws; the full 500-cover run lives in the
    acceptance suite."""

    def test_preorder_laws(self, rng):
        covers = [new_cover(5, random_cover_sets(rng, 5)) for _ in range(30)]
        for cov in covers:
            assert dominates(cov, cov)
        for a in covers[:10]:
            for b in covers[:10]:
                for c in covers[:10]:
                    if dominates(a, b) and dominates(b, c):
                        assert dominates(a, c)

    def test_equivalence_class_has_unique_reduction(self, rng):
        for _ in range(50):
            base = new_cover(4, random_cover_sets(rng, 4))
            # enlarge with redundant subsets of existing sets
            extra = [sorted(s)[:1] for s in base.sets]
            fat = new_cover(4, base.as_lists() + extra)
            assert equivalent(base, fat)
            assert reduce(base) == reduce(fat)

    def test_coefficient_monotone_under_dominance(self, rng):
        src = random_source(rng, 3)
        covers = [new_cover(3, random_cover_sets(rng, 3)) for _ in range(30)]
        for a in covers:
            for b in covers:
                if dominates(b, a):
                    assert gap_coefficient(src, a) >= gap_coefficient(src, b)

    def test_uncovered_pairs_survive_reduction(self, rng):
        for _ in range(50):
            cov = new_cover(5, random_cover_sets(rng, 5))
            assert uncovered_pairs(reduce(cov)) == uncovered_pairs(cov)
