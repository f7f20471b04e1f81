"""Tests for the symmetric-matrix and Gaussian-source primitives."""

import math

import numpy as np
import pytest
from pytest import approx

from helpers import random_source, random_spd, equicorrelated
from mtrd.errors import IndexOutOfRange, NotPositiveDefinite, SingularObservation
from mtrd.model import (
    SymMatrix,
    conditional_covariance,
    eigenvalues,
    logdet,
    mmse_cov,
    new_source,
)


class TestSymMatrix:
    def test_exact_mirroring(self):
        m = SymMatrix([[1.0, 0.3], [0.3 + 1e-12, 2.0]])
        assert m.array[0, 1] == m.array[1, 0]

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="not symmetric"):
            SymMatrix([[1.0, 0.5], [0.1, 1.0]])

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            SymMatrix([[1.0, 0.0]])

    def test_order_bounds(self):
        with pytest.raises(ValueError):
            SymMatrix(np.eye(10))

    def test_lower_triangle_round_trip(self):
        m = SymMatrix([[2.0, -0.5, 0.1], [-0.5, 1.0, 0.3], [0.1, 0.3, 4.0]])
        again = SymMatrix.from_lower_triangle(3, m.lower_triangle())
        assert again == m

    def test_from_lower_triangle_length_check(self):
        with pytest.raises(ValueError, match="needs 6 values"):
            SymMatrix.from_lower_triangle(3, [1.0, 2.0])

    def test_permuted_moves_entries(self):
        m = SymMatrix([[1.0, 2.0, 3.0], [2.0, 4.0, 5.0], [3.0, 5.0, 6.0]])
        p = m.permuted((2, 3, 1))  # source 1 -> label 2, 2 -> 3, 3 -> 1
        assert p.entry(2, 3) == m.entry(1, 2)
        assert p.entry(1, 1) == m.entry(3, 3)

    def test_immutable(self):
        m = SymMatrix.identity(2)
        with pytest.raises(ValueError):
            m.array[0, 0] = 5.0


class TestNewSource:
    def test_identity(self):
        src = new_source(SymMatrix.identity(2))
        assert src.theta == SymMatrix.identity(2)

    def test_2x2_adjugate(self):
        src = new_source(SymMatrix([[1.0, 0.5], [0.5, 1.0]]))
        assert src.theta.entry(1, 1) == approx(4.0 / 3.0, rel=1e-14)
        assert src.theta.entry(1, 2) == approx(-2.0 / 3.0, rel=1e-14)

    def test_equicorrelated_closed_form(self):
        src = equicorrelated(0.5)
        assert src.theta.entry(1, 1) == approx(1.5, rel=1e-13)
        assert src.theta.entry(2, 3) == approx(-0.5, rel=1e-13)

    def test_singular_rejected(self):
        with pytest.raises(NotPositiveDefinite):
            new_source(SymMatrix([[1.0, 1.0], [1.0, 1.0]]))

    def test_round_trip(self, rng):
        for _ in range(20):
            src = random_source(rng, int(rng.integers(1, 5)))
            back = new_source(src.theta)
            err = np.max(np.abs(back.theta.array - src.gamma.array))
            assert err < 1e-10


class TestEigenvalues:
    def test_diagonal(self):
        assert eigenvalues(SymMatrix.diagonal([4.0, 1.0])) == [1.0, 4.0]

    def test_2x2_correlated(self):
        vals = eigenvalues(SymMatrix([[1.0, 0.5], [0.5, 1.0]]))
        assert vals == approx([0.5, 1.5], rel=1e-13)

    def test_equicorrelated_spectrum(self):
        vals = eigenvalues(equicorrelated(0.5).gamma)
        assert vals == approx([0.5, 0.5, 2.0], rel=1e-12)


class TestConditionalCovariance:
    def test_independent_unchanged(self):
        src = new_source(SymMatrix.diagonal([1.0, 2.0, 3.0]))
        cond = conditional_covariance(src, [2, 3], [1])
        assert cond.array == approx(np.diag([2.0, 3.0]))

    def test_equicorrelated_by_hand(self):
        cond = conditional_covariance(equicorrelated(0.5), [2, 3], [1])
        assert cond.array == approx(np.array([[0.75, 0.25], [0.25, 0.75]]), abs=1e-14)

    def test_matches_precision_formula(self, rng):
        # gamma_{i,i|k} = theta_jj / (theta_ii theta_jj - theta_ij^2), etc.
        for _ in range(20):
            src = random_source(rng, 3)
            th = src.theta.array
            cond = conditional_covariance(src, [2, 3], [1])
            det = th[1, 1] * th[2, 2] - th[1, 2] ** 2
            assert cond.entry(1, 1) == approx(th[2, 2] / det, abs=1e-12)
            assert cond.entry(2, 2) == approx(th[1, 1] / det, abs=1e-12)
            assert cond.entry(1, 2) == approx(-th[1, 2] / det, abs=1e-12)

    def test_overlap_rejected(self):
        with pytest.raises(IndexOutOfRange):
            conditional_covariance(equicorrelated(0.5), [1, 2], [2])

    def test_bad_label(self):
        with pytest.raises(IndexOutOfRange):
            conditional_covariance(equicorrelated(0.5), [1], [4])


class TestMmseCov:
    def test_scalar_awgn(self):
        # unit-variance X observed through X + N, noise variance 1
        joint = SymMatrix([[1.0, 1.0], [1.0, 2.0]])
        assert mmse_cov(joint, [1], [2]).entry(1, 1) == approx(0.5, rel=1e-14)

    def test_observe_target_itself(self):
        joint = SymMatrix([[1.0, 1.0], [1.0, 1.0 + 0.0]])
        # duplicate coordinates: observing X reduces the error to zero
        assert mmse_cov(joint, [1], [2]).entry(1, 1) == approx(0.0, abs=1e-14)

    def test_uncorrelated_observation(self):
        joint = SymMatrix([[3.0, 0.0], [0.0, 1.0]])
        assert mmse_cov(joint, [1], [2]).entry(1, 1) == approx(3.0)

    def test_singular_observation(self):
        joint = SymMatrix([[1.0, 0.0, 0.0], [0.0, 1.0, 1.0], [0.0, 1.0, 1.0]])
        with pytest.raises(SingularObservation):
            mmse_cov(joint, [1], [2, 3])


class TestLogdet:
    def test_identity(self):
        assert logdet(SymMatrix.identity(3)) == 0.0

    def test_diagonal(self):
        assert logdet(SymMatrix.diagonal([1.0, 4.0])) == approx(math.log(4.0), rel=1e-14)

    def test_correlated(self):
        assert logdet(SymMatrix([[1.0, 0.5], [0.5, 1.0]])) == approx(
            math.log(0.75), rel=1e-13
        )

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            logdet(SymMatrix([[1.0, 2.0], [2.0, 1.0]]))


class TestProperties:
    def test_logdet_matches_eigenvalue_product(self, rng):
        for _ in range(30):
            m = random_spd(rng, int(rng.integers(1, 6)))
            prod = float(np.prod(eigenvalues(m)))
            assert math.exp(logdet(m)) == approx(prod, rel=1e-10)

    def test_conditional_equals_mmse_on_source(self, rng):
        for _ in range(20):
            src = random_source(rng, 4)
            cond = conditional_covariance(src, [1, 3], [2, 4])
            blk = mmse_cov(src.gamma, [1, 3], [2, 4])
            assert np.max(np.abs(cond.array - blk.array)) < 1e-12

    def test_conditional_is_psd(self, rng):
        for _ in range(20):
            src = random_source(rng, 3)
            cond = conditional_covariance(src, [2, 3], [1])
            assert np.min(np.linalg.eigvalsh(cond.array)) > -1e-12
