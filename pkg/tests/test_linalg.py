import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ddmrc import linalg as la
from ddmrc.errors import AsymmetryError, DimensionError, NonFiniteError

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def small_matrix(rows=st.integers(1, 5), cols=st.integers(1, 5)):
    return st.tuples(rows, cols).flatmap(lambda s: arrays(np.float64, s, elements=finite))


class TestInputs:
    def test_rejects_nan(self):
        with pytest.raises(NonFiniteError):
            la.as_matrix([[1.0, np.nan]])

    def test_rejects_3d(self):
        with pytest.raises(DimensionError):
            la.as_matrix(np.zeros((2, 2, 2)))

    def test_symmetrize_rejects_asymmetric(self):
        with pytest.raises(AsymmetryError):
            la.symmetrize(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_symmetrize_averages_roundoff(self):
        A = np.array([[1.0, 2.0], [2.0 + 1e-12, 1.0]])
        S = la.symmetrize(A)
        assert np.array_equal(S, S.T)


class TestDefiniteness:
    @pytest.mark.parametrize("M, expected", [
        (np.eye(2), la.Definiteness.POSITIVE_DEFINITE),
        (np.diag([1.0, 0.0]), la.Definiteness.POSITIVE_SEMIDEFINITE),
        (np.zeros((2, 2)), la.Definiteness.ZERO),
        (-np.eye(3), la.Definiteness.NEGATIVE_DEFINITE),
        (np.diag([-1.0, 0.0]), la.Definiteness.NEGATIVE_SEMIDEFINITE),
        (np.diag([1.0, -1.0]), la.Definiteness.INDEFINITE),
    ])
    def test_classes(self, M, expected):
        assert la.classify_definiteness(M) is expected

    def test_tolerance_is_relative(self):
        # threshold is tol * max(1, |lambda|_max) = 1e-3 here
        M = np.diag([1e6, -1e-5])
        assert la.classify_definiteness(M, tol=1e-9) is la.Definiteness.POSITIVE_SEMIDEFINITE
        assert la.classify_definiteness(M, tol=1e-12) is la.Definiteness.INDEFINITE

    @given(small_matrix())
    def test_gram_is_psd(self, A):
        assert la.classify_definiteness(A @ A.T).is_psd

    @given(small_matrix(cols=st.just(3), rows=st.just(3)))
    def test_negation_mirrors(self, A):
        S = A + A.T
        c = la.classify_definiteness(S)
        assert la.classify_definiteness(-S) is c.mirror()


class TestPinvRank:
    @settings(max_examples=50)
    @given(small_matrix())
    def test_penrose_conditions(self, A):
        P = la.pinv(A)
        sv = np.linalg.svd(A, compute_uv=False)
        kept = sv[sv > 1e-10 * sv[0] * max(A.shape)] if sv[0] > 0 else sv[:0]
        kappa = sv[0] / kept[-1] if kept.size else 1.0
        atol = 1e-12 * kappa * max(1.0, sv[0])
        assert np.allclose(A @ P @ A, A, atol=atol)
        assert np.allclose((A @ P).T, A @ P, atol=atol)

    def test_rank_and_bases(self):
        A = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]])
        assert la.numerical_rank(A) == 1
        K = la.kernel_basis(A)
        assert K.shape == (3, 2)
        assert np.allclose(A @ K, 0)
        R = la.range_basis(A)
        assert R.shape == (2, 1)
        assert np.allclose(R.T @ R, np.eye(1))

    @given(small_matrix())
    def test_rank_nullity(self, A):
        assert la.numerical_rank(A) + la.kernel_basis(A).shape[1] == A.shape[1]

    def test_lstsq_min_norm(self):
        A = np.array([[1.0, 1.0]])
        x, res = la.solve_lstsq_min_norm(A, np.array([2.0]))
        assert np.allclose(x.ravel(), [1.0, 1.0])
        assert res < 1e-12


class TestSchurComplement:
    def test_generalized_with_singular_block(self):
        P = np.array([[2.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
        # P11 - P12 pinv(P22) P21 with P22 = diag(1, 0)
        S = la.schur_complement(P, 1)
        assert np.allclose(S, [[1.0]])

    def test_kernel_containment(self):
        A = np.diag([1.0, 0.0])
        assert la.kernel_contained(A, np.array([[1.0, 0.0]]))
        assert not la.kernel_contained(A, np.array([[0.0, 1.0]]))


class TestSpectral:
    def test_spectral_radius_rotation(self):
        c, s = np.cos(0.3), np.sin(0.3)
        assert la.spectral_radius(0.5 * np.array([[c, -s], [s, c]])) == pytest.approx(0.5)

    def test_imaginary_axis(self):
        assert la.has_imaginary_axis_eigenvalue(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        assert la.has_imaginary_axis_eigenvalue(np.zeros((1, 1)))
        assert not la.has_imaginary_axis_eigenvalue(np.diag([1.0, -2.0]))

    @given(small_matrix(st.integers(1, 4), st.integers(1, 4)))
    def test_psd_sqrt_squares_back(self, A):
        S = A @ A.T
        R = la.psd_sqrt(S)
        assert np.allclose(R @ R, S, atol=1e-7 * max(1, np.linalg.norm(S, 2)))


class TestCsv:
    @given(small_matrix())
    def test_round_trip_exact(self, A):
        assert np.array_equal(la.parse_matrix_csv(la.format_matrix_csv(A)), A)

    def test_header(self):
        assert la.format_matrix_csv(np.eye(2)).splitlines()[0] == "2,2"

    def test_bad_header(self):
        with pytest.raises(Exception):
            la.parse_matrix_csv("3,3\n1,2,3\n")

    def test_block_diag(self):
        B = la.block_diag(np.eye(1), 2 * np.eye(2))
        assert np.allclose(B, np.diag([1.0, 2.0, 2.0]))
