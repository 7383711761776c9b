import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddmrc.affine import AffineExpr
from ddmrc.errors import NotInPiClass
from ddmrc.lmi import (DataGeometry, build_N, consistency_spec, data_matrix, gain_column,
                       literal_matching_lmi, reduced_matching_lmi)
from ddmrc.models import LinearSystem
from ddmrc.qmi import NoiseModel, membership

from conftest import collect, random_schur


def inertia(S, tol):
    w = np.linalg.eigvalsh(0.5 * (S + S.T))
    return int(np.sum(w > tol)), int(np.sum(w < -tol))


def test_example2_data_matrix(example2):
    data, noise, _, _ = example2
    N = build_N(data, noise)
    assert np.allclose(N, [[-4.9, 0, 5], [0, -4, 4], [5, 4, -9]], atol=1e-12)


def test_data_matrix_shape(example1):
    data, _ = example1
    M = data_matrix(data)
    assert M.shape == (data.n + data.n + data.m, data.n + data.T)


def test_true_system_is_consistent():
    rng = np.random.default_rng(1)
    sys = LinearSystem(random_schur(rng, 2), rng.standard_normal((2, 1)))
    T = 12
    W = 0.05 * rng.standard_normal((2, T))
    data = collect(rng, sys, T, W)
    noise = NoiseModel.energy_bound(1.01 * W @ W.T, T)
    Z = np.hstack([sys.A, sys.B]).T
    assert membership(consistency_spec(data, noise), Z)


class TestGeometry:
    def test_noiseless_centre_recovers_system(self):
        rng = np.random.default_rng(4)
        sys = LinearSystem(random_schur(rng, 3), rng.standard_normal((3, 2)))
        data = collect(rng, sys, 8)
        geo = DataGeometry.from_data(data, NoiseModel.noiseless(3, 8))
        assert geo.noiseless
        assert geo.U0.shape[1] == 0
        assert np.allclose(geo.Zhat, np.hstack([sys.A, sys.B]), atol=1e-9)

    def test_short_data_leaves_unidentified_directions(self):
        rng = np.random.default_rng(5)
        sys = LinearSystem(random_schur(rng, 3), rng.standard_normal((3, 2)))
        data = collect(rng, sys, 3)
        geo = DataGeometry.from_data(data, NoiseModel.noiseless(3, 3))
        assert geo.U0.shape[1] == 2

    def test_inconsistent_data_rejected(self):
        rng = np.random.default_rng(6)
        sys = LinearSystem(random_schur(rng, 2), rng.standard_normal((2, 1)))
        data = collect(rng, sys, 10, W=rng.standard_normal((2, 10)))
        with pytest.raises(NotInPiClass):
            DataGeometry.from_data(data, NoiseModel.noiseless(2, 10))

    def test_schur_matches_direct(self, example2):
        data, noise, _, _ = example2
        geo = DataGeometry.from_data(data, noise)
        N = build_N(data, noise)
        direct = N[:1, :1] - N[:1, 1:] @ np.linalg.pinv(N[1:, 1:]) @ N[1:, :1]
        assert np.allclose(geo.Q, direct, atol=1e-12)


@st.composite
def instances(draw):
    seed = draw(st.integers(0, 2**31))
    n = draw(st.integers(1, 3))
    m = draw(st.integers(1, 2))
    T = draw(st.integers(n + m, n + m + 6))
    kind = draw(st.sampled_from("KL"))
    rng = np.random.default_rng(seed)
    sys = LinearSystem(random_schur(rng, n), rng.standard_normal((n, m)))
    W = 0.1 * rng.standard_normal((n, T))
    data = collect(rng, sys, T, W)
    noise = NoiseModel.energy_bound(W @ W.T + 0.01 * np.eye(n), T)
    return rng, data, noise, kind


@settings(max_examples=40, deadline=None)
@given(instances())
def test_reduced_form_preserves_inertia(inst):
    rng, data, noise, kind = inst
    n, m = data.n, data.m
    geo = DataGeometry.from_data(data, noise)
    cols = n if kind == "K" else 1
    target = rng.standard_normal((n, cols))
    G = rng.standard_normal((m, cols))
    c2 = gain_column(kind, G, n, m)
    H = rng.standard_normal((n, n))
    D = H @ H.T * rng.uniform(0, 2)
    ginv = np.diag(rng.uniform(0.5, 2, cols))
    alpha = AffineExpr(np.array([[rng.uniform(0.01, 3)]]))
    lit = literal_matching_lmi(geo.N, target, c2, D, ginv, alpha).evaluate({})
    red = reduced_matching_lmi(geo, target, c2, D, ginv, alpha).evaluate({})
    assert lit.shape == red.shape
    tol_l = 1e-8 * max(1.0, np.linalg.norm(lit, 2))
    tol_r = 1e-8 * max(1.0, np.linalg.norm(red, 2))
    # eigenvalues near zero may drift across the threshold; compare strict parts
    pl, nl = inertia(lit, tol_l)
    pr, nr = inertia(red, tol_r)
    assert (nl == 0) == (nr == 0)
    assert (pl == lit.shape[0]) == (pr == red.shape[0])
