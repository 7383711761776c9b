import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddmrc.errors import NotInPiClass
from ddmrc.qmi import (Kind, NoiseModel, QmiSpec, in_pi_class, lift_point, membership,
                       pi_class_report, qmi_value, sample_solutions)


def structured_pi(rng, q, r, kernel=0, q_rank=None):
    """Pi with centre Zc, -Pi22 = S (rank r - kernel) and Schur complement Q."""
    Zc = rng.standard_normal((r, q))
    G = rng.standard_normal((r, r - kernel))
    S = G @ G.T
    H = rng.standard_normal((q, q if q_rank is None else q_rank))
    Q = H @ H.T
    pi = np.block([[Q - Zc.T @ S @ Zc, Zc.T @ S], [S @ Zc, -S]])
    return QmiSpec(pi, q, r), Zc, S, Q


@st.composite
def specs(draw):
    seed = draw(st.integers(0, 2**31))
    q = draw(st.integers(1, 3))
    r = draw(st.integers(1, 4))
    kernel = draw(st.integers(0, r - 1))
    rng = np.random.default_rng(seed)
    return structured_pi(rng, q, r, kernel)


class TestScalarDisc:
    # [I; z]^T diag(1, -1) [I; z] = 1 - z^2
    spec = QmiSpec(np.diag([1.0, -1.0]), 1, 1)

    def test_value(self):
        assert qmi_value(self.spec, [[0.5]])[0, 0] == pytest.approx(0.75)

    @pytest.mark.parametrize("z, kind, expected", [
        (0.5, Kind.NON_STRICT, True), (0.5, Kind.STRICT, True), (0.5, Kind.ZERO, False),
        (1.0, Kind.NON_STRICT, True), (1.0, Kind.STRICT, False), (1.0, Kind.ZERO, True),
        (2.0, Kind.NON_STRICT, False),
    ])
    def test_membership(self, z, kind, expected):
        assert membership(self.spec, [[z]], kind) is expected

    def test_center_and_schur(self):
        assert np.allclose(self.spec.center(), 0)
        assert np.allclose(self.spec.schur(), [[1.0]])


class TestPiClass:
    def test_positive_pi22_rejected(self):
        rep = pi_class_report(QmiSpec(np.diag([1.0, 1.0]), 1, 1))
        assert rep["pi22_nsd"] is False

    def test_kernel_condition(self):
        # Pi22 = 0 while Pi12 != 0
        pi = np.array([[1.0, 1.0], [1.0, 0.0]])
        rep = pi_class_report(QmiSpec(pi, 1, 1))
        assert rep["kernel"] is False
        assert not in_pi_class(QmiSpec(pi, 1, 1))

    def test_negative_schur(self):
        assert not in_pi_class(QmiSpec(np.diag([-1.0, -1.0]), 1, 1))

    def test_sampler_rejects(self):
        with pytest.raises(NotInPiClass):
            sample_solutions(QmiSpec(np.diag([1.0, 1.0]), 1, 1), 3)

    @settings(max_examples=30, deadline=None)
    @given(specs())
    def test_structured_is_in_class(self, s):
        spec, Zc, S, Q = s
        assert in_pi_class(spec)
        assert np.allclose(spec.center() @ np.eye(spec.q), Zc - _kernel_part(S, Zc), atol=1e-6)


def _kernel_part(S, Z):
    # the centre is only determined up to ker S; pinv picks the range component
    w, V = np.linalg.eigh(S)
    K = V[:, w <= 1e-9 * max(1.0, w.max())]
    return K @ (K.T @ Z)


class TestSampler:
    def test_zero_count(self):
        assert sample_solutions(QmiSpec(np.diag([1.0, -1.0]), 1, 1), 0) == []

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        spec = structured_pi(rng, 2, 3, 1)[0]
        a = sample_solutions(spec, 5, 11)
        b = sample_solutions(spec, 5, 11)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    @settings(max_examples=25, deadline=None)
    @given(specs(), st.integers(0, 1000))
    def test_samples_are_members(self, s, seed):
        spec = s[0]
        for Z in sample_solutions(spec, 10, seed):
            V = qmi_value(spec, Z)
            scale = max(1.0, np.linalg.norm(spec.pi, 2)) * (1 + np.sum(Z * Z))
            assert np.linalg.eigvalsh(V)[0] >= -1e-9 * scale

    def test_boundary_share(self):
        rng = np.random.default_rng(3)
        spec = structured_pi(rng, 2, 2)[0]
        Zs = sample_solutions(spec, 10, 1, boundary_fraction=0.5)
        on_boundary = [abs(np.linalg.eigvalsh(qmi_value(spec, Z))[0]) < 1e-8 for Z in Zs]
        assert on_boundary[:5] == [True] * 5
        assert not any(on_boundary[5:])


class TestLift:
    @settings(max_examples=30, deadline=None)
    @given(specs(), st.integers(0, 1000))
    def test_lift_interpolates(self, s, seed):
        spec, Zc, S, Q = s
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(spec.q)
        # y inside the scalar ellipse: (y - Zc x)^T S (y - Zc x) <= x^T Q x
        d = rng.standard_normal(spec.r)
        dSd = d @ S @ d
        xQx = x @ Q @ x
        if dSd > 0:
            d *= np.sqrt(xQx / dSd) * rng.uniform(0, 1)
        y = Zc @ x + d
        Z = lift_point(spec, x, y)
        assert np.allclose(Z @ x, y, atol=1e-7 * (1 + np.linalg.norm(y)))
        V = qmi_value(spec, Z)
        scale = max(1.0, np.linalg.norm(spec.pi, 2)) * (1 + np.sum(Z * Z))
        assert np.linalg.eigvalsh(V)[0] >= -1e-8 * scale

    def test_lift_rejects_outside(self):
        spec = QmiSpec(np.diag([1.0, -1.0]), 1, 1)
        with pytest.raises(ValueError):
            lift_point(spec, [1.0], [2.0])


class TestNoiseModel:
    def test_energy_bound_blocks(self):
        nm = NoiseModel.energy_bound(np.diag([2.0, 3.0]), 4)
        assert (nm.n, nm.T) == (2, 4)
        assert nm.is_energy_bound()

    def test_noiseless_admits_only_zero(self):
        nm = NoiseModel.noiseless(2, 3)
        assert membership(nm.phi, np.zeros((3, 2)))
        assert not membership(nm.phi, np.ones((3, 2)))

    def test_round_trip(self):
        nm = NoiseModel.energy_bound(np.diag([2.0, 0.0]), 3)
        back = NoiseModel.from_dict(nm.to_dict())
        assert np.array_equal(back.phi.pi, nm.phi.pi)
