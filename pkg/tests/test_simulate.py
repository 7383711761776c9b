import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddmrc import aircraft
from ddmrc.errors import SchemaError, UnstableExperiment
from ddmrc.linalg import spectral_radius
from ddmrc.models import ControllerGains, LinearSystem, ReferenceModel
from ddmrc.qmi import NoiseModel, QmiSpec
from ddmrc.simulate import (ExperimentConfig, generate_noise, noise_satisfies,
                            simulate_closed_loop, tracking_error_run, trajectory_csv)

from conftest import random_schur


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 4), st.integers(1, 30), st.integers(0, 2))
def test_noise_respects_energy_bound(seed, n, T, drop):
    rng = np.random.default_rng(seed)
    H = rng.standard_normal((n, max(n - drop, 0)))
    P11 = H @ H.T
    noise = NoiseModel.energy_bound(P11, T)
    W = generate_noise(noise, T, seed)
    assert W.shape == (n, T)
    assert noise_satisfies(noise, W)
    # nothing leaves the range of Phi11
    w, V = np.linalg.eigh(P11)
    K = V[:, w <= 1e-10 * max(1.0, w.max())]
    assert np.allclose(K.T @ W, 0, atol=1e-10)


def test_noise_energy_target():
    P11 = np.diag([2.0, 0.5])
    W = generate_noise(NoiseModel.energy_bound(P11, 500), seed=3)
    # long horizons give nearly orthogonal rows, so no rescaling happens
    assert np.allclose(np.sum(W * W, axis=1), 0.9 * np.diag(P11))


def test_aircraft_noise_has_silent_third_state():
    W = generate_noise(aircraft.noise_model(1.0), seed=0)
    assert not np.any(W[2])
    assert np.linalg.eigvalsh(aircraft.phi11(1.0) - W @ W.T)[0] >= -1e-12


def test_general_phi_uses_sampler():
    # [I; W^T]^T Phi [I; W^T] with an off-centre ellipsoid
    T = 3
    c = np.ones((T, 1))
    S = np.eye(T)
    pi = np.block([[np.array([[1.0]]) - c.T @ S @ c, c.T @ S], [S @ c, -S]])
    noise = NoiseModel(QmiSpec(pi, 1, T))
    W = generate_noise(noise, seed=4)
    assert noise_satisfies(noise, W)


def test_noise_horizon_mismatch():
    with pytest.raises(Exception):
        generate_noise(NoiseModel.energy_bound(np.eye(1), 5), T=4)


class TestClosedLoop:
    def test_data_obey_dynamics(self):
        sys = aircraft.system()
        cfg = ExperimentConfig(T=50, seed=7, K0=aircraft.K0, L0=aircraft.L0)
        data, W, r = simulate_closed_loop(sys, aircraft.collection_gains(), cfg,
                                          aircraft.noise_model(0.5, 50))
        assert np.allclose(data.X_plus, sys.A @ data.X_minus + sys.B @ data.U_minus + W)
        assert np.allclose(data.U_minus, aircraft.K0 @ data.X_minus + aircraft.L0 @ r)

    def test_seeded(self):
        sys, g = aircraft.system(), aircraft.collection_gains()
        a = simulate_closed_loop(sys, g, ExperimentConfig(T=20, seed=1))[0]
        b = simulate_closed_loop(sys, g, ExperimentConfig(T=20, seed=1))[0]
        c = simulate_closed_loop(sys, g, ExperimentConfig(T=20, seed=2))[0]
        assert np.array_equal(a.X, b.X)
        assert not np.array_equal(a.X, c.X)

    def test_blowup(self):
        sys = LinearSystem(np.array([[3.0]]), np.array([[1.0]]))
        g = ControllerGains(np.zeros((1, 1)), np.zeros((1, 1)))
        with pytest.raises(UnstableExperiment):
            simulate_closed_loop(sys, g, ExperimentConfig(T=100, x0=[1.0]))

    def test_explicit_reference(self):
        sys = LinearSystem(np.array([[0.5]]), np.array([[1.0]]))
        g = ControllerGains(np.zeros((1, 1)), np.ones((1, 1)))
        cfg = ExperimentConfig(T=3, x0=[0.0], reference=np.array([[1.0, 2.0, 3.0]]))
        data, _, _ = simulate_closed_loop(sys, g, cfg)
        assert np.allclose(data.X[0], [0.0, 1.0, 2.5, 4.25])


class TestTracking:
    @pytest.mark.parametrize("seed", range(5))
    def test_exact_match_error_follows_reference_dynamics(self, seed):
        rng = np.random.default_rng(seed)
        n, m = 3, 2
        A_m = random_schur(rng, n)
        B = rng.standard_normal((n, m))
        K = rng.standard_normal((m, n))
        L = rng.standard_normal((m, 1))
        sys = LinearSystem(A_m - B @ K, B)
        model = ReferenceModel(A_m, B @ L)
        run = tracking_error_run(sys, ControllerGains(K, L), model,
                                 ExperimentConfig(seed=seed), steps=40)
        e0 = run["e"][:, 0]
        expect = np.column_stack([np.linalg.matrix_power(A_m, t) @ e0 for t in range(41)])
        assert np.allclose(run["e"], expect, atol=1e-10)

    def test_csv(self, tmp_path):
        sys = LinearSystem(np.array([[0.5]]), np.array([[1.0]]))
        model = ReferenceModel(np.array([[0.5]]), np.array([[1.0]]))
        run = tracking_error_run(sys, ControllerGains(np.zeros((1, 1)), np.ones((1, 1))),
                                 model, ExperimentConfig(), steps=4)
        text = trajectory_csv(run, tmp_path / "run.csv")
        lines = text.strip().splitlines()
        assert lines[0] == "t,x_1,u_1,r_1,e_1"
        assert len(lines) == 6
        assert (tmp_path / "run.csv").read_text() == text


class TestConfig:
    def test_trial_seed(self):
        assert ExperimentConfig(seed=10, trials=5).trial(3).seed == 13

    def test_round_trip(self):
        cfg = ExperimentConfig(T=7, K0=np.eye(2), x0=np.ones(2))
        back = ExperimentConfig.from_dict(cfg.to_dict())
        assert back.T == 7 and np.array_equal(back.K0, np.eye(2))

    def test_rejects_unknown_keys(self):
        with pytest.raises(SchemaError):
            ExperimentConfig.from_dict({"T": 5, "horizon": 9})

    @pytest.mark.parametrize("bad", [{"T": 0}, {"trials": 0}, {"noise_level": -1.0},
                                     {"energy_fraction": 1.5}])
    def test_validation(self, bad):
        with pytest.raises(SchemaError):
            ExperimentConfig(**bad)


def test_aircraft_collection_gains_stabilize():
    sys, g = aircraft.system(), aircraft.collection_gains()
    assert spectral_radius(sys.A) > 1.0
    assert spectral_radius(sys.A + sys.B @ g.K) < 1.0
    data, _, _ = simulate_closed_loop(sys, g, ExperimentConfig(T=100, seed=0))
    assert np.all(np.isfinite(data.X)) and np.abs(data.X).max() < 1e3
