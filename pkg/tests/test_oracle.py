import numpy as np
import pytest

from ddmrc import aircraft
from ddmrc.approx_mrc import synthesize_approx
from ddmrc.models import ControllerGains, LinearSystem, MatchingTolerance
from ddmrc.oracle import (OracleReport, residual_noise, sample_consistent_systems,
                          sample_matching_set, stability_witness, verify_matching,
                          verify_stability)
from ddmrc.simulate import ExperimentConfig, noise_satisfies, simulate_closed_loop
from ddmrc.stability import synthesize_with_stability


@pytest.fixture(scope="module")
def aircraft_case():
    level = 0.5
    noise = aircraft.noise_model(level)
    cfg = ExperimentConfig(T=aircraft.T_DEFAULT, seed=3)
    data, _, _ = simulate_closed_loop(aircraft.system(), aircraft.collection_gains(), cfg, noise)
    res = synthesize_with_stability(data, noise, aircraft.reference_model(), "minimize")
    return data, noise, res


def test_consistent_samples_explain_data(aircraft_case):
    data, noise, _ = aircraft_case
    for s in sample_consistent_systems(data, noise, 30, seed=1):
        assert noise_satisfies(noise, residual_noise(data, s), slack=1e-9)


def test_certified_gains_pass(aircraft_case):
    data, noise, res = aircraft_case
    assert res.informative
    gains = ControllerGains(res.K, res.L)
    model = aircraft.reference_model()
    systems = sample_consistent_systems(data, noise, 100, seed=2)
    assert verify_matching(systems, gains, model, res.tolerance).matching_violations == 0
    assert verify_stability(systems, gains).stability_violations == 0
    inner = sample_matching_set(gains, model, res.tolerance, 100, seed=2)
    assert verify_stability(inner, gains).stability_violations == 0


def test_oracle_detects_understated_distance(aircraft_case):
    data, noise, res = aircraft_case
    tight = res.tolerance.with_distances(0.25 * res.D_A, 0.25 * res.D_B)
    systems = sample_consistent_systems(data, noise, 200, seed=5)
    rep = verify_matching(systems, ControllerGains(res.K, res.L), aircraft.reference_model(),
                          tight)
    assert rep.matching_violations > 0
    assert rep.witnesses and rep.witnesses[0]["kind"] == "matching"


def test_matching_samples_meet_both_bounds():
    rng = np.random.default_rng(0)
    model = aircraft.reference_model()
    gains = ControllerGains(rng.standard_normal((4, 3)), rng.standard_normal((4, 4)))
    tolm = MatchingTolerance(np.eye(3), np.eye(4), 0.01 * np.eye(3), 0.02 * np.eye(3))
    systems = sample_matching_set(gains, model, tolm, 50, seed=1)
    rep = verify_matching(systems, gains, model, tolm, tol=1e-8)
    assert rep.samples_checked == 50 and rep.matching_violations == 0


class TestExample2:
    def test_unit_system_closed_loop(self, example2):
        # (A, B) = (1, 1) explains the data exactly; with K = 0.1 the loop sits at 1.1
        sys = LinearSystem(np.array([[1.0]]), np.array([[1.0]]))
        rep = verify_stability([sys], ControllerGains([[0.1]], [[1.0]]))
        assert rep.worst_spectral_radius == pytest.approx(1.1, abs=1e-9)
        assert rep.stability_violations == 1

    def test_witness_on_unit_circle(self, example2):
        data, noise, model, tolm = example2
        gains = ControllerGains([[0.1]], [[1.0]])
        w = stability_witness(gains, model, tolm)
        assert w is not None
        assert abs(w.A[0, 0] + w.B[0, 0] * 0.1) == pytest.approx(1.0, abs=1e-9)
        assert verify_matching([w], gains, model, tolm, tol=1e-9).matching_violations == 0

    def test_no_witness_when_ts_holds(self, example2):
        _, _, model, tolm = example2
        small = tolm.with_distances([[0.005]], [[0.1]])
        assert stability_witness(ControllerGains([[0.1]], [[1.0]]), model, small) is None

    def test_synthesized_gains_fail_stability(self, example2):
        res = synthesize_approx(*example2)
        gains = ControllerGains(res.K, res.L)
        data, noise, model, tolm = example2
        systems = sample_consistent_systems(data, noise, 200, seed=0)
        assert verify_matching(systems, gains, model, tolm).matching_violations == 0
        w = stability_witness(gains, model, tolm)
        assert verify_stability([w], gains).stability_violations == 1


def test_report_merge_and_dict():
    a = OracleReport(3, 1, -0.5, 0, 0.7)
    b = OracleReport(2, 0, 0.1, 1, 1.2)
    m = a.merge(b)
    assert (m.samples_checked, m.matching_violations, m.stability_violations) == (5, 1, 1)
    assert m.worst_matching_margin == -0.5 and m.worst_spectral_radius == 1.2
    d = m.to_dict()
    assert d["inclusion_verdict"] is False
    assert OracleReport().to_dict()["worst_matching_margin"] is None
