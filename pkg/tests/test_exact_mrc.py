import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddmrc.approx_mrc import Verdict
from ddmrc.exact_mrc import (check_certificate, check_exact_informativity,
                             check_exact_informativity_lmi)
from ddmrc.models import DataSet, ReferenceModel

from conftest import example_one, noiseless_instance

EXAMPLE1 = example_one()

# hand-derived: every system explaining the first example's data, a and b free
def consistent_family(a, b):
    A = np.array([[a - 0.5, -a + 0.5], [b, -b + 1.0]])
    B = np.array([[-a, a], [-b, b - 1.0]])
    return A, B

V1_HAND = np.array([[1.0, 0.0], [0.0, -0.5], [-1.0, 1.0]])
V2_HAND = np.array([[0.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
K_HAND = np.array([[1.0, 0.5], [0.0, 1.5]])
L_HAND = np.array([[0.0, -1.0], [0.0, -1.0]])


def test_family_explains_data(example1):
    data, _ = example1
    for a, b in [(0, 0), (1.3, -2), (-4, 0.25)]:
        A, B = consistent_family(a, b)
        assert np.allclose(data.X_plus, A @ data.X_minus + B @ data.U_minus)


def test_hand_certificate(example1):
    data, model = example1
    assert check_certificate(data, model, V1_HAND, V2_HAND, K_HAND, L_HAND)
    assert not check_certificate(data, model, V1_HAND, V2_HAND, K_HAND + 0.1, L_HAND)


@settings(max_examples=20, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_linear_route_gains_match_family(a, b):
    data, model = EXAMPLE1
    res = check_exact_informativity(data, model)
    assert res.verdict is Verdict.INFORMATIVE
    c = res.certificate
    assert check_certificate(data, model, c.V1, c.V2, c.K, c.L)
    A, B = consistent_family(a, b)
    assert np.allclose(A + B @ c.K, model.A_m, atol=1e-9)
    assert np.allclose(B @ c.L, model.B_m, atol=1e-9)


def test_lmi_route_on_example1(example1):
    data, model = example1
    res = check_exact_informativity_lmi(data, model)
    assert res.verdict is Verdict.INFORMATIVE
    for a, b in [(0.0, 0.0), (2.0, -1.0)]:
        A, B = consistent_family(a, b)
        assert np.allclose(A + B @ res.K, model.A_m, atol=1e-6)
        assert np.allclose(B @ res.L, model.B_m, atol=1e-6)


def test_unreachable_model(example1):
    data, _ = example1
    model = ReferenceModel(np.array([[0.3, 0.0], [0.0, 0.2]]), np.eye(2))
    assert check_exact_informativity(data, model).verdict is Verdict.NOT_INFORMATIVE
    assert check_exact_informativity_lmi(data, model).verdict is Verdict.NOT_INFORMATIVE


def test_dimension_mismatch(example1):
    data, _ = example1
    with pytest.raises(Exception):
        check_exact_informativity(data, ReferenceModel(np.eye(3), np.ones((3, 1))))


@pytest.mark.parametrize("seed", range(8))
def test_routes_agree(seed):
    data, model = noiseless_instance(np.random.default_rng(100 + seed))
    lin = check_exact_informativity(data, model)
    lmi = check_exact_informativity_lmi(data, model)
    assert lin.verdict is lmi.verdict


def test_to_dict(example1):
    d = check_exact_informativity(*example1).to_dict()
    assert d["verdict"] == "Informative"
    assert np.array(d["K"]).shape == (2, 2)
