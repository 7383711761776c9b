"""Discrete-time aircraft benchmark (sampling time 0.01) and its noise model."""
from __future__ import annotations

import numpy as np

from .models import ControllerGains, LinearSystem, MatchingTolerance, ReferenceModel
from .qmi import NoiseModel

A_S = np.array([[0.9810, 0.0098, 0.0],
                [0.1172, 0.9737, 0.0],
                [0.0, 0.01, 1.0]])
B_S = np.array([[-0.0024, -0.0017, 0.0, -0.0020],
                [-0.4621, -0.3160, 0.2240, -0.3118],
                [0.0, 0.0, 0.0, 0.0]])
A_M = np.array([[0.98, 0.0065, -0.0075],
                [-0.0767, 0.2964, -1.5178],
                [0.0, 0.01, 1.0]])
B_M = B_S.copy()
K0 = np.array([[0.7477, -0.0511, 0.4806],
               [0.7160, 0.3976, -0.0423],
               [0.2418, -0.1610, -0.8422],
               [0.3790, -0.5398, -0.4469]])
L0 = np.array([[0.7109, -0.2894, 0.6691, 0.1629],
               [-0.5317, 0.6292, 0.5491, 0.5267],
               [0.5001, 0.7104, -0.1839, 0.4843],
               [0.2632, 0.5693, 0.1066, -0.7163]])
T_DEFAULT = 100

# success rates over 200 datasets per level, levels 1.1 .. 2.0
REPORTED_SUCCESS = {1.1: 0.99, 1.2: 0.98, 1.3: 0.875, 1.4: 0.71, 1.5: 0.54,
                    1.6: 0.355, 1.7: 0.155, 1.8: 0.11, 1.9: 0.04, 2.0: 0.015}


def system() -> LinearSystem:
    return LinearSystem(A_S.copy(), B_S.copy())


def reference_model() -> ReferenceModel:
    return ReferenceModel(A_M.copy(), B_M.copy())


def collection_gains() -> ControllerGains:
    return ControllerGains(K0.copy(), L0.copy())


def phi11(level: float) -> np.ndarray:
    w2 = float(level) ** 2
    return np.diag([0.001 * w2, 10.0 * w2, 0.0])


def noise_model(level: float, T: int = T_DEFAULT) -> NoiseModel:
    return NoiseModel.energy_bound(phi11(level), T)


def tolerance_weights() -> MatchingTolerance:
    return MatchingTolerance(np.eye(3), np.eye(4))
