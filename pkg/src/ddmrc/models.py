"""Plain data containers shared across the package."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .errors import DimensionError, InputError


def _frozen(M, name):
    M = la.as_matrix(M, name)
    M.setflags(write=False)
    return M


@dataclass(frozen=True)
class DataSet:
    """State samples X = [x(0) ... x(T)] and inputs U_minus = [u(0) ... u(T-1)]."""

    X: np.ndarray
    U_minus: np.ndarray

    def __post_init__(self):
        X = _frozen(self.X, "X")
        U = _frozen(self.U_minus, "U_minus")
        if X.shape[1] != U.shape[1] + 1:
            raise DimensionError(
                f"X has {X.shape[1]} columns, expected U_minus columns + 1 = {U.shape[1] + 1}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "U_minus", U)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.U_minus.shape[0]

    @property
    def T(self) -> int:
        return self.U_minus.shape[1]

    @property
    def X_plus(self) -> np.ndarray:
        return self.X[:, 1:]

    @property
    def X_minus(self) -> np.ndarray:
        return self.X[:, :-1]

    def to_dict(self) -> dict:
        return {"X": self.X.tolist(), "U_minus": self.U_minus.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "DataSet":
        return cls(np.array(d["X"], dtype=float), np.array(d["U_minus"], dtype=float))


@dataclass(frozen=True)
class ReferenceModel:
    """Desired closed loop x_m(t+1) = A_m x_m(t) + B_m r(t)."""

    A_m: np.ndarray
    B_m: np.ndarray
    require_schur: bool = True

    def __post_init__(self):
        A = _frozen(self.A_m, "A_m")
        B = _frozen(self.B_m, "B_m")
        if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0]:
            raise DimensionError(f"A_m {A.shape} and B_m {B.shape} are inconsistent")
        if self.require_schur and la.spectral_radius(A) >= 1.0:
            raise InputError("A_m must be Schur (spectral radius < 1)")
        object.__setattr__(self, "A_m", A)
        object.__setattr__(self, "B_m", B)

    @property
    def n(self) -> int:
        return self.A_m.shape[0]

    @property
    def p(self) -> int:
        return self.B_m.shape[1]

    def check_against(self, data: DataSet) -> None:
        if data.n != self.n:
            raise DimensionError(f"data has n={data.n}, model has n={self.n}")
        if self.p > data.m:
            raise DimensionError(f"model needs p={self.p} <= m={data.m}")

    def to_dict(self) -> dict:
        return {"A_m": self.A_m.tolist(), "B_m": self.B_m.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ReferenceModel":
        return cls(np.array(d["A_m"], dtype=float), np.array(d["B_m"], dtype=float))


def _diag_pd(G, name) -> np.ndarray:
    G = _frozen(G, name)
    if G.shape[0] != G.shape[1] or np.any(G - np.diag(np.diag(G))):
        raise InputError(f"{name} must be diagonal")
    if np.any(np.diag(G) <= 0):
        raise InputError(f"{name} must have positive diagonal entries")
    return G


@dataclass(frozen=True)
class MatchingTolerance:
    """Distance bounds (A + BK - A_m) Gamma_A (.)^T <= D_A and
    (BL - B_m) Gamma_B (.)^T <= D_B.  ``D_A``/``D_B`` may be ``None`` when
    they are decision variables."""

    Gamma_A: np.ndarray
    Gamma_B: np.ndarray
    D_A: np.ndarray | None = None
    D_B: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "Gamma_A", _diag_pd(self.Gamma_A, "Gamma_A"))
        object.__setattr__(self, "Gamma_B", _diag_pd(self.Gamma_B, "Gamma_B"))
        for name in ("D_A", "D_B"):
            D = getattr(self, name)
            if D is None:
                continue
            D = la.symmetrize(D, name=name)
            if not la.classify_definiteness(D).is_psd:
                raise InputError(f"{name} must be positive semidefinite")
            D.setflags(write=False)
            object.__setattr__(self, name, D)

    @property
    def fixed(self) -> bool:
        return self.D_A is not None and self.D_B is not None

    @property
    def is_zero(self) -> bool:
        return self.fixed and not np.any(self.D_A) and not np.any(self.D_B)

    @classmethod
    def identity(cls, n: int, p: int, D_A=None, D_B=None) -> "MatchingTolerance":
        return cls(np.eye(n), np.eye(p), D_A, D_B)

    def with_distances(self, D_A, D_B) -> "MatchingTolerance":
        return MatchingTolerance(self.Gamma_A, self.Gamma_B, D_A, D_B)

    def to_dict(self) -> dict:
        d = {"Gamma_A": self.Gamma_A.tolist(), "Gamma_B": self.Gamma_B.tolist()}
        if self.D_A is not None:
            d["D_A"] = self.D_A.tolist()
        if self.D_B is not None:
            d["D_B"] = self.D_B.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MatchingTolerance":
        get = lambda k: None if d.get(k) is None else np.array(d[k], dtype=float)
        return cls(get("Gamma_A"), get("Gamma_B"), get("D_A"), get("D_B"))


@dataclass(frozen=True)
class LinearSystem:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = _frozen(self.A, "A")
        B = _frozen(self.B, "B")
        if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0]:
            raise DimensionError(f"A {A.shape} and B {B.shape} are inconsistent")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "B": self.B.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "LinearSystem":
        return cls(np.array(d["A"], dtype=float), np.array(d["B"], dtype=float))


@dataclass(frozen=True)
class ControllerGains:
    """u = K x + L r."""

    K: np.ndarray
    L: np.ndarray

    def __post_init__(self):
        K = _frozen(self.K, "K")
        L = _frozen(self.L, "L")
        if K.shape[0] != L.shape[0]:
            raise DimensionError(f"K {K.shape} and L {L.shape} have different row counts")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "L", L)

    def to_dict(self) -> dict:
        return {"K": self.K.tolist(), "L": self.L.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ControllerGains":
        return cls(np.array(d["K"], dtype=float), np.array(d["L"], dtype=float))
