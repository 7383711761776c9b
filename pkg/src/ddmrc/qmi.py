"""Quadratic matrix inequalities ``[I; Z]^T Pi [I; Z] >= 0``.

A ``QmiSpec`` holds a symmetric ``Pi`` split after ``q`` rows.  Besides
evaluation and membership tests this module provides the two constructive
tools the rest of the package leans on:

* ``sample_solutions`` draws points from the solution set using the
  decomposition ``QMI(Z) = Q - (Z - Z*)^T S (Z - Z*)`` with
  ``Z* = -Pi22^+ Pi21``, ``S = -Pi22`` and ``Q = Pi | Pi22``;
* ``lift_point`` turns a vector pair ``(x, y)`` satisfying the scalar
  inequality into a full solution ``Z`` with ``Z x = y``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .config import DEFAULT, NumericConfig
from .errors import DimensionError, NotInPiClass


class Kind(enum.Enum):
    NON_STRICT = "NonStrict"
    ZERO = "Zero"
    STRICT = "Strict"


@dataclass(frozen=True)
class QmiSpec:
    pi: np.ndarray
    q: int
    r: int

    def __post_init__(self):
        pi = la.symmetrize(self.pi, name="pi")
        if pi.shape != (self.q + self.r, self.q + self.r):
            raise DimensionError(
                f"pi has shape {pi.shape}, expected {(self.q + self.r,) * 2}")
        if self.q < 1 or self.r < 0:
            raise DimensionError("q must be positive and r non-negative")
        pi.setflags(write=False)
        object.__setattr__(self, "pi", pi)

    @property
    def blocks(self):
        q = self.q
        P = self.pi
        return P[:q, :q], P[:q, q:], P[q:, :q], P[q:, q:]

    def center(self, rank_tol: float = DEFAULT.rank_tol) -> np.ndarray:
        """Z* = -Pi22^+ Pi21, the maximizer of the QMI value."""
        _, _, P21, P22 = self.blocks
        return -la.pinv(P22, rank_tol) @ P21

    def schur(self, rank_tol: float = DEFAULT.rank_tol) -> np.ndarray:
        """Pi | Pi22."""
        if self.r == 0:
            return self.pi.copy()
        return la.schur_complement(self.pi, self.q, rank_tol)

    def to_dict(self) -> dict:
        return {"q": self.q, "r": self.r, "pi": self.pi.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "QmiSpec":
        pi = d["pi"]
        if isinstance(pi, str):
            pi = la.parse_matrix_csv(pi)
        return cls(np.asarray(pi, dtype=float), int(d["q"]), int(d["r"]))


@dataclass(frozen=True)
class NoiseModel:
    """Noise bound ``[I; W^T]^T Phi [I; W^T] >= 0`` on the n x T noise matrix."""

    phi: QmiSpec

    @property
    def n(self) -> int:
        return self.phi.q

    @property
    def T(self) -> int:
        return self.phi.r

    @classmethod
    def energy_bound(cls, phi11, T: int) -> "NoiseModel":
        """Phi = diag(Phi11, -I_T), i.e. W W^T <= Phi11."""
        phi11 = la.as_matrix(phi11)
        n = phi11.shape[0]
        return cls(QmiSpec(la.block_diag(phi11, -np.eye(T)), n, T))

    @classmethod
    def noiseless(cls, n: int, T: int) -> "NoiseModel":
        return cls.energy_bound(np.zeros((n, n)), T)

    def is_energy_bound(self, tol: float = 1e-12) -> bool:
        _, P12, _, P22 = self.phi.blocks
        return (np.all(np.abs(P12) <= tol)
                and np.allclose(P22, -np.eye(self.T), atol=tol, rtol=0))

    def to_dict(self) -> dict:
        return self.phi.to_dict()

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseModel":
        return cls(QmiSpec.from_dict(d))


def _check_Z(spec: QmiSpec, Z) -> np.ndarray:
    Z = la.as_matrix(Z, "Z")
    if Z.shape != (spec.r, spec.q):
        raise DimensionError(f"Z must be {spec.r}x{spec.q}, got {Z.shape}")
    return Z


def qmi_value(spec: QmiSpec, Z) -> np.ndarray:
    """[I; Z]^T Pi [I; Z] (q x q, symmetric)."""
    Z = _check_Z(spec, Z)
    P11, P12, P21, P22 = spec.blocks
    V = P11 + P12 @ Z + Z.T @ P21 + Z.T @ P22 @ Z
    return 0.5 * (V + V.T)


def membership(spec: QmiSpec, Z, kind: Kind = Kind.NON_STRICT,
               tol: float = DEFAULT.psd_tol) -> bool:
    cls = la.classify_definiteness(qmi_value(spec, Z), tol)
    if kind is Kind.NON_STRICT:
        return cls.is_psd
    if kind is Kind.ZERO:
        return cls is la.Definiteness.ZERO
    return cls is la.Definiteness.POSITIVE_DEFINITE


def pi_class_report(spec: QmiSpec, tol: float = DEFAULT.psd_tol,
                    cfg: NumericConfig = DEFAULT) -> dict:
    """The three structural conditions, evaluated separately."""
    _, P12, _, P22 = spec.blocks
    if spec.r == 0:
        return {"pi22_nsd": True, "kernel": True,
                "schur_psd": la.classify_definiteness(spec.pi, tol).is_psd}
    nsd = la.classify_definiteness(P22, tol).is_nsd
    ker = la.kernel_contained(P22, P12, tol=max(tol, 1e-8), rank_tol=cfg.rank_tol)
    psd = la.classify_definiteness(spec.schur(cfg.rank_tol), tol).is_psd
    return {"pi22_nsd": bool(nsd), "kernel": bool(ker), "schur_psd": bool(psd)}


def in_pi_class(spec: QmiSpec, tol: float = DEFAULT.psd_tol,
                cfg: NumericConfig = DEFAULT) -> bool:
    return all(pi_class_report(spec, tol, cfg).values())


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _unit_singular_values(M: np.ndarray) -> np.ndarray:
    U, _, Vt = np.linalg.svd(M, full_matrices=False)
    return U @ Vt


def sample_solutions(spec: QmiSpec, count: int, rng_seed=0,
                     boundary_fraction: float = 0.5,
                     excursion: float | None = None,
                     cfg: NumericConfig = DEFAULT) -> list[np.ndarray]:
    """Draw ``count`` solutions of the QMI.

    Each sample is ``Z* + S^{+/2} G Q^{1/2} + K_S H``.  ``G`` lives in the
    range of S with ``G^T G <= I``; for the first
    ``round(boundary_fraction * count)`` samples all its singular values
    equal one, which puts the sample on the boundary of the solution set.
    ``K_S`` spans ker S and the coefficient ``H`` has Frobenius norm at most
    ``excursion`` (default ``10 ||Z*|| + 1``).
    """
    if not in_pi_class(spec, cfg.psd_tol, cfg):
        raise NotInPiClass("QMI matrix is not in the sampling class")
    if count <= 0:
        return []
    Zc = spec.center(cfg.rank_tol)
    S = -spec.blocks[3]
    Q = spec.schur(cfg.rank_tol)
    S_ih = la.psd_sqrt(S, cfg.psd_tol, inverse=True)
    Q_h = la.psd_sqrt(Q, cfg.psd_tol)
    RS = la.range_basis(S, cfg.rank_tol)
    KS = la.kernel_basis(S, cfg.rank_tol)
    return sample_from_factors(Zc, S_ih, RS, KS, Q_h, count, rng_seed,
                               boundary_fraction, excursion)


def sample_from_factors(Zc, S_ih, RS, KS, Q_h, count: int, rng_seed=0,
                        boundary_fraction: float = 0.5,
                        excursion: float | None = None) -> list[np.ndarray]:
    """The sampler of :func:`sample_solutions` on precomputed factors.

    ``Zc`` is the r x q centre, ``S_ih`` the pseudo-inverse square root of S,
    ``RS`` / ``KS`` orthonormal bases of its range / kernel and ``Q_h`` the
    square root of the Schur complement.
    """
    if count <= 0:
        return []
    rng = _rng(rng_seed)
    q = Q_h.shape[0]
    if excursion is None:
        excursion = 10.0 * np.linalg.norm(Zc, 2) + 1.0
    n_boundary = int(round(boundary_fraction * count))

    out = []
    for i in range(count):
        Z = Zc.copy()
        if RS.shape[1] > 0:
            Gt = _unit_singular_values(rng.standard_normal((RS.shape[1], q)))
            if i >= n_boundary:
                U, _, Vt = np.linalg.svd(Gt, full_matrices=False)
                Gt = (U * rng.uniform(0.0, 1.0, size=U.shape[1])) @ Vt
            Z = Z + S_ih @ (RS @ Gt) @ Q_h
        if KS.shape[1] > 0:
            H = rng.standard_normal((KS.shape[1], q))
            nh = np.linalg.norm(H)
            if nh > 0:
                H *= excursion * rng.uniform(0.0, 1.0) / nh
            Z = Z + KS @ H
        out.append(Z)
    return out


def lift_point(spec: QmiSpec, x, y, cfg: NumericConfig = DEFAULT) -> np.ndarray:
    """A solution Z of the QMI with ``Z x = y``.

    Requires ``[x; y]^T Pi [x; y] >= 0`` (up to tolerance) and the Pi-class
    structure.  With ``d = y - Z* x`` split into its range(S) part ``d_r`` and
    kernel part ``d_k``, the returned matrix is
    ``Z* + S^{+/2} f (Q x)^T / (x^T Q x) + d_k x^T / (x^T x)`` where
    ``f = S^{1/2} d_r``.  Cauchy-Schwarz bounds the quadratic term by Q.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size != spec.q or y.size != spec.r:
        raise DimensionError("lift_point: x must have length q and y length r")
    if not in_pi_class(spec, cfg.psd_tol, cfg):
        raise NotInPiClass("lift_point needs a Pi-class QMI")
    xx = float(x @ x)
    if xx == 0:
        raise ValueError("lift_point needs a non-zero x")
    Zc = spec.center(cfg.rank_tol)
    S = -spec.blocks[3]
    Q = spec.schur(cfg.rank_tol)
    d = y - Zc @ x
    RS = la.range_basis(S, cfg.rank_tol)
    d_r = RS @ (RS.T @ d)
    d_k = d - d_r
    Z = Zc + np.outer(d_k, x) / xx
    xQx = float(x @ Q @ x)
    dSd = float(d_r @ S @ d_r)
    scale = max(1.0, np.linalg.norm(Q, 2), np.linalg.norm(S, 2)) * (xx + float(d @ d))
    if dSd > xQx + cfg.psd_tol * scale:
        raise ValueError("lift_point: (x, y) violates the scalar inequality")
    if xQx > 0 and dSd > 0:
        f = la.psd_sqrt(S, cfg.psd_tol) @ d_r
        S_ih = la.psd_sqrt(S, cfg.psd_tol, inverse=True)
        Z = Z + S_ih @ np.outer(f, Q @ x) / xQx
    return Z
