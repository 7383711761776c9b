"""Brute-force checks of what the LMI certificates claim.

Systems are drawn from the consistent set (the QMI with matrix N) and from
the matching set (the two distance QMIs), on and inside the boundary, and
checked one by one.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .config import DEFAULT, NumericConfig
from .errors import NotInPiClass
from .lmi import DataGeometry
from .models import ControllerGains, DataSet, LinearSystem, MatchingTolerance, ReferenceModel
from .qmi import NoiseModel, QmiSpec, lift_point, qmi_value, sample_from_factors, sample_solutions
from .stability import closed_loop_spec, ts_matrix

__all__ = ["OracleReport", "sample_consistent_systems", "sample_matching_set",
           "verify_matching", "verify_stability", "stability_witness", "residual_noise"]


@dataclass
class OracleReport:
    samples_checked: int = 0
    matching_violations: int = 0
    worst_matching_margin: float = np.inf
    stability_violations: int = 0
    worst_spectral_radius: float = 0.0
    witnesses: list = field(default_factory=list)
    max_witnesses: int = 10

    @property
    def inclusion_verdict(self) -> bool:
        return self.matching_violations == 0 and self.stability_violations == 0

    def merge(self, other: "OracleReport") -> "OracleReport":
        out = OracleReport(
            self.samples_checked + other.samples_checked,
            self.matching_violations + other.matching_violations,
            min(self.worst_matching_margin, other.worst_matching_margin),
            self.stability_violations + other.stability_violations,
            max(self.worst_spectral_radius, other.worst_spectral_radius),
            max_witnesses=self.max_witnesses)
        out.witnesses = (self.witnesses + other.witnesses)[: self.max_witnesses]
        return out

    def to_dict(self) -> dict:
        margin = self.worst_matching_margin
        return {
            "samples_checked": self.samples_checked,
            "matching_violations": self.matching_violations,
            "worst_matching_margin": None if not np.isfinite(margin) else margin,
            "stability_violations": self.stability_violations,
            "worst_spectral_radius": self.worst_spectral_radius,
            "inclusion_verdict": self.inclusion_verdict,
            "witnesses": [{"kind": w["kind"], "A": w["A"].tolist(), "B": w["B"].tolist(),
                           "value": w["value"]} for w in self.witnesses],
        }


def residual_noise(data: DataSet, sys: LinearSystem) -> np.ndarray:
    """W = X+ - A X- - B U-, the noise that (A, B) would need."""
    return data.X_plus - sys.A @ data.X_minus - sys.B @ data.U_minus


def _phi_margin(noise: NoiseModel, W: np.ndarray) -> float:
    V = qmi_value(noise.phi, W.T)
    scale = max(1.0, float(np.linalg.norm(noise.phi.pi, 2)) * (1.0 + float(np.sum(W * W))))
    return float(np.linalg.eigvalsh(V)[0]) / scale


def sample_consistent_systems(data: DataSet, noise: NoiseModel, count: int, seed=0,
                              boundary_fraction: float = 0.5,
                              cfg: NumericConfig = DEFAULT) -> list[LinearSystem]:
    """Systems explaining the data, each re-checked through its own noise W."""
    if count <= 0:
        return []
    # The factors come from the whitened least-squares form of the data: the
    # plain Schur complement of N cancels badly on large or noise-free data.
    try:
        geo = DataGeometry.from_data(data, noise, cfg)
    except NotInPiClass as exc:
        raise NotInPiClass(f"data and noise model are inconsistent: {exc}") from exc
    n = data.n
    S_ih = (geo.Ur / geo.sig) @ geo.Ur.T
    Q_h = (geo.W * np.sqrt(geo.q)) @ geo.W.T
    Zs = sample_from_factors(geo.Zhat.T, S_ih, geo.Ur, geo.U0, Q_h, count, seed,
                             boundary_fraction)
    out = []
    for Z in Zs:
        sys = LinearSystem(Z[:n].T, Z[n:].T)
        margin = _phi_margin(noise, residual_noise(data, sys))
        if margin < -cfg.oracle_tol:
            raise RuntimeError(f"sampled system violates the noise bound (margin {margin:.3e})")
        out.append(sys)
    return out


def _distance_margin(M: np.ndarray, D: np.ndarray, Gamma: np.ndarray) -> float:
    V = D - M @ Gamma @ M.T
    return float(np.linalg.eigvalsh(0.5 * (V + V.T))[0])


def verify_matching(systems, gains: ControllerGains, model: ReferenceModel,
                    tolm: MatchingTolerance, tol: float | None = None,
                    cfg: NumericConfig = DEFAULT) -> OracleReport:
    """Check D_A - (A+BK-A_m) G_A (.)^T >= 0 and D_B - (BL-B_m) G_B (.)^T >= 0.

    A margin below ``-tol * max(1, ||D||)`` counts as a violation.
    """
    tol = cfg.oracle_tol if tol is None else tol
    rep = OracleReport()
    DA, DB = np.asarray(tolm.D_A), np.asarray(tolm.D_B)
    thrA = tol * max(1.0, np.linalg.norm(DA, 2))
    thrB = tol * max(1.0, np.linalg.norm(DB, 2))
    for s in systems:
        mA = _distance_margin(s.A + s.B @ gains.K - model.A_m, DA, tolm.Gamma_A)
        mB = _distance_margin(s.B @ gains.L - model.B_m, DB, tolm.Gamma_B)
        rep.samples_checked += 1
        worst = min(mA / max(1.0, np.linalg.norm(DA, 2)), mB / max(1.0, np.linalg.norm(DB, 2)))
        rep.worst_matching_margin = min(rep.worst_matching_margin, worst)
        if mA < -thrA or mB < -thrB:
            rep.matching_violations += 1
            if len(rep.witnesses) < rep.max_witnesses:
                rep.witnesses.append({"kind": "matching", "A": s.A, "B": s.B, "value": worst})
    return rep


def verify_stability(systems, gains: ControllerGains,
                     cfg: NumericConfig = DEFAULT) -> OracleReport:
    """Flag every sample whose closed loop has spectral radius >= 1 - threshold."""
    rep = OracleReport()
    limit = 1.0 - cfg.schur_threshold
    for s in systems:
        rho = la.spectral_radius(s.A + s.B @ gains.K)
        rep.samples_checked += 1
        rep.worst_spectral_radius = max(rep.worst_spectral_radius, rho)
        if rho >= limit:
            rep.stability_violations += 1
            if len(rep.witnesses) < rep.max_witnesses:
                rep.witnesses.append({"kind": "stability", "A": s.A, "B": s.B, "value": rho})
    return rep


def _input_spec(model: ReferenceModel, L, D_B, Gamma_B) -> QmiSpec:
    """QMI in B^T: D_B - (B L - B_m) G (.)^T >= 0."""
    c = np.vstack([-model.B_m, la.as_matrix(L)])
    n, m = model.n, c.shape[0] - model.n
    pi = la.block_diag(la.as_matrix(D_B), np.zeros((m, m))) - c @ la.as_matrix(Gamma_B) @ c.T
    return QmiSpec(pi, n, m)


def _closed_loop_sample_to_system(Acl, B, K) -> LinearSystem:
    return LinearSystem(Acl - B @ K, B)


def sample_matching_set(gains: ControllerGains, model: ReferenceModel,
                        tolm: MatchingTolerance, count: int, seed=0,
                        boundary_fraction: float = 0.5,
                        cfg: NumericConfig = DEFAULT) -> list[LinearSystem]:
    """Draw (A, B) from the matching set itself.

    B comes from the input-distance QMI, then the closed loop A + B K from
    the state-distance QMI, so every sample meets both bounds.
    """
    if count <= 0:
        return []
    rng = np.random.default_rng(seed)
    Bspec = _input_spec(model, gains.L, tolm.D_B, tolm.Gamma_B)
    Bs = sample_solutions(Bspec, count, rng, boundary_fraction, cfg=cfg)
    Acls = sample_solutions(closed_loop_spec(model.A_m, tolm.D_A, tolm.Gamma_A), count, rng,
                            boundary_fraction, cfg=cfg)
    return [_closed_loop_sample_to_system(Z.T, Bt.T, gains.K) for Bt, Z in zip(Bs, Acls)]


def stability_witness(gains: ControllerGains, model: ReferenceModel, tolm: MatchingTolerance,
                      seed=0, cfg: NumericConfig = DEFAULT) -> LinearSystem | None:
    """A matching-set system whose closed loop has an eigenvalue at 1.

    Exists whenever (A_m - I) G_A (A_m - I)^T - D_A is not positive definite:
    with x an eigenvector of that matrix for a non-positive eigenvalue, lift
    Acl^T x = x inside the closed-loop QMI.  Returns None when the matrix is
    positive definite.
    """
    M = ts_matrix(model.A_m, tolm.D_A, tolm.Gamma_A)
    w, V = np.linalg.eigh(M)
    if w[0] > cfg.psd_tol * max(1.0, float(np.max(np.abs(w)))):
        return None
    x = V[:, 0]
    Y = lift_point(closed_loop_spec(model.A_m, tolm.D_A, tolm.Gamma_A), x, x, cfg)
    Bt = sample_solutions(_input_spec(model, gains.L, tolm.D_B, tolm.Gamma_B), 1, seed,
                          boundary_fraction=0.0, cfg=cfg)[0]
    return _closed_loop_sample_to_system(Y.T, Bt.T, gains.K)
