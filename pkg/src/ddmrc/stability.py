"""Closed-loop stability on top of approximate matching.

With Acl = A + B K, the distance bound
``(Acl - A_m) Gamma (Acl - A_m)^T <= D`` is the QMI in Acl^T with matrix

    R = [[D - A_m Gamma A_m^T, A_m Gamma], [Gamma A_m^T, -Gamma]].

Every such Acl is Schur iff there is P with [[P, 0], [0, -P]] - R > 0.  That
LMI is decided in closed form through

    Psi(lam) = R11 + R22 + lam R12 + R21 / lam,

namely Psi(1) < 0 together with the absence of imaginary-axis eigenvalues
of ``[[0, Psi(1)^-1], [Psi(-1), 2 (R12 - R21) Psi(1)^-1]]``.  Since
``Psi(1) = -[(A_m - I) Gamma (A_m - I)^T - D]``, the first half only involves
the reference model and D.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .affine import AffineExpr, VariableFactory, bmat, symmetric_values
from .approx_mrc import SynthesisResult, Verdict, minimize_distance, synthesize_approx
from .config import DEFAULT, NumericConfig
from .conic import LmiConstraint, SdpProblem, solve
from .errors import DegenerateAssumption
from .lmi import DataGeometry
from .models import DataSet, MatchingTolerance, ReferenceModel
from .qmi import NoiseModel, QmiSpec

__all__ = ["StabilityCheck", "build_R", "psi", "psi1_closed_form", "eig_matrix",
           "ts_matrix", "check_ts", "check_eig_condition", "find_lyapunov_P",
           "stability_check", "synthesize_with_stability", "closed_loop_spec"]


def build_R(A_m, D_A, Gamma_A) -> np.ndarray:
    A_m, D, G = (la.as_matrix(x) for x in (A_m, D_A, Gamma_A))
    R = np.block([[D - A_m @ G @ A_m.T, A_m @ G], [G @ A_m.T, -G]])
    return 0.5 * (R + R.T)


def closed_loop_spec(A_m, D_A, Gamma_A) -> QmiSpec:
    """QMI in Acl^T whose solutions are the closed loops within distance D_A."""
    A_m = la.as_matrix(A_m)
    n = A_m.shape[0]
    return QmiSpec(build_R(A_m, D_A, Gamma_A), n, n)


def _blocks(R):
    R = la.as_matrix(R)
    n = R.shape[0] // 2
    return R[:n, :n], R[:n, n:], R[n:, :n], R[n:, n:]


def psi(R, lam: float) -> np.ndarray:
    R11, R12, R21, R22 = _blocks(R)
    return R11 + R22 + lam * R12 + R21 / lam


def ts_matrix(model_or_Am, D_A, Gamma_A) -> np.ndarray:
    """(A_m - I) Gamma (A_m - I)^T - D."""
    A_m = model_or_Am.A_m if isinstance(model_or_Am, ReferenceModel) else la.as_matrix(model_or_Am)
    E = A_m - np.eye(A_m.shape[0])
    M = E @ la.as_matrix(Gamma_A) @ E.T - la.as_matrix(D_A)
    return 0.5 * (M + M.T)


def psi1_closed_form(A_m, D_A, Gamma_A) -> np.ndarray:
    return -ts_matrix(A_m, D_A, Gamma_A)


def check_ts(model: ReferenceModel, D_A, Gamma_A, tol: float = DEFAULT.psd_tol) -> bool:
    """Strict positivity of (A_m - I) Gamma (A_m - I)^T - D.  No gain enters."""
    return la.classify_definiteness(ts_matrix(model, D_A, Gamma_A), tol) \
        is la.Definiteness.POSITIVE_DEFINITE


def _psi1_inverse(R, tol: float):
    P1 = psi(R, 1.0)
    P1 = 0.5 * (P1 + P1.T)
    w = np.linalg.eigvalsh(P1)
    if np.min(np.abs(w)) <= tol * max(1.0, float(np.max(np.abs(w)))):
        raise DegenerateAssumption(
            f"Psi(1) is singular (smallest |eigenvalue| {np.min(np.abs(w)):.3e})")
    return P1, np.linalg.inv(P1)


def eig_matrix(R, tol: float = DEFAULT.psd_tol) -> np.ndarray:
    _, R12, R21, _ = _blocks(R)
    _, P1inv = _psi1_inverse(R, tol)
    n = P1inv.shape[0]
    return np.block([[np.zeros((n, n)), P1inv],
                     [psi(R, -1.0), 2.0 * (R12 - R21) @ P1inv]])


def check_eig_condition(R, tol: float = DEFAULT.imag_axis_tol,
                        cfg: NumericConfig = DEFAULT) -> bool:
    """True iff the eigenvalue matrix has no eigenvalue on the imaginary axis.

    Raises ``DegenerateAssumption`` when Psi(1) is singular.
    """
    return not la.has_imaginary_axis_eigenvalue(eig_matrix(R, cfg.psd_tol), tol)


def find_lyapunov_P(R, margin: float | None = None,
                    cfg: NumericConfig = DEFAULT) -> np.ndarray | None:
    """P with [[P, 0], [0, -P]] - R >= margin I, or None.

    Without ``margin`` the smallest eigenvalue is maximized and P is accepted
    when that eigenvalue, recomputed from P, exceeds round-off
    (``1e-10 * max(1, ||R||, ||P||)``).  A fixed margin would reject
    configurations whose Psi(1) is itself only slightly negative, as happens
    after trace minimization.
    """
    R = la.symmetrize(R)
    n = R.shape[0] // 2
    eps = 0.0 if margin is None else float(margin)
    vf = VariableFactory()
    P = vf.symmetric("P", n)
    F = bmat([[P, None], [None, -1.0 * P]]) - (R + eps * np.eye(2 * n))
    sol = solve(SdpProblem(vf.variables, [LmiConstraint("PLMI", F)]),
                cfg.feas_tol, cfg.max_iter, cfg)
    if not sol.values:
        return None
    Pv = symmetric_values(sol.values, "P", n)
    lhs = la.block_diag(Pv, -Pv) - R
    floor = 1e-10 * max(1.0, np.linalg.norm(R, 2), np.linalg.norm(Pv, 2))
    if np.linalg.eigvalsh(0.5 * (lhs + lhs.T))[0] < max(floor, 0.5 * eps):
        return None
    return Pv


@dataclass
class StabilityCheck:
    R: np.ndarray
    psi1: np.ndarray
    psi_minus1: np.ndarray
    ts_holds: bool
    psi1_negative_definite: bool
    psi1_invertible: bool
    eig_matrix: np.ndarray | None = None
    eig_condition_holds: bool | None = None
    P: np.ndarray | None = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        arr = lambda M: None if M is None else np.asarray(M).tolist()
        return {"R": arr(self.R), "psi1": arr(self.psi1), "psi_minus1": arr(self.psi_minus1),
                "eig_matrix": arr(self.eig_matrix), "ts_holds": self.ts_holds,
                "psi1_negative_definite": self.psi1_negative_definite,
                "psi1_invertible": self.psi1_invertible,
                "eig_condition_holds": self.eig_condition_holds, "P": arr(self.P),
                "notes": list(self.notes)}

    @classmethod
    def from_dict(cls, d: dict) -> "StabilityCheck":
        arr = lambda k: None if d.get(k) is None else np.array(d[k], dtype=float)
        return cls(arr("R"), arr("psi1"), arr("psi_minus1"), d["ts_holds"],
                   d["psi1_negative_definite"], d["psi1_invertible"], arr("eig_matrix"),
                   d.get("eig_condition_holds"), arr("P"), list(d.get("notes", [])))


def stability_check(model: ReferenceModel, D_A, Gamma_A, with_P: bool = True,
                    cfg: NumericConfig = DEFAULT) -> StabilityCheck:
    """Every closed-loop quantity for (A_m, D_A, Gamma_A), reported separately."""
    R = build_R(model.A_m, D_A, Gamma_A)
    p1 = psi(R, 1.0)
    p1 = 0.5 * (p1 + p1.T)
    pm1 = psi(R, -1.0)
    cls = la.classify_definiteness(p1, cfg.psd_tol)
    w = np.linalg.eigvalsh(p1)
    invertible = bool(np.min(np.abs(w)) > cfg.psd_tol * max(1.0, float(np.max(np.abs(w)))))
    chk = StabilityCheck(R, p1, 0.5 * (pm1 + pm1.T), check_ts(model, D_A, Gamma_A, cfg.psd_tol),
                         cls is la.Definiteness.NEGATIVE_DEFINITE, invertible)
    if not invertible:
        chk.notes.append("Psi(1) is singular; eigenvalue test undefined")
        return chk
    chk.eig_matrix = eig_matrix(R, cfg.psd_tol)
    chk.eig_condition_holds = not la.has_imaginary_axis_eigenvalue(chk.eig_matrix,
                                                                   cfg.imag_axis_tol)
    if with_P and chk.psi1_negative_definite and chk.eig_condition_holds:
        chk.P = find_lyapunov_P(R, cfg=cfg)
        if chk.P is None:
            chk.notes.append("Lyapunov LMI not solved although the closed-form test passed")
    return chk


def synthesize_with_stability(data: DataSet, noise: NoiseModel, model: ReferenceModel,
                              tolm: MatchingTolerance | str,
                              Gamma_A=None, Gamma_B=None,
                              cfg: NumericConfig = DEFAULT,
                              geo: DataGeometry | None = None,
                              with_P: bool = True) -> SynthesisResult:
    """Matching synthesis plus the stability conditions.

    ``tolm`` is either a fixed ``MatchingTolerance`` or the string
    ``"minimize"``; in the latter case the trace minimization additionally
    enforces ``(A_m - I) Gamma_A (A_m - I)^T - D_A >= eps I`` and the
    eigenvalue condition is checked afterwards on the optimal D_A.
    """
    if isinstance(tolm, str):
        if tolm != "minimize":
            raise ValueError(f"unknown mode {tolm!r}")
        n = model.n
        Gamma_A = np.eye(n) if Gamma_A is None else la.as_matrix(Gamma_A)
        Gamma_B = np.eye(model.p) if Gamma_B is None else la.as_matrix(Gamma_B)
        E = model.A_m - np.eye(n)
        eps = cfg.strict_margin * max(1.0, np.linalg.norm(E @ Gamma_A @ E.T, 2))
        res = minimize_distance(data, noise, model, Gamma_A, Gamma_B, cfg, geo, ts_margin=eps)
        res.mode = "stable-minimize"
    else:
        res = synthesize_approx(data, noise, model, tolm, cfg, geo)
        res.mode = "stable-fixed"
    if not res.informative:
        return res
    chk = stability_check(model, res.D_A, res.Gamma_A, with_P, cfg)
    res.stability = chk
    d_zero = not np.any(res.D_A) and not np.any(res.D_B)
    res.assumptions["D_zero"] = d_zero
    if not chk.ts_holds:
        res.verdict, res.failure = Verdict.NOT_INFORMATIVE, "ts_failed"
        return res
    if d_zero:
        return res
    if not chk.psi1_invertible:
        res.verdict, res.failure = Verdict.UNKNOWN, "degenerate_psi"
        return res
    if not chk.eig_condition_holds:
        res.failure = "eig_condition_failed"
        res.verdict = (Verdict.NOT_INFORMATIVE if res.assumptions.get("N_not_nsd")
                       else Verdict.UNKNOWN)
    return res
