"""Exact model-reference control from noise-free data.

The data determine a valid pair of gains iff there are V1, V2 with

    X- V1 = I,  X+ V1 = A_m,   X- V2 = 0,  X+ V2 = B_m,

in which case K = U- V1 and L = U- V2 work for every system that explains
the data.  ``check_exact_informativity`` solves these linear systems
directly; ``check_exact_informativity_lmi`` reaches the same verdict through
an equivalent pair of LMIs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .affine import AffineExpr, VariableFactory, bmat, matrix_values
from .approx_mrc import Verdict
from .config import DEFAULT, NumericConfig
from .conic import LmiConstraint, SdpProblem, SolveStatus, check_point, solve
from .lmi import DataGeometry, gain_column, reduced_matching_lmi
from .models import DataSet, ReferenceModel
from .qmi import NoiseModel

__all__ = ["ExactCertificate", "ExactResult", "check_exact_informativity",
           "check_certificate", "check_exact_informativity_lmi", "ExactLmiResult",
           "corollary_lmi"]


@dataclass
class ExactCertificate:
    V1: np.ndarray
    V2: np.ndarray
    K: np.ndarray
    L: np.ndarray

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("V1", "V2", "K", "L")}


@dataclass
class ExactResult:
    """Verdict of the linear route; ``certificate`` is set iff informative."""

    informative: bool
    residuals: dict
    certificate: ExactCertificate | None = None

    @property
    def verdict(self) -> Verdict:
        return Verdict.INFORMATIVE if self.informative else Verdict.NOT_INFORMATIVE

    def to_dict(self) -> dict:
        d = {"verdict": self.verdict.value, "mode": "exact", "residuals": self.residuals}
        if self.certificate is not None:
            d["certificate"] = self.certificate.to_dict()
            d["K"] = d["certificate"]["K"]
            d["L"] = d["certificate"]["L"]
        return d


def _stacked(data: DataSet) -> np.ndarray:
    return np.vstack([data.X_minus, data.X_plus])


def check_exact_informativity(data: DataSet, model: ReferenceModel,
                              tol: float | None = None,
                              cfg: NumericConfig = DEFAULT) -> ExactResult:
    """Least-squares solve of the two stacked systems (minimum-norm V's)."""
    model.check_against(data)
    tol = cfg.exact_tol if tol is None else tol
    n, p = model.n, model.p
    A = _stacked(data)
    rhs1 = np.vstack([np.eye(n), model.A_m])
    rhs2 = np.vstack([np.zeros((n, p)), model.B_m])
    Ap = la.pinv(A, cfg.rank_tol)
    V1, V2 = Ap @ rhs1, Ap @ rhs2
    r1 = float(np.linalg.norm(A @ V1 - rhs1))
    r2 = float(np.linalg.norm(A @ V2 - rhs2))
    res = {"V1": r1, "V2": r2,
           "V1_threshold": tol * (1 + float(np.linalg.norm(rhs1))),
           "V2_threshold": tol * (1 + float(np.linalg.norm(rhs2)))}
    ok = r1 <= res["V1_threshold"] and r2 <= res["V2_threshold"]
    cert = None
    if ok:
        cert = ExactCertificate(V1, V2, data.U_minus @ V1, data.U_minus @ V2)
    return ExactResult(ok, res, cert)


def check_certificate(data: DataSet, model: ReferenceModel, V1, V2, K=None, L=None,
                      tol: float | None = None, cfg: NumericConfig = DEFAULT) -> bool:
    """Do (V1, V2[, K, L]) satisfy the defining equations?"""
    tol = cfg.exact_tol if tol is None else tol
    V1, V2 = la.as_matrix(V1), la.as_matrix(V2)
    n = model.n
    checks = [
        (data.X_minus @ V1, np.eye(n)), (data.X_plus @ V1, model.A_m),
        (data.X_minus @ V2, np.zeros((n, model.p))), (data.X_plus @ V2, model.B_m),
    ]
    if K is not None:
        checks.append((data.U_minus @ V1, la.as_matrix(K)))
    if L is not None:
        checks.append((data.U_minus @ V2, la.as_matrix(L)))
    return all(np.linalg.norm(a - b) <= tol * (1 + np.linalg.norm(b)) for a, b in checks)


def corollary_lmi(data: DataSet, target: np.ndarray, c2: AffineExpr,
                  alpha: AffineExpr) -> AffineExpr:
    """[[G, c], [c^T, alpha I]] with G the Gram matrix of [X+; -X-; -U-]."""
    M = np.vstack([data.X_plus, -data.X_minus, -data.U_minus])
    c = bmat([[AffineExpr(-target)], [c2]])
    w = target.shape[1]
    return bmat([[M @ M.T, c], [c.T, alpha.times(np.eye(w))]])


@dataclass
class ExactLmiResult:
    informative: bool
    status: dict
    K: np.ndarray | None = None
    L: np.ndarray | None = None
    alpha1: float | None = None
    alpha2: float | None = None
    residuals: dict = field(default_factory=dict)
    message: str = ""

    @property
    def verdict(self) -> Verdict:
        if self.informative:
            return Verdict.INFORMATIVE
        if any(s == SolveStatus.INFEASIBLE.value for s in self.status.values()):
            return Verdict.NOT_INFORMATIVE
        return Verdict.SOLVER_FAILED


def check_exact_informativity_lmi(data: DataSet, model: ReferenceModel,
                                  cfg: NumericConfig = DEFAULT) -> ExactLmiResult:
    """LMI route with gains and multipliers as decision variables.

    The literal LMI ``[[G, c], [c^T, alpha I]] >= 0`` coincides, after a
    diagonal congruence, with the matching LMI for noise-free data, D = 0 and
    Gamma = I; the solver works on the reduced form of the latter and the
    result is validated on the literal one.
    """
    model.check_against(data)
    n, m, p = data.n, data.m, model.p
    geo = DataGeometry.from_data(data, NoiseModel.noiseless(n, data.T), cfg)
    out = ExactLmiResult(False, {})
    msgs = []
    for kind, target, aname in (("K", model.A_m, "alpha1"), ("L", model.B_m, "alpha2")):
        cols = target.shape[1]
        vf = VariableFactory()
        G = vf.matrix(kind, m, cols)
        alpha = vf.scalar(aname, lower=cfg.alpha_min, upper=cfg.alpha_cap)
        c2 = gain_column(kind, G, n, m)
        red = reduced_matching_lmi(geo, target, c2, np.zeros((n, n)), np.eye(cols), alpha)
        lit = corollary_lmi(data, target, c2, alpha)
        name = "T1" + kind
        sol = solve(SdpProblem(vf.variables, [LmiConstraint(name, red)]),
                    cfg.feas_tol, cfg.max_iter, cfg, tie_break={aname: 1.0})
        status = sol.status
        if sol.values:
            rep = check_point(SdpProblem(vf.variables, [LmiConstraint(name, lit)]),
                              sol.values, cfg.feas_tol)
            out.residuals[name] = rep.normalized[name]
            if sol.ok and not rep.ok:
                status = SolveStatus.INACCURATE
            setattr(out, kind, matrix_values(sol.values, kind, m, cols))
            setattr(out, aname, sol.values[aname])
        if sol.message:
            msgs.append(f"{name}: {sol.message}")
        out.status[name] = status.value
    out.informative = all(s in (SolveStatus.FEASIBLE.value, SolveStatus.OPTIMAL.value)
                          for s in out.status.values())
    out.message = "; ".join(msgs)
    return out
