"""Approximate model-reference synthesis from noisy data.

For every consistent (A, B) the closed loop should satisfy

    (A + B K - A_m) Gamma_A (.)^T <= D_A,     (B L - B_m) Gamma_B (.)^T <= D_B.

Each bound is a QMI in [A B]^T with matrix ``build_MK`` / ``build_ML``; the
data say [A B]^T solves the QMI with matrix N.  Inclusion of the second set
in the first is certified by the LMI ``M - alpha N >= 0``, written in the
4-block form that is linear in the gain.  The K- and L-problems share no
variables and are solved separately.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import linalg as la
from .affine import (AffineExpr, VariableFactory, matrix_values, symmetric_values)
from .config import DEFAULT, NumericConfig
from .conic import LmiConstraint, SdpProblem, SolveStatus, check_point, solve
from .errors import DimensionError
from .lmi import (DataGeometry, build_N, gain_column, literal_matching_lmi,
                  reduced_matching_lmi)
from .models import DataSet, MatchingTolerance, ReferenceModel
from .qmi import NoiseModel

log = logging.getLogger(__name__)

__all__ = ["Verdict", "SynthesisResult", "GainSolve", "build_N", "build_MK", "build_ML",
           "synthesize_approx", "minimize_distance", "solve_gain"]


class Verdict(enum.Enum):
    INFORMATIVE = "Informative"
    NOT_INFORMATIVE = "NotInformative"
    UNKNOWN = "Unknown"
    SOLVER_FAILED = "SolverFailed"


def _matching_qmi(c: np.ndarray, D: np.ndarray, Gamma: np.ndarray) -> np.ndarray:
    n = D.shape[0]
    k = c.shape[0] - n
    M = la.block_diag(D, np.zeros((k, k))) - c @ Gamma @ c.T
    return 0.5 * (M + M.T)


def build_MK(K, model: ReferenceModel, tolm: MatchingTolerance) -> np.ndarray:
    """blkdiag(D_A, 0, 0) - c Gamma_A c^T with c = [-A_m; I; K]."""
    K = la.as_matrix(K, "K")
    n = model.n
    if K.shape[1] != n or tolm.D_A is None:
        raise DimensionError("build_MK needs an m x n gain and a fixed D_A")
    c = np.vstack([-model.A_m, np.eye(n), K])
    return _matching_qmi(c, tolm.D_A, tolm.Gamma_A)


def build_ML(L, model: ReferenceModel, tolm: MatchingTolerance) -> np.ndarray:
    """blkdiag(D_B, 0, 0) - c Gamma_B c^T with c = [-B_m; 0; L]."""
    L = la.as_matrix(L, "L")
    n, p = model.n, model.p
    if L.shape[1] != p or tolm.D_B is None:
        raise DimensionError("build_ML needs an m x p gain and a fixed D_B")
    c = np.vstack([-model.B_m, np.zeros((n, p)), L])
    return _matching_qmi(c, tolm.D_B, tolm.Gamma_B)


@dataclass
class GainSolve:
    """Outcome of one matching LMI (the K- or the L-problem)."""

    kind: str
    status: SolveStatus
    gain: np.ndarray | None = None
    alpha: float | None = None
    D: np.ndarray | None = None
    residual: float = -np.inf          # literal LMI, normalized
    residuals: dict = field(default_factory=dict)
    objective: float | None = None
    message: str = ""
    flags: list = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.status in (SolveStatus.FEASIBLE, SolveStatus.OPTIMAL)


def _names(kind: str):
    return ("alpha1", "DA", "TK") if kind == "K" else ("alpha2", "DB", "TL")


def gain_problems(kind: str, geo: DataGeometry, model: ReferenceModel,
                  Gamma: np.ndarray, D: np.ndarray | None,
                  ts_margin: float | None = None, cfg: NumericConfig = DEFAULT):
    """(solver_problem, literal_problem) for the K- or L-LMI.

    ``D=None`` makes the distance matrix a decision variable and the problem a
    trace minimization.  ``ts_margin`` (K only) adds
    ``(A_m - I) Gamma (A_m - I)^T - D >= ts_margin I``.
    """
    n, m = geo.n, geo.m
    aname, dname, lname = _names(kind)
    target = model.A_m if kind == "K" else model.B_m
    cols = n if kind == "K" else model.p
    vf = VariableFactory()
    G = vf.matrix(kind, m, cols)
    alpha = vf.scalar(aname, lower=cfg.alpha_min, upper=cfg.alpha_cap)
    Dexpr = AffineExpr(D) if D is not None else vf.symmetric(dname, n)
    c2 = gain_column(kind, G, n, m)
    ginv = np.diag(1.0 / np.diag(Gamma))
    red = [LmiConstraint(lname, reduced_matching_lmi(geo, target, c2, Dexpr, ginv, alpha))]
    lit = [LmiConstraint(lname, literal_matching_lmi(geo.N, target, c2, Dexpr, ginv, alpha))]
    objective = {}
    if D is None:
        red.append(LmiConstraint(dname + "_psd", Dexpr))
        lit.append(LmiConstraint(dname + "_psd", Dexpr))
        objective = Dexpr.trace()
    if ts_margin is not None:
        E = model.A_m - np.eye(n)
        C = E @ Gamma @ E.T - ts_margin * np.eye(n)
        ts = AffineExpr(C) - Dexpr
        lit.append(LmiConstraint("TS", ts))
        w = np.linalg.eigvalsh(0.5 * (C + C.T))
        if w[0] > 0:
            # congruence by C^{-1/2}: I - C^{-1/2} D C^{-1/2} >= 0, same set, better scaled
            F = la.psd_sqrt(C, inverse=True)
            red.append(LmiConstraint("TS", F @ ts @ F))
        else:
            red.append(LmiConstraint("TS", ts))
    return (SdpProblem(vf.variables, red, objective),
            SdpProblem(vf.variables, lit, objective))


def solve_gain(kind: str, geo: DataGeometry, model: ReferenceModel,
               Gamma: np.ndarray, D: np.ndarray | None = None,
               ts_margin: float | None = None,
               cfg: NumericConfig = DEFAULT) -> GainSolve:
    """Solve one matching LMI and validate the result on the literal form."""
    red, lit = gain_problems(kind, geo, model, Gamma, D, ts_margin, cfg)
    aname, dname, lname = _names(kind)
    sol = solve(red, cfg.feas_tol, cfg.max_iter, cfg,
                tie_break={aname: 1.0} if D is not None else None)
    out = GainSolve(kind, sol.status, message=sol.message)
    if not sol.values:
        return out
    n, m = geo.n, geo.m
    cols = n if kind == "K" else model.p
    out.gain = matrix_values(sol.values, kind, m, cols)
    out.alpha = sol.values[aname]
    out.D = D.copy() if D is not None else symmetric_values(sol.values, dname, n)
    rep = check_point(lit, sol.values, cfg.feas_tol)
    out.residuals = dict(rep.normalized)
    out.residual = rep.normalized[lname]
    if D is None:
        out.objective = float(np.trace(out.D))
    if out.feasible and not rep.ok:
        out.status = SolveStatus.INACCURATE
        out.message = "solver point fails the literal LMI"
    if out.status is SolveStatus.INACCURATE and rep.ok:
        # point is certified, only optimality is uncertain
        out.flags.append("inaccurate")
        out.status = SolveStatus.FEASIBLE if D is not None else SolveStatus.OPTIMAL
    if out.alpha >= 0.999 * cfg.alpha_cap:
        out.flags.append("alpha_at_cap")
    return out


def zero_distance_solve(kind: str, geo: DataGeometry, model: ReferenceModel,
                        Gamma: np.ndarray, cfg: NumericConfig = DEFAULT) -> GainSolve:
    """Fixed D = 0; the trace-minimization shortcut for noise-free data."""
    res = solve_gain(kind, geo, model, Gamma, np.zeros((geo.n, geo.n)), None, cfg)
    if res.feasible:
        res.objective = 0.0
        res.status = SolveStatus.OPTIMAL
    return res


@dataclass
class SynthesisResult:
    verdict: Verdict
    mode: str
    K: np.ndarray | None = None
    L: np.ndarray | None = None
    alpha1: float | None = None
    alpha2: float | None = None
    D_A: np.ndarray | None = None
    D_B: np.ndarray | None = None
    Gamma_A: np.ndarray | None = None
    Gamma_B: np.ndarray | None = None
    residuals: dict = field(default_factory=dict)
    statuses: dict = field(default_factory=dict)
    assumptions: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    failure: str | None = None
    message: str = ""
    stability: Any = None

    @property
    def informative(self) -> bool:
        return self.verdict is Verdict.INFORMATIVE

    @property
    def traces(self) -> tuple[float, float] | None:
        if self.D_A is None or self.D_B is None:
            return None
        return float(np.trace(self.D_A)), float(np.trace(self.D_B))

    @property
    def tolerance(self) -> MatchingTolerance:
        return MatchingTolerance(self.Gamma_A, self.Gamma_B, self.D_A, self.D_B)

    def to_dict(self) -> dict:
        arr = lambda M: None if M is None else np.asarray(M).tolist()
        d = {
            "verdict": self.verdict.value, "mode": self.mode,
            "K": arr(self.K), "L": arr(self.L),
            "alpha1": self.alpha1, "alpha2": self.alpha2,
            "D_A": arr(self.D_A), "D_B": arr(self.D_B),
            "Gamma_A": arr(self.Gamma_A), "Gamma_B": arr(self.Gamma_B),
            "residuals": dict(self.residuals), "statuses": dict(self.statuses),
            "assumptions": dict(self.assumptions), "flags": list(self.flags),
            "failure": self.failure, "message": self.message,
        }
        if self.traces is not None:
            d["trace_D_A"], d["trace_D_B"] = self.traces
        if self.stability is not None:
            d["stability"] = self.stability.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthesisResult":
        from .stability import StabilityCheck
        arr = lambda k: None if d.get(k) is None else np.array(d[k], dtype=float)
        return cls(
            verdict=Verdict(d["verdict"]), mode=d.get("mode", ""),
            K=arr("K"), L=arr("L"), alpha1=d.get("alpha1"), alpha2=d.get("alpha2"),
            D_A=arr("D_A"), D_B=arr("D_B"), Gamma_A=arr("Gamma_A"), Gamma_B=arr("Gamma_B"),
            residuals=dict(d.get("residuals", {})), statuses=dict(d.get("statuses", {})),
            assumptions=dict(d.get("assumptions", {})), flags=list(d.get("flags", [])),
            failure=d.get("failure"), message=d.get("message", ""),
            stability=(StabilityCheck.from_dict(d["stability"])
                       if d.get("stability") else None),
        )


def _assemble(mode: str, rk: GainSolve, rl: GainSolve, tolm: MatchingTolerance,
              assumptions: dict) -> SynthesisResult:
    res = SynthesisResult(Verdict.SOLVER_FAILED, mode,
                          K=rk.gain, L=rl.gain, alpha1=rk.alpha, alpha2=rl.alpha,
                          D_A=rk.D, D_B=rl.D, Gamma_A=np.array(tolm.Gamma_A),
                          Gamma_B=np.array(tolm.Gamma_B), assumptions=assumptions)
    res.residuals = {"TK": rk.residual, "TL": rl.residual}
    for k, v in list(rk.residuals.items()) + list(rl.residuals.items()):
        res.residuals.setdefault(k, v)
    res.statuses = {"TK": rk.status.value, "TL": rl.status.value}
    res.flags = sorted(set(rk.flags) | set(rl.flags))
    msgs = [f"{r.kind}: {r.message}" for r in (rk, rl) if r.message]
    res.message = "; ".join(msgs)
    if rk.feasible and rl.feasible:
        res.verdict = Verdict.INFORMATIVE
    elif SolveStatus.INFEASIBLE in (rk.status, rl.status):
        res.verdict = Verdict.NOT_INFORMATIVE
        res.failure = "lmi_infeasible"
        if assumptions.get("conditions_only_sufficient"):
            res.verdict = Verdict.UNKNOWN
    else:
        res.failure = "solver_failed"
    return res


def _geometry(data, noise, model, cfg):
    model.check_against(data)
    return DataGeometry.from_data(data, noise, cfg)


def synthesize_approx(data: DataSet, noise: NoiseModel, model: ReferenceModel,
                      tolm: MatchingTolerance, cfg: NumericConfig = DEFAULT,
                      geo: DataGeometry | None = None) -> SynthesisResult:
    """Fixed distance matrices: feasibility of the K- and L-LMIs."""
    if not tolm.fixed:
        raise ValueError("synthesize_approx needs D_A and D_B; use minimize_distance")
    geo = geo or _geometry(data, noise, model, cfg)
    n_not_nsd = geo.n_not_nsd(cfg)
    assumptions = {"N_not_nsd": n_not_nsd, "D_zero": tolm.is_zero,
                   "conditions_only_sufficient": not (n_not_nsd or tolm.is_zero)}
    rk = solve_gain("K", geo, model, tolm.Gamma_A, np.array(tolm.D_A), None, cfg)
    rl = solve_gain("L", geo, model, tolm.Gamma_B, np.array(tolm.D_B), None, cfg)
    return _assemble("fixed", rk, rl, tolm, assumptions)


def minimize_distance(data: DataSet, noise: NoiseModel, model: ReferenceModel,
                      Gamma_A, Gamma_B, cfg: NumericConfig = DEFAULT,
                      geo: DataGeometry | None = None,
                      ts_margin: float | None = None) -> SynthesisResult:
    """Minimize tr(D_A) + tr(D_B) subject to the K- and L-LMIs.

    The objective separates, so each LMI is minimized on its own.  For
    noise-free data (zero Schur complement of N) the zero-distance problem is
    tried first: when feasible, D = 0 is optimal.
    """
    tolm = MatchingTolerance(Gamma_A, Gamma_B)
    geo = geo or _geometry(data, noise, model, cfg)
    n_not_nsd = geo.n_not_nsd(cfg)
    results = {}
    for kind, Gam in (("K", tolm.Gamma_A), ("L", tolm.Gamma_B)):
        tsm = ts_margin if kind == "K" else None
        r = None
        if geo.noiseless:
            r = zero_distance_solve(kind, geo, model, Gam, cfg)
            if not r.feasible:
                r = None
        if r is None:
            r = solve_gain(kind, geo, model, Gam, None, tsm, cfg)
        results[kind] = r
    d_zero = all(results[k].D is not None and not np.any(results[k].D) for k in "KL")
    assumptions = {"N_not_nsd": n_not_nsd, "D_zero": d_zero,
                   "conditions_only_sufficient": False}
    return _assemble("minimize", results["K"], results["L"], tolm, assumptions)
