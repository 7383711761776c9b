"""Semidefinite programming backend.

Problems are stated as a list of affine matrix expressions required to be
PSD, optional linear equalities, optional bounds on scalar variables and an
optional linear objective.  ``solve`` presolves the problem and hands it to
``cvxopt.solvers.sdp``:

* explicit equalities are eliminated by an affine reparametrization
  ``x = x0 + P y``;
* a diagonal entry that is identically zero (constant and all
  coefficients) forces its whole row to vanish in any PSD point.  Those rows
  become further equalities and the entry is removed.  Repeating this until
  nothing changes removes the zero faces that otherwise leave a problem
  without interior points;
* directions that no constraint sees are dropped.

Feasibility problems (empty objective) are solved in max-margin form,
``max t  s.t.  F_j(x) - t I >= 0, t <= 1``, on constraints normalized to
unit scale.  A negative optimal margin is the infeasibility evidence.

Every returned point is re-validated with ``check_point`` against the
caller's original problem.  A point that fails this check is never labeled
Feasible or Optimal.
"""
from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import linalg as la
from .affine import AffineExpr, Variable
from .config import DEFAULT, NumericConfig

log = logging.getLogger(__name__)


class SolveStatus(enum.Enum):
    FEASIBLE = "Feasible"
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    INACCURATE = "Inaccurate"
    FAILED = "Failed"


@dataclass
class LmiConstraint:
    name: str
    expr: AffineExpr

    def __post_init__(self):
        r, c = self.expr.shape
        if r != c:
            raise ValueError(f"LMI {self.name} is not square: {self.expr.shape}")
        self.expr = self.expr.symmetrized()


@dataclass
class EqualityConstraint:
    """Every entry of ``expr`` must vanish."""
    name: str
    expr: AffineExpr


@dataclass
class SdpProblem:
    variables: list[Variable]
    constraints: list[LmiConstraint]
    objective: dict[str, float] = field(default_factory=dict)
    equalities: list[EqualityConstraint] = field(default_factory=list)

    def __post_init__(self):
        declared = {v.name for v in self.variables}
        if len(declared) != len(self.variables):
            raise ValueError("duplicate variable names")
        used = set(self.objective)
        for c in self.constraints:
            used |= c.expr.variables
        for e in self.equalities:
            used |= e.expr.variables
        undeclared = used - declared
        if undeclared:
            raise ValueError(f"undeclared variables: {sorted(undeclared)[:5]}")

    @property
    def is_feasibility(self) -> bool:
        return not any(self.objective.values())


@dataclass
class CheckReport:
    min_eigs: dict[str, float]
    normalized: dict[str, float]
    equality_residuals: dict[str, float]
    bound_violation: float
    ok: bool

    @property
    def worst(self) -> float:
        """Most negative normalized eigenvalue (+inf if there are no LMIs)."""
        return min(self.normalized.values(), default=np.inf)


@dataclass
class SdpSolution:
    status: SolveStatus
    values: dict[str, float]
    residual: float
    objective: float | None = None
    margin: float | None = None
    message: str = ""
    check: CheckReport | None = None
    certificate: bool = False

    @property
    def validated(self) -> bool:
        return self.check is not None and self.check.ok

    @property
    def ok(self) -> bool:
        return self.status in (SolveStatus.FEASIBLE, SolveStatus.OPTIMAL)


# -- validation ------------------------------------------------------------

def check_point(problem: SdpProblem, values: Mapping[str, float],
                tol: float = DEFAULT.feas_tol) -> CheckReport:
    """Evaluate every constraint at ``values``.

    LMI residuals are smallest eigenvalues, also reported normalized by
    ``max(1, ||F(x)||_2)``; the point passes when every normalized residual
    is at least ``-tol``, equalities hold to ``tol`` relative to their scale
    and bounds hold to ``tol``.
    """
    missing = [v.name for v in problem.variables if v.name not in values]
    if missing:
        raise KeyError(f"missing values for {missing[:5]}")
    mins, norm = {}, {}
    for c in problem.constraints:
        F = c.expr.evaluate(values)
        F = 0.5 * (F + F.T)
        w = np.linalg.eigvalsh(F) if F.size else np.array([np.inf])
        mins[c.name] = float(w[0])
        norm[c.name] = float(w[0]) / max(1.0, float(np.max(np.abs(w))))
    eqs = {}
    for e in problem.equalities:
        val = e.expr.evaluate(values)
        scale = max([1.0, float(np.max(np.abs(e.expr.const)))] +
                    [abs(values[k]) * float(np.max(np.abs(v)))
                     for k, v in e.expr.coeffs.items()])
        eqs[e.name] = float(np.max(np.abs(val))) / scale if val.size else 0.0
    bviol = 0.0
    for v in problem.variables:
        x = values[v.name]
        if v.lower is not None:
            bviol = max(bviol, (v.lower - x) / max(1.0, abs(v.lower)))
        if v.upper is not None:
            bviol = max(bviol, (x - v.upper) / max(1.0, abs(v.upper)))
    ok = (all(r >= -tol for r in norm.values())
          and all(r <= tol for r in eqs.values()) and bviol <= tol)
    return CheckReport(mins, norm, eqs, bviol, ok)


# -- presolve ----------------------------------------------------------------

@dataclass
class _Lmi:
    name: str
    c: np.ndarray        # d x d constant
    M: np.ndarray        # d x d x ny coefficients


class _Infeasible(Exception):
    pass


def _vectorize(problem: SdpProblem):
    names = [v.name for v in problem.variables]
    idx = {n: i for i, n in enumerate(names)}
    nv = len(names)
    lmis = []
    for c in problem.constraints:
        d = c.expr.shape[0]
        M = np.zeros((d, d, nv))
        for k, v in c.expr.coeffs.items():
            M[:, :, idx[k]] = v
        lmis.append(_Lmi(c.name, c.expr.const.copy(), M))
    E_rows, e_rhs = [], []
    for e in problem.equalities:
        r, cc = e.expr.shape
        A = np.zeros((r * cc, nv))
        for k, v in e.expr.coeffs.items():
            A[:, idx[k]] = v.reshape(-1)
        E_rows.append(A)
        e_rhs.append(-e.expr.const.reshape(-1))
    E = np.vstack(E_rows) if E_rows else np.zeros((0, nv))
    e = np.concatenate(e_rhs) if e_rhs else np.zeros(0)
    f = np.zeros(nv)
    for k, w in problem.objective.items():
        f[idx[k]] = w
    return names, lmis, E, e, f


def _scale(L: _Lmi) -> float:
    s = float(np.max(np.abs(L.c))) if L.c.size else 0.0
    if L.M.size:
        s = max(s, float(np.max(np.abs(L.M))))
    return s


def _eliminate(E, e, x0, P, cfg: NumericConfig):
    """Restrict x = x0 + P y to solutions of E x = e."""
    A = E @ P
    b = e - E @ x0
    if A.shape[0] == 0:
        return x0, P
    y0, res = la.solve_lstsq_min_norm(A, b, cfg.rank_tol)
    y0 = y0.reshape(-1)
    scale = max(1.0, float(np.linalg.norm(b)),
                float(np.linalg.norm(A, 2) * np.linalg.norm(y0)))
    if res > cfg.exact_tol * scale:
        raise _Infeasible(f"linear equalities inconsistent (residual {res:.3e})")
    N = la.kernel_basis(A, cfg.rank_tol)
    return x0 + P @ y0, P @ N


def _presolve(problem: SdpProblem, cfg: NumericConfig):
    names, lmis, E, e, f = _vectorize(problem)
    nv = len(names)
    x0 = np.zeros(nv)
    P = np.eye(nv)
    x0, P = _eliminate(E, e, x0, P, cfg)
    keep = [np.arange(L.c.shape[0]) for L in lmis]
    while True:
        new_rows, new_rhs = [], []
        for j, L in enumerate(lmis):
            k = keep[j]
            if k.size == 0:
                continue
            c = L.c[np.ix_(k, k)] + L.M[np.ix_(k, k)] @ x0
            M = L.M[np.ix_(k, k)] @ P
            zt = 1e-12 * max(1.0, _scale(L))
            zero = [i for i in range(k.size)
                    if abs(c[i, i]) <= zt and np.all(np.abs(M[i, i]) <= zt)]
            if not zero:
                continue
            for i in zero:
                # row i of the full matrix must vanish
                Mi = L.M[k[i]][k]           # (|k|, nv) coefficients in x
                new_rows.append(Mi)
                new_rhs.append(-L.c[k[i]][k])
            keep[j] = np.delete(k, zero)
        if not new_rows:
            break
        x0, P = _eliminate(np.vstack(new_rows), np.concatenate(new_rhs), x0, P, cfg)
    return names, lmis, keep, x0, P, f


# -- main entry ----------------------------------------------------------------

def solve(problem: SdpProblem, feas_tol: float | None = None,
          max_iter: int | None = None, cfg: NumericConfig = DEFAULT,
          margin: float = 0.0, tie_break: Mapping[str, float] | None = None) -> SdpSolution:
    """Solve ``problem``.

    ``margin`` (objective problems only) tightens every normalized LMI to
    ``F_j(x) >= margin * I`` so the optimizer lands strictly inside.

    ``tie_break`` (feasibility problems only) picks a point among the feasible
    ones: after the max-margin solve, the linear functional is minimized
    while keeping half of the optimal margin.  Without it the max-margin
    point can drift towards variable bounds.
    """
    feas_tol = cfg.feas_tol if feas_tol is None else feas_tol
    max_iter = cfg.max_iter if max_iter is None else max_iter
    try:
        names, lmis, keep, x0, P, f = _presolve(problem, cfg)
    except _Infeasible as exc:
        return SdpSolution(SolveStatus.INFEASIBLE, {}, -np.inf, message=str(exc),
                           certificate=True)
    try:
        return _solve_reduced(problem, names, lmis, keep, x0, P, f,
                              feas_tol, max_iter, cfg, margin, tie_break)
    except _Infeasible as exc:
        return SdpSolution(SolveStatus.INFEASIBLE, {}, -np.inf, message=str(exc),
                           certificate=True)


def _solve_reduced(problem, names, lmis, keep, x0, P, f, feas_tol, max_iter,
                   cfg, margin, tie_break=None):
    variables = problem.variables
    feasibility = problem.is_feasibility

    # reduced LMIs in y
    blocks = []
    for j, L in enumerate(lmis):
        k = keep[j]
        if k.size == 0:
            continue
        c = L.c[np.ix_(k, k)] + L.M[np.ix_(k, k)] @ x0
        M = L.M[np.ix_(k, k)] @ P
        s = max(float(np.max(np.abs(c))), float(np.max(np.abs(M))) if M.size else 0.0)
        if s == 0:
            continue
        blocks.append((L.name, c / s, M / s))

    # bounds
    G_rows, h = [], []
    for i, v in enumerate(variables):
        for bound, sign in ((v.lower, -1.0), (v.upper, 1.0)):
            if bound is None:
                continue
            row = sign * P[i]
            rhs = sign * (bound - x0[i])
            if np.max(np.abs(row), initial=0.0) <= 1e-14:
                if rhs < -feas_tol * max(1.0, abs(bound)):
                    raise _Infeasible(f"bound on {v.name} violated by fixed value")
                continue
            G_rows.append(row)
            h.append(rhs)

    # drop directions nobody sees
    ny = P.shape[1]
    stacks = ([M.reshape(-1, ny) for _, _, M in blocks] + ([np.array(G_rows)] if G_rows else [])
              if ny else [])
    fy = P.T @ f
    if ny and stacks:
        A_all = np.vstack(stacks)
        V = la.range_basis(A_all.T, cfg.rank_tol)
    else:
        V = np.zeros((ny, 0))
    if not feasibility and np.linalg.norm(fy - V @ (V.T @ fy)) > 1e-9 * max(1.0, np.linalg.norm(fy)):
        return SdpSolution(SolveStatus.FAILED, {}, np.nan,
                           message="objective unbounded along an unconstrained direction")
    nz = V.shape[1]
    blocks = [(nm, c, M @ V) for nm, c, M in blocks]
    Gz = np.array(G_rows) @ V if G_rows else np.zeros((0, nz))
    hz = np.array(h)
    fz = V.T @ fy

    def finish(z, status, message="", margin_val=None, obj=None, cert=False):
        if not np.all(np.isfinite(z)):
            return SdpSolution(SolveStatus.FAILED, {}, np.nan, message="non-finite solver point",
                               check=CheckReport({}, {}, {}, np.inf, False))
        x = x0 + P @ (V @ z)
        values = {n: float(x[i]) for i, n in enumerate(names)}
        report = check_point(problem, values, feas_tol)
        if status in (SolveStatus.FEASIBLE, SolveStatus.OPTIMAL) and not report.ok:
            status = SolveStatus.INACCURATE
            message = (message + "; " if message else "") + "point failed validation"
        return SdpSolution(status, values, report.worst, objective=obj,
                           margin=margin_val, message=message, check=report,
                           certificate=cert)

    # constant LMIs: decide directly
    live = []
    for nm, c, M in blocks:
        if nz == 0 or np.max(np.abs(M), initial=0.0) <= 1e-14:
            if np.linalg.eigvalsh(0.5 * (c + c.T))[0] < -feas_tol:
                raise _Infeasible(f"constraint {nm} is violated for every admissible point")
        else:
            live.append((nm, c, M))

    if nz == 0:
        return finish(np.zeros(0), SolveStatus.OPTIMAL if not feasibility else SolveStatus.FEASIBLE)

    if not live:
        return _solve_lp(fz, Gz, hz, feasibility, finish)

    opts = {"show_progress": False, "maxiters": int(max_iter),
            "abstol": 1e-10, "reltol": 1e-9, "feastol": 1e-10}
    with_t = feasibility
    obj_vec = None if with_t else fz
    try:
        if with_t:
            sol = _margin_solve(live, Gz, hz, nz, opts)
        else:
            sol = _cvxopt_sdp(live, Gz, hz, nz, obj_vec, margin, opts)
    except (ValueError, ArithmeticError, ZeroDivisionError) as exc:
        log.debug("cvxopt failure: %s", exc)
        if with_t:
            return SdpSolution(SolveStatus.FAILED, {}, np.nan, message=f"solver error: {exc}")
        return _loose_retry(live, Gz, hz, nz, fz, f, x0, feas_tol, opts, finish, margin,
                          f"solver error: {exc}")

    st = sol["status"]
    if sol["x"] is None:
        if st == "primal infeasible":
            raise _Infeasible("solver returned a primal infeasibility certificate")
        if not with_t:
            return _loose_retry(live, Gz, hz, nz, fz, f, x0, feas_tol, opts, finish, margin,
                              f"solver status {st}")
        return SdpSolution(SolveStatus.FAILED, {}, np.nan, message=f"solver status {st}")
    xs = np.array(sol["x"]).reshape(-1)
    z = xs[:nz]
    if with_t:
        t = float(xs[-1])
        if st in ("optimal", "unknown"):
            if t < -feas_tol:
                res = finish(z, SolveStatus.INFEASIBLE, f"max margin {t:.3e}",
                             margin_val=t, cert=(st == "optimal"))
                if res.check.ok:
                    # the point itself is acceptable after all
                    res.status = SolveStatus.FEASIBLE
                return res
            res = finish(z, SolveStatus.FEASIBLE, margin_val=t,
                         message="" if st == "optimal" else "solver status unknown")
            if tie_break and res.status is SolveStatus.FEASIBLE and t > 0:
                res = _tie_break(res, tie_break, names, live, Gz, hz, nz, x0, P, V,
                                 t, opts, finish)
            return res
        if st == "primal infeasible":
            raise _Infeasible("bounds admit no point")
        return SdpSolution(SolveStatus.FAILED, {}, np.nan, message=f"solver status {st}")

    obj = float(fz @ z + f @ x0)
    if st == "optimal":
        res = finish(z, SolveStatus.OPTIMAL, obj=obj)
        if res.status is SolveStatus.OPTIMAL:
            return res
    elif st == "primal infeasible":
        raise _Infeasible("solver returned a primal infeasibility certificate")
    elif st == "dual infeasible":
        return SdpSolution(SolveStatus.FAILED, {}, np.nan, message="problem unbounded")
    res = finish(z, SolveStatus.INACCURATE, "solver status unknown", obj=obj)
    if res.check.ok:
        return res
    return _loose_retry(live, Gz, hz, nz, fz, f, x0, feas_tol, opts, finish, margin,
                      "direct solve failed validation")


def _loose_retry(live, Gz, hz, nz, fz, f, x0, feas_tol, opts, finish, margin, why):
    """Repeat a failed objective solve with looser stopping rules, then fall back."""
    loose = dict(opts, abstol=1e-8, reltol=1e-7, feastol=1e-9)
    try:
        sol = _cvxopt_sdp(live, Gz, hz, nz, fz, margin, loose)
    except (ValueError, ArithmeticError, ZeroDivisionError):
        sol = None
    if sol is not None and sol["x"] is not None and sol["status"] == "optimal":
        z = np.array(sol["x"]).reshape(-1)
        res = finish(z, SolveStatus.OPTIMAL, obj=float(fz @ z + f @ x0))
        if res.status is SolveStatus.OPTIMAL:
            return res
    return _two_phase(live, Gz, hz, nz, fz, f, x0, feas_tol, opts, finish, why)


def _two_phase(live, Gz, hz, nz, fz, f, x0, feas_tol, opts, finish, why):
    """Fallback for objective problems on a thin feasible set.

    Phase one maximizes the common margin t*; a negative t* is the
    infeasibility evidence.  Phase two minimizes the objective while keeping
    a fraction of t*, trying the smallest fraction first.  The result is a
    validated point whose optimality is only approximate (``Inaccurate``).
    """
    try:
        sol = _margin_solve(live, Gz, hz, nz, opts)
    except (ValueError, ArithmeticError, ZeroDivisionError) as exc:
        return SdpSolution(SolveStatus.FAILED, {}, np.nan,
                           message=f"{why}; margin solve error: {exc}")
    if sol["x"] is None:
        if sol["status"] == "primal infeasible":
            raise _Infeasible("bounds admit no point")
        return SdpSolution(SolveStatus.FAILED, {}, np.nan,
                           message=f"{why}; margin solve status {sol['status']}")
    xs = np.array(sol["x"]).reshape(-1)
    t = float(xs[-1])
    if t < -feas_tol:
        res = finish(xs[:nz], SolveStatus.INFEASIBLE, f"max margin {t:.3e}", margin_val=t,
                     cert=(sol["status"] == "optimal"))
        if res.check.ok:
            res.status = SolveStatus.INACCURATE
        return res
    best = finish(xs[:nz], SolveStatus.INACCURATE, f"{why}; objective not minimized",
                  margin_val=t, obj=float(fz @ xs[:nz] + f @ x0))
    if t <= 0:
        return best
    for frac in (1e-3, 1e-2, 1e-1, 0.5):
        try:
            s2 = _cvxopt_sdp(live, Gz, hz, nz, fz, frac * t, opts)
        except (ValueError, ArithmeticError, ZeroDivisionError):
            continue
        if s2["x"] is None or s2["status"] not in ("optimal", "unknown"):
            continue
        z = np.array(s2["x"]).reshape(-1)
        alt = finish(z, SolveStatus.INACCURATE,
                     f"{why}; minimized keeping {frac:g} of margin {t:.3e}",
                     margin_val=frac * t, obj=float(fz @ z + f @ x0))
        if alt.check.ok:
            return alt
    return best if best.check.ok else SdpSolution(SolveStatus.FAILED, {}, np.nan, message=why)


def _margin_solve(live, Gz, hz, nz, opts, caps=(1.0, 1e-2, 1e-4)):
    """Max-margin solve, lowering the cap on t when the supremum is not attained.

    With an unbounded feasible set the margin can approach the cap only as
    the point runs off to infinity; any cap below the supremum is attained.
    """
    err = None
    for cap in caps:
        try:
            sol = _cvxopt_sdp(live, Gz, hz, nz, None, 0.0, opts, cap)
        except (ValueError, ArithmeticError, ZeroDivisionError) as exc:
            err = exc
            continue
        if sol["x"] is not None or sol["status"] == "primal infeasible":
            return sol
        err = None
    if err is not None:
        raise err
    return sol


def _cvxopt_sdp(live, Gz, hz, nz, obj, margin, opts, cap=1.0):
    """Call cvxopt on the reduced blocks.

    ``obj=None`` means max-margin form: an extra variable t enters every LMI
    as ``F - t I`` and is maximized subject to ``t <= cap``.
    """
    import cvxopt
    from cvxopt import solvers

    with_t = obj is None
    nvar = nz + (1 if with_t else 0)
    c_obj = np.zeros(nvar)
    if with_t:
        c_obj[-1] = -1.0
    else:
        c_obj[:] = obj
    Gs, hs = [], []
    for _, c, M in live:
        d = c.shape[0]
        cols = -M.reshape(d * d, nz, order="F")
        if with_t:
            cols = np.hstack([cols, np.eye(d).reshape(d * d, 1, order="F")])
        Gs.append(cvxopt.matrix(cols))
        hs.append(cvxopt.matrix(c - margin * np.eye(d)))
    Gl, hl = Gz, hz
    if with_t:
        Gl = np.hstack([Gl, np.zeros((Gl.shape[0], 1))])
        row = np.zeros((1, nvar))
        row[0, -1] = 1.0
        Gl = np.vstack([Gl, row])
        hl = np.concatenate([hl, [cap]])
    kwargs = {}
    if Gl.shape[0]:
        kwargs["Gl"] = cvxopt.matrix(Gl)
        kwargs["hl"] = cvxopt.matrix(hl)
    return solvers.sdp(cvxopt.matrix(c_obj), Gs=Gs, hs=hs, options=opts, **kwargs)


def _tie_break(res, tie_break, names, live, Gz, hz, nz, x0, P, V, t, opts, finish):
    idx = {n: i for i, n in enumerate(names)}
    f2 = np.zeros(len(names))
    for k, w in tie_break.items():
        f2[idx[k]] = w
    fz2 = V.T @ (P.T @ f2)
    if not np.any(fz2):
        return res
    try:
        sol = _cvxopt_sdp(live, Gz, hz, nz, fz2, 0.5 * t, opts)
    except (ValueError, ArithmeticError, ZeroDivisionError):
        return res
    if sol["x"] is None or sol["status"] not in ("optimal", "unknown"):
        return res
    z = np.array(sol["x"]).reshape(-1)
    alt = finish(z, SolveStatus.FEASIBLE, margin_val=res.margin, message=res.message)
    return alt if alt.status is SolveStatus.FEASIBLE else res


def _solve_lp(fz, Gz, hz, feasibility, finish):
    from scipy.optimize import linprog

    nz = Gz.shape[1]
    c = np.zeros(nz) if feasibility else fz
    r = linprog(c, A_ub=Gz if Gz.size else None, b_ub=hz if Gz.size else None,
                bounds=[(None, None)] * nz, method="highs")
    if r.status == 2:
        raise _Infeasible("bounds admit no point")
    if r.status != 0:
        return SdpSolution(SolveStatus.FAILED, {}, np.nan, message=r.message)
    return finish(r.x, SolveStatus.FEASIBLE if feasibility else SolveStatus.OPTIMAL,
                  obj=None if feasibility else float(r.fun))


# -- debug dump --------------------------------------------------------------------

def problem_to_dict(problem: SdpProblem) -> dict:
    """Plain-data form: variables, constant/coefficient matrices as nested lists."""
    def expr(e: AffineExpr):
        return {"constant": e.const.tolist(),
                "terms": {k: v.tolist() for k, v in sorted(e.coeffs.items())}}
    return {
        "variables": [{"name": v.name, "lower": v.lower, "upper": v.upper}
                      for v in problem.variables],
        "constraints": [dict(name=c.name, **expr(c.expr)) for c in problem.constraints],
        "equalities": [dict(name=e.name, **expr(e.expr)) for e in problem.equalities],
        "objective": dict(problem.objective),
    }


def problem_from_dict(d: dict) -> SdpProblem:
    def expr(x):
        return AffineExpr(np.array(x["constant"], dtype=float),
                          {k: np.array(v, dtype=float) for k, v in x["terms"].items()})
    return SdpProblem(
        variables=[Variable(v["name"], v.get("lower"), v.get("upper")) for v in d["variables"]],
        constraints=[LmiConstraint(c["name"], expr(c)) for c in d["constraints"]],
        objective={k: float(v) for k, v in d.get("objective", {}).items()},
        equalities=[EqualityConstraint(e["name"], expr(e)) for e in d.get("equalities", [])],
    )


def dump_problem(problem: SdpProblem, path) -> None:
    with open(path, "w") as fh:
        json.dump(problem_to_dict(problem), fh, indent=1)
