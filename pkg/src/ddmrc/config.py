"""Numerical tolerances shared by every module.

Nothing downstream hard-codes a threshold; each routine accepts a
``NumericConfig`` (or falls back to ``DEFAULT``).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class NumericConfig:
    """Tolerances with their default values.

    Attributes
    ----------
    rank_tol
        Relative numerical-rank cutoff; singular values below
        ``rank_tol * sigma_max * max(rows, cols)`` count as zero.
    psd_tol
        Eigenvalue threshold for definiteness tests, scaled by
        ``max(1, sigma_max)``.
    sym_tol
        Relative asymmetry above which a "symmetric" input is rejected.
    strict_margin
        Witness margin for strict inequalities (Z+ membership, Lyapunov
        LMI, the ``(A_m - I) G (A_m - I)^T - D`` constraint in minimize mode).
    feas_tol
        Acceptance threshold on normalized LMI residuals.
    exact_tol
        Least-squares residual threshold for exact matching.
    imag_axis_tol
        Relative distance of an eigenvalue from the imaginary axis that
        still counts as "on" it.
    nsd_tol
        ``N`` is declared not negative semidefinite when its largest
        eigenvalue exceeds ``nsd_tol * ||N||``.
    alpha_min, alpha_cap
        Bounds on the S-lemma multipliers.
    oracle_tol
        Violation threshold for the sampling oracle, relative to
        ``max(1, ||D||)``.
    schur_threshold
        A sampled closed loop passes when its spectral radius is below
        ``1 - schur_threshold``.
    max_iter
        Interior-point iteration cap.
    """

    rank_tol: float = 1e-10
    psd_tol: float = 1e-9
    sym_tol: float = 1e-6
    strict_margin: float = 1e-6
    feas_tol: float = 1e-7
    exact_tol: float = 1e-8
    imag_axis_tol: float = 1e-8
    nsd_tol: float = 1e-9
    alpha_min: float = 1e-9
    alpha_cap: float = 1e9
    oracle_tol: float = 1e-7
    schur_threshold: float = 1e-9
    max_iter: int = 200

    def with_(self, **changes) -> "NumericConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict | None) -> "NumericConfig":
        if not d:
            return cls()
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)


DEFAULT = NumericConfig()
