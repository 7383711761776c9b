"""Dense matrix primitives: pseudo-inverses, kernels, Schur complements,
definiteness and spectra, plus the plain-text matrix CSV format."""
from __future__ import annotations

import enum
import io
from pathlib import Path
from typing import Iterable

import numpy as np
import scipy.linalg as sla

from .config import DEFAULT, NumericConfig
from .errors import AsymmetryError, DimensionError, NonFiniteError


class Definiteness(enum.Enum):
    POSITIVE_DEFINITE = "PositiveDefinite"
    POSITIVE_SEMIDEFINITE = "PositiveSemidefinite"
    INDEFINITE = "Indefinite"
    NEGATIVE_SEMIDEFINITE = "NegativeSemidefinite"
    NEGATIVE_DEFINITE = "NegativeDefinite"
    ZERO = "Zero"

    @property
    def is_psd(self) -> bool:
        return self in (Definiteness.POSITIVE_DEFINITE,
                        Definiteness.POSITIVE_SEMIDEFINITE, Definiteness.ZERO)

    @property
    def is_nsd(self) -> bool:
        return self in (Definiteness.NEGATIVE_DEFINITE,
                        Definiteness.NEGATIVE_SEMIDEFINITE, Definiteness.ZERO)

    def mirror(self) -> "Definiteness":
        return _MIRROR[self]


_MIRROR = {
    Definiteness.POSITIVE_DEFINITE: Definiteness.NEGATIVE_DEFINITE,
    Definiteness.NEGATIVE_DEFINITE: Definiteness.POSITIVE_DEFINITE,
    Definiteness.POSITIVE_SEMIDEFINITE: Definiteness.NEGATIVE_SEMIDEFINITE,
    Definiteness.NEGATIVE_SEMIDEFINITE: Definiteness.POSITIVE_SEMIDEFINITE,
    Definiteness.INDEFINITE: Definiteness.INDEFINITE,
    Definiteness.ZERO: Definiteness.ZERO,
}


def as_matrix(A, name: str = "matrix") -> np.ndarray:
    """Return ``A`` as a finite 2-D float array (scalars become 1x1)."""
    M = np.array(A, dtype=float)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    elif M.ndim == 1:
        M = M.reshape(1, -1)
    elif M.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return M


def symmetrize(A, cfg: NumericConfig = DEFAULT, name: str = "matrix") -> np.ndarray:
    """(A + A^T)/2 after checking that A is symmetric up to ``cfg.sym_tol``."""
    A = as_matrix(A, name)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got {A.shape}")
    scale = max(1.0, np.linalg.norm(A, 2)) if A.size else 1.0
    if A.size and np.max(np.abs(A - A.T)) > cfg.sym_tol * scale:
        raise AsymmetryError(f"{name} is not symmetric")
    return 0.5 * (A + A.T)


def _rank_cutoff(s: np.ndarray, shape, rank_tol: float) -> float:
    if s.size == 0:
        return 0.0
    # subnormal singular values count as zero: their reciprocals overflow
    return max(rank_tol * s[0] * max(shape), np.finfo(float).tiny)


def pinv(A, rank_tol: float = DEFAULT.rank_tol) -> np.ndarray:
    """Moore-Penrose pseudo-inverse with a relative singular value cutoff."""
    A = as_matrix(A)
    if A.size == 0:
        return np.zeros((A.shape[1], A.shape[0]))
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    cut = _rank_cutoff(s, A.shape, rank_tol)
    inv = np.array([1.0 / x if x > cut and x > 0 else 0.0 for x in s])
    return (Vt.T * inv) @ U.T


def numerical_rank(A, rank_tol: float = DEFAULT.rank_tol) -> int:
    A = as_matrix(A)
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    cut = _rank_cutoff(s, A.shape, rank_tol)
    return int(np.sum((s > cut) & (s > 0)))


def kernel_basis(A, rank_tol: float = DEFAULT.rank_tol) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical kernel of A."""
    A = as_matrix(A)
    n = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(n)
    _, s, Vt = np.linalg.svd(A, full_matrices=True)
    r = numerical_rank(A, rank_tol)
    return Vt[r:].T.copy()


def range_basis(A, rank_tol: float = DEFAULT.rank_tol) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical range of A."""
    A = as_matrix(A)
    if A.size == 0:
        return np.zeros((A.shape[0], 0))
    U, _, _ = np.linalg.svd(A, full_matrices=False)
    return U[:, :numerical_rank(A, rank_tol)].copy()


def eigvalsh(A, cfg: NumericConfig = DEFAULT) -> np.ndarray:
    return np.linalg.eigvalsh(symmetrize(A, cfg))


def min_eig(A, cfg: NumericConfig = DEFAULT) -> float:
    A = symmetrize(A, cfg)
    if A.size == 0:
        return np.inf
    return float(np.linalg.eigvalsh(A)[0])


def classify_definiteness(A, tol: float = DEFAULT.psd_tol,
                          cfg: NumericConfig = DEFAULT) -> Definiteness:
    """Classify a symmetric matrix from its spectrum.

    Eigenvalues with magnitude at most ``tol * max(1, sigma_max)`` count as
    zero.
    """
    A = symmetrize(A, cfg)
    if A.size == 0:
        return Definiteness.ZERO
    w = np.linalg.eigvalsh(A)
    thr = tol * max(1.0, float(np.max(np.abs(w))))
    pos = np.any(w > thr)
    neg = np.any(w < -thr)
    zero = np.any(np.abs(w) <= thr)
    if pos and neg:
        return Definiteness.INDEFINITE
    if pos:
        return Definiteness.POSITIVE_SEMIDEFINITE if zero else Definiteness.POSITIVE_DEFINITE
    if neg:
        return Definiteness.NEGATIVE_SEMIDEFINITE if zero else Definiteness.NEGATIVE_DEFINITE
    return Definiteness.ZERO


def split_blocks(P, q: int):
    """Return (P11, P12, P21, P22) for a split after row/column ``q``."""
    P = as_matrix(P)
    if not 0 < q < P.shape[0] or P.shape[0] != P.shape[1]:
        raise DimensionError(f"invalid split {q} for shape {P.shape}")
    return P[:q, :q], P[:q, q:], P[q:, :q], P[q:, q:]


def schur_complement(P, q: int, rank_tol: float = DEFAULT.rank_tol,
                     cfg: NumericConfig = DEFAULT) -> np.ndarray:
    """Generalized Schur complement P11 - P12 P22^+ P21 (symmetric output)."""
    P = symmetrize(P, cfg)
    P11, P12, P21, P22 = split_blocks(P, q)
    S = P11 - P12 @ pinv(P22, rank_tol) @ P21
    return 0.5 * (S + S.T)


def kernel_contained(A, B, tol: float = 1e-9,
                     rank_tol: float = DEFAULT.rank_tol) -> bool:
    """True iff ker A is contained in ker B (up to ``tol``)."""
    A = as_matrix(A)
    B = as_matrix(B)
    if A.shape[1] != B.shape[1]:
        raise DimensionError("kernel_contained needs equal column counts")
    V = kernel_basis(A, rank_tol)
    if V.shape[1] == 0 or B.size == 0:
        return True
    nb = np.linalg.norm(B, 2)
    if nb == 0:
        return True
    return bool(np.all(np.linalg.norm(B @ V, axis=0) <= tol * nb))


def spectral_radius(A) -> float:
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise DimensionError("spectral_radius needs a square matrix")
    if A.size == 0:
        return 0.0
    try:
        w = sla.eigvals(A)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise np.linalg.LinAlgError(f"eigenvalue computation failed: {exc}") from exc
    return float(np.max(np.abs(w)))


def has_imaginary_axis_eigenvalue(A, tol: float = DEFAULT.imag_axis_tol) -> bool:
    """True iff some eigenvalue has |Re| <= tol * max(1, ||A||_2).

    Zero counts as lying on the axis.
    """
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise DimensionError("has_imaginary_axis_eigenvalue needs a square matrix")
    if A.size == 0:
        return False
    w = sla.eigvals(A)
    thr = tol * max(1.0, np.linalg.norm(A, 2))
    return bool(np.any(np.abs(w.real) <= thr))


def psd_sqrt(A, tol: float = DEFAULT.psd_tol, cfg: NumericConfig = DEFAULT,
             inverse: bool = False) -> np.ndarray:
    """Symmetric square root of a PSD matrix (or of its pseudo-inverse).

    Negative eigenvalues down to ``-tol * max(1, ||A||)`` are clamped to
    zero; anything more negative raises.
    """
    A = symmetrize(A, cfg)
    if A.size == 0:
        return A.copy()
    w, V = np.linalg.eigh(A)
    thr = tol * max(1.0, float(np.max(np.abs(w))))
    if w[0] < -thr:
        raise ValueError(f"matrix is not PSD (min eigenvalue {w[0]:.3e})")
    w = np.where(w > thr, w, 0.0)
    if inverse:
        d = np.array([1.0 / np.sqrt(x) if x > 0 else 0.0 for x in w])
    else:
        d = np.sqrt(w)
    return (V * d) @ V.T


def solve_lstsq_min_norm(A, B, rank_tol: float = DEFAULT.rank_tol):
    """Minimum-norm least-squares solution X of A X = B and its residual."""
    A = as_matrix(A)
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    X = pinv(A, rank_tol) @ B
    return X, float(np.linalg.norm(A @ X - B))


# -- CSV matrix format ---------------------------------------------------

def format_matrix_csv(A) -> str:
    A = as_matrix(A)
    out = io.StringIO()
    out.write(f"{A.shape[0]},{A.shape[1]}\n")
    for row in A:
        out.write(",".join(repr(float(x)) for x in row))
        out.write("\n")
    return out.getvalue()


def parse_matrix_csv(text: str) -> np.ndarray:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise DimensionError("empty matrix CSV")
    try:
        rows, cols = (int(x) for x in lines[0].split(","))
    except ValueError as exc:
        raise DimensionError(f"bad matrix CSV header {lines[0]!r}") from exc
    body = lines[1:]
    if len(body) != rows:
        raise DimensionError(f"expected {rows} rows, found {len(body)}")
    data = [[float(x) for x in ln.split(",")] for ln in body]
    if any(len(r) != cols for r in data):
        raise DimensionError("row length does not match header")
    return as_matrix(np.array(data).reshape(rows, cols))


def write_matrix_csv(path, A) -> None:
    Path(path).write_text(format_matrix_csv(A))


def read_matrix_csv(path) -> np.ndarray:
    return parse_matrix_csv(Path(path).read_text())


def block_diag(*mats: Iterable) -> np.ndarray:
    return sla.block_diag(*[as_matrix(m) for m in mats])
