"""Affine matrix expressions in scalar decision variables.

An ``AffineExpr`` is ``C + sum_i x_i F_i`` with constant matrices ``C`` and
``F_i``.  It supports the handful of operations the LMI builders need:
sums, products with constant matrices, transposes and block assembly.
Matrix-valued decision variables are flattened into named scalars, e.g.
``K[0,1]`` or ``D[0,1]`` (one scalar per upper-triangular entry of a
symmetric variable).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np


class AffineExpr:
    __slots__ = ("const", "coeffs")
    # make ndarray @ AffineExpr dispatch to __rmatmul__
    __array_ufunc__ = None

    def __init__(self, const, coeffs: Mapping[str, np.ndarray] | None = None):
        self.const = np.atleast_2d(np.asarray(const, dtype=float))
        self.coeffs = {k: np.atleast_2d(np.asarray(v, dtype=float))
                       for k, v in (coeffs or {}).items()}
        for k, v in self.coeffs.items():
            if v.shape != self.const.shape:
                raise ValueError(f"coefficient of {k} has shape {v.shape}, "
                                 f"expected {self.const.shape}")

    # -- construction ---------------------------------------------------
    @classmethod
    def constant(cls, M) -> "AffineExpr":
        return cls(M)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "AffineExpr":
        return cls(np.zeros((rows, cols)))

    @property
    def shape(self):
        return self.const.shape

    @property
    def variables(self) -> set[str]:
        return set(self.coeffs)

    # -- arithmetic -----------------------------------------------------
    @staticmethod
    def _lift(other, shape) -> "AffineExpr":
        if isinstance(other, AffineExpr):
            return other
        M = np.asarray(other, dtype=float)
        if M.ndim == 0:
            M = np.full(shape, float(M))
        return AffineExpr(M)

    def __add__(self, other) -> "AffineExpr":
        o = self._lift(other, self.shape)
        if o.shape != self.shape:
            raise ValueError(f"shape mismatch {self.shape} + {o.shape}")
        coeffs = dict(self.coeffs)
        for k, v in o.coeffs.items():
            coeffs[k] = coeffs[k] + v if k in coeffs else v
        return AffineExpr(self.const + o.const, coeffs)

    __radd__ = __add__

    def __neg__(self) -> "AffineExpr":
        return AffineExpr(-self.const, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other) -> "AffineExpr":
        return self + (-self._lift(other, self.shape))

    def __rsub__(self, other) -> "AffineExpr":
        return self._lift(other, self.shape) + (-self)

    def __mul__(self, c) -> "AffineExpr":
        if isinstance(c, AffineExpr) or np.ndim(c) != 0:
            raise TypeError("AffineExpr * only accepts scalars; use @ or times()")
        c = float(c)
        return AffineExpr(c * self.const, {k: c * v for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def __matmul__(self, M) -> "AffineExpr":
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return AffineExpr(self.const @ M, {k: v @ M for k, v in self.coeffs.items()})

    def __rmatmul__(self, M) -> "AffineExpr":
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return AffineExpr(M @ self.const, {k: M @ v for k, v in self.coeffs.items()})

    @property
    def T(self) -> "AffineExpr":
        return AffineExpr(self.const.T, {k: v.T for k, v in self.coeffs.items()})

    def times(self, M) -> "AffineExpr":
        """Scalar (1x1) expression times a constant matrix."""
        if self.shape != (1, 1):
            raise ValueError("times() needs a 1x1 expression")
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return AffineExpr(self.const[0, 0] * M,
                          {k: v[0, 0] * M for k, v in self.coeffs.items()})

    def congruence(self, S) -> "AffineExpr":
        """S^T (self) S."""
        S = np.atleast_2d(np.asarray(S, dtype=float))
        return S.T @ self @ S

    def symmetrized(self) -> "AffineExpr":
        return AffineExpr(0.5 * (self.const + self.const.T),
                          {k: 0.5 * (v + v.T) for k, v in self.coeffs.items()})

    def trace(self) -> dict[str, float]:
        """Linear functional trace(self) as {variable: weight} (constant dropped)."""
        return {k: float(np.trace(v)) for k, v in self.coeffs.items()}

    # -- evaluation -----------------------------------------------------
    def evaluate(self, values: Mapping[str, float]) -> np.ndarray:
        missing = [k for k in self.coeffs if k not in values]
        if missing:
            raise KeyError(f"missing values for {missing[:5]}")
        out = self.const.copy()
        for k, v in self.coeffs.items():
            out += values[k] * v
        return out

    def __repr__(self):
        return f"AffineExpr(shape={self.shape}, vars={len(self.coeffs)})"


def bmat(blocks: Iterable[Iterable]) -> AffineExpr:
    """Assemble a block matrix; ``None`` entries are zero blocks.

    Block sizes are inferred from the non-``None`` entries of each block row
    and block column.
    """
    rows = [list(r) for r in blocks]
    nr, nc = len(rows), len(rows[0])
    heights = [None] * nr
    widths = [None] * nc
    for i, r in enumerate(rows):
        if len(r) != nc:
            raise ValueError("ragged block layout")
        for j, b in enumerate(r):
            if b is None:
                continue
            shp = b.shape if isinstance(b, AffineExpr) else np.atleast_2d(b).shape
            if heights[i] is None:
                heights[i] = shp[0]
            if widths[j] is None:
                widths[j] = shp[1]
            if heights[i] != shp[0] or widths[j] != shp[1]:
                raise ValueError(f"block ({i},{j}) has shape {shp}")
    if None in heights or None in widths:
        raise ValueError("cannot infer the size of an all-None block row/column")
    H, W = sum(heights), sum(widths)
    r0 = np.concatenate([[0], np.cumsum(heights)])
    c0 = np.concatenate([[0], np.cumsum(widths)])
    const = np.zeros((H, W))
    coeffs: dict[str, np.ndarray] = {}
    for i, r in enumerate(rows):
        for j, b in enumerate(r):
            if b is None:
                continue
            sl = (slice(r0[i], r0[i + 1]), slice(c0[j], c0[j + 1]))
            if isinstance(b, AffineExpr):
                const[sl] += b.const
                for k, v in b.coeffs.items():
                    if k not in coeffs:
                        coeffs[k] = np.zeros((H, W))
                    coeffs[k][sl] += v
            else:
                const[sl] += np.atleast_2d(np.asarray(b, dtype=float))
    return AffineExpr(const, coeffs)


@dataclass(frozen=True)
class Variable:
    name: str
    lower: float | None = None
    upper: float | None = None


class VariableFactory:
    """Creates named scalar variables and matrix-shaped expressions of them."""

    def __init__(self):
        self.variables: list[Variable] = []
        self._names: set[str] = set()

    def _add(self, name: str, lower=None, upper=None):
        if name in self._names:
            raise ValueError(f"duplicate variable {name}")
        self._names.add(name)
        self.variables.append(Variable(name, lower, upper))

    def scalar(self, name: str, lower=None, upper=None) -> AffineExpr:
        self._add(name, lower, upper)
        return AffineExpr(np.zeros((1, 1)), {name: np.ones((1, 1))})

    def matrix(self, name: str, rows: int, cols: int) -> AffineExpr:
        coeffs = {}
        for i in range(rows):
            for j in range(cols):
                vn = f"{name}[{i},{j}]"
                self._add(vn)
                E = np.zeros((rows, cols))
                E[i, j] = 1.0
                coeffs[vn] = E
        return AffineExpr(np.zeros((rows, cols)), coeffs)

    def symmetric(self, name: str, n: int) -> AffineExpr:
        coeffs = {}
        for i in range(n):
            for j in range(i, n):
                vn = f"{name}[{i},{j}]"
                self._add(vn)
                E = np.zeros((n, n))
                E[i, j] = E[j, i] = 1.0
                coeffs[vn] = E
        return AffineExpr(np.zeros((n, n)), coeffs)


def matrix_values(values: Mapping[str, float], name: str, rows: int, cols: int) -> np.ndarray:
    return np.array([[values[f"{name}[{i},{j}]"] for j in range(cols)] for i in range(rows)])


def symmetric_values(values: Mapping[str, float], name: str, n: int) -> np.ndarray:
    M = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            M[i, j] = M[j, i] = values[f"{name}[{i},{j}]"]
    return M


def matrix_assignment(name: str, M) -> dict[str, float]:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return {f"{name}[{i},{j}]": float(M[i, j])
            for i in range(M.shape[0]) for j in range(M.shape[1])}


def symmetric_assignment(name: str, M) -> dict[str, float]:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n = M.shape[0]
    return {f"{name}[{i},{j}]": float(M[i, j]) for i in range(n) for j in range(i, n)}
