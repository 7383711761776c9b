"""Data-driven matching LMIs, in literal and in well-conditioned form.

For data (X, U_minus) under a noise bound Phi, the set of consistent
(A, B) is the solution set of a QMI in Z = [A B]^T with matrix

    N = [I X+; 0 -X-; 0 -U-] Phi [I X+; 0 -X-; 0 -U-]^T.

The matching LMI for a gain (K or L) reads

    [[D, 0, c1], [0, 0, c2], [c1^T, c2^T, Gamma^-1]] - alpha * blkdiag(N, 0) >= 0

with c1 = -A_m, c2 = [I; K] (or c1 = -B_m, c2 = [0; L]).  It is exactly what
a solver should *not* be given: for noise-free data N has a zero Schur
complement, and with T >> n the blocks X+ X+^T dwarf the reference model
terms.

``DataGeometry`` rewrites N around its least-squares centre
``Zhat = [Ahat Bhat]``:

    N = T^-T blkdiag(Q, -H H^T) T^-1,   T = [[I, 0], [Zhat^T, I]]

(with H = [X-; U-] after whitening by Phi22), where Q = N | N22 is computed
as ``Phi_s - V V^T`` from the least-squares residual V, which is accurate
even when Q is tiny.  A congruence by T and by the singular vectors of H
turns the matching LMI into

    [[W^T D W - alpha diag(q), 0,        0,   W^T (Zhat c2 + c1)],
     [0,                       alpha I_r, 0,   Sigma_r^-1 U_r^T c2],
     [0,                       0,        0_k, U_0^T c2          ],
     [ .                       .         .    Gamma^-1          ]]  >= 0

which is equivalent (the congruence is invertible) and has exact zeros
wherever the data carry no information; the conic presolve turns those into
linear equalities.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .affine import AffineExpr, bmat
from .config import DEFAULT, NumericConfig
from .errors import DimensionError, NotInPiClass
from .models import DataSet
from .qmi import NoiseModel, QmiSpec


def data_matrix(data: DataSet) -> np.ndarray:
    """[I X+; 0 -X-; 0 -U-] of size (2n+m) x (n+T)."""
    n, m, T = data.n, data.m, data.T
    top = np.hstack([np.eye(n), data.X_plus])
    mid = np.hstack([np.zeros((n, n)), -data.X_minus])
    bot = np.hstack([np.zeros((m, n)), -data.U_minus])
    return np.vstack([top, mid, bot])


def build_N(data: DataSet, noise: NoiseModel) -> np.ndarray:
    if noise.n != data.n or noise.T != data.T:
        raise DimensionError(
            f"noise model is for n={noise.n}, T={noise.T}; data has n={data.n}, T={data.T}")
    M = data_matrix(data)
    N = M @ noise.phi.pi @ M.T
    return 0.5 * (N + N.T)


def consistency_spec(data: DataSet, noise: NoiseModel) -> QmiSpec:
    """QMI whose solutions Z = [A B]^T are the systems consistent with the data."""
    return QmiSpec(build_N(data, noise), data.n, data.n + data.m)


@dataclass
class DataGeometry:
    n: int
    m: int
    N: np.ndarray
    Zhat: np.ndarray        # n x (n+m), least-squares centre [Ahat Bhat]
    Q: np.ndarray           # N | N22
    q: np.ndarray           # eigenvalues of Q, tiny ones set to exactly 0
    W: np.ndarray           # eigenvectors of Q
    Ur: np.ndarray          # identified directions of (A, B)-space
    sig: np.ndarray         # their singular values
    U0: np.ndarray          # unidentified directions
    lam_max_N: float

    @property
    def noiseless(self) -> bool:
        return not np.any(self.q)

    @classmethod
    def from_data(cls, data: DataSet, noise: NoiseModel,
                  cfg: NumericConfig = DEFAULT) -> "DataGeometry":
        n, m, T = data.n, data.m, data.T
        N = build_N(data, noise)
        P11, P12, P21, P22 = noise.phi.blocks
        H = np.vstack([data.X_minus, data.U_minus])
        w22 = np.linalg.eigvalsh(-P22) if T else np.zeros(0)
        if T and w22[0] > cfg.rank_tol * max(1.0, w22[-1]):
            # Phi22 < 0: whiten and reduce to a plain least-squares problem
            R = la.psd_sqrt(-P22)
            P22inv = np.linalg.inv(P22)
            Y = data.X_plus + P12 @ P22inv
            Phis = P11 - P12 @ P22inv @ P21
            HR, YR = H @ R, Y @ R
            U, s, Vt = np.linalg.svd(HR, full_matrices=True)
            r = la.numerical_rank(HR, cfg.rank_tol)
            Ur, sig, U0 = U[:, :r], s[:r], U[:, r:]
            Vr, Vperp = Vt[:r].T, Vt[r:].T
            Zhat = (YR @ Vr) / sig @ Ur.T
            Vc = YR @ Vperp
            Q = Phis - Vc @ Vc.T
        else:
            S = -N[n:, n:]
            ws, Us = np.linalg.eigh(0.5 * (S + S.T))
            ws, Us = ws[::-1], Us[:, ::-1]
            r = int(np.sum(ws > cfg.rank_tol * max(1.0, ws[0] if ws.size else 0.0) * max(S.shape)))
            Ur, sig, U0 = Us[:, :r], np.sqrt(ws[:r]), Us[:, r:]
            if not la.kernel_contained(N[n:, n:], N[:n, n:], tol=1e-8, rank_tol=cfg.rank_tol):
                raise NotInPiClass("data matrix N violates the kernel condition")
            Zhat = (la.pinv(S, cfg.rank_tol) @ N[n:, :n]).T
            Q = la.schur_complement(N, n, cfg.rank_tol)
        Q = 0.5 * (Q + Q.T)
        qw, W = np.linalg.eigh(Q)
        scale = max(1.0, float(np.max(np.abs(qw))) if qw.size else 0.0,
                    float(np.linalg.norm(P11, 2)) if P11.size else 0.0)
        thr = 1e-12 * scale
        if qw.size and qw[0] < -max(thr, cfg.psd_tol * scale):
            raise NotInPiClass(
                f"no system is consistent with the data (N|N22 has eigenvalue {qw[0]:.3e})")
        qw = np.where(qw > thr, qw, 0.0)
        lam = float(np.linalg.eigvalsh(N)[-1])
        return cls(n, m, N, Zhat, Q, qw, W, Ur, sig, U0, lam)

    def n_not_nsd(self, cfg: NumericConfig = DEFAULT) -> bool:
        return self.lam_max_N > cfg.nsd_tol * max(1.0, np.linalg.norm(self.N, 2))


def gain_column(kind: str, G: AffineExpr | np.ndarray, n: int, m: int) -> AffineExpr:
    """c2 = [I; K] for kind 'K', [0; L] for kind 'L'."""
    G = G if isinstance(G, AffineExpr) else AffineExpr(G)
    cols = G.shape[1]
    top = np.eye(n) if kind == "K" else np.zeros((n, cols))
    return bmat([[top], [G]])


def literal_matching_lmi(N: np.ndarray, target: np.ndarray, c2: AffineExpr,
                         D, gamma_inv: np.ndarray, alpha: AffineExpr) -> AffineExpr:
    """[[D, 0, c1], [0, 0, c2], [c1^T, c2^T, Gamma^-1]] - alpha blkdiag(N, 0)."""
    n = target.shape[0]
    k = c2.shape[0]
    w = target.shape[1]
    Dexpr = D if isinstance(D, AffineExpr) else AffineExpr(D)
    c1 = AffineExpr(-target)
    base = bmat([[Dexpr, np.zeros((n, k)), c1],
                 [np.zeros((k, n)), np.zeros((k, k)), c2],
                 [c1.T, c2.T, gamma_inv]])
    Npad = la.block_diag(N, np.zeros((w, w)))
    return base - alpha.times(Npad)


def reduced_matching_lmi(geo: DataGeometry, target: np.ndarray, c2: AffineExpr,
                         D, gamma_inv: np.ndarray, alpha: AffineExpr) -> AffineExpr:
    """Congruence-transformed form of ``literal_matching_lmi`` (see module doc)."""
    n = geo.n
    w = target.shape[1]
    Dexpr = D if isinstance(D, AffineExpr) else AffineExpr(D)
    top = geo.W.T @ Dexpr @ geo.W - alpha.times(np.diag(geo.q))
    delta = geo.W.T @ (geo.Zhat @ c2 - target)
    r, k = geo.Ur.shape[1], geo.U0.shape[1]
    blocks = [[top, None, None, delta]]
    if r:
        Cr = (geo.Ur / geo.sig).T @ c2
        blocks[0][1] = np.zeros((n, r))
        blocks.append([np.zeros((r, n)), alpha.times(np.eye(r)), None, Cr])
    if k:
        C0 = geo.U0.T @ c2
        blocks[0][2] = np.zeros((n, k))
        blocks.append([np.zeros((k, n)), None if not r else np.zeros((k, r)),
                       np.zeros((k, k)), C0])
    last = [delta.T, None, None, gamma_inv]
    if r:
        last[1] = blocks[1][3].T
    if k:
        last[2] = blocks[-1][3].T
    blocks.append(last)
    # drop absent block columns
    keep = [0] + ([1] if r else []) + ([2] if k else []) + [3]
    blocks = [[row[j] for j in keep] for row in blocks]
    return bmat(blocks)
