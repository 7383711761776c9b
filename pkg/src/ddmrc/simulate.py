"""Closed-loop data collection and tracking-error runs."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import linalg as la
from .errors import DimensionError, SchemaError, UnstableExperiment
from .models import ControllerGains, DataSet, LinearSystem, ReferenceModel
from .qmi import NoiseModel, QmiSpec, qmi_value, sample_solutions

__all__ = ["ExperimentConfig", "generate_noise", "simulate_closed_loop",
           "tracking_error_run", "noise_satisfies", "trajectory_csv"]

BLOWUP = 1e12


@dataclass
class ExperimentConfig:
    """Settings of one data-collection experiment.

    ``x0`` is ``"random"`` (standard normal) or an explicit vector.
    ``reference`` is ``"normal"`` or an explicit p x T array.
    """

    T: int = 100
    x0: object = "random"
    K0: np.ndarray | None = None
    L0: np.ndarray | None = None
    reference: object = "normal"
    noise_level: float = 0.0
    seed: int = 0
    trials: int = 1
    energy_fraction: float = 0.9

    def __post_init__(self):
        if int(self.T) < 1:
            raise SchemaError("T must be at least 1")
        if int(self.trials) < 1:
            raise SchemaError("trials must be at least 1")
        if self.noise_level < 0:
            raise SchemaError("noise_level must be non-negative")
        if not 0 < self.energy_fraction <= 1:
            raise SchemaError("energy_fraction must be in (0, 1]")

    def trial(self, k: int) -> "ExperimentConfig":
        """Config of trial k, seeded with seed + k."""
        d = dict(self.__dict__)
        d["seed"] = int(self.seed) + int(k)
        d["trials"] = 1
        return ExperimentConfig(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("K0", "L0"):
            if d[k] is not None:
                d[k] = np.asarray(d[k]).tolist()
        for k in ("x0", "reference"):
            if isinstance(d[k], np.ndarray):
                d[k] = d[k].tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise SchemaError(f"unknown experiment fields: {sorted(extra)}")
        for k in ("K0", "L0"):
            if d.get(k) is not None:
                d[k] = np.array(d[k], dtype=float)
        for k in ("x0", "reference"):
            if isinstance(d.get(k), list):
                d[k] = np.array(d[k], dtype=float)
        return cls(**d)


def noise_satisfies(noise: NoiseModel, W, slack: float = 1e-12) -> bool:
    """Does W (n x T) satisfy the noise QMI, allowing ``slack`` relative round-off?"""
    W = la.as_matrix(W, "W")
    V = qmi_value(noise.phi, W.T)
    scale = max(1.0, float(np.linalg.norm(noise.phi.pi, 2)) * (1.0 + float(np.sum(W * W))))
    return float(np.linalg.eigvalsh(V)[0]) >= -slack * scale


def generate_noise(noise: NoiseModel, T: int | None = None, seed=0,
                   energy_fraction: float = 0.9) -> np.ndarray:
    """A noise realization W (n x T) inside the noise QMI.

    Energy bounds (Phi12 = 0, Phi22 = -I): Gaussian rows scaled to energy
    ``energy_fraction * Phi11[i, i]``, projected onto range(Phi11), then
    shrunk as a whole (to the target energy) if ``W W^T <= Phi11`` fails.
    Other structures use one interior draw of the QMI sampler.
    """
    T = noise.T if T is None else int(T)
    if T != noise.T:
        raise DimensionError(f"noise model has T={noise.T}, asked for {T}")
    n = noise.n
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if noise.is_energy_bound():
        P11 = noise.phi.blocks[0]
        W = rng.standard_normal((n, T))
        d = np.clip(np.diag(P11), 0.0, None)
        norms = np.linalg.norm(W, axis=1)
        norms[norms == 0] = 1.0
        W = W * (np.sqrt(energy_fraction * d) / norms)[:, None]
        Rb = la.range_basis(P11)
        W = Rb @ (Rb.T @ W)
        if Rb.shape[1]:
            M = la.psd_sqrt(P11, inverse=True) @ W
            lam = float(np.linalg.norm(M, 2) ** 2)
            if lam >= 1.0:
                W *= np.sqrt(energy_fraction / lam)
        else:
            W = np.zeros((n, T))
    else:
        Z = sample_solutions(noise.phi, 1, rng, boundary_fraction=0.0)[0]
        W = Z.T
    if not noise_satisfies(noise, W):
        raise RuntimeError("generated noise violates its bound")
    return W


def _initial_state(cfg: ExperimentConfig, n: int, rng) -> np.ndarray:
    if isinstance(cfg.x0, str):
        if cfg.x0 != "random":
            raise SchemaError(f"unknown x0 spec {cfg.x0!r}")
        return rng.standard_normal(n)
    x0 = np.asarray(cfg.x0, dtype=float).reshape(-1)
    if x0.size != n:
        raise DimensionError(f"x0 has {x0.size} entries, system has n={n}")
    return x0


def _reference(cfg: ExperimentConfig, p: int, T: int, rng) -> np.ndarray:
    if isinstance(cfg.reference, str):
        if cfg.reference != "normal":
            raise SchemaError(f"unknown reference spec {cfg.reference!r}")
        return rng.standard_normal((p, T))
    r = la.as_matrix(cfg.reference, "reference")
    if r.shape[0] != p or r.shape[1] < T:
        raise DimensionError(f"reference must be {p} x >= {T}, got {r.shape}")
    return r[:, :T]


def simulate_closed_loop(sys: LinearSystem, gains: ControllerGains,
                         cfg: ExperimentConfig, noise: NoiseModel | None = None):
    """Run x(t+1) = A x + B (K0 x + L0 r) + w for T steps.

    Returns ``(DataSet, W_minus, r)``; one generator seeded with ``cfg.seed``
    draws, in order, the noise, the initial state and the reference.
    """
    n, m, T = sys.n, sys.m, int(cfg.T)
    K, L = gains.K, gains.L
    if K.shape != (m, n) or L.shape[0] != m:
        raise DimensionError("gains do not fit the system")
    noise = noise or NoiseModel.noiseless(n, T)
    rng = np.random.default_rng(cfg.seed)
    W = generate_noise(noise, T, rng, cfg.energy_fraction)
    x = _initial_state(cfg, n, rng)
    r = _reference(cfg, L.shape[1], T, rng)
    X = np.zeros((n, T + 1))
    U = np.zeros((m, T))
    X[:, 0] = x
    for t in range(T):
        U[:, t] = K @ X[:, t] + L @ r[:, t]
        X[:, t + 1] = sys.A @ X[:, t] + sys.B @ U[:, t] + W[:, t]
        if not np.all(np.isfinite(X[:, t + 1])) or np.linalg.norm(X[:, t + 1]) > BLOWUP:
            raise UnstableExperiment(f"state norm exceeded {BLOWUP:g} at t={t + 1}")
    return DataSet(X, U), W, r


def tracking_error_run(sys: LinearSystem, gains: ControllerGains, model: ReferenceModel,
                       cfg: ExperimentConfig, steps: int | None = None,
                       xm0=None, noise: NoiseModel | None = None) -> dict:
    """Co-simulate plant (u = K x + L r) and reference model under the same r.

    The plant starts from ``cfg.x0`` and the reference model from ``xm0``
    (zero by default), so e(0) = x(0) - xm(0).  Process noise is added only
    when ``noise`` is given; its horizon must cover ``steps``.
    Returns arrays ``t``, ``x``, ``xm``, ``u``, ``r``, ``e``.
    """
    n, m = sys.n, sys.m
    steps = int(cfg.T if steps is None else steps)
    rng = np.random.default_rng(cfg.seed)
    x = _initial_state(cfg, n, rng)
    xm = np.zeros(n) if xm0 is None else np.asarray(xm0, dtype=float).reshape(-1)
    r = _reference(cfg, model.p, steps, rng)
    W = np.zeros((n, steps)) if noise is None else generate_noise(noise, steps, rng)
    X = np.zeros((n, steps + 1))
    XM = np.zeros((n, steps + 1))
    U = np.zeros((m, steps))
    X[:, 0], XM[:, 0] = x, xm
    for t in range(steps):
        U[:, t] = gains.K @ X[:, t] + gains.L @ r[:, t]
        X[:, t + 1] = sys.A @ X[:, t] + sys.B @ U[:, t] + W[:, t]
        XM[:, t + 1] = model.A_m @ XM[:, t] + model.B_m @ r[:, t]
        if not np.all(np.isfinite(X[:, t + 1])) or np.linalg.norm(X[:, t + 1]) > BLOWUP:
            raise UnstableExperiment(f"state norm exceeded {BLOWUP:g} at t={t + 1}")
    return {"t": np.arange(steps + 1), "x": X, "xm": XM, "u": U, "r": r, "e": X - XM}


def trajectory_csv(run: dict, path=None) -> str:
    """Columns t, x_1..x_n, u_1..u_m, r_1..r_p[, e_1..e_n]; last u/r row blank."""
    X = run["x"]
    U, R = run["u"], run["r"]
    E = run.get("e")
    n, m, p = X.shape[0], U.shape[0], R.shape[0]
    cols = (["t"] + [f"x_{i + 1}" for i in range(n)] + [f"u_{i + 1}" for i in range(m)]
            + [f"r_{i + 1}" for i in range(p)])
    if E is not None:
        cols += [f"e_{i + 1}" for i in range(n)]
    lines = [",".join(cols)]
    for t in range(X.shape[1]):
        row = [str(t)] + [repr(float(v)) for v in X[:, t]]
        if t < U.shape[1]:
            row += [repr(float(v)) for v in U[:, t]] + [repr(float(v)) for v in R[:, t]]
        else:
            row += [""] * (m + p)
        if E is not None:
            row += [repr(float(v)) for v in E[:, t]]
        lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
