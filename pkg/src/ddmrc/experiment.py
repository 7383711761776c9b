"""Monte-Carlo sweep over noise levels on the aircraft benchmark.

For every level and trial: collect T samples under the stabilizing gains
(K0, L0) with energy-bounded noise, minimize tr(D_A) + tr(D_B) under the
matching LMIs and the stability constraint, and check the eigenvalue
condition afterwards.  Trial k uses seed ``seed + k`` at every level, so
levels share their Gaussian draws and differ only in scale.
"""
from __future__ import annotations

import csv
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import aircraft
from .approx_mrc import Verdict
from .config import DEFAULT, NumericConfig
from .errors import DdmrcError
from .models import ControllerGains
from .oracle import (sample_consistent_systems, sample_matching_set, verify_matching,
                     verify_stability)
from .simulate import ExperimentConfig, simulate_closed_loop, tracking_error_run, trajectory_csv
from .stability import synthesize_with_stability

log = logging.getLogger(__name__)

__all__ = ["parse_levels", "run_trial", "run_sweep", "SweepResult", "level_stats",
           "error_runs"]


def parse_levels(spec: str) -> list[float]:
    """'a:b:step' (inclusive) or a comma-separated list."""
    spec = spec.strip()
    if ":" in spec:
        parts = [float(x) for x in spec.split(":")]
        if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
            raise ValueError(f"bad level range {spec!r}")
        a, b, h = parts
        k = int(np.floor((b - a) / h + 1e-9))
        return [round(a + i * h, 10) for i in range(k + 1)]
    return [float(x) for x in spec.split(",") if x.strip()]


def _synthesize(level: float, seed: int, T: int, cfg: NumericConfig):
    exp = ExperimentConfig(T=T, K0=aircraft.K0, L0=aircraft.L0, noise_level=level, seed=seed)
    nm = aircraft.noise_model(level, T)
    data, _, _ = simulate_closed_loop(aircraft.system(), aircraft.collection_gains(), exp, nm)
    res = synthesize_with_stability(data, nm, aircraft.reference_model(), "minimize", cfg=cfg)
    return data, nm, res


def run_trial(level: float, trial: int, seed: int = 0, T: int = aircraft.T_DEFAULT,
              oracle_samples: int = 0, cfg: NumericConfig = DEFAULT) -> dict:
    """One dataset, one synthesis; a flat record of the outcome."""
    rec = {"level": level, "trial": trial, "seed": seed + trial, "verdict": "",
           "failure": "", "trace_DA": np.nan, "trace_DB": np.nan, "eig_condition": "",
           "lyapunov_P": "", "oracle_samples": 0, "matching_violations": 0,
           "stability_violations": 0, "worst_spectral_radius": np.nan, "seconds": 0.0}
    t0 = time.perf_counter()
    try:
        data, nm, res = _synthesize(level, seed + trial, T, cfg)
    except DdmrcError as exc:
        rec["verdict"] = Verdict.SOLVER_FAILED.value
        rec["failure"] = type(exc).__name__
        rec["seconds"] = time.perf_counter() - t0
        return rec
    rec["verdict"] = res.verdict.value
    rec["failure"] = res.failure or ""
    if res.traces is not None:
        rec["trace_DA"], rec["trace_DB"] = res.traces
    if res.stability is not None:
        rec["eig_condition"] = res.stability.eig_condition_holds
        rec["lyapunov_P"] = res.stability.P is not None
    if res.informative and oracle_samples > 0:
        gains = ControllerGains(res.K, res.L)
        model = aircraft.reference_model()
        s1 = sample_consistent_systems(data, nm, oracle_samples, seed + trial, cfg=cfg)
        s2 = sample_matching_set(gains, model, res.tolerance, oracle_samples, seed + trial,
                                 cfg=cfg)
        rep = verify_matching(s1, gains, model, res.tolerance, cfg=cfg)
        rep = rep.merge(verify_stability(s1 + s2, gains, cfg))
        rec["oracle_samples"] = len(s1) + len(s2)
        rec["matching_violations"] = rep.matching_violations
        rec["stability_violations"] = rep.stability_violations
        rec["worst_spectral_radius"] = rep.worst_spectral_radius
    rec["seconds"] = time.perf_counter() - t0
    return rec


def _trial_star(args):
    return run_trial(*args)


def level_stats(records: list[dict], level: float) -> dict:
    rows = [r for r in records if r["level"] == level]
    ok = [r for r in rows if r["verdict"] == Verdict.INFORMATIVE.value]
    da = np.array([r["trace_DA"] for r in ok], dtype=float)
    db = np.array([r["trace_DB"] for r in ok], dtype=float)
    tot = da + db

    def q(a, p):
        return float(np.percentile(a, p)) if a.size else np.nan

    return {
        "level": level, "trials": len(rows), "successes": len(ok),
        "success_rate": len(ok) / len(rows) if rows else np.nan,
        "solver_failures": sum(r["verdict"] == Verdict.SOLVER_FAILED.value for r in rows),
        "mean_trace_DA": float(da.mean()) if da.size else np.nan,
        "p05_trace_DA": q(da, 5), "p95_trace_DA": q(da, 95),
        "mean_trace_DB": float(db.mean()) if db.size else np.nan,
        "p05_trace_DB": q(db, 5), "p95_trace_DB": q(db, 95),
        "mean_trace_total": float(tot.mean()) if tot.size else np.nan,
        "se_trace_total": (float(tot.std(ddof=1) / np.sqrt(tot.size))
                           if tot.size > 1 else np.nan),
    }


@dataclass
class SweepResult:
    levels: list
    records: list
    stats: list
    errors: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    seconds: float = 0.0

    def stat(self, level: float) -> dict:
        for s in self.stats:
            if abs(s["level"] - level) < 1e-9:
                return s
        raise KeyError(level)


def error_runs(levels, seed: int = 0, T: int = aircraft.T_DEFAULT, steps: int = 600,
               cfg: NumericConfig = DEFAULT) -> dict:
    """Tracking-error trajectories for the first informative trial at each level.

    The plant starts from a standard-normal x(0), the reference model from 0.
    """
    out = {}
    for level in levels:
        for trial in range(20):
            try:
                _, _, res = _synthesize(level, seed + trial, T, cfg)
            except DdmrcError:
                continue
            if res.informative:
                run = tracking_error_run(aircraft.system(), ControllerGains(res.K, res.L),
                                         aircraft.reference_model(),
                                         ExperimentConfig(T=steps, seed=seed + trial),
                                         steps=steps)
                run["trial"] = trial
                out[level] = run
                break
    return out


def _write_csv(path, rows: list[dict], columns: list[str]):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def _level_tag(level: float) -> str:
    return f"{level:g}".replace(".", "p")


def run_sweep(levels, trials: int, seed: int = 0, T: int = aircraft.T_DEFAULT,
              jobs: int = 1, out_dir=None, oracle_samples: int = 0,
              error_levels=(0.0, 0.1, 1.0), error_steps: int = 600,
              plots: bool = True, cfg: NumericConfig = DEFAULT) -> SweepResult:
    """Run every (level, trial); optionally write CSVs (and PNGs) to ``out_dir``."""
    t0 = time.perf_counter()
    levels = [float(x) for x in levels]
    tasks = [(lv, k, seed, T, oracle_samples, cfg) for lv in levels for k in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            records = list(ex.map(_trial_star, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        records = [_trial_star(t) for t in tasks]
    for r in records:
        if r["verdict"] == Verdict.SOLVER_FAILED.value:
            log.warning("level %g trial %d: solver failure (%s)", r["level"], r["trial"],
                        r["failure"])
    stats = [level_stats(records, lv) for lv in levels]
    errs = error_runs([lv for lv in error_levels], seed, T, error_steps, cfg) if error_levels else {}
    res = SweepResult(levels, records, stats, errs)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        p = os.path.join(out_dir, "success_rates.csv")
        _write_csv(p, stats, ["level", "trials", "successes", "success_rate", "solver_failures"])
        res.files.append(p)
        p = os.path.join(out_dir, "trace_stats.csv")
        _write_csv(p, stats, ["level", "successes", "mean_trace_DA", "p05_trace_DA",
                              "p95_trace_DA", "mean_trace_DB", "p05_trace_DB", "p95_trace_DB",
                              "mean_trace_total", "se_trace_total"])
        res.files.append(p)
        p = os.path.join(out_dir, "trials.csv")
        _write_csv(p, records, list(records[0]) if records else ["level"])
        res.files.append(p)
        for lv, run in errs.items():
            p = os.path.join(out_dir, f"error_level_{_level_tag(lv)}.csv")
            trajectory_csv(run, p)
            res.files.append(p)
        if plots:
            from .plotting import render_sweep
            res.files.extend(render_sweep(res, out_dir))
    res.seconds = time.perf_counter() - t0
    return res
