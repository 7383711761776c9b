"""Command-line interface.

Exit codes: 0 informative / success, 1 not informative (or oracle
violations), 2 input error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import aircraft
from .approx_mrc import Verdict, minimize_distance, synthesize_approx
from .config import NumericConfig
from .errors import DdmrcError, InputError, SchemaError, UnstableExperiment
from .exact_mrc import check_exact_informativity, check_exact_informativity_lmi
from .experiment import _level_tag, parse_levels, run_sweep
from .io import ProblemBundle, dump_json, load_bundle, load_json, noise_from_spec, save_bundle
from .models import ControllerGains, LinearSystem, MatchingTolerance, ReferenceModel
from .oracle import (sample_consistent_systems, sample_matching_set, verify_matching,
                     verify_stability)
from .simulate import ExperimentConfig, simulate_closed_loop, trajectory_csv
from .stability import synthesize_with_stability

log = logging.getLogger("ddmrc")

EXIT_OK, EXIT_NOT_INFORMATIVE, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3

_VERDICT_EXIT = {Verdict.INFORMATIVE.value: EXIT_OK,
                 Verdict.NOT_INFORMATIVE.value: EXIT_NOT_INFORMATIVE,
                 Verdict.UNKNOWN.value: EXIT_NOT_INFORMATIVE,
                 Verdict.SOLVER_FAILED.value: EXIT_SOLVER}


def _numeric(bundle_cfg: NumericConfig, args) -> NumericConfig:
    if getattr(args, "feas_tol", None) is not None:
        return bundle_cfg.with_(feas_tol=args.feas_tol)
    return bundle_cfg


def _emit(obj: dict, args, timestamp: bool = True):
    if timestamp:
        obj = dict(obj, timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat())
    if getattr(args, "format", "json") == "csv":
        text = "key,value\n" + "".join(f"{k},{_flat(v)}\n" for k, v in sorted(obj.items()))
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return
    if args.out:
        dump_json(obj, args.out)
    else:
        sys.stdout.write(dump_json(obj))


def _flat(v) -> str:
    if isinstance(v, (dict, list)):
        return '"' + dump_json(v).strip().replace("\n", "").replace('"', '""') + '"'
    return "" if v is None else str(v)


# -- simulate -------------------------------------------------------------

def _simulation_setup(conf: dict):
    preset = conf.get("preset")
    if preset not in (None, "aircraft"):
        raise SchemaError(f"unknown preset {preset!r}")
    if preset == "aircraft":
        sys_ = aircraft.system()
        gains = aircraft.collection_gains()
        model = aircraft.reference_model()
    else:
        for k in ("system", "gains", "model"):
            if k not in conf:
                raise SchemaError(f"simulation config needs '{k}' (or preset 'aircraft')")
        sys_ = LinearSystem.from_dict(conf["system"])
        gains = ControllerGains.from_dict(conf["gains"])
        model = ReferenceModel.from_dict(conf["model"])
    return preset, sys_, gains, model


def cmd_simulate(args) -> int:
    conf = load_json(args.config)
    allowed = {"preset", "system", "gains", "model", "noise", "experiment", "levels",
               "tolerance"}
    extra = set(conf) - allowed
    if extra:
        raise SchemaError(f"unknown simulation keys: {sorted(extra)}")
    preset, sys_, gains, model = _simulation_setup(conf)
    exp = ExperimentConfig.from_dict(conf.get("experiment", {}))
    if args.seed is not None:
        exp = ExperimentConfig.from_dict(dict(exp.to_dict(), seed=args.seed))
    if args.trials is not None:
        exp = ExperimentConfig.from_dict(dict(exp.to_dict(), trials=args.trials))
    if args.levels:
        levels = parse_levels(args.levels)
    elif "levels" in conf:
        levels = [float(x) for x in conf["levels"]]
    else:
        levels = [exp.noise_level]
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = 0
    for lv in levels:
        if preset == "aircraft":
            noise = aircraft.noise_model(lv, exp.T)
        else:
            noise = noise_from_spec(conf.get("noise"), sys_.n, exp.T)
        for k in range(exp.trials):
            tc = ExperimentConfig.from_dict(dict(exp.to_dict(), noise_level=lv)).trial(k)
            data, W, r = simulate_closed_loop(sys_, gains, tc, noise)
            stem = out / f"dataset_level{_level_tag(lv)}_trial{k}"
            gen = {"experiment": tc.to_dict(), "preset": preset,
                   "system": sys_.to_dict(), "gains": gains.to_dict()}
            bundle = ProblemBundle(data, noise, model,
                                   MatchingTolerance(np.eye(model.n), np.eye(model.p)),
                                   minimize=True, seed=tc.seed, generator=gen)
            save_bundle(bundle, str(stem) + ".json")
            trajectory_csv({"x": data.X, "u": data.U_minus, "r": r}, str(stem) + ".csv")
            written += 1
    log.info("wrote %d datasets to %s", written, out)
    print(f"{written} dataset(s) written to {out}")
    return EXIT_OK


# -- synth --------------------------------------------------------------------

def synthesize_bundle(b: ProblemBundle, mode: str, minimize: bool = False,
                      cfg: NumericConfig | None = None) -> dict:
    """Run one synthesis mode on a bundle and return the result as a dict."""
    cfg = cfg or b.numeric
    minimize = minimize or b.minimize
    if mode == "exact":
        ex = check_exact_informativity(b.data, b.model, cfg=cfg)
        lm = check_exact_informativity_lmi(b.data, b.model, cfg=cfg)
        d = ex.to_dict()
        d["lmi_route"] = {"verdict": lm.verdict.value, "statuses": lm.status,
                          "residuals": lm.residuals}
        d["routes_agree"] = lm.informative == ex.informative
        if not d["routes_agree"]:
            d["message"] = "linear and LMI routes disagree"
        return d
    if mode not in ("approx", "stable"):
        raise InputError(f"unknown mode {mode!r}")
    tolm = b.tolerance
    if minimize:
        GA = tolm.Gamma_A if tolm is not None else np.eye(b.model.n)
        GB = tolm.Gamma_B if tolm is not None else np.eye(b.model.p)
        if mode == "approx":
            res = minimize_distance(b.data, b.noise, b.model, GA, GB, cfg)
        else:
            res = synthesize_with_stability(b.data, b.noise, b.model, "minimize", GA, GB, cfg)
    else:
        if tolm is None or not tolm.fixed:
            raise SchemaError("fixed-distance synthesis needs tolerance D_A and D_B "
                              "(or use --minimize-distance)")
        if mode == "approx":
            res = synthesize_approx(b.data, b.noise, b.model, tolm, cfg)
        else:
            res = synthesize_with_stability(b.data, b.noise, b.model, tolm, cfg=cfg)
    return res.to_dict()


def cmd_synth(args) -> int:
    b = load_bundle(args.bundle)
    cfg = _numeric(b.numeric, args)
    d = synthesize_bundle(b, args.mode, args.minimize_distance, cfg)
    _emit(d, args)
    if args.mode == "exact" and not d.get("routes_agree", True):
        return EXIT_SOLVER
    return _VERDICT_EXIT[d["verdict"]]


# -- verify ---------------------------------------------------------------------

def verify_result(b: ProblemBundle, result: dict, samples: int = 200, seed: int = 0,
                  cfg: NumericConfig | None = None) -> dict:
    """Oracle checks for the gains and distances stored in ``result``."""
    cfg = cfg or b.numeric
    if result.get("K") is None or result.get("L") is None:
        raise SchemaError("result has no gains to verify")
    gains = ControllerGains(np.array(result["K"], dtype=float),
                            np.array(result["L"], dtype=float))
    n, p = b.model.n, b.model.p
    if result.get("mode") == "exact":
        tolm = MatchingTolerance(np.eye(n), np.eye(p), np.zeros((n, n)), np.zeros((n, n)))
    else:
        tolm = MatchingTolerance(np.array(result["Gamma_A"], dtype=float),
                                 np.array(result["Gamma_B"], dtype=float),
                                 np.array(result["D_A"], dtype=float),
                                 np.array(result["D_B"], dtype=float))
    systems = sample_consistent_systems(b.data, b.noise, samples, seed, cfg=cfg)
    rep = verify_matching(systems, gains, b.model, tolm, cfg=cfg)
    stab_mode = str(result.get("mode", "")).startswith("stable")
    if stab_mode:
        rep = rep.merge(verify_stability(systems, gains, cfg))
        extra = sample_matching_set(gains, b.model, tolm, samples, seed + 1, cfg=cfg)
        rep = rep.merge(verify_stability(extra, gains, cfg))
    d = rep.to_dict()
    d["result_verdict"] = result.get("verdict")
    d["stability_checked"] = stab_mode
    return d


def cmd_verify(args) -> int:
    b = load_bundle(args.bundle)
    result = load_json(args.result)
    d = verify_result(b, result, args.samples, args.seed if args.seed is not None else b.seed,
                      _numeric(b.numeric, args))
    _emit(d, args)
    return EXIT_OK if d["inclusion_verdict"] else EXIT_NOT_INFORMATIVE


# -- experiment -------------------------------------------------------------

def cmd_experiment(args) -> int:
    cfg = NumericConfig()
    if args.feas_tol is not None:
        cfg = cfg.with_(feas_tol=args.feas_tol)
    levels = parse_levels(args.levels)
    err_levels = parse_levels(args.error_levels) if args.error_levels else []
    res = run_sweep(levels, args.trials, seed=args.seed or 0, T=args.T, jobs=args.jobs,
                    out_dir=args.out_dir, oracle_samples=args.samples,
                    error_levels=err_levels, error_steps=args.error_steps,
                    plots=not args.no_plots, cfg=cfg)
    print("level,trials,success_rate,mean_trace_DA,mean_trace_DB")
    for s in res.stats:
        print(f"{s['level']:g},{s['trials']},{s['success_rate']:.4f},"
              f"{s['mean_trace_DA']:.6g},{s['mean_trace_DB']:.6g}")
    bad = sum(r["matching_violations"] + r["stability_violations"] for r in res.records)
    if bad:
        print(f"oracle violations: {bad}", file=sys.stderr)
        return EXIT_NOT_INFORMATIVE
    return EXIT_OK


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ddmrc",
                                description="Data-driven model-reference control synthesis.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--feas-tol", type=float, default=None)
        if out:
            sp.add_argument("--out", default=None, help="output file (default: stdout)")
            sp.add_argument("--format", choices=("json", "csv"), default="json")

    s = sub.add_parser("simulate", help="generate datasets from a simulation config")
    s.add_argument("config")
    s.add_argument("--out-dir", default="datasets")
    s.add_argument("--levels", default=None, help="a:b:step or comma list")
    s.add_argument("--trials", type=int, default=None)
    common(s, out=False)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("synth", help="synthesize gains for a problem bundle")
    s.add_argument("bundle")
    s.add_argument("--mode", choices=("exact", "approx", "stable"), default="approx")
    s.add_argument("--minimize-distance", action="store_true")
    common(s)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("verify", help="sampling oracle for a synthesis result")
    s.add_argument("bundle")
    s.add_argument("result")
    s.add_argument("--samples", type=int, default=200)
    common(s)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("experiment", help="noise-level sweep on the aircraft benchmark")
    s.add_argument("--levels", default="0:2:0.1")
    s.add_argument("--trials", type=int, default=50)
    s.add_argument("--out-dir", default="experiment_out")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--T", type=int, default=aircraft.T_DEFAULT)
    s.add_argument("--samples", type=int, default=0, help="oracle samples per trial")
    s.add_argument("--error-levels", default="0,0.1,1")
    s.add_argument("--error-steps", type=int, default=600)
    s.add_argument("--no-plots", action="store_true", help="skip the PNG figures")
    common(s, out=False)
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, FileNotFoundError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except UnstableExperiment as exc:
        print(f"unstable experiment: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DdmrcError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
