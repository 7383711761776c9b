"""Problem bundles and result files (JSON).

A bundle is a JSON object with keys

* ``data``: ``{"X": [[...]], "U_minus": [[...]]}``, or a path to a JSON file
  holding that object (relative to the bundle);
* ``noise``: ``{"q", "r", "pi"}`` for a general Phi, ``{"phi11": [[...]]}``
  for the energy bound ``W W^T <= Phi11``, or ``"noiseless"``; omitted means
  noiseless;
* ``model``: ``{"A_m", "B_m"}``;
* ``tolerance``: ``{"Gamma_A", "Gamma_B", "D_A", "D_B"}``, or ``"minimize"``
  (identity weights) or ``{"mode": "minimize", "Gamma_A", "Gamma_B"}``;
* ``numeric`` (optional): ``NumericConfig`` overrides;
* ``seed`` (optional) and ``generator`` (optional, provenance only).
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import NumericConfig
from .errors import InputError, SchemaError
from .models import DataSet, MatchingTolerance, ReferenceModel
from .qmi import NoiseModel

__all__ = ["ProblemBundle", "load_bundle", "save_bundle", "bundle_from_dict",
           "dump_json", "load_json", "noise_from_spec", "noise_to_spec"]

_KEYS = {"data", "noise", "model", "tolerance", "numeric", "seed", "generator"}


@dataclass
class ProblemBundle:
    data: DataSet
    noise: NoiseModel
    model: ReferenceModel
    tolerance: MatchingTolerance | None = None
    minimize: bool = False
    numeric: NumericConfig = field(default_factory=NumericConfig)
    seed: int = 0
    generator: dict | None = None

    def to_dict(self) -> dict:
        d = {"data": self.data.to_dict(), "noise": noise_to_spec(self.noise),
             "model": self.model.to_dict(), "numeric": self.numeric.to_dict(),
             "seed": self.seed}
        if self.minimize:
            t = {"mode": "minimize"}
            if self.tolerance is not None:
                t["Gamma_A"] = np.asarray(self.tolerance.Gamma_A).tolist()
                t["Gamma_B"] = np.asarray(self.tolerance.Gamma_B).tolist()
            d["tolerance"] = t
        elif self.tolerance is not None:
            d["tolerance"] = self.tolerance.to_dict()
        if self.generator is not None:
            d["generator"] = self.generator
        return d


def _matrix(d: dict, key: str, where: str) -> np.ndarray:
    if key not in d:
        raise SchemaError(f"{where}: missing '{key}'")
    try:
        M = np.array(d[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}.{key}: not a numeric matrix") from exc
    if M.ndim == 0:
        M = M.reshape(1, 1)
    elif M.ndim == 1:
        M = M.reshape(1, -1)
    if M.ndim != 2:
        raise SchemaError(f"{where}.{key}: expected a 2-D array")
    return M


def noise_to_spec(noise: NoiseModel) -> dict:
    if noise.is_energy_bound():
        return {"phi11": noise.phi.blocks[0].tolist(), "T": noise.T}
    return noise.to_dict()


def noise_from_spec(spec, n: int, T: int) -> NoiseModel:
    if spec is None or spec == "noiseless":
        return NoiseModel.noiseless(n, T)
    if not isinstance(spec, dict):
        raise SchemaError("noise must be an object or 'noiseless'")
    if "phi11" in spec:
        nm = NoiseModel.energy_bound(_matrix(spec, "phi11", "noise"), int(spec.get("T", T)))
    elif "pi" in spec:
        nm = NoiseModel.from_dict(spec)
    else:
        raise SchemaError("noise needs 'phi11' or 'pi'")
    if nm.n != n or nm.T != T:
        raise SchemaError(f"noise model is for n={nm.n}, T={nm.T}; data has n={n}, T={T}")
    return nm


def _tolerance(spec, n: int, p: int):
    if spec is None:
        return None, False
    if spec == "minimize":
        return MatchingTolerance(np.eye(n), np.eye(p)), True
    if not isinstance(spec, dict):
        raise SchemaError("tolerance must be an object or 'minimize'")
    GA = _matrix(spec, "Gamma_A", "tolerance") if "Gamma_A" in spec else np.eye(n)
    GB = _matrix(spec, "Gamma_B", "tolerance") if "Gamma_B" in spec else np.eye(p)
    if spec.get("mode") == "minimize":
        return MatchingTolerance(GA, GB), True
    DA = _matrix(spec, "D_A", "tolerance")
    DB = _matrix(spec, "D_B", "tolerance")
    return MatchingTolerance(GA, GB, DA, DB), False


def bundle_from_dict(d: dict, base: Path | None = None) -> ProblemBundle:
    if not isinstance(d, dict):
        raise SchemaError("bundle must be a JSON object")
    extra = set(d) - _KEYS
    if extra:
        raise SchemaError(f"unknown bundle keys: {sorted(extra)}")
    for k in ("data", "model"):
        if k not in d:
            raise SchemaError(f"bundle is missing '{k}'")
    data_spec = d["data"]
    if isinstance(data_spec, str):
        path = Path(data_spec) if base is None else base / data_spec
        data_spec = load_json(path)
    if not isinstance(data_spec, dict):
        raise SchemaError("data must be an object or a file path")
    data = DataSet(_matrix(data_spec, "X", "data"), _matrix(data_spec, "U_minus", "data"))
    m = d["model"]
    if not isinstance(m, dict):
        raise SchemaError("model must be an object")
    model = ReferenceModel(_matrix(m, "A_m", "model"), _matrix(m, "B_m", "model"))
    noise = noise_from_spec(d.get("noise"), data.n, data.T)
    tolm, minimize = _tolerance(d.get("tolerance"), model.n, model.p)
    num = d.get("numeric") or {}
    if not isinstance(num, dict):
        raise SchemaError("numeric must be an object")
    unknown = set(num) - set(NumericConfig.__dataclass_fields__)
    if unknown:
        raise SchemaError(f"unknown numeric settings: {sorted(unknown)}")
    return ProblemBundle(data, noise, model, tolm, minimize, NumericConfig.from_dict(num),
                         int(d.get("seed", 0)), d.get("generator"))


def load_json(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"file not found: {path}")
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc


def load_bundle(path) -> ProblemBundle:
    path = Path(path)
    try:
        return bundle_from_dict(load_json(path), path.parent)
    except SchemaError:
        raise
    except InputError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def _plain(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def dump_json(obj, path=None) -> str:
    """Deterministic JSON text (sorted keys); written to ``path`` if given."""
    text = json.dumps(obj, indent=1, sort_keys=True, allow_nan=True, default=_plain) + "\n"
    if path is not None:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w") as fh:
            fh.write(text)
    return text


def save_bundle(bundle: ProblemBundle, path) -> str:
    return dump_json(bundle.to_dict(), path)
