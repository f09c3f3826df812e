"""JSON run configuration.

A document looks like::

    {
      "grid": {"n": 128},
      "time": {"dt": 5e-4, "t_end": 0.2},
      "physics": {"mu": 1.0, "beta": 4.0, "gamma": 2.0, "A": 1.0},
      "preset": {"name": "acoustic", "args": {"amplitude": 0.05}, "delta": 0.0},
      "output": {"dir": "out", "snapshot_every": 100, "diag_every": 10, "heatmaps": false},
      "policy": {"eps_div": 1e-8, "eps_vac": 1e-7},
      "diagnostics": {"f_m": 4, "norm_ks": [2, 4, 8, 16, 32, 64]},
      "dealias": false
    }

Every key is optional. Exactly one of ``time.dt`` and ``time.cfl`` may be
given; with neither, ``cfl`` defaults to 0.25.
"""
from __future__ import annotations

import copy
import json
import warnings
from dataclasses import dataclass

import jsonschema

from .dynamics import RunConfig
from .errors import ConfigError
from .initdata import PRESETS
from .model import Params, VacuumPolicy

_POS = {"type": "number", "exclusiveMinimum": 0}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"n": {"type": "integer", "minimum": 8, "multipleOf": 2}},
        },
        "time": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dt": _POS,
                "cfl": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "t_end": {"type": "number", "minimum": 0},
            },
            "not": {"required": ["dt", "cfl"]},
        },
        "physics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mu": _POS,
                "beta": {"type": "number", "exclusiveMinimum": 1},
                "gamma": {"type": "number", "exclusiveMinimum": 1},
                "A": _POS,
            },
        },
        "preset": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "name": {"enum": list(PRESETS)},
                "args": {"type": "object"},
                "delta": {"type": "number", "minimum": 0},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "snapshot_every": {"type": "integer", "minimum": 0},
                "diag_every": {"type": "integer", "minimum": 1},
                "heatmaps": {"type": "boolean"},
            },
        },
        "policy": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"eps_div": _POS, "eps_vac": _POS},
        },
        "diagnostics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "f_m": {"type": "integer", "minimum": 2},
                "norm_ks": {"type": "array", "items": {"type": "number", "minimum": 1}},
            },
        },
        "dealias": {"type": "boolean"},
    },
}

DEFAULTS = {
    "grid": {"n": 64},
    "time": {"t_end": 0.01},
    "physics": {"mu": 1.0, "beta": 4.0, "gamma": 2.0, "A": 1.0},
    "preset": {"name": "uniform", "args": {}, "delta": 0.0},
    "output": {"dir": "run", "snapshot_every": 0, "diag_every": 1, "heatmaps": False},
    "policy": {"eps_div": 1e-8, "eps_vac": 1e-7},
    "diagnostics": {"f_m": 4, "norm_ks": [2, 4, 8, 16, 32, 64]},
    "dealias": False,
}
DEFAULT_CFL = 0.25


@dataclass(frozen=True)
class RunSpec:
    """A parsed configuration: the run itself plus how to build its initial state."""

    run: RunConfig
    preset: str
    preset_args: dict
    delta: float
    out_dir: str
    heatmaps: bool
    document: dict
    warnings: tuple = ()


def _path(err) -> str:
    parts = [str(p) for p in err.absolute_path]
    return ".".join(parts) if parts else "<root>"


def _merge(doc):
    out = copy.deepcopy(DEFAULTS)
    for key, value in doc.items():
        if isinstance(value, dict):
            out[key].update(value)
        else:
            out[key] = value
    t = out["time"]
    if "dt" not in t and "cfl" not in t:
        t["cfl"] = DEFAULT_CFL
    return out


def parse_document(doc: dict) -> RunSpec:
    """Validate a decoded document, fill defaults and build the run objects."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        if err.validator == "not" and _path(err) == "time":
            raise ConfigError("time", "set at most one of dt and cfl")
        raise ConfigError(_path(err), err.message)
    full = _merge(doc)
    ph, pol, t = full["physics"], full["policy"], full["time"]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        params = Params(mu=float(ph["mu"]), beta=float(ph["beta"]),
                        gamma=float(ph["gamma"]), A=float(ph["A"]))
    notes = tuple(str(w.message) for w in caught)
    if not pol["eps_div"] <= pol["eps_vac"]:
        raise ConfigError("policy", "eps_div must not exceed eps_vac")
    policy = VacuumPolicy(float(pol["eps_div"]), float(pol["eps_vac"]))
    out = full["output"]
    cfg = RunConfig(
        n=int(full["grid"]["n"]),
        t_end=float(t["t_end"]),
        dt=float(t["dt"]) if "dt" in t else None,
        cfl=float(t["cfl"]) if "cfl" in t else None,
        snapshot_every=int(out["snapshot_every"]),
        diagnostics_every=int(out["diag_every"]),
        dealias=bool(full["dealias"]),
        policy=policy,
        params=params,
        f_m=int(full["diagnostics"]["f_m"]),
        norm_ks=tuple(full["diagnostics"]["norm_ks"]),
    )
    pre = full["preset"]
    return RunSpec(cfg, pre["name"], dict(pre["args"]), float(pre["delta"]), out["dir"],
                   bool(out["heatmaps"]), full, notes)


def parse_config(text: str) -> RunSpec:
    """Parse a JSON document; whitespace-only text means all defaults."""
    if not text.strip():
        return parse_document({})
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<document>", f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "document must be a JSON object")
    return parse_document(doc)


def load_config(path) -> RunSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def dump_document(spec: RunSpec) -> str:
    """Canonical JSON of the fully defaulted document (stable key order)."""
    return json.dumps(spec.document, indent=2, sort_keys=True) + "\n"
