"""Experiment configs: JSON files validated against a small hand-written schema.

Every key has a documented default (docs/config_schema.md).  Unknown keys
are rejected so that a typo cannot silently fall back to a default.
"""

from __future__ import annotations

import copy
import json
from fractions import Fraction

from .errors import ConfigError

# section -> key -> (kind, default)
SCHEMA = {
    "model": {
        "kind": ("choice:sft,torus", None),
        "matrix": ("matrix", None),
        "name": ("str", ""),
    },
    "orbits": {
        "P": ("orbits", None),
        "Q": ("orbits", None),
        "max_period": ("posint", 12),
    },
    "basis": {
        "size_bound": ("nonneg_int", 6),
    },
    "axioms": {
        "samples": ("nonneg_int", 10000),
        "uniqueness_pairs": ("nonneg_int", 1000),
    },
    "partition": {
        "epsilon": ("rational_or_null", None),
        "eps_prime_samples": ("nonneg_int", 2000),
        "require_phi_disjoint": ("bool", True),
        "unity_samples": ("nonneg_int", 2000),
        "cover_samples": ("nonneg_int", 500),
        "unity_tol": ("real", 1e-12),
    },
    "projection": {
        "fibers": ("nonneg_int", 40),
        "max_pairs": ("posint", 2000),
        "homotopy_steps": ("posint", 32),
        "homotopy_fibers": ("nonneg_int", 10),
        "tol": ("real", 1e-9),
        "endpoint_tol": ("real", 1e-12),
        "continuity_bound": ("real", 0.5),
    },
    "operators": {
        "delta": ("rational", Fraction(1, 8)),
        "near": ("rational", Fraction(1, 8)),
        "rank_pairs": ("nonneg_int", 200),
        "decay_pairs": ("nonneg_int", 50),
        "n_max": ("nonneg_int", 30),
        "window": ("posint", 30),
        "threshold": ("real", 1e-6),
        "sample_limit": ("posint", 16),
        "norm_agreement": ("real", 1e-10),
        "unitary_points": ("nonneg_int", 100),
    },
    "wg": {
        "delta": ("rational_or_null", None),
        "ys": ("posint", 8),
        "zs": ("posint", 6),
        "fibers": ("posint", 4),
        "n_max": ("nonneg_int", 30),
        "sample_limit": ("posint", 16),
        "tol": ("real", 1e-9),
        "conj_tol": ("real", 1e-12),
        "threshold": ("real", 1e-6),
    },
    "ktheory": {
        "matrix": ("matrix_or_null", None),
        "expected": ("groups_or_null", None),
        "snf_random": ("nonneg_int", 500),
        "snf_max_size": ("posint", 6),
        "snf_max_entry": ("posint", 20),
    },
    "duality": {
        "corpus": ("corpus", "builtin"),
    },
    "pv": {
        "corpus": ("corpus", "builtin"),
        "extra": ("matrix_list", [[[0, 1], [1, 0]]]),
    },
}

TOP_LEVEL = {"name": ("str", ""), "seed": ("int", None)}

SUITES = ("axioms", "homoclinic", "partition", "projection", "operators", "wg",
          "ktheory", "duality", "pv")


def _rational(v, where):
    if isinstance(v, bool):
        raise ConfigError(f"{where}: expected a rational, got a boolean")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return Fraction(v).limit_denominator(10 ** 12)
    if isinstance(v, str):
        try:
            return Fraction(v)
        except (ValueError, ZeroDivisionError):
            pass
    raise ConfigError(f"{where}: expected a rational like 1/8 or 0.02, got {v!r}")


def _matrix(v, where):
    if (not isinstance(v, list) or not v
            or not all(isinstance(r, list) and len(r) == len(v) for r in v)
            or not all(isinstance(x, int) and not isinstance(x, bool) for r in v for x in r)):
        raise ConfigError(f"{where}: expected a square integer matrix")
    return [list(r) for r in v]


def _check(kind, v, where):
    if kind.startswith("choice:"):
        opts = kind.split(":", 1)[1].split(",")
        if v not in opts:
            raise ConfigError(f"{where}: expected one of {opts}, got {v!r}")
        return v
    if kind == "str":
        if not isinstance(v, str):
            raise ConfigError(f"{where}: expected a string")
        return v
    if kind == "bool":
        if not isinstance(v, bool):
            raise ConfigError(f"{where}: expected true/false")
        return v
    if kind in ("int", "nonneg_int", "posint"):
        if not isinstance(v, int) or isinstance(v, bool):
            raise ConfigError(f"{where}: expected an integer, got {v!r}")
        if kind == "nonneg_int" and v < 0:
            raise ConfigError(f"{where}: must be >= 0")
        if kind == "posint" and v < 1:
            raise ConfigError(f"{where}: must be >= 1")
        return v
    if kind == "real":
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0:
            raise ConfigError(f"{where}: expected a nonnegative number")
        return float(v)
    if kind == "rational":
        r = _rational(v, where)
        if r <= 0:
            raise ConfigError(f"{where}: must be positive")
        return r
    if kind == "rational_or_null":
        return None if v is None else _check("rational", v, where)
    if kind == "matrix":
        return _matrix(v, where)
    if kind == "matrix_or_null":
        return None if v is None else _matrix(v, where)
    if kind == "matrix_list":
        if not isinstance(v, list):
            raise ConfigError(f"{where}: expected a list of matrices")
        return [_matrix(x, f"{where}[{i}]") for i, x in enumerate(v)]
    if kind == "corpus":
        if v == "builtin":
            return v
        return _check("matrix_list", v, where)
    if kind == "orbits":
        if not isinstance(v, list) or not v:
            raise ConfigError(f"{where}: expected a non-empty list of {{period, index}}")
        out = []
        for i, o in enumerate(v):
            if not isinstance(o, dict) or set(o) - {"period", "index"} or "period" not in o:
                raise ConfigError(f"{where}[{i}]: expected {{\"period\": n, \"index\": k}}")
            out.append({"period": _check("posint", o["period"], f"{where}[{i}].period"),
                        "index": _check("nonneg_int", o.get("index", 0), f"{where}[{i}].index")})
        return out
    if kind == "groups_or_null":
        if v is None:
            return None
        keys = {"K0_s", "K1_s", "K0_u", "K1_u"}
        if not isinstance(v, dict) or not set(v) <= keys:
            raise ConfigError(f"{where}: expected a subset of {sorted(keys)}")
        for k, g in v.items():
            if (not isinstance(g, dict) or set(g) - {"free_rank", "invariant_factors"}
                    or not isinstance(g.get("free_rank", 0), int)
                    or not isinstance(g.get("invariant_factors", []), list)):
                raise ConfigError(
                    f"{where}.{k}: expected {{\"free_rank\": r, \"invariant_factors\": [...]}}")
        return copy.deepcopy(v)
    raise AssertionError(kind)


def validate(raw: dict) -> dict:
    """Return a fully populated config dict, or raise ConfigError."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - set(SCHEMA) - set(TOP_LEVEL)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    if "seed" not in raw:
        raise ConfigError("seed is mandatory")
    cfg = {"name": _check("str", raw.get("name", ""), "name"),
           "seed": _check("int", raw["seed"], "seed")}
    for sec, keys in SCHEMA.items():
        given = raw.get(sec, {})
        if not isinstance(given, dict):
            raise ConfigError(f"{sec}: expected an object")
        bad = set(given) - set(keys)
        if bad:
            raise ConfigError(f"{sec}: unknown keys {sorted(bad)}")
        out = {}
        for key, (kind, default) in keys.items():
            if key in given:
                out[key] = _check(kind, given[key], f"{sec}.{key}")
            else:
                out[key] = copy.deepcopy(default)
        cfg[sec] = out
    return cfg


def require(cfg, sec, *keys):
    for k in keys:
        if cfg[sec].get(k) is None:
            raise ConfigError(f"{sec}.{k} is required for this suite")


def load(path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from None
    return validate(raw)


def echo(cfg) -> dict:
    """JSON-ready copy (rationals as strings)."""
    def conv(v):
        if isinstance(v, Fraction):
            return str(v)
        if isinstance(v, dict):
            return {k: conv(x) for k, x in v.items()}
        if isinstance(v, list):
            return [conv(x) for x in v]
        return v
    return conv(cfg)
