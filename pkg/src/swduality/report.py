"""Verification reports and their timing-insensitive comparison."""

from __future__ import annotations

import json
import math

from . import REPORT_SCHEMA_VERSION, __version__
from .errors import SwdualityError

PASS, FAIL, SKIPPED = "PASS", "FAIL", "SKIPPED"


class ReportError(SwdualityError):
    """Unreadable or incompatible report file."""


def clean(v):
    """Make values JSON-safe and stable: non-finite floats become strings."""
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, dict):
        return {str(k): clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [clean(x) for x in v]
    return v


class VerificationReport:
    def __init__(self, suite, config_echo):
        self.suite = suite
        self.config = config_echo
        self.checks = []
        self.timings = {}

    def add(self, name, status, values=None, reason=None, witnesses=None):
        entry = {"name": name, "status": status, "values": values or {}}
        if reason:
            entry["reason"] = reason
        if witnesses:
            entry["witnesses"] = witnesses
        self.checks.append(entry)
        return entry

    def check(self, name, ok, values=None, reason=None, witnesses=None):
        return self.add(name, PASS if ok else FAIL, values, reason, witnesses)

    def skip(self, name, reason):
        return self.add(name, SKIPPED, reason=reason)

    @property
    def status(self):
        st = [c["status"] for c in self.checks]
        if FAIL in st:
            return FAIL
        if st and all(s == SKIPPED for s in st):
            return SKIPPED
        return PASS

    def to_json(self):
        return clean({
            "schema_version": REPORT_SCHEMA_VERSION,
            "artifact_version": __version__,
            "suite": self.suite,
            "status": self.status,
            "config": self.config,
            "checks": self.checks,
            "timings": {k: round(v, 3) for k, v in self.timings.items()},
        })

    def dumps(self):
        return json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n"

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())


def load_report(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as e:
        raise ReportError(f"cannot read report {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ReportError(f"parse error in report {path}: {e}") from None
    if not isinstance(data, dict) or "schema_version" not in data:
        raise ReportError(f"parse error in report {path}: not a verification report")
    return data


def _diff(a, b, path, out):
    if isinstance(a, dict) and isinstance(b, dict):
        for k in sorted(set(a) | set(b)):
            if k not in a or k not in b:
                out.append({"path": f"{path}/{k}", "left": a.get(k), "right": b.get(k)})
            else:
                _diff(a[k], b[k], f"{path}/{k}", out)
    elif isinstance(a, list) and isinstance(b, list):
        if len(a) != len(b):
            out.append({"path": f"{path}#len", "left": len(a), "right": len(b)})
        for i, (x, y) in enumerate(zip(a, b)):
            _diff(x, y, f"{path}/{i}", out)
    elif a != b or type(a) is not type(b):
        out.append({"path": path, "left": a, "right": b})


def compare_reports(r1: dict, r2: dict):
    """Field-level differences, timings ignored.  Schema versions must match."""
    v1, v2 = r1.get("schema_version"), r2.get("schema_version")
    if v1 != v2:
        raise ReportError(f"schema version mismatch: {v1} vs {v2}")
    a = {k: v for k, v in r1.items() if k != "timings"}
    b = {k: v for k, v in r2.items() if k != "timings"}
    out = []
    _diff(a, b, "", out)
    return out
