"""Machine-readable reports and the persisted synthesis artifact.

Every reported number carries the formula it came from; ``Report.lint`` refuses a
report with an untagged entry.  JSON output is canonical (sorted keys, fixed
indentation, shortest round-trip floats) so identical inputs give identical bytes.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from . import cohomo, gosl, lyap
from .errors import ConfigError, QuatSMCError
from .synth import Gains, SynthesisResult


class ReportLintError(QuatSMCError):
    pass


def plain(obj):
    """Convert numpy scalars, arrays, tuples and dataclasses to JSON-ready values.

    Non-finite floats become the strings "inf", "-inf" and "nan".
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def dumps(obj):
    return json.dumps(plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def compare(value, ref):
    """Verdict of ``value`` against a reference ``{"value", "tol", "mode"}``.

    rel: |v - e| <= tol |e|;  abs: |v - e| <= tol;  max: v <= e + tol |e|.
    """
    e, tol, mode = float(ref["value"]), float(ref["tol"]), ref.get("mode", "rel")
    v = float(value)
    if mode == "abs":
        return abs(v - e) <= tol
    if mode == "max":
        return v <= e + tol * abs(e)
    return abs(v - e) <= tol * abs(e)


@dataclass
class Field:
    name: str
    value: Any
    formula: str
    expected: Optional[float] = None
    tol: Optional[float] = None
    mode: Optional[str] = None
    verdict: Optional[bool] = None


class Report:
    def __init__(self, command, config_name, fingerprint):
        self.command = command
        self.config_name = config_name
        self.fingerprint = fingerprint
        self.fields = []
        self.notes = []

    def add(self, name, value, formula, reference=None):
        f = Field(name, plain(value), formula)
        if reference is not None:
            f.expected = float(reference["value"])
            f.tol = float(reference["tol"])
            f.mode = reference.get("mode", "rel")
            f.verdict = compare(value, reference)
        self.fields.append(f)
        return f

    def check(self, name, passed, formula):
        """A pass/fail entry; the value is the boolean itself."""
        f = Field(name, bool(passed), formula, verdict=bool(passed))
        self.fields.append(f)
        return f

    def note(self, text):
        self.notes.append(str(text))

    def get(self, name):
        for f in self.fields:
            if f.name == name:
                return f.value
        raise KeyError(name)

    @property
    def passed(self):
        return all(f.verdict is not False for f in self.fields)

    def lint(self):
        seen = set()
        for f in self.fields:
            if not isinstance(f.formula, str) or not f.formula.strip():
                raise ReportLintError(f"report field {f.name!r} has no formula tag")
            if f.name in seen:
                raise ReportLintError(f"duplicate report field {f.name!r}")
            seen.add(f.name)

    def to_dict(self):
        self.lint()
        return {
            "command": self.command,
            "config": self.config_name,
            "config_fingerprint": self.fingerprint,
            "passed": self.passed,
            "fields": [plain(f) for f in self.fields],
            "notes": list(self.notes),
        }

    def to_json(self):
        return dumps(self.to_dict())

    def table(self):
        rows = [("name", "value", "expected", "tol", "verdict")]
        for f in self.fields:
            if isinstance(f.value, list):
                continue
            val = f"{f.value:.6g}" if isinstance(f.value, float) else str(f.value)
            exp = "-" if f.expected is None else f"{f.expected:.6g}"
            tol = "-" if f.tol is None else f"{f.mode} {f.tol:g}"
            verdict = "-" if f.verdict is None else ("PASS" if f.verdict else "FAIL")
            rows.append((f.name, val, exp, tol, verdict))
        widths = [max(len(r[i]) for r in rows) for i in range(5)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


def synthesis_to_dict(result: SynthesisResult, fingerprint, config_name):
    return {"config": config_name, "config_fingerprint": fingerprint, "synthesis": plain(result)}


def synthesis_from_dict(data, fingerprint=None):
    """Rebuild a SynthesisResult; a fingerprint mismatch is a config error."""
    try:
        if fingerprint is not None and data["config_fingerprint"] != fingerprint:
            raise ConfigError("synthesis artifact was produced from a different config")
        s = dict(data["synthesis"])
        lm = dict(s["lmi"])
        lm["P_star"] = np.asarray(lm["P_star"], dtype=float)
        lm["mu_trace"] = tuple(lm["mu_trace"])
        s["lmi"] = lyap.LmiSolution(**lm)
        s["gosl"] = gosl.GoslConstants(**s["gosl"])
        s["cnc"] = cohomo.CncBundle(**s["cnc"])
        s["gains"] = Gains(**s["gains"])
        s["audit"] = tuple(s["audit"])
        for k in ("M0", "eta", "R_invariance", "eps_star", "rho_eff", "mu_Y", "c_inf", "kappa_inf", "lambda_peak"):
            s[k] = float(s[k])
        return SynthesisResult(**s)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed synthesis artifact: {exc}") from exc
