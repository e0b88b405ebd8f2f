"""Outcome records for sampled verifications."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

PASS = "pass"
VIOLATION = "violation"
INCONCLUSIVE = "inconclusive"

DEFAULT_TOL = 1e-9
UNKNOWN_FRACTION = 0.05

_EXIT = {PASS: 0, VIOLATION: 1, INCONCLUSIVE: 2}


def jsonable(obj):
    """Convert numpy values, complex numbers and nested containers to JSON types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(float(obj.real)), jsonable(float(obj.imag))]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


@dataclass
class CheckReport:
    """Verdict of one sampled check.

    ``worst_margin`` is the smallest decided margin (positive is good).
    A violation carries at least one witness: a dict with the point, the
    time (if any) and the margin found there.  ``conditions`` holds per
    sub-condition summaries for checks made of several parts.
    """

    name: str
    verdict: str
    worst_margin: float
    witnesses: list = field(default_factory=list)
    decided: int = 0
    unknown: int = 0
    params: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    conditions: dict = field(default_factory=dict)
    data: Any = None

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    @property
    def exit_code(self) -> int:
        return _EXIT[self.verdict]

    @property
    def unknown_fraction(self) -> float:
        total = self.decided + self.unknown
        return self.unknown / total if total else 0.0

    def to_dict(self) -> dict:
        return jsonable({
            "name": self.name,
            "verdict": self.verdict,
            "worst_margin": self.worst_margin,
            "decided": self.decided,
            "unknown": self.unknown,
            "witnesses": self.witnesses,
            "params": self.params,
            "notes": self.notes,
            "conditions": self.conditions,
        })

    def summary(self) -> str:
        return (f"{self.name}: {self.verdict} (worst margin {self.worst_margin:.3e}, "
                f"{self.decided} decided, {self.unknown} unknown)")


def verdict_from(margins, tol: float = DEFAULT_TOL, max_unknown: float = UNKNOWN_FRACTION):
    """Verdict for an array of margins where NaN marks an undecided probe."""
    m = np.asarray(margins, dtype=float).ravel()
    known = ~np.isnan(m)
    decided = int(known.sum())
    unknown = int(m.size - decided)
    worst = float(np.min(m[known])) if decided else float("nan")
    if decided and worst <= -tol:
        verdict = VIOLATION
    elif m.size == 0 or unknown > max_unknown * m.size or decided == 0:
        verdict = INCONCLUSIVE
    else:
        verdict = PASS
    return verdict, worst, decided, unknown


def from_margins(name: str, margins, points=None, times=None, tol: float = DEFAULT_TOL,
                 max_unknown: float = UNKNOWN_FRACTION, params: Optional[dict] = None,
                 notes=None, n_witnesses: int = 3) -> CheckReport:
    """Build a report from per-probe margins.

    ``margins`` may have shape (N,) or (N, T); ``points`` is indexed along
    the first axis and ``times`` along the second.
    """
    m = np.asarray(margins, dtype=float)
    verdict, worst, decided, unknown = verdict_from(m, tol, max_unknown)
    witnesses = []
    if decided:
        flat = np.where(np.isnan(m), np.inf, m).ravel()
        order = np.argsort(flat, kind="stable")[:n_witnesses]
        for k in order:
            if not np.isfinite(flat[k]) and flat[k] > 0:
                break
            idx = np.unravel_index(k, m.shape)
            w = {"margin": float(flat[k]), "index": [int(i) for i in idx]}
            if points is not None:
                w["point"] = np.asarray(points)[idx[0]]
            if times is not None and m.ndim > 1:
                w["t"] = float(np.asarray(times)[idx[1]])
            witnesses.append(w)
    return CheckReport(name, verdict, worst, witnesses, decided, unknown,
                       dict(params or {}), list(notes or []))


def combine(name: str, parts: dict, params=None, notes=None) -> CheckReport:
    """Merge sub-reports: any violation wins, then any inconclusive."""
    verdicts = [r.verdict for r in parts.values()]
    if VIOLATION in verdicts:
        verdict = VIOLATION
    elif INCONCLUSIVE in verdicts or not verdicts:
        verdict = INCONCLUSIVE
    else:
        verdict = PASS
    finite = [r.worst_margin for r in parts.values() if not np.isnan(r.worst_margin)]
    witnesses = [dict(w, condition=k) for k, r in parts.items() for w in r.witnesses
                 if r.verdict == VIOLATION]
    rep = CheckReport(name, verdict, min(finite) if finite else float("nan"), witnesses,
                      sum(r.decided for r in parts.values()), sum(r.unknown for r in parts.values()),
                      dict(params or {}), list(notes or []))
    rep.conditions = {k: {"verdict": r.verdict, "worst_margin": r.worst_margin, "tolerance": r.params.get("tol"),
                          "decided": r.decided, "unknown": r.unknown} for k, r in parts.items()}
    for r in parts.values():
        rep.notes.extend(n for n in r.notes if n not in rep.notes)
    return rep


def overall_verdict(reports) -> str:
    verdicts = [r.verdict for r in reports]
    if VIOLATION in verdicts:
        return VIOLATION
    if INCONCLUSIVE in verdicts:
        return INCONCLUSIVE
    return PASS
