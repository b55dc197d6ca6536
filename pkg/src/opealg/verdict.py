"""Check results shared by the OPE engine, the axiom checkers and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional

HOLDS = "holds"
FAILS = "fails"
WINDOW_LIMITED = "window-limited"


@dataclass
class Verdict:
    """Outcome of one check.

    ``window`` describes what was quantified over (truncation weight, margin,
    instance counts); ``log`` lists the checked instances; a failing verdict
    carries ``counterexample`` with the location and both sides.
    """

    name: str
    status: str
    window: Dict[str, Any] = field(default_factory=dict)
    log: List[str] = field(default_factory=list)
    counterexample: Optional[Dict[str, Any]] = None
    data: Dict[str, Any] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.status == HOLDS

    def __bool__(self) -> bool:
        return self.holds

    def record(self) -> Dict[str, Any]:
        """Machine-readable form with a stable key order and JSON-ready values."""
        rec: Dict[str, Any] = {"name": self.name, "status": self.status,
                               "window": plain(self.window), "checked": len(self.log)}
        if self.counterexample is not None:
            rec["counterexample"] = plain(self.counterexample)
        return rec

    def summary(self) -> str:
        win = " ".join(f"{k}={self.window[k]}" for k in sorted(self.window))
        line = f"{self.name}: {self.status.upper()} ({len(self.log)} instances; {win})"
        if self.counterexample is not None:
            ce = ", ".join(f"{k}={self.counterexample[k]}" for k in sorted(self.counterexample))
            line += f"\n  counterexample: {ce}"
        return line


def plain(obj):
    """JSON-ready copy: rationals as ``p/q`` strings, keys as strings, sorted."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, Fraction):
        return str(obj.numerator) if obj.denominator == 1 else f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, dict):
        items = [(k if isinstance(k, str) else str(k), plain(v)) for k, v in obj.items()]
        return {k: v for k, v in sorted(items)}
    if isinstance(obj, (list, tuple)):
        return [plain(x) for x in obj]
    return str(obj)


def holds(name: str, window=None, log=None, **data) -> Verdict:
    return Verdict(name, HOLDS, dict(window or {}), list(log or []), None, data)


def fails(name: str, counterexample: Dict[str, Any], window=None, log=None, **data) -> Verdict:
    return Verdict(name, FAILS, dict(window or {}), list(log or []), counterexample, data)
