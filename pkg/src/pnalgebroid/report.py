"""Residual check results and their text/JSON rendering."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

SCHEMA_VERSION = 1


@dataclass
class CheckResult:
    name: str
    max_residual: float
    tolerance: float
    points: int
    seed: int | None = None
    # "le" passes when residual <= tolerance; "gt" is used by negative controls
    mode: str = "le"
    detail: str = ""

    @property
    def passed(self):
        r = self.max_residual
        if math.isnan(r):
            return False
        return r <= self.tolerance if self.mode == "le" else r > self.tolerance

    def as_dict(self):
        d = asdict(self)
        d["pass"] = self.passed
        return d

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        rel = "<=" if self.mode == "le" else ">"
        extra = f"  {self.detail}" if self.detail else ""
        return f"[{status}] {self.name}: max residual {self.max_residual:.3e} (need {rel} {self.tolerance:.1e}){extra}"


@dataclass
class Report:
    title: str
    checks: list = field(default_factory=list)

    def add(self, result):
        self.checks.append(result)
        return result

    def extend(self, other):
        self.checks.extend(other.checks)
        return self

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def max_residual(self):
        return max((c.max_residual for c in self.checks), default=0.0)

    def as_dict(self):
        return {
            "schema": SCHEMA_VERSION,
            "title": self.title,
            "pass": self.passed,
            "checks": [c.as_dict() for c in self.checks],
        }

    def to_json(self, **kw):
        return json.dumps(self.as_dict(), **kw)

    def to_text(self):
        lines = [self.title] + ["  " + c.line() for c in self.checks]
        lines.append(f"  overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)

    def __str__(self):
        return self.to_text()


def collect(name, residuals, tolerance, points, seed=None, mode="le", detail=""):
    """Build a :class:`CheckResult` from an iterable of residuals; NaN wins over any number."""
    worst = 0.0
    for r in residuals:
        r = float(r)
        if math.isnan(r):
            worst = r
            break
        worst = max(worst, r)
    return CheckResult(name, worst, tolerance, points, seed, mode, detail)
