"""Pass/fail reports returned by every verification routine."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np


def _plain(value):
    """Recursively convert numpy values and tuples into plain JSON types."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else repr(v)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (str, int, bool)) or value is None:
        return value
    return str(value)


@dataclass(frozen=True)
class Report:
    """Outcome of a sample-based check.

    ``worst`` is the gating quantity compared against ``tol``: the largest
    residual for identity checks, the smallest ``|det|`` for the
    non-degeneracy check.  ``residuals`` breaks ``worst`` down per
    identity or sub-check, and ``witness`` locates the worst offender.
    """

    name: str
    passed: bool
    worst: float
    tol: float
    witness: Any = None
    residuals: dict = field(default_factory=dict)
    seed: Any = None
    extra: dict = field(default_factory=dict)

    def __bool__(self):
        return bool(self.passed)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "worst": _plain(self.worst),
            "tol": _plain(self.tol),
            "witness": _plain(self.witness),
            "residuals": _plain(self.residuals),
            "seed": _plain(self.seed),
            **({"extra": _plain(self.extra)} if self.extra else {}),
        }

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        line = f"{status}  {self.name}: worst={self.worst:.3e} tol={self.tol:.1e}"
        if not self.passed and self.witness is not None:
            line += f"  witness={_plain(self.witness)}"
        return line


def worst_of(residuals: dict) -> tuple:
    """Largest entry of a label -> residual mapping, with its label."""
    if not residuals:
        return 0.0, None
    label = max(residuals, key=lambda k: residuals[k])
    return residuals[label], label
