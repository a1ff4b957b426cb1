"""Check results and suite reports."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass
class CheckResult:
    name: str
    passed: bool
    max_residual: float
    samples_used: int = 0
    details: dict[str, Any] = field(default_factory=dict)
    skipped: bool = False

    @property
    def status(self) -> str:
        if self.skipped:
            return "skipped"
        return "pass" if self.passed else "fail"

    @classmethod
    def skip(cls, name: str, reason: str) -> "CheckResult":
        return cls(name, True, 0.0, 0, {"reason": reason}, skipped=True)

    @classmethod
    def from_residual(cls, name: str, residual: float, tol: float, samples: int, **details: Any) -> "CheckResult":
        details = {"tol": tol, **details}
        return cls(name, bool(residual <= tol), float(residual), samples, details)


def sig3(x: float) -> str:
    """Format a residual with three significant digits."""
    return f"{x:.2e}"
