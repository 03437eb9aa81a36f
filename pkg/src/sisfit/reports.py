"""Verification report containers shared by the checking routines."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Violation:
    check: str
    cell: int
    generator: int
    detail: str

    def __str__(self):
        return f"[{self.check}] cell {self.cell}, generator {self.generator}: {self.detail}"


@dataclass
class VerificationReport:
    """Outcome of a model check: which checks ran and what failed.

    ``violations`` may be truncated; ``n_violations`` is the full count.
    """

    passed: bool
    checks: list[str] = field(default_factory=list)
    violations: list[Violation] = field(default_factory=list)
    n_violations: int = 0

    def __str__(self):
        head = "passed" if self.passed else f"FAILED ({self.n_violations} violations)"
        lines = [f"verification {head}; checks: {', '.join(self.checks)}"]
        lines += [str(v) for v in self.violations]
        if self.n_violations > len(self.violations):
            lines.append(f"... and {self.n_violations - len(self.violations)} more")
        return "\n".join(lines)
