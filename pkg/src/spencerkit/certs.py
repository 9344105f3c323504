"""Small verification-certificate containers shared across modules."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional


@dataclass(frozen=True)
class Certificate:
    passed: bool
    detail: str = ""
    witness: Optional[Any] = None

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        out = {"passed": self.passed, "detail": self.detail}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass(frozen=True)
class ProbeReport:
    """Result of a sampled (never proven) check."""
    probe: str
    samples: int
    seed: int
    counterexample: Optional[dict] = None
    note: str = field(default="PROBE: sampled evidence, not a proof")

    @property
    def passed(self) -> bool:
        return self.counterexample is None

    def to_json(self) -> dict:
        return {
            "probe": self.probe,
            "samples": self.samples,
            "seed": self.seed,
            "passed": self.passed,
            "counterexample": self.counterexample,
            "note": self.note,
        }
