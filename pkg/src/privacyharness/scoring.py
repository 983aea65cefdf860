"""Verdicts, baseline diffing, and the vulnerability matrix.

A verdict is the classified outcome of one measurement for one run: a scalar
outcome or a map of sub-outcomes (one per certificate profile, banner variant,
storage type, ...). Diffing against the baseline profile turns verdicts into
concern flags; the matrix is the per-category fold of those flags.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .registry import (
    INCONCLUSIVE,
    NOT_APPLICABLE,
    SCALAR_KEY,
    WILDCARD_KEY,
    Measurement,
    Registry,
)

BASELINE_UNKNOWN = "BaselineUnknown"

_UNDECIDED = frozenset({NOT_APPLICABLE, INCONCLUSIVE})


class Confidence(Enum):
    AUTOMATED = "Automated"
    OPERATOR_ASSISTED = "OperatorAssisted"


class ConcernResult(Enum):
    CONCERN = "Concern"
    NO_CONCERN = "NoConcern"
    NOT_COMPARABLE = "NotComparable"


class MeasurementMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Verdict:
    measurement_id: str
    outcomes: Mapping[str, str]          # sub_key -> outcome; SCALAR_KEY for scalars
    evidence: tuple[str, ...] = ()
    confidence: Confidence = Confidence.AUTOMATED
    detail: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        decided = [o for o in self.outcomes.values() if o not in _UNDECIDED]
        if decided and not self.evidence:
            raise ValueError(f"verdict for {self.measurement_id} has decided outcomes but no evidence")

    @property
    def outcome(self) -> str:
        """Scalar accessor; for sub-keyed verdicts, the worst-case summary is in detail."""
        if SCALAR_KEY in self.outcomes:
            return self.outcomes[SCALAR_KEY]
        values = set(self.outcomes.values())
        if len(values) == 1:
            return values.pop()
        raise ValueError(f"verdict for {self.measurement_id} has mixed sub-outcomes")

    def to_record(self) -> dict[str, Any]:
        return {
            "measurement_id": self.measurement_id,
            "outcomes": dict(self.outcomes),
            "evidence": list(self.evidence),
            "confidence": self.confidence.value,
            "detail": dict(self.detail),
        }

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "Verdict":
        return cls(
            measurement_id=record["measurement_id"],
            outcomes=record["outcomes"],
            evidence=tuple(record["evidence"]),
            confidence=Confidence(record["confidence"]),
            detail=record.get("detail", {}),
        )


def scalar_verdict(
    measurement_id: str,
    outcome: str,
    evidence: tuple[str, ...] = (),
    confidence: Confidence = Confidence.AUTOMATED,
    detail: Mapping[str, Any] | None = None,
) -> Verdict:
    return Verdict(
        measurement_id=measurement_id,
        outcomes={SCALAR_KEY: outcome},
        evidence=evidence,
        confidence=confidence,
        detail=detail or {},
    )


def not_applicable(measurement_id: str, reason: str = "") -> Verdict:
    return Verdict(
        measurement_id=measurement_id,
        outcomes={SCALAR_KEY: NOT_APPLICABLE},
        detail={"reason": reason} if reason else {},
    )


@dataclass(frozen=True)
class BaselineProfile:
    """Per-measurement outcomes of the stock browser an agent ships with."""

    baseline_id: str
    outcomes: Mapping[str, Any]  # measurement id -> outcome str | {sub_key|'*': outcome}

    def lookup(self, measurement_id: str, sub_key: str = SCALAR_KEY) -> str:
        entry = self.outcomes.get(measurement_id)
        if entry is None:
            return BASELINE_UNKNOWN
        if isinstance(entry, str):
            return entry if sub_key == SCALAR_KEY else entry
        if sub_key in entry:
            return entry[sub_key]
        if WILDCARD_KEY in entry:
            return entry[WILDCARD_KEY]
        return BASELINE_UNKNOWN

    def to_record(self) -> dict[str, Any]:
        return {"baseline_id": self.baseline_id, "outcomes": dict(self.outcomes)}

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "BaselineProfile":
        return cls(baseline_id=record["baseline_id"], outcomes=record["outcomes"])


def shipped_baseline(name: str) -> BaselineProfile:
    raw = resources.files("privacyharness.data.baselines").joinpath(f"{name}.json")
    return BaselineProfile.from_record(json.loads(raw.read_text(encoding="utf-8")))


def load_baseline(path: str | Path) -> BaselineProfile:
    with open(path, encoding="utf-8") as fh:
        return BaselineProfile.from_record(json.load(fh))


def evaluate_measurement(
    verdict: Verdict, baseline: BaselineProfile, measurement: Measurement
) -> ConcernResult:
    """Apply the counting rule: concern iff the agent's outcome is risky where
    the baseline browser's is safe. Sub-keyed measurements are compared cell by
    cell and contribute at most one concern."""
    if verdict.measurement_id != measurement.id:
        raise MeasurementMismatchError(
            f"verdict {verdict.measurement_id!r} evaluated against measurement {measurement.id!r}"
        )
    if not measurement.concern_set:
        return ConcernResult.NO_CONCERN

    comparable = 0
    for sub_key, outcome in verdict.outcomes.items():
        if outcome in _UNDECIDED:
            continue
        base = baseline.lookup(measurement.id, sub_key)
        if base == BASELINE_UNKNOWN:
            continue
        comparable += 1
        if outcome in measurement.concern_set and base not in measurement.concern_set:
            return ConcernResult.CONCERN
    if comparable == 0:
        return ConcernResult.NOT_COMPARABLE
    return ConcernResult.NO_CONCERN


@dataclass(frozen=True)
class VulnerabilityMatrix:
    category_counts: Mapping[str, int]
    total: int
    flags: Mapping[str, int]               # measurement id -> 0/1
    not_comparable: tuple[str, ...] = ()   # reported but excluded from totals

    def __post_init__(self) -> None:
        if self.total != sum(self.category_counts.values()):
            raise ValueError("matrix total must equal the sum of category counts")
        if any(flag not in (0, 1) for flag in self.flags.values()):
            raise ValueError("per-measurement concern flags must be 0/1")

    def to_record(self) -> dict[str, Any]:
        return {
            "category_counts": dict(self.category_counts),
            "total": self.total,
            "flags": dict(self.flags),
            "not_comparable": list(self.not_comparable),
        }

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "VulnerabilityMatrix":
        return cls(
            category_counts=record["category_counts"],
            total=record["total"],
            flags=record["flags"],
            not_comparable=tuple(record.get("not_comparable", [])),
        )


def aggregate_matrix(
    verdicts: Mapping[str, Verdict], baseline: BaselineProfile, registry: Registry
) -> VulnerabilityMatrix:
    """Fold concern flags into per-category counts. Measurements without a
    verdict count NotApplicable; NotComparable entries are reported separately
    and excluded from every total."""
    flags: dict[str, int] = {}
    not_comparable: list[str] = []
    counts = {category: 0 for category in registry.categories}

    for measurement in registry:
        verdict = verdicts.get(measurement.id)
        if verdict is None:
            verdict = not_applicable(measurement.id, reason="no verdict")
        result = evaluate_measurement(verdict, baseline, measurement)
        flag = 1 if result is ConcernResult.CONCERN else 0
        flags[measurement.id] = flag
        counts[measurement.category] += flag
        if result is ConcernResult.NOT_COMPARABLE:
            not_comparable.append(measurement.id)

    return VulnerabilityMatrix(
        category_counts=counts,
        total=sum(counts.values()),
        flags=flags,
        not_comparable=tuple(not_comparable),
    )
