"""The measurement registry: what gets measured and what counts as a concern.

A concern is attributed to a measurement only when the agent's outcome is in
the measurement's concern set while the baseline browser's outcome is not, so
risks a user would face anyway in the stock browser are never counted.
The registry ships as a versioned data file rather than code so deployments
can audit and amend the concern accounting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

# Outcomes any classifier may emit regardless of vocabulary; never concern-eligible.
UNIVERSAL_OUTCOMES = ("NotApplicable", "Inconclusive")

NOT_APPLICABLE = "NotApplicable"
INCONCLUSIVE = "Inconclusive"

# Scalar verdicts/baselines use this pseudo sub-key.
SCALAR_KEY = ""
WILDCARD_KEY = "*"


@dataclass(frozen=True)
class Measurement:
    id: str
    category: str
    automation: str  # automated | operator | annotation | mixed
    outcomes: tuple[str, ...]
    concern_set: frozenset[str]
    sub_keys: tuple[str, ...] | None  # None = scalar, () = dynamic sub-keys
    annotation_key: str | None = None
    description: str = ""

    @property
    def operator_assisted(self) -> bool:
        return self.automation in ("operator", "annotation", "mixed")

    @property
    def dynamic_sub_keys(self) -> bool:
        return self.sub_keys == ()

    def valid_outcome(self, outcome: str) -> bool:
        return outcome in self.outcomes or outcome in UNIVERSAL_OUTCOMES


@dataclass(frozen=True)
class Registry:
    version: int
    measurements: tuple[Measurement, ...]
    categories: tuple[str, ...]
    auto_decision_threshold_ms: float
    cache_timing_threshold_ms: float
    outdated_major_threshold: int
    browser_majors: dict

    def __post_init__(self) -> None:
        ids = [m.id for m in self.measurements]
        if len(set(ids)) != len(ids):
            raise ValueError("measurement ids must be unique")
        for m in self.measurements:
            if m.category not in self.categories:
                raise ValueError(f"measurement {m.id} has unknown category {m.category}")
            unknown = m.concern_set - set(m.outcomes)
            if unknown:
                raise ValueError(f"measurement {m.id} concern set not in outcomes: {unknown}")

    def get(self, measurement_id: str) -> Measurement:
        for m in self.measurements:
            if m.id == measurement_id:
                return m
        raise KeyError(measurement_id)

    def __iter__(self):
        return iter(self.measurements)

    def __len__(self) -> int:
        return len(self.measurements)

    def ids(self) -> list[str]:
        return [m.id for m in self.measurements]

    def by_category(self, category: str) -> list[Measurement]:
        return [m for m in self.measurements if m.category == category]

    def operator_assisted(self, measurement_id: str) -> bool:
        try:
            return self.get(measurement_id).operator_assisted
        except KeyError:
            return False

    def latest_major(self, engine: str) -> int | None:
        entry = self.browser_majors.get(engine)
        return entry["latest"] if entry else None


def _parse(raw: dict) -> Registry:
    measurements = []
    for entry in raw["measurements"]:
        sub_keys_raw = entry.get("sub_keys")
        if sub_keys_raw is None:
            sub_keys: tuple[str, ...] | None = None
        elif sub_keys_raw == "dynamic":
            sub_keys = ()
        else:
            sub_keys = tuple(sub_keys_raw)
        measurements.append(
            Measurement(
                id=entry["id"],
                category=entry["category"],
                automation=entry["automation"],
                outcomes=tuple(entry["outcomes"]),
                concern_set=frozenset(entry["concern_set"]),
                sub_keys=sub_keys,
                annotation_key=entry.get("annotation_key"),
                description=entry.get("description", ""),
            )
        )
    return Registry(
        version=raw.get("version", 0),
        measurements=tuple(measurements),
        categories=tuple(raw.get("categories", [])),
        auto_decision_threshold_ms=raw.get("auto_decision_threshold_ms", 500),
        cache_timing_threshold_ms=raw.get("cache_timing_threshold_ms", 5.0),
        outdated_major_threshold=raw.get("outdated_major_threshold", 2),
        browser_majors=raw.get("browser_majors", {}),
    )


def default_registry() -> Registry:
    raw = resources.files("privacyharness.data").joinpath("registry.json")
    return _parse(json.loads(raw.read_text(encoding="utf-8")))


def load_registry(path: str | Path) -> Registry:
    with open(path, encoding="utf-8") as fh:
        return _parse(json.load(fh))
