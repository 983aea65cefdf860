"""Baseline profile management: import from fixtures or from scored runs."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import jsonschema

from .registry import INCONCLUSIVE, NOT_APPLICABLE, SCALAR_KEY
from .scoring import BaselineProfile, Verdict

SHIPPED = ("stock-chrome", "stock-firefox")


class UnscoredRunError(RuntimeError):
    pass


class FixtureSchemaViolationError(ValueError):
    pass


class BaselineMissingError(KeyError):
    pass


def _schema() -> dict:
    raw = resources.files("privacyharness.data.schemas").joinpath("baseline.schema.json")
    return json.loads(raw.read_text(encoding="utf-8"))


def parse_fixture(raw: dict) -> BaselineProfile:
    try:
        jsonschema.validate(raw, _schema())
    except jsonschema.ValidationError as exc:
        raise FixtureSchemaViolationError(exc.message) from exc
    return BaselineProfile(baseline_id=raw["baseline_id"], outcomes=raw["outcomes"])


def baseline_from_verdicts(baseline_id: str, verdicts: dict[str, Verdict]) -> BaselineProfile:
    """Project a scored run's verdicts into a baseline. Undecided cells are
    dropped so they resolve BaselineUnknown rather than pretending certainty."""
    outcomes: dict = {}
    for mid, verdict in verdicts.items():
        decided = {
            key: outcome
            for key, outcome in verdict.outcomes.items()
            if outcome not in (NOT_APPLICABLE, INCONCLUSIVE)
        }
        if not decided:
            continue
        if set(decided) == {SCALAR_KEY}:
            outcomes[mid] = decided[SCALAR_KEY]
        else:
            outcomes[mid] = decided
    return BaselineProfile(baseline_id=baseline_id, outcomes=outcomes)


class BaselineStore:
    def __init__(self, data_dir: str | Path):
        self.dir = Path(data_dir) / "baselines"
        self.dir.mkdir(parents=True, exist_ok=True)

    def save(self, profile: BaselineProfile) -> Path:
        path = self.dir / f"{profile.baseline_id}.json"
        path.write_text(
            json.dumps(profile.to_record(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        return path

    def import_fixture_file(self, path: str | Path, baseline_id: str | None = None) -> BaselineProfile:
        with open(path, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise FixtureSchemaViolationError(str(exc)) from exc
        profile = parse_fixture(raw)
        if baseline_id:
            profile = BaselineProfile(baseline_id=baseline_id, outcomes=profile.outcomes)
        self.save(profile)
        return profile

    def import_shipped(self, name: str) -> BaselineProfile:
        raw = resources.files("privacyharness.data.baselines").joinpath(f"{name}.json")
        profile = parse_fixture(json.loads(raw.read_text(encoding="utf-8")))
        self.save(profile)
        return profile

    def load(self, ref: str) -> BaselineProfile:
        path = self.dir / f"{ref}.json"
        if path.exists():
            return parse_fixture(json.loads(path.read_text(encoding="utf-8")))
        if ref in SHIPPED:
            return self.import_shipped(ref)
        raise BaselineMissingError(ref)
