from __future__ import annotations

import random

import pytest

from privacyharness.registry import NOT_APPLICABLE, SCALAR_KEY, default_registry
from privacyharness.scoring import (
    BaselineProfile,
    ConcernResult,
    Confidence,
    MeasurementMismatchError,
    Verdict,
    VulnerabilityMatrix,
    aggregate_matrix,
    evaluate_measurement,
    not_applicable,
    scalar_verdict,
    shipped_baseline,
)

REGISTRY = default_registry()
CHROME = shipped_baseline("stock-chrome")


def verdict_for(measurement_id, outcome, sub_key=SCALAR_KEY):
    return Verdict(measurement_id, {sub_key: outcome}, evidence=("e:x/0",))


class TestRegistry:
    def test_fifteen_measurements(self):
        assert len(REGISTRY) == 15

    def test_category_sizes(self):
        sizes = {c: len(REGISTRY.by_category(c)) for c in REGISTRY.categories}
        assert sizes == {"components": 3, "protections": 5, "tracking": 3, "dialogs": 2, "pii": 2}

    def test_operator_assisted_lookup(self):
        assert REGISTRY.operator_assisted("safe-browsing")
        assert REGISTRY.operator_assisted("tls-certificates")
        assert not REGISTRY.operator_assisted("storage-partitioning")

    def test_unknown_measurement_not_operator_assisted(self):
        assert not REGISTRY.operator_assisted("no-such-measurement")


class TestEvaluate:
    def test_storage_access_auto_grant_matches_chrome(self):
        m = REGISTRY.get("permission-prompts")
        v = verdict_for("permission-prompts", "AutoGranted", sub_key="storage-access")
        assert evaluate_measurement(v, CHROME, m) is ConcernResult.NO_CONCERN

    def test_notification_auto_grant_is_concern(self):
        m = REGISTRY.get("permission-prompts")
        v = verdict_for("permission-prompts", "AutoGranted", sub_key="notification")
        assert evaluate_measurement(v, CHROME, m) is ConcernResult.CONCERN

    def test_baseline_unknown_not_comparable(self):
        m = REGISTRY.get("safe-browsing")
        empty = BaselineProfile("empty", {})
        v = verdict_for("safe-browsing", "NoWarning")
        assert evaluate_measurement(v, empty, m) is ConcernResult.NOT_COMPARABLE

    def test_not_applicable_never_concern(self):
        m = REGISTRY.get("safe-browsing")
        assert evaluate_measurement(not_applicable("safe-browsing"), CHROME, m) is ConcernResult.NOT_COMPARABLE

    def test_empty_concern_set_never_concern(self):
        m = REGISTRY.get("browser-location")
        v = verdict_for("browser-location", "CloudHosted")
        assert evaluate_measurement(v, CHROME, m) is ConcernResult.NO_CONCERN

    def test_mismatch_rejected(self):
        m = REGISTRY.get("safe-browsing")
        with pytest.raises(MeasurementMismatchError):
            evaluate_measurement(verdict_for("mixed-content", "Allowed"), CHROME, m)

    def test_sub_key_wildcard_baseline(self):
        m = REGISTRY.get("pii-active")
        v = verdict_for("pii-active", "L", sub_key="memories:zip")
        assert evaluate_measurement(v, CHROME, m) is ConcernResult.CONCERN

    def test_verdict_requires_evidence_when_decided(self):
        with pytest.raises(ValueError):
            Verdict("safe-browsing", {SCALAR_KEY: "NoWarning"})


class TestMatrix:
    def test_all_safe_is_zero(self):
        verdicts = {}
        for m in REGISTRY:
            safe = next(o for o in m.outcomes if o not in m.concern_set)
            keys = m.sub_keys if m.sub_keys else (SCALAR_KEY,)
            verdicts[m.id] = Verdict(m.id, {k: safe for k in keys}, evidence=("e:x/0",))
        matrix = aggregate_matrix(verdicts, CHROME, REGISTRY)
        assert matrix.total == 0
        assert all(v == 0 for v in matrix.category_counts.values())

    def test_missing_verdicts_count_not_applicable(self):
        matrix = aggregate_matrix({}, CHROME, REGISTRY)
        assert matrix.total == 0
        # browser-location has an empty concern set, so it resolves NoConcern
        # even unexercised; the other 14 are reported as not comparable.
        assert len(matrix.not_comparable) == 14

    def test_total_equals_category_sum(self):
        verdicts = {
            "safe-browsing": verdict_for("safe-browsing", "NoWarning"),
            "outdated-browser": verdict_for("outdated-browser", "Outdated"),
        }
        matrix = aggregate_matrix(verdicts, CHROME, REGISTRY)
        assert matrix.total == 2
        assert matrix.category_counts["protections"] == 1
        assert matrix.category_counts["components"] == 1
        assert sum(matrix.category_counts.values()) == matrix.total

    def test_sub_keys_cap_at_one_concern(self):
        outcomes = {"expired": "NoWarningProceeded", "self_signed": "NoWarningProceeded",
                    "revoked": "NoWarningProceeded"}
        verdicts = {"tls-certificates": Verdict("tls-certificates", outcomes, evidence=("e:x/0",))}
        matrix = aggregate_matrix(verdicts, CHROME, REGISTRY)
        assert matrix.flags["tls-certificates"] == 1
        assert matrix.total == 1

    def test_matrix_invariants_enforced(self):
        with pytest.raises(ValueError):
            VulnerabilityMatrix(category_counts={"a": 1}, total=3, flags={})
        with pytest.raises(ValueError):
            VulnerabilityMatrix(category_counts={"a": 2}, total=2, flags={"m": 2})

    def test_round_trip(self):
        matrix = aggregate_matrix({}, CHROME, REGISTRY)
        assert VulnerabilityMatrix.from_record(matrix.to_record()) == matrix


def random_profile(rng: random.Random) -> dict[str, Verdict]:
    verdicts = {}
    for m in REGISTRY:
        keys = m.sub_keys if m.sub_keys else (SCALAR_KEY,)
        if m.dynamic_sub_keys:
            keys = ("memories:zip", "memories:email")
        outcomes = {k: rng.choice(m.outcomes) for k in keys}
        verdicts[m.id] = Verdict(m.id, outcomes, evidence=("e:x/0",))
    return verdicts


def baseline_from(verdicts: dict[str, Verdict]) -> BaselineProfile:
    outcomes = {}
    for mid, verdict in verdicts.items():
        if SCALAR_KEY in verdict.outcomes:
            outcomes[mid] = verdict.outcomes[SCALAR_KEY]
        else:
            outcomes[mid] = dict(verdict.outcomes)
    return BaselineProfile("mirror", outcomes)


class TestBaselineNeutrality:
    def test_identical_baseline_never_scores_concerns(self):
        rng = random.Random(42)
        for _ in range(250):
            verdicts = random_profile(rng)
            matrix = aggregate_matrix(verdicts, baseline_from(verdicts), REGISTRY)
            assert matrix.total == 0

    def test_single_injected_concern_counts_once(self):
        rng = random.Random(43)
        eligible = [m for m in REGISTRY if m.concern_set]
        for _ in range(250):
            verdicts = random_profile(rng)
            baseline = baseline_from(verdicts)
            target = rng.choice(eligible)
            keys = target.sub_keys if target.sub_keys else (SCALAR_KEY,)
            if target.dynamic_sub_keys:
                keys = ("memories:zip",)
            key = rng.choice(tuple(keys))
            concern_outcome = sorted(target.concern_set)[0]
            safe_outcome = next(o for o in target.outcomes if o not in target.concern_set)

            new_outcomes = dict(verdicts[target.id].outcomes)
            new_outcomes[key] = concern_outcome
            verdicts[target.id] = Verdict(target.id, new_outcomes, evidence=("e:x/0",))
            base_outcomes = dict(baseline.outcomes)
            entry = base_outcomes[target.id]
            if isinstance(entry, str):
                base_outcomes[target.id] = safe_outcome
            else:
                entry = dict(entry)
                entry[key] = safe_outcome
                base_outcomes[target.id] = entry
            # Every other measurement still mirrors its baseline exactly.
            matrix = aggregate_matrix(verdicts, BaselineProfile("mirror", base_outcomes), REGISTRY)
            assert matrix.total == 1, f"injected concern in {target.id}:{key} scored {matrix.total}"
            assert matrix.flags[target.id] == 1


class TestBaselines:
    def test_shipped_baselines_cover_all_measurements(self):
        for name in ("stock-chrome", "stock-firefox"):
            profile = shipped_baseline(name)
            for m in REGISTRY:
                assert m.id in profile.outcomes, f"{name} missing {m.id}"

    def test_wildcard_lookup(self):
        assert CHROME.lookup("mixed-content", "image") == "Upgraded"
        assert CHROME.lookup("mixed-content", "script") == "Blocked"
        assert CHROME.lookup("absent-measurement") == "BaselineUnknown"

    def test_firefox_partitions_cookies(self):
        firefox = shipped_baseline("stock-firefox")
        assert firefox.lookup("storage-partitioning", "cookie") == "Partitioned"
        assert CHROME.lookup("storage-partitioning", "cookie") == "Unpartitioned"
