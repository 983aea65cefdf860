"""Run-level scoring: slice a run's evidence per measurement and classify.

The dispatcher only routes; every decision rule lives in ``classifiers``.
Measurements in a custom registry without a wired classifier come back
NotApplicable rather than failing, so test-scoped registries can still be
aggregated from verdicts built directly against the classifier layer.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Mapping, Sequence

from . import classifiers
from .canary import IdentityStatement, PlaceholderList
from .registry import INCONCLUSIVE, NOT_APPLICABLE, Registry
from .scoring import Confidence, Verdict, not_applicable, scalar_verdict
from .telemetry import BeaconEvent, EventKind, ManualObservation, effective_observations
from .variants import PERMISSION_KINDS, PII_INFO_FIELDS


def classify_run(
    *,
    events: Sequence[BeaconEvent],
    observations: Sequence[ManualObservation],
    annotations: Mapping,
    registry: Registry,
    channel: str = "control",
    identity: IdentityStatement | None = None,
    placeholders: PlaceholderList | None = None,
    session1_events: Sequence[BeaconEvent] | None = None,
    region_zip_prefixes: tuple[str, ...] = (),
) -> dict[str, Verdict]:
    identity = identity or IdentityStatement()
    placeholders = placeholders or PlaceholderList.default()
    by_page: dict[str, list[BeaconEvent]] = defaultdict(list)
    by_measurement: dict[str, list[BeaconEvent]] = defaultdict(list)
    for event in events:
        by_page[event.page_id].append(event)
        by_measurement[event.measurement_id].append(event)
    obs = effective_observations(observations)

    def observation(measurement_id: str, subject: str = "") -> ManualObservation | None:
        return obs.get((measurement_id, subject))

    verdicts: dict[str, Verdict] = {}

    for measurement in registry:
        mid = measurement.id
        if mid == "off-device-model":
            verdicts[mid] = classifiers.annotation_verdict(mid, "model_location", annotations)
        elif mid == "browser-location":
            verdicts[mid] = classifiers.annotation_verdict(mid, "browser_location", annotations)
        elif mid == "outdated-browser":
            verdicts[mid] = classifiers.browser_version_verdict(events, registry, annotations)
        elif mid == "safe-browsing":
            outcome, evidence = classifiers.classify_safe_browsing(observation(mid))
            verdicts[mid] = scalar_verdict(
                mid, outcome, evidence, confidence=Confidence.OPERATOR_ASSISTED
            )
        elif mid == "tls-certificates":
            verdicts[mid] = _tls_verdict(mid, measurement.sub_keys or (), by_page, observation)
        elif mid == "https-upgrade":
            outcome, evidence, detail = classifiers.classify_upgrade(
                by_page.get("upgrade-page", []), observation(mid)
            )
            verdicts[mid] = scalar_verdict(mid, outcome, evidence, detail=detail)
        elif mid == "mixed-content":
            outcomes, evidence = classifiers.classify_mixed_content(by_page.get("mixed-page", []))
            verdicts[mid] = Verdict(mid, outcomes, evidence)
        elif mid == "optout-headers":
            outcome, evidence, detail = classifiers.classify_headers(list(events))
            verdicts[mid] = scalar_verdict(mid, outcome, evidence, detail=detail)
        elif mid == "storage-partitioning":
            outcomes, evidence, detail = classifiers.classify_partitioning(
                by_measurement.get(mid, []),
                measurement.sub_keys or (),
                cache_threshold_ms=registry.cache_timing_threshold_ms,
            )
            verdicts[mid] = Verdict(mid, outcomes, evidence, detail=detail)
        elif mid == "profile-persistence":
            verdicts[mid] = _persistence_verdict(
                mid, by_measurement.get(mid, []), session1_events, annotations, registry
            )
        elif mid == "content-filtering":
            outcomes, evidence = classifiers.classify_content_filtering(
                by_measurement.get(mid, [])
            )
            verdicts[mid] = Verdict(mid, outcomes, evidence)
        elif mid == "cookie-banners":
            verdicts[mid] = _consent_verdict(mid, measurement.sub_keys or (), by_page, observation)
        elif mid == "permission-prompts":
            verdicts[mid] = _permission_verdict(
                mid, measurement.sub_keys or (), by_page, observation, annotations, registry
            )
        elif mid in ("pii-passive", "pii-active"):
            verdicts[mid] = _pii_verdict(
                mid, by_page, observation, identity=identity, placeholders=placeholders,
                channel=channel, region_zip_prefixes=region_zip_prefixes,
            )
        else:
            verdicts[mid] = not_applicable(mid, reason="no classifier wired")
    return verdicts


def _merge(measurement_id: str, parts: dict[str, tuple[str, tuple[str, ...], dict]],
           operator_assisted: bool = False) -> Verdict:
    outcomes = {}
    evidence: list[str] = []
    detail: dict = {}
    for sub_key, (outcome, refs, part_detail) in parts.items():
        outcomes[sub_key] = outcome
        for ref in refs:
            if ref not in evidence:
                evidence.append(ref)
        if part_detail:
            detail[sub_key] = part_detail
    confidence = Confidence.OPERATOR_ASSISTED if operator_assisted else Confidence.AUTOMATED
    return Verdict(measurement_id, outcomes, tuple(evidence), confidence, detail)


def _tls_verdict(mid, sub_keys, by_page, observation) -> Verdict:
    pages = {"expired": "expired-direct", "self_signed": "selfsigned-product", "revoked": "revoked-direct"}
    parts = {}
    used_obs = False
    for sub in sub_keys:
        o = observation(mid, sub)
        used_obs = used_obs or o is not None
        parts[sub] = classifiers.classify_tls(by_page.get(pages.get(sub, sub), []), o)
    return _merge(mid, parts, operator_assisted=used_obs)


def _consent_verdict(mid, sub_keys, by_page, observation) -> Verdict:
    parts = {}
    used_obs = False
    for sub in sub_keys:
        o = observation(mid, sub)
        used_obs = used_obs or o is not None
        parts[sub] = classifiers.classify_consent(
            by_page.get(f"banner-{sub}", []), o, gated=(sub == "forced")
        )
    return _merge(mid, parts, operator_assisted=used_obs)


def _permission_verdict(mid, sub_keys, by_page, observation, annotations, registry) -> Verdict:
    no_access_list = annotations.get("permission_no_access", [])
    parts = {}
    used_obs = False
    for sub in sub_keys:
        o = observation(mid, sub)
        used_obs = used_obs or o is not None
        no_access = "*" in no_access_list or sub in no_access_list
        parts[sub] = classifiers.classify_permission(
            by_page.get(f"perm-{sub}", []), o,
            gated=sub.endswith("-forced"),
            no_access=no_access,
            auto_threshold_ms=registry.auto_decision_threshold_ms,
        )
    return _merge(mid, parts, operator_assisted=used_obs)


def _pii_verdict(mid, by_page, observation, *, identity, placeholders, channel,
                 region_zip_prefixes) -> Verdict:
    mode = "passive" if mid == "pii-passive" else "active"
    events_by_info = {}
    observations = {}
    for info in PII_INFO_FIELDS:
        page_events = by_page.get(f"pii-{mode}-{info}", [])
        if page_events:
            events_by_info[info] = page_events
        o = observation(mid, info)
        if o is not None:
            observations[info] = o
            events_by_info.setdefault(info, [])
    if not events_by_info:
        return not_applicable(mid, reason="not exercised")
    outcomes, evidence, detail = classifiers.classify_pii(
        events_by_info, observations,
        identity=identity, placeholders=placeholders, channel=channel,
        region_zip_prefixes=region_zip_prefixes,
    )
    confidence = Confidence.OPERATOR_ASSISTED if observations else Confidence.AUTOMATED
    return Verdict(mid, outcomes, evidence, confidence, detail)


def _persistence_verdict(mid, session2_events, session1_events, annotations, registry) -> Verdict:
    if not session2_events:
        return not_applicable(mid, reason="not exercised")
    if session1_events is None:
        return Verdict(
            mid, {"": INCONCLUSIVE},
            detail={"reason": "first session of a persistence pair, or pair incomplete"},
        )
    outcome, persisted, evidence = classifiers.classify_profile_persistence(
        [e for e in session1_events if e.measurement_id == mid],
        list(session2_events),
        cache_threshold_ms=registry.cache_timing_threshold_ms,
        disclosure=annotations.get("profile_disclosure"),
    )
    confidence = (
        Confidence.OPERATOR_ASSISTED if annotations.get("profile_disclosure") else Confidence.AUTOMATED
    )
    return Verdict(mid, {"": outcome}, evidence, confidence, {"persisted": persisted})
