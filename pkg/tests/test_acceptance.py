"""Acceptance criteria, one test per criterion, each printing a pass/fail line.

Runtime limits are asserted, not aspirational; tolerances are exact unless a
criterion states otherwise.
"""

from __future__ import annotations

import random
import re
import shutil
import string
import subprocess
import time
from contextlib import contextmanager
from urllib.parse import urljoin, urlsplit

import pytest
from corpusclient import CorpusClient, TlsRefused

from privacyharness import fixtures, reports
from privacyharness.canary import CanaryClass, IdentityStatement, PlaceholderList, match_value, normalize
from privacyharness.certs import forge_deployment
from privacyharness.classifiers import classify_partitioning, classify_pii, classify_tls
from privacyharness.orchestrator import Orchestrator
from privacyharness.partition_sim import STATE_TYPES, ground_truth, simulate_matrix_visit
from privacyharness.realms import default_config
from privacyharness.registry import SCALAR_KEY, Measurement, Registry, default_registry
from privacyharness.scoring import BaselineProfile, Verdict, aggregate_matrix
from privacyharness.telemetry import BeaconEvent, EventKind, ManualObservation, Observed
from privacyharness.variants import CATALOG, GateMode, PII_INFO_FIELDS

REGISTRY = default_registry()


@contextmanager
def criterion(name: str, limit_s: float):
    start = time.monotonic()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE FAIL [{name}]")
        raise
    elapsed = time.monotonic() - start
    assert elapsed < limit_s, f"{name} took {elapsed:.2f}s, limit {limit_s}s"
    print(f"ACCEPTANCE PASS [{name}] ({elapsed:.2f}s < {limit_s:.0f}s)")


# -- 1. Published concern-matrix reproduction ----------------------------------


def test_published_matrix_reproduction(tmp_path):
    with criterion("published matrix reproduction", 5.0):
        orch = Orchestrator(tmp_path)
        run_ids = fixtures.install_all(orch)
        totals = {}
        category_sums = {c: 0 for c in fixtures.EXPECTED_CATEGORY_TOTALS}
        for tool, run_id in run_ids.items():
            matrix = orch.score_run(run_id, fixtures.baseline_for(tool))
            totals[tool] = matrix.total
            for category, count in matrix.category_counts.items():
                category_sums[category] += count
        assert totals == fixtures.EXPECTED_TOTALS
        assert category_sums == fixtures.EXPECTED_CATEGORY_TOTALS
        assert sum(totals.values()) == 30


# -- 2. Baseline-neutrality property ---------------------------------------------


def _random_profile(rng: random.Random) -> dict[str, Verdict]:
    verdicts = {}
    for m in REGISTRY:
        keys = m.sub_keys if m.sub_keys else (SCALAR_KEY,)
        if m.dynamic_sub_keys:
            keys = ("memories:zip", "connectors:email")
        verdicts[m.id] = Verdict(
            m.id, {k: rng.choice(m.outcomes) for k in keys}, evidence=("e:x/0",)
        )
    return verdicts


def _mirror_baseline(verdicts: dict[str, Verdict]) -> dict:
    outcomes: dict = {}
    for mid, verdict in verdicts.items():
        if set(verdict.outcomes) == {SCALAR_KEY}:
            outcomes[mid] = verdict.outcomes[SCALAR_KEY]
        else:
            outcomes[mid] = dict(verdict.outcomes)
    return outcomes


def test_baseline_neutrality_property():
    with criterion("baseline-neutrality property", 10.0):
        rng = random.Random(2024)
        eligible = [m for m in REGISTRY if m.concern_set]
        for _ in range(1000):
            verdicts = _random_profile(rng)
            baseline = BaselineProfile("mirror", _mirror_baseline(verdicts))
            assert aggregate_matrix(verdicts, baseline, REGISTRY).total == 0

            target = rng.choice(eligible)
            keys = target.sub_keys if target.sub_keys else (SCALAR_KEY,)
            if target.dynamic_sub_keys:
                keys = ("memories:zip",)
            key = rng.choice(tuple(keys))
            concern_outcome = sorted(target.concern_set)[0]
            safe_outcome = next(o for o in target.outcomes if o not in target.concern_set)

            injected = dict(verdicts)
            outcomes = dict(verdicts[target.id].outcomes)
            outcomes[key] = concern_outcome
            injected[target.id] = Verdict(target.id, outcomes, evidence=("e:x/0",))
            base_outcomes = _mirror_baseline(verdicts)
            entry = base_outcomes[target.id]
            if isinstance(entry, str):
                base_outcomes[target.id] = safe_outcome
            else:
                entry = dict(entry)
                entry[key] = safe_outcome
                base_outcomes[target.id] = entry
            matrix = aggregate_matrix(injected, BaselineProfile("mirror", base_outcomes), REGISTRY)
            assert matrix.total == 1, f"injected {target.id}:{key} scored {matrix.total}"


# -- 3. Partitioning oracle equivalence -----------------------------------------


def test_partitioning_oracle_equivalence():
    with criterion("partitioning oracle equivalence", 5.0):
        for model in ("shared", "partitioned"):
            events = simulate_matrix_visit(model)
            outcomes, _, detail = classify_partitioning(
                events, STATE_TYPES, cache_threshold_ms=REGISTRY.cache_timing_threshold_ms
            )
            truth = ground_truth(model)
            matched = sum(1 for t in STATE_TYPES if outcomes[t] == truth[t])
            assert matched == len(STATE_TYPES), f"{model}: {outcomes} != {truth}"
            assert "incomplete_matrix" not in detail


# -- 4. PII classification suite ---------------------------------------------------


def _submission_event(info: str, fields: dict) -> BeaconEvent:
    return BeaconEvent(
        event_id=f"e:pii/{info}", run_id="pii", run_token="t",
        measurement_id="pii-active", page_id=f"pii-active-{info}",
        kind=EventKind.FORM_SUBMISSION,
        payload={"fields": fields, "info_type": info, "active": True},
        client_seq=0, server_ts=1.0, index=0, source="server",
    )


def test_pii_classification_suite():
    with criterion("pii classification suite", 10.0):
        identity = IdentityStatement()
        placeholders = PlaceholderList.default()

        # Every canary value (including the published zip and card) is a leak.
        canaries = identity.canaries()
        assert canaries["zip"] == "53706" and canaries["credit_card"] == "3921241603573"
        for field_name, value in canaries.items():
            match = match_value(value, field_hint=field_name, identity=identity,
                                placeholders=placeholders)
            assert match.is_leak, f"canary {field_name} did not classify as leak"

        # Through the full classifier: canary submissions -> L for every info type.
        events = {
            info: [_submission_event(info, {f: canaries[f] for f in fields})]
            for info, fields in PII_INFO_FIELDS.items()
        }
        outcomes, _, _ = classify_pii(events, {}, identity=identity,
                                      placeholders=placeholders, channel="memories")
        assert all(v == "L" for v in outcomes.values()), outcomes

        # Every curated placeholder classifies P (never a leak).
        for entry in placeholders.entries():
            match = match_value(entry, identity=identity, placeholders=placeholders)
            assert match.classification is CanaryClass.PLACEHOLDER, entry
        placeholder_events = {
            "email": [_submission_event("email", {"email": "test@example.com"})],
            "zip": [_submission_event("zip", {"zip": "12345"})],
        }
        outcomes, _, _ = classify_pii(placeholder_events, {}, identity=identity,
                                      placeholders=placeholders, channel="memories")
        assert set(outcomes.values()) == {"P"}

        # 10,000 random strings: never a leak unless literally a canary.
        rng = random.Random(99)
        alphabet = string.ascii_letters + string.digits + " @.-_"
        normalized_canaries = {normalize(v) for v in canaries.values()}
        normalized_canaries |= {
            normalize(canaries[f], digits_only=True) for f in ("zip", "credit_card")
        }
        checked = 0
        leaks = []
        for _ in range(10_000):
            value = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 24)))
            digits = normalize(value, digits_only=True)
            if normalize(value) in normalized_canaries or \
               (digits and digits in normalized_canaries):
                continue  # would be a true positive, not a false one
            checked += 1
            match = match_value(value, identity=identity, placeholders=placeholders)
            if match.is_leak:
                leaks.append(value)
            assert match.classification in (
                CanaryClass.FABRICATED, CanaryClass.ABSENT, CanaryClass.PLACEHOLDER
            )
        assert not leaks, f"false-positive leaks: {leaks[:5]}"
        assert checked > 9_900


# -- 5. Certificate profiles against the independent verifier -----------------------


@pytest.mark.skipif(shutil.which("openssl") is None, reason="openssl required")
def test_certificate_profiles(tmp_path):
    with criterion("certificate profiles vs openssl", 5.0):
        cfg = default_config()
        out = tmp_path / "certs"
        forge_deployment(cfg, out)

        def verify(leaf: str, crl_check: bool = False):
            args = ["openssl", "verify", "-CAfile", "ca.pem"]
            if crl_check:
                args += ["-CRLfile", "harness.crl", "-crl_check"]
            proc = subprocess.run(args + [leaf], capture_output=True, text=True, cwd=out)
            return proc.returncode, proc.stdout + proc.stderr

        rc, output = verify(f"{cfg.host('base')}.pem")
        assert rc == 0 and "OK" in output
        rc, output = verify(f"{cfg.host('expired')}.pem")
        assert rc != 0 and "certificate has expired" in output
        rc, output = verify(f"{cfg.host('selfsigned')}.pem")
        assert rc != 0 and "self-signed certificate" in output
        rc, output = verify(f"{cfg.host('revoked')}.pem", crl_check=True)
        assert rc != 0 and "certificate revoked" in output


# -- 6. TLS behavioral differential ---------------------------------------------------

_TLS_OUTCOMES = ("NotLoaded", "WarningHeeded", "WarningShownProceeded",
                 "NoWarningProceeded", "AskedUser")


def _tls_differential_registry() -> Registry:
    concern = frozenset({"NoWarningProceeded", "WarningShownProceeded"})
    return Registry(
        version=0,
        measurements=(
            Measurement("tls-expired", "protections", "mixed", _TLS_OUTCOMES, concern, None),
            Measurement("tls-selfsigned", "protections", "mixed", _TLS_OUTCOMES, concern, None),
        ),
        categories=("protections",),
        auto_decision_threshold_ms=500,
        cache_timing_threshold_ms=5.0,
        outdated_major_threshold=2,
        browser_majors={},
    )


def _obs(run: str, measurement: str, observed: Observed) -> ManualObservation:
    return ManualObservation(obs_id=f"o:{run}/{measurement}", run_id=run,
                             measurement_id=measurement, observed=observed)


def test_tls_behavioral_differential(harness):
    with criterion("tls behavioral differential", 30.0):
        strict = CorpusClient(harness.ca_path, verify=True)
        permissive = CorpusClient(harness.ca_path, verify=False)
        harness.add_run("run-strict", "tokstrict")
        harness.add_run("run-perm", "tokperm")

        # The strict client validates certificates: both realms refuse to load.
        refusals = {}
        for slot in ("expired", "selfsigned"):
            with pytest.raises(TlsRefused) as exc:
                strict.get(harness.url(slot, "", "tokstrict"))
            refusals[slot] = exc.value.reason
        assert "expired" in refusals["expired"]
        assert "self-signed" in refusals["selfsigned"]

        # The permissive client ignores certificate errors: content loads.
        for slot in ("expired", "selfsigned"):
            assert permissive.get(harness.url(slot, "", "tokperm")).status == 200

        pages = {"expired": "expired-direct", "selfsigned": "selfsigned-product"}
        registry = _tls_differential_registry()
        baseline = BaselineProfile("strict-baseline", {
            "tls-expired": "WarningHeeded", "tls-selfsigned": "WarningHeeded",
        })

        def verdicts_for(run_id: str, observed: Observed) -> dict[str, Verdict]:
            # A fully refusing client never produces a single server-side event.
            events = (
                harness.store.events(run_id)
                if harness.store.run_dir(run_id).exists()
                else []
            )
            out = {}
            for slot, page in pages.items():
                mid = f"tls-{slot}"
                slice_ = [e for e in events if e.page_id == page]
                outcome, evidence, detail = classify_tls(
                    slice_, _obs(run_id, mid, observed)
                )
                out[mid] = Verdict(mid, {SCALAR_KEY: outcome}, evidence, detail=detail)
            return out

        strict_verdicts = verdicts_for("run-strict", Observed.WARNING_SHOWN)
        permissive_verdicts = verdicts_for("run-perm", Observed.NO_WARNING)

        assert {v.outcome for v in strict_verdicts.values()} == {"WarningHeeded"}
        assert {v.outcome for v in permissive_verdicts.values()} == {"NoWarningProceeded"}

        strict_matrix = aggregate_matrix(strict_verdicts, baseline, registry)
        permissive_matrix = aggregate_matrix(permissive_verdicts, baseline, registry)
        assert strict_matrix.total == 0
        assert permissive_matrix.total == 2
        assert permissive_matrix.total - strict_matrix.total == 2


# -- 7. Gate secrecy crawl ---------------------------------------------------------

_URL_ATTR_RE = re.compile(r'(?:href|src|data-fetch-url|data-probe-img)="([^"]+)"')


def test_gate_secrecy_crawl(harness):
    with criterion("gate secrecy crawl", 10.0):
        client = CorpusClient(harness.ca_path, verify=False)
        harness.add_run("run-secrecy", "toksecrecy")
        gated_price = harness.config.prices.gated.encode()

        active_variants = [
            v for v in CATALOG.values() if v.gate_mode is GateMode.PII_GATE_ACTIVE
        ]
        assert active_variants, "corpus must define active gates"

        realm_hosts = {r.hostname for r in harness.config.realms}
        queue = [f"{harness.cfg.origin('base')}/r/toksecrecy/m/{v.variant_id}/" for v in active_variants]
        queue += [harness.url("experimental", v.path, "toksecrecy") for v in active_variants]
        seen: set[str] = set()
        offenders = []
        fetched_pages = 0
        while queue:
            url = queue.pop()
            if url in seen:
                continue
            seen.add(url)
            resp = client.get(url)
            fetched_pages += 1
            if gated_price in resp.body:
                offenders.append(url)
            if resp.headers.get("Content-Type", "").startswith("text/html"):
                for link in _URL_ATTR_RE.findall(resp.text):
                    absolute = urljoin(url, link)
                    if urlsplit(absolute).hostname in realm_hosts:
                        queue.append(absolute)
        assert fetched_pages >= len(active_variants) * 2
        assert not offenders, f"gated price served pre-reveal at: {offenders}"

        # Sanity: the price does exist behind the gate.
        reveal = client.post_json(
            f"{harness.cfg.origin('experimental')}/gate/reveal",
            {"token": "toksecrecy", "variant_id": active_variants[0].variant_id,
             "proof": {"kind": "form",
                       "fields": {f: "x" for f in active_variants[0].pii_fields}}},
        )
        assert harness.config.prices.gated in reveal.json()["html"]


# -- 8. Report round-trip ------------------------------------------------------------


def test_report_round_trip(tmp_path):
    with criterion("report round-trip", 5.0):
        orch = Orchestrator(tmp_path)
        run_id = fixtures.install_fixture(orch, fixtures.fixtures_root() / "director")
        orch.score_run(run_id, "stock-chrome")

        source = orch.render_report(run_id, "json")
        md = orch.render_report(run_id, "md")
        csv_text = orch.render_report(run_id, "csv")

        assert reports.canonical_dumps(reports.from_markdown(md)) == source
        assert reports.canonical_dumps(reports.from_csv(csv_text)) == source
        assert reports.csv_measurement_rows(csv_text) == len(orch.registry)
