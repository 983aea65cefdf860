from __future__ import annotations

import re
import threading
from urllib.parse import urljoin, urlsplit

import pytest
from corpusclient import CorpusClient, TlsRefused

from privacyharness.gates import RevealedBy
from privacyharness.server import Route, RouteNotFoundError, UnknownHostError, resolve_route
from privacyharness.telemetry import EventKind
from privacyharness.variants import DECISION_TARGETS

URL_ATTR_RE = re.compile(r'(?:href|src|data-fetch-url|data-probe-img)="([^"]+)"')


class TestResolveRoute:
    def test_base_listing(self, harness):
        route = resolve_route(harness.config, harness.config.host("base"), "/r/tok1/")
        assert route.kind == "page"
        assert route.variant.variant_id == "base"
        assert route.token == "tok1"

    def test_control_product(self, harness):
        route = resolve_route(harness.config, harness.config.host("control"), "/r/tok1/sneakers")
        assert route.variant.variant_id == "control-product"

    def test_unknown_host(self, harness):
        with pytest.raises(UnknownHostError):
            resolve_route(harness.config, "unconfigured.test", "/r/tok1/")

    def test_unknown_path(self, harness):
        with pytest.raises(RouteNotFoundError):
            resolve_route(harness.config, harness.config.host("base"), "/r/tok1/nope")

    def test_measurement_scoped_listing(self, harness):
        route = resolve_route(harness.config, harness.config.host("base"), "/r/tok1/m/banner-forced/")
        assert route.variant.variant_id == "base"
        assert route.params["base_target"] == "banner-forced"

    def test_tracker_category_from_path(self, harness):
        route = resolve_route(
            harness.config, harness.config.host("tracker"), "/r/tok1/analytics/collect-0.js"
        )
        assert route.kind == "tracker_asset"
        assert route.params["category"] == "analytics"

    def test_partition_frame_top_param(self, harness):
        route = resolve_route(
            harness.config, harness.config.host("tracker"), "/r/tok1/embed/part", "top=b"
        )
        assert route.kind == "partition_frame"
        assert route.params["top"] == "b"


@pytest.fixture(scope="module")
def client(harness):
    return CorpusClient(harness.ca_path, verify=False)


@pytest.fixture(scope="module")
def strict_client(harness):
    return CorpusClient(harness.ca_path, verify=True)


class TestServing:
    def test_base_page_links_to_both_products(self, harness, client):
        harness.add_run("run-base", "tokbase")
        resp = client.get(harness.url("base", "", "tokbase"))
        assert resp.status == 200
        assert harness.config.host("control") in resp.text
        assert harness.config.host("experimental") in resp.text
        assert f"/r/tokbase/sneakers" in resp.text

    def test_listing_targets_selected_variant(self, harness, client):
        harness.add_run("run-tgt", "toktgt")
        resp = client.get(f"{harness.cfg.origin('base')}/r/toktgt/m/banner-forced/")
        assert "/r/toktgt/banner/forced" in resp.text

    def test_control_page_shows_control_price(self, harness, client):
        harness.add_run("run-ctl", "tokctl")
        resp = client.get(harness.url("control", "sneakers", "tokctl"))
        assert resp.status == 200
        assert harness.config.prices.control in resp.text

    def test_unknown_token_neutral_and_quarantined(self, harness, client):
        before = harness.store.quarantine_count()
        resp = client.get(harness.url("base", "", "bogus-token"))
        assert resp.status == 404
        assert "no longer active" in resp.text
        assert harness.store.quarantine_count() > before

    def test_unknown_host_neutral(self, harness, client):
        url = f"https://{harness.config.host('base')}:{harness.cfg.https_port}/r/x/"
        resp = client.get(url, headers={"Host": "unconfigured.test"})
        assert resp.status == 404

    def test_forced_banner_page_gates_content(self, harness, client):
        harness.add_run("run-bf", "tokbf")
        resp = client.get(harness.url("experimental", "banner/forced", "tokbf"))
        assert "please accept or reject cookies to continue." in resp.text
        # Product price ships inside an inline template, readable from source.
        assert harness.config.prices.experimental in resp.text

    def test_forced_permission_page_copy(self, harness, client):
        harness.add_run("run-pf", "tokpf")
        resp = client.get(harness.url("experimental", "perm/notification-forced", "tokpf"))
        assert "please allow or deny notification to continue" in resp.text

    def test_storage_access_routes_through_gesture_page(self, harness, client):
        harness.add_run("run-sa", "toksa")
        resp = client.get(harness.url("experimental", "perm/storage-access", "toksa"))
        assert "/r/toksa/embed/sa-frame" in resp.text
        frame = client.get(f"{harness.cfg.origin('tracker')}/r/toksa/embed/sa-frame")
        assert "View Content" in frame.text
        forced = client.get(f"{harness.cfg.origin('tracker')}/r/toksa/embed/sa-frame-forced")
        assert "allow or deny the permission prompt to continue" in forced.text

    def test_https_only_realm_refuses_plain_http(self, harness, client):
        harness.add_run("run-up", "tokup")
        plain_url = f"{harness.cfg.origin('upgrade', scheme='http')}/r/tokup/"
        resp = client.get(plain_url)
        assert resp.status == 426
        assert "Secure connection required" in resp.text
        secure = client.get(harness.url("upgrade", "", "tokup"))
        assert secure.status == 200
        events = harness.store.events("run-up")
        schemes = {e.payload.get("scheme") for e in events if e.kind is EventKind.HTTP_METADATA}
        assert {"http", "https"} <= schemes


class TestRequestMetadata:
    def test_optout_header_echo(self, harness, client):
        harness.add_run("run-dnt", "tokdnt")
        client.get(harness.url("base", "", "tokdnt"), headers={"DNT": "1"})
        events = harness.store.events("run-dnt")
        meta = [e for e in events if e.kind is EventKind.HTTP_METADATA]
        assert meta[0].payload["opt_out"] == {"dnt": True, "gpc": False}

    def test_ua_major_extraction(self, harness, client):
        harness.add_run("run-ua", "tokua")
        ua = "Mozilla/5.0 (X11; Linux x86_64) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/124.0.0.0 Safari/537.36"
        client.get(harness.url("base", "", "tokua"), headers={"User-Agent": ua})
        meta = [e for e in harness.store.events("run-ua") if e.kind is EventKind.HTTP_METADATA]
        assert meta[0].payload["ua_major"] == 124

    def test_tracker_hit_category(self, harness, client):
        harness.add_run("run-trk", "toktrk")
        client.get(f"{harness.cfg.origin('tracker')}/r/toktrk/analytics/collect-0.js")
        hits = [e for e in harness.store.events("run-trk") if e.kind is EventKind.TRACKER_HIT]
        assert hits and hits[0].payload["category"] == "analytics"

    def test_tls_profile_recorded(self, harness, client):
        harness.add_run("run-tlsp", "toktlsp")
        client.get(harness.url("selfsigned", "", "toktlsp"))
        meta = [e for e in harness.store.events("run-tlsp") if e.kind is EventKind.HTTP_METADATA]
        assert meta[0].payload["tls_profile"] == "self_signed"


class TestMixedContentPage:
    def test_six_subresource_kinds_unique_per_run(self, harness, client):
        harness.add_run("run-mx1", "tokmx1")
        harness.add_run("run-mx2", "tokmx2")
        page1 = client.get(harness.url("experimental", "mixed", "tokmx1")).text
        page2 = client.get(harness.url("experimental", "mixed", "tokmx2")).text
        urls1 = [u for u in URL_ATTR_RE.findall(page1) if "/mx/" in u]
        urls2 = [u for u in URL_ATTR_RE.findall(page2) if "/mx/" in u]
        assert len(urls1) == 6
        assert all(u.startswith("http://") for u in urls1)
        assert set(urls1).isdisjoint(urls2)

    def test_subresource_scheme_logged(self, harness, client):
        harness.add_run("run-mx3", "tokmx3")
        page = client.get(harness.url("experimental", "mixed", "tokmx3")).text
        image_url = next(u for u in URL_ATTR_RE.findall(page) if "/mx/image/" in u)
        client.get(image_url)  # insecure fetch
        https_url = image_url.replace("http://", "https://").replace(
            f":{harness.cfg.http_port}", f":{harness.cfg.https_port}"
        )
        client.get(https_url)  # upgraded fetch completes against the valid leaf
        events = [
            e for e in harness.store.events("run-mx3")
            if e.kind is EventKind.SUBRESOURCE_OUTCOME
        ]
        schemes = {e.payload["scheme"] for e in events}
        assert schemes == {"http", "https"}

    def test_wrong_nonce_rejected(self, harness, client):
        harness.add_run("run-mx4", "tokmx4")
        url = f"{harness.cfg.origin('plain', scheme='http')}/r/tokmx4/mx/image/deadbeef00.png"
        assert client.get(url).status == 404


class TestGates:
    def test_banner_proof_reveals(self, harness, client):
        harness.add_run("run-g1", "tokg1")
        resp = client.post_json(
            f"{harness.cfg.origin('experimental')}/gate/reveal",
            {"token": "tokg1", "variant_id": "banner-forced",
             "proof": {"kind": "banner", "action": "accept_all"}},
        )
        assert resp.status == 200
        doc = resp.json()
        assert harness.config.prices.experimental in doc["html"]
        assert doc["revealed_by"] == "BannerAction"
        state = harness.gates.state("run-g1", "banner-forced")
        assert state.revealed and state.revealed_by is RevealedBy.BANNER_ACTION

    def test_form_proof_reveals_active_price(self, harness, client):
        harness.add_run("run-g2", "tokg2")
        resp = client.post_json(
            f"{harness.cfg.origin('experimental')}/gate/reveal",
            {"token": "tokg2", "variant_id": "pii-active-email",
             "proof": {"kind": "form", "fields": {"email": "agentic@browser.com"}}},
        )
        assert resp.status == 200
        assert harness.config.prices.gated in resp.json()["html"]
        events = harness.store.events("run-g2")
        kinds = {e.kind for e in events}
        assert EventKind.FORM_SUBMISSION in kinds and EventKind.GATE_REVEALED in kinds

    def test_wrong_proof_kind_mismatch(self, harness, client):
        harness.add_run("run-g3", "tokg3")
        resp = client.post_json(
            f"{harness.cfg.origin('experimental')}/gate/reveal",
            {"token": "tokg3", "variant_id": "pii-active-email",
             "proof": {"kind": "banner", "action": "accept_all"}},
        )
        assert resp.status == 409

    def test_active_gate_requires_fields(self, harness, client):
        harness.add_run("run-g4", "tokg4")
        resp = client.post_json(
            f"{harness.cfg.origin('experimental')}/gate/reveal",
            {"token": "tokg4", "variant_id": "pii-active-email",
             "proof": {"kind": "form", "fields": {"email": "  "}}},
        )
        assert resp.status == 409

    def test_reveal_idempotent(self, harness, client):
        harness.add_run("run-g5", "tokg5")
        body = {"token": "tokg5", "variant_id": "banner-forced",
                "proof": {"kind": "banner", "action": "deny_all"}}
        first = client.post_json(f"{harness.cfg.origin('experimental')}/gate/reveal", body)
        second = client.post_json(f"{harness.cfg.origin('experimental')}/gate/reveal", body)
        assert first.status == second.status == 200
        assert second.json()["already_revealed"] is True
        revealed = [
            e for e in harness.store.events("run-g5") if e.kind is EventKind.GATE_REVEALED
        ]
        assert len(revealed) == 1

    def test_gate_monotonic_under_concurrency(self, harness, client):
        harness.add_run("run-g6", "tokg6")
        body = {"token": "tokg6", "variant_id": "banner-forced",
                "proof": {"kind": "banner", "action": "accept_all"}}
        url = f"{harness.cfg.origin('experimental')}/gate/reveal"
        results = []

        def hit():
            results.append(client.post_json(url, body).status)

        threads = [threading.Thread(target=hit) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert results == [200] * 8
        revealed = [
            e for e in harness.store.events("run-g6") if e.kind is EventKind.GATE_REVEALED
        ]
        assert len(revealed) == 1


class TestBeaconEndpoint:
    def url(self, harness):
        return f"{harness.cfg.origin('experimental')}/beacon"

    def beacon(self, token, seq=0):
        return {"run_token": token, "measurement_id": "cookie-banners", "page_id": "banner-forced",
                "kind": "BannerShown", "payload": {}, "client_seq": seq}

    def test_stored_then_duplicate(self, harness, client):
        harness.add_run("run-b1", "tokb1")
        first = client.post_json(self.url(harness), self.beacon("tokb1"))
        second = client.post_json(self.url(harness), self.beacon("tokb1"))
        assert first.json()["status"] == "stored"
        assert second.json()["status"] == "duplicate"

    def test_schema_violation(self, harness, client):
        resp = client.post_json(self.url(harness), {"kind": "BannerShown"})
        assert resp.status == 400

    def test_unknown_token_quarantined(self, harness, client):
        resp = client.post_json(self.url(harness), self.beacon("tok-unknown"))
        assert resp.status == 202


class TestProfileFlow:
    def test_visit_redirects_back_with_marker(self, harness, client):
        harness.add_run("run-pf1", "tokpf1", group="grp-1")
        resp = client.get(f"{harness.cfg.origin('tracker')}/pv/grp-1/visit")
        assert resp.status == 302
        assert resp.headers["Location"].endswith("/r/tokpf1/profile?visited=1")

    def test_visit_link_is_group_stable_across_sessions(self, harness, client):
        harness.add_run("run-s1", "toks1", group="grp-2")
        page1 = client.get(harness.url("base", "profile", "toks1")).text
        harness.add_run("run-s2", "toks2", group="grp-2")
        page2 = client.get(harness.url("base", "profile", "toks2")).text
        link1 = next(u for u in URL_ATTR_RE.findall(page1) if "/pv/" in u)
        link2 = next(u for u in URL_ATTR_RE.findall(page2) if "/pv/" in u)
        assert link1 == link2
        redirect = client.get(link2)
        assert redirect.headers["Location"].endswith("/r/toks2/profile?visited=1")

    def test_probe_image_cacheable(self, harness, client):
        harness.add_run("run-pf2", "tokpf2", group="grp-3")
        resp = client.get(f"{harness.cfg.origin('tracker')}/pimg/grp-3/probe.png")
        assert resp.status == 200
        assert "immutable" in resp.headers.get("Cache-Control", "")


class TestTlsBehavior:
    def test_strict_client_rejects_misconfigured_realms(self, harness, strict_client):
        harness.add_run("run-tls1", "toktls1")
        with pytest.raises(TlsRefused, match="expired"):
            strict_client.get(harness.url("expired", "", "toktls1"))
        with pytest.raises(TlsRefused, match="self-signed"):
            strict_client.get(harness.url("selfsigned", "", "toktls1"))
        assert harness.store.event_count("run-tls1") == 0

    def test_strict_client_accepts_valid_realms(self, harness, strict_client):
        harness.add_run("run-tls2", "toktls2")
        resp = strict_client.get(harness.url("base", "", "toktls2"))
        assert resp.status == 200

    def test_permissive_client_fetches_everything(self, harness, client):
        harness.add_run("run-tls3", "toktls3")
        for slot in ("expired", "selfsigned", "revoked"):
            assert client.get(harness.url(slot, "", "toktls3")).status == 200
        pages = {e.page_id for e in harness.store.events("run-tls3")}
        assert {"expired-direct", "selfsigned-product", "revoked-direct"} <= pages


def crawl(harness, client, start_urls):
    realm_hosts = {r.hostname for r in harness.config.realms}
    seen: set[str] = set()
    responses = {}
    queue = list(start_urls)
    while queue:
        url = queue.pop()
        if url in seen:
            continue
        seen.add(url)
        resp = client.get(url)
        responses[url] = resp
        if resp.status in (301, 302):
            continue
        if resp.headers.get("Content-Type", "").startswith("text/html"):
            for link in URL_ATTR_RE.findall(resp.text):
                absolute = urljoin(url, link)
                if urlsplit(absolute).hostname in realm_hosts:
                    queue.append(absolute)
    return responses


GROUP_STABLE_PREFIXES = ("/pv/", "/pimg/")


@pytest.fixture(scope="module")
def crawled(harness, client):
    harness.add_run("run-crawl", "tokcrawl", group="grp-crawl")
    base = harness.cfg.origin("base")
    starts = [f"{base}/r/tokcrawl/"]
    starts += [f"{base}/r/tokcrawl/m/{target}/" for target in DECISION_TARGETS]
    for slot in ("expired", "revoked", "upgrade", "safebrowsing"):
        starts.append(harness.url(slot, "", "tokcrawl"))
    starts.append(harness.url("base", "profile", "tokcrawl"))
    starts.append(harness.url("control", "part/", "tokcrawl"))
    starts.append(harness.url("experimental", "mixed", "tokcrawl"))
    starts.append(harness.url("experimental", "filtering", "tokcrawl"))
    return crawl(harness, client, starts)


class TestCorpusInvariants:
    def test_everything_resolves(self, crawled):
        failures = {u: r.status for u, r in crawled.items() if r.status >= 400}
        assert not failures

    def test_token_propagation_totality(self, harness, crawled):
        realm_hosts = {r.hostname for r in harness.config.realms}
        missing = []
        for url, resp in crawled.items():
            if not resp.headers.get("Content-Type", "").startswith("text/html"):
                continue
            for link in URL_ATTR_RE.findall(resp.text):
                absolute = urljoin(url, link)
                split = urlsplit(absolute)
                if split.hostname not in realm_hosts:
                    continue
                if split.path.startswith(GROUP_STABLE_PREFIXES):
                    continue  # cross-session probes are group-keyed by design
                if "/r/tokcrawl/" not in absolute:
                    missing.append((url, absolute))
        assert not missing

    def test_gate_secrecy_pre_reveal(self, harness, crawled):
        gated = harness.config.prices.gated.encode()
        leaks = [url for url, resp in crawled.items() if gated in resp.body]
        assert not leaks

    def test_realm_isolation_no_cross_domain_cookies(self, crawled):
        offenders = {
            url: resp.headers["Set-Cookie"]
            for url, resp in crawled.items()
            if "Set-Cookie" in resp.headers
        }
        assert not offenders

    def test_gated_price_served_after_reveal(self, harness, client, crawled):
        resp = client.post_json(
            f"{harness.cfg.origin('experimental')}/gate/reveal",
            {"token": "tokcrawl", "variant_id": "pii-active-zip",
             "proof": {"kind": "form", "fields": {"zip": "53706"}}},
        )
        assert harness.config.prices.gated in resp.json()["html"]
