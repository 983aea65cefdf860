"""The multi-realm corpus server.

One plain-HTTP listener and one HTTPS listener serve every configured realm;
the HTTPS side picks each hostname's certificate via SNI so misconfigured
profiles (expired, self-signed, revoked) are presented exactly as deployed.
Every request is logged as an HttpMetadata event attributed through the run
token embedded in the path; requests that cannot be attributed land in the
quarantine log instead of being guessed at.
"""

from __future__ import annotations

import base64
import dataclasses
import json
import re
import ssl
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from importlib import resources
from pathlib import Path
from typing import Callable
from urllib.parse import parse_qs, urlsplit

from .gates import GateMismatchError, GateStore, RevealedBy, validate_proof
from .pages import (
    NEUTRAL_ERROR,
    PageContext,
    mixed_nonce,
    render_https_only_notice,
    render_partition_frame,
    render_storage_access_frame,
    render_variant,
    reveal_fragment,
)
from .realms import DeploymentConfig, SiteRealm, TlsProfile
from .telemetry import EventKind, TelemetryCollector
from .variants import CATALOG, DECISION_TARGETS, PageVariant, route_table

TRACKER_CATEGORIES = {
    "ads": "contextual",
    "analytics": "analytics",
    "banner": "banner",
    "errmon": "errmon",
}

_TINY_PNG = base64.b64decode(
    "iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJAAAADUlEQVR42mP8z8BQDwAEhQGAhKmMIQAAAABJRU5ErkJggg=="
)
_TINY_WAV = b"RIFF$\x00\x00\x00WAVEfmt \x10\x00\x00\x00\x01\x00\x01\x00@\x1f\x00\x00@\x1f\x00\x00\x01\x00\x08\x00data\x00\x00\x00\x00"

_CONTENT_TYPES = {
    "js": "text/javascript",
    "css": "text/css",
    "html": "text/html; charset=utf-8",
    "png": "image/png",
    "wav": "audio/wav",
    "json": "application/json",
    "pem": "application/x-pem-file",
    "crl": "application/pkix-crl",
}


class UnknownHostError(Exception):
    pass


class RouteNotFoundError(Exception):
    pass


@dataclass(frozen=True)
class TokenInfo:
    run_id: str
    token: str
    group_id: str = ""
    channel: str = "control"


@dataclass(frozen=True)
class Route:
    kind: str
    realm: SiteRealm
    token: str | None = None
    variant: PageVariant | None = None
    params: dict = field(default_factory=dict)


def resolve_route(config: DeploymentConfig, host: str, path: str, query: str = "") -> Route:
    """Map (host, path) to a corpus route. Token validity is judged separately
    so unknown tokens can be answered with the neutral error page and logged."""
    realm = config.realm_for_host(host)
    if realm is None:
        raise UnknownHostError(host)
    params = {k: v[0] for k, v in parse_qs(query).items()}

    clean = path.strip("/")
    if clean.startswith("pki/"):
        return Route("pki", realm, params={"file": clean.split("/", 1)[1]})
    if clean.startswith("pv/"):
        parts = clean.split("/")
        if len(parts) == 3 and parts[2] in ("visit", "never"):
            return Route(parts[2], realm, params={"group": parts[1]})
        raise RouteNotFoundError(path)
    if clean.startswith("pimg/"):
        parts = clean.split("/")
        if len(parts) == 3:
            return Route("probe_img", realm, params={"group": parts[1], "name": parts[2]})
        raise RouteNotFoundError(path)

    if not clean.startswith("r/"):
        raise RouteNotFoundError(path)
    parts = clean.split("/", 2)
    token = parts[1] if len(parts) > 1 and parts[1] else None
    if token is None:
        raise RouteNotFoundError(path)
    rest = parts[2] if len(parts) > 2 else ""

    if rest.startswith("static/"):
        return Route("static", realm, token, params={"file": rest.split("/", 1)[1]})
    if rest.startswith("mx/"):
        bits = rest.split("/")
        if realm.slot == "plain" and len(bits) == 3:
            return Route("mixed_asset", realm, token, params={"kind": bits[1], "name": bits[2]})
        raise RouteNotFoundError(path)
    first = rest.split("/", 1)[0]
    if realm.slot == "tracker" and first in TRACKER_CATEGORIES:
        return Route(
            "tracker_asset", realm, token,
            params={"category": TRACKER_CATEGORIES[first], "resource": rest},
        )
    if rest.startswith("embed/"):
        name = rest.split("/", 1)[1]
        if realm.slot == "tracker" and name == "part":
            return Route("partition_frame", realm, token, params={"top": params.get("top", "a")})
        if realm.slot == "tracker" and name in ("sa-frame", "sa-frame-forced"):
            return Route("sa_frame", realm, token, params={"forced": name.endswith("forced")})
        raise RouteNotFoundError(path)
    if rest.startswith("m/") and realm.slot == "base":
        target = rest.split("/")[1]
        if target in DECISION_TARGETS:
            return Route("page", realm, token, CATALOG["base"], params={"base_target": target})
        raise RouteNotFoundError(path)

    variant = route_table().get((realm.slot, rest.strip("/")))
    if variant is None:
        raise RouteNotFoundError(path)
    return Route("page", realm, token, variant, params=params)


class CorpusServer:
    def __init__(
        self,
        config: DeploymentConfig,
        *,
        data_dir: str | Path,
        collector: TelemetryCollector,
        gates: GateStore,
        token_resolver: Callable[[str], TokenInfo | None],
        group_resolver: Callable[[str], TokenInfo | None] | None = None,
        certs_dir: str | Path | None = None,
        static_dir: str | Path | None = None,
        bind_host: str = "127.0.0.1",
    ):
        self.config = config
        self.data_dir = Path(data_dir)
        self.collector = collector
        self.gates = gates
        self.token_resolver = token_resolver
        self.group_resolver = group_resolver or (lambda group: None)
        self.certs_dir = Path(certs_dir) if certs_dir else self.data_dir / config.certs_dir
        if static_dir:
            self.static_dir = Path(static_dir)
        elif config.static_dir:
            self.static_dir = Path(config.static_dir)
        else:
            self.static_dir = Path(str(resources.files("privacyharness").joinpath("static")))
        self.bind_host = bind_host
        self._http: ThreadingHTTPServer | None = None
        self._https: ThreadingHTTPServer | None = None
        self._threads: list[threading.Thread] = []

    # -- lifecycle ------------------------------------------------------------

    def start(self) -> None:
        handler = _make_handler(self)
        self._http = _Server((self.bind_host, self.config.http_port), handler, harness=self, scheme="http")
        self._https = _Server((self.bind_host, self.config.https_port), handler, harness=self, scheme="https")
        self._https.socket = self._ssl_context().wrap_socket(self._https.socket, server_side=True)
        for server in (self._http, self._https):
            thread = threading.Thread(target=server.serve_forever, daemon=True)
            thread.start()
            self._threads.append(thread)

    def stop(self) -> None:
        for server in (self._http, self._https):
            if server is not None:
                server.shutdown()
                server.server_close()

    @property
    def http_port(self) -> int:
        assert self._http is not None
        return self._http.server_address[1]

    @property
    def https_port(self) -> int:
        assert self._https is not None
        return self._https.server_address[1]

    def advertised_config(self) -> DeploymentConfig:
        """Config with advertised ports pinned to the bound sockets, for URL building."""
        cfg = self.config
        return dataclasses.replace(
            cfg,
            http_port=self.http_port,
            https_port=self.https_port,
            advertised_http_port=cfg.advertised_http_port or self.http_port,
            advertised_https_port=cfg.advertised_https_port or self.https_port,
        )

    def _ssl_context(self) -> ssl.SSLContext:
        contexts: dict[str, ssl.SSLContext] = {}
        default_ctx: ssl.SSLContext | None = None
        for realm in self.config.realms:
            cert = Path(realm.cert_path) if realm.cert_path else self.certs_dir / f"{realm.hostname}.pem"
            key = Path(realm.key_path) if realm.key_path else self.certs_dir / f"{realm.hostname}.key"
            if not cert.exists():
                continue
            ctx = ssl.SSLContext(ssl.PROTOCOL_TLS_SERVER)
            ctx.load_cert_chain(cert, key)
            contexts[realm.hostname.casefold()] = ctx
            if realm.slot == "base":
                default_ctx = ctx
        if not contexts:
            raise FileNotFoundError(
                f"no certificates found under {self.certs_dir}; run the forge subcommand first"
            )
        base = default_ctx or next(iter(contexts.values()))

        def sni_callback(sock, server_name, _ctx):
            if server_name:
                chosen = contexts.get(server_name.casefold())
                if chosen is not None:
                    sock.context = chosen
            return None

        base.sni_callback = sni_callback
        return base

    # -- telemetry ------------------------------------------------------------

    def record_request_metadata(
        self,
        *,
        info: TokenInfo | None,
        realm: SiteRealm,
        scheme: str,
        method: str,
        path: str,
        headers,
        variant: PageVariant | None,
        resource_type: str,
        raw_token: str | None,
    ) -> None:
        """Best-effort capture of the raw HTTP layer; never blocks serving."""
        payload = {
            "method": method,
            "host": realm.hostname,
            "path": path,
            "scheme": scheme,
            "resource_type": resource_type,
            "realm_role": realm.role.value,
            "tls_profile": realm.tls_profile.value,
            "ua": headers.get("User-Agent", ""),
            "referer": headers.get("Referer", ""),
            "opt_out": {
                "dnt": headers.get("DNT") == "1",
                "gpc": headers.get("Sec-GPC") == "1",
            },
        }
        match = re.search(r"(?:Chromium|Chrome|Firefox)/(\d+)", payload["ua"])
        if match:
            payload["ua_major"] = int(match.group(1))
        try:
            if info is None:
                self.collector.store.quarantine(
                    {"kind": "HttpMetadata", "payload": payload, "run_token": raw_token or ""},
                    reason="unattributed_request",
                )
                return
            self.collector.record_server_event(
                info.run_id,
                run_token=info.token,
                measurement_id=(variant.measurement_id or "") if variant else "",
                page_id=variant.variant_id if variant else path,
                kind=EventKind.HTTP_METADATA,
                payload=payload,
            )
        except Exception:
            pass


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, addr, handler, *, harness: CorpusServer, scheme: str):
        super().__init__(addr, handler)
        self.harness = harness
        self.scheme = scheme

    def handle_error(self, request, client_address):
        # TLS handshake failures from strict clients are expected traffic.
        pass


def _make_handler(harness: CorpusServer):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"
        server_version = "corpus"

        def log_message(self, *args):
            pass

        # -- plumbing -----------------------------------------------------

        def _send(self, status: int, body: bytes, content_type: str = "text/html; charset=utf-8",
                  headers: dict | None = None) -> None:
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            for key, value in (headers or {}).items():
                self.send_header(key, value)
            self.end_headers()
            if self.command != "HEAD":
                self.wfile.write(body)

        def _neutral(self, status: int = 404) -> None:
            self._send(status, NEUTRAL_ERROR.encode())

        def _json(self, status: int, doc: dict) -> None:
            self._send(status, json.dumps(doc).encode(), "application/json")

        @property
        def scheme(self) -> str:
            return self.server.scheme  # type: ignore[attr-defined]

        def _host(self) -> str:
            host = self.headers.get("Host", "")
            return host.split(":")[0].casefold()

        def _page_context(self, info: TokenInfo, route: Route) -> PageContext:
            return PageContext(
                config=harness.advertised_config(),
                token=info.token,
                group_id=info.group_id or info.run_id,
                base_target=route.params.get("base_target", "exp-plain"),
                visited_param=route.params.get("visited") == "1",
            )

        # -- verbs --------------------------------------------------------

        def do_GET(self):
            self._handle("GET")

        def do_HEAD(self):
            self._handle("GET")

        def do_POST(self):
            self._handle("POST")

        def _handle(self, method: str) -> None:
            try:
                self._route(method)
            except BrokenPipeError:
                pass
            except Exception:
                try:
                    self._neutral(500)
                except Exception:
                    pass

        def _read_json(self) -> dict | None:
            length = int(self.headers.get("Content-Length") or 0)
            if length <= 0 or length > 1 << 20:
                return None
            try:
                return json.loads(self.rfile.read(length))
            except (json.JSONDecodeError, UnicodeDecodeError):
                return None

        def _route(self, method: str) -> None:
            split = urlsplit(self.path)
            host = self._host()
            realm = harness.config.realm_for_host(host)

            if method == "POST" and split.path == "/beacon":
                self._handle_beacon()
                return
            if method == "POST" and split.path == "/gate/reveal":
                self._handle_reveal(realm)
                return

            if realm is None:
                harness.collector.store.quarantine(
                    {"host": host, "path": split.path}, reason="unknown_host"
                )
                self._neutral(404)
                return

            try:
                route = resolve_route(harness.config, host, split.path, split.query)
            except RouteNotFoundError:
                self._record(None, realm, split.path, None, "other", None)
                self._neutral(404)
                return

            if route.kind in ("pki", "visit", "never", "probe_img"):
                self._handle_groupkeyed(route, split.path)
                return

            info = harness.token_resolver(route.token) if route.token else None
            resource_type = {
                "page": "document",
                "partition_frame": "document",
                "sa_frame": "document",
                "static": "asset",
                "mixed_asset": "subresource",
                "tracker_asset": "subresource",
            }.get(route.kind, "other")
            self._record(info, realm, split.path, route.variant, resource_type, route.token)

            if info is None:
                self._neutral(404)
                return

            if route.kind == "static":
                self._serve_static(route.params["file"])
                return
            if route.kind == "mixed_asset":
                self._serve_mixed_asset(info, route)
                return
            if route.kind == "tracker_asset":
                self._serve_tracker_asset(info, route)
                return
            if route.kind == "partition_frame":
                ctx = self._page_context(info, route)
                self._send(200, render_partition_frame(ctx, route.params["top"]).encode())
                return
            if route.kind == "sa_frame":
                ctx = self._page_context(info, route)
                self._send(200, render_storage_access_frame(ctx, route.params["forced"]).encode())
                return

            # Page routes. HTTPS-only realms answer plain HTTP with a notice.
            assert route.variant is not None
            ctx = self._page_context(info, route)
            if route.realm.https_only and self.scheme == "http":
                self._send(426, render_https_only_notice(ctx).encode())
                return
            self._send(200, render_variant(ctx, route.variant).encode())

        def _record(self, info, realm, path, variant, resource_type, raw_token) -> None:
            harness.record_request_metadata(
                info=info,
                realm=realm,
                scheme=self.scheme,
                method=self.command,
                path=path,
                headers=self.headers,
                variant=variant,
                resource_type=resource_type,
                raw_token=raw_token,
            )

        # -- endpoint handlers ---------------------------------------------

        def _handle_beacon(self) -> None:
            from .telemetry import SchemaViolationError, UnknownTokenError

            raw = self._read_json()
            if raw is None:
                self._json(400, {"error": "body must be a JSON object"})
                return
            try:
                event = harness.collector.ingest_beacon(raw)
            except SchemaViolationError as exc:
                self._json(400, {"error": str(exc)})
                return
            except UnknownTokenError:
                self._json(202, {"status": "quarantined"})
                return
            self._json(200, {"status": "stored" if event else "duplicate"})

        def _handle_reveal(self, realm) -> None:
            raw = self._read_json()
            if raw is None:
                self._json(400, {"error": "body must be a JSON object"})
                return
            token = raw.get("token", "")
            variant_id = raw.get("variant_id", "")
            proof = raw.get("proof") or {}
            info = harness.token_resolver(token)
            if info is None:
                harness.collector.store.quarantine(raw, reason="unknown_token")
                self._json(403, {"error": "unknown token"})
                return
            variant = CATALOG.get(variant_id)
            if variant is None:
                self._json(404, {"error": "unknown variant"})
                return
            try:
                revealed_by = validate_proof(variant, proof)
            except GateMismatchError as exc:
                self._json(409, {"error": str(exc)})
                return

            if revealed_by is RevealedBy.FORM_SUBMISSION:
                harness.collector.record_server_event(
                    info.run_id,
                    run_token=info.token,
                    measurement_id=variant.measurement_id or "",
                    page_id=variant.variant_id,
                    kind=EventKind.FORM_SUBMISSION,
                    payload={
                        "fields": proof.get("fields", {}),
                        "info_type": variant.info_type or "",
                        "active": variant.gate_mode.value == "pii_gate_active",
                    },
                )
            state, first_time = harness.gates.reveal(info.run_id, variant.variant_id, revealed_by)
            if first_time:
                harness.collector.record_server_event(
                    info.run_id,
                    run_token=info.token,
                    measurement_id=variant.measurement_id or "",
                    page_id=variant.variant_id,
                    kind=EventKind.GATE_REVEALED,
                    payload={"revealed_by": revealed_by.value},
                )
            fragment = reveal_fragment(harness.config, variant)
            self._json(200, {**fragment, "revealed_by": state.revealed_by.value,
                             "already_revealed": not first_time})

        def _handle_groupkeyed(self, route: Route, path: str) -> None:
            if route.kind == "pki":
                name = route.params["file"]
                target = harness.certs_dir / name
                if name in ("ca.pem", "harness.crl") and target.exists():
                    ext = name.rsplit(".", 1)[1]
                    self._send(200, target.read_bytes(), _CONTENT_TYPES[ext])
                else:
                    self._neutral(404)
                return

            group = route.params["group"]
            info = harness.group_resolver(group)
            if route.kind == "probe_img":
                if info is not None:
                    harness.record_request_metadata(
                        info=info, realm=route.realm, scheme=self.scheme, method=self.command,
                        path=path, headers=self.headers, variant=CATALOG["profile-state"],
                        resource_type="probe_img", raw_token=None,
                    )
                self._send(
                    200, _TINY_PNG, "image/png",
                    headers={"Cache-Control": "public, max-age=604800, immutable"},
                )
                return
            if route.kind == "never":
                self._send(200, b"<!doctype html><title>partner</title><p>partner page</p>",
                           headers={"Cache-Control": "no-store"})
                return
            # visit: bounce back to the profile page with the marker set.
            if info is None:
                self._neutral(404)
                return
            harness.record_request_metadata(
                info=info, realm=route.realm, scheme=self.scheme, method=self.command,
                path=path, headers=self.headers, variant=CATALOG["profile-state"],
                resource_type="document", raw_token=None,
            )
            cfg = harness.advertised_config()
            location = f"{cfg.origin('base')}/r/{info.token}/profile?visited=1"
            self._send(302, b"", headers={"Location": location, "Cache-Control": "no-store"})

        def _serve_static(self, name: str) -> None:
            if "/" in name or name.startswith("."):
                self._neutral(404)
                return
            path = harness.static_dir / name
            if not path.is_file():
                self._neutral(404)
                return
            ext = name.rsplit(".", 1)[-1]
            self._send(200, path.read_bytes(), _CONTENT_TYPES.get(ext, "application/octet-stream"),
                       headers={"Cache-Control": "no-store"})

        def _serve_mixed_asset(self, info: TokenInfo, route: Route) -> None:
            kind = route.params["kind"]
            name = route.params["name"]
            stem, _, ext = name.rpartition(".")
            if stem != mixed_nonce(info.token, kind):
                self._neutral(404)
                return
            harness.collector.record_server_event(
                info.run_id,
                run_token=info.token,
                measurement_id="mixed-content",
                page_id="mixed-page",
                kind=EventKind.SUBRESOURCE_OUTCOME,
                payload={"subresource_kind": kind, "scheme": self.scheme},
            )
            bodies = {
                "png": (_TINY_PNG, "image/png"),
                "js": (b"/* mixed-content probe */", "text/javascript"),
                "css": (b"/* mixed-content probe */", "text/css"),
                "html": (b"<!doctype html><title>frame</title>", "text/html; charset=utf-8"),
                "wav": (_TINY_WAV, "audio/wav"),
                "json": (b'{"probe": true}', "application/json"),
            }
            body, ctype = bodies.get(ext, (b"", "application/octet-stream"))
            self._send(200, body, ctype, headers={"Cache-Control": "no-store"})

        def _serve_tracker_asset(self, info: TokenInfo, route: Route) -> None:
            harness.collector.record_server_event(
                info.run_id,
                run_token=info.token,
                measurement_id="content-filtering",
                page_id="filtering-page",
                kind=EventKind.TRACKER_HIT,
                payload={"category": route.params["category"], "resource": route.params["resource"]},
            )
            if route.params["resource"].endswith(".png"):
                self._send(200, _TINY_PNG, "image/png", headers={"Cache-Control": "no-store"})
            else:
                self._send(200, b"/* tracking stub */", "text/javascript",
                           headers={"Cache-Control": "no-store"})

    return Handler
