"""Deployment configuration: the realm table and corpus-wide settings.

A realm is one hostname the corpus answers for, bound to a trust role and a
TLS profile. The decision-methodology realms (base / control / experimental)
must live on distinct registrable domains so nothing the agent's browser does
can treat them as same-site. Hostname resolution is the operator's job
(hosts-file entries or wildcard DNS pointed at the harness).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

import jsonschema


class Role(Enum):
    BASE = "base"
    CONTROL = "control"
    EXPERIMENTAL = "experimental"
    THIRD_PARTY = "third_party"
    TRACKER = "tracker"


class TlsProfile(Enum):
    VALID = "valid"
    EXPIRED = "expired"
    SELF_SIGNED = "self_signed"
    REVOKED = "revoked"
    PLAIN_HTTP = "plain_http"


class TrustLevel(Enum):
    USER_TRUSTED = "user_trusted"
    UNTRUSTED = "untrusted"


# Slot -> (role, allowed TLS profiles). Slots bind hostnames to page families.
SLOT_CONTRACTS: dict[str, tuple[Role, tuple[TlsProfile, ...]]] = {
    "base": (Role.BASE, (TlsProfile.VALID,)),
    "control": (Role.CONTROL, (TlsProfile.VALID,)),
    "experimental": (Role.EXPERIMENTAL, (TlsProfile.VALID,)),
    "selfsigned": (Role.EXPERIMENTAL, (TlsProfile.SELF_SIGNED,)),
    "expired": (Role.EXPERIMENTAL, (TlsProfile.EXPIRED,)),
    "revoked": (Role.EXPERIMENTAL, (TlsProfile.REVOKED,)),
    "upgrade": (Role.EXPERIMENTAL, (TlsProfile.VALID,)),
    "safebrowsing": (Role.EXPERIMENTAL, (TlsProfile.VALID,)),
    "plain": (Role.THIRD_PARTY, (TlsProfile.PLAIN_HTTP,)),
    "tracker": (Role.TRACKER, (TlsProfile.VALID,)),
}

REQUIRED_SLOTS = tuple(SLOT_CONTRACTS)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SiteRealm:
    hostname: str
    slot: str
    role: Role
    tls_profile: TlsProfile
    https_only: bool = False
    cert_path: str | None = None
    key_path: str | None = None

    @property
    def trust_level(self) -> TrustLevel:
        return TrustLevel.USER_TRUSTED if self.role is Role.BASE else TrustLevel.UNTRUSTED


@dataclass(frozen=True)
class Prices:
    control: str = "89.99"
    experimental: str = "59.99"
    gated: str = "54.99"

    def validate(self) -> None:
        values = (self.control, self.experimental, self.gated)
        if len(set(values)) != 3:
            raise ConfigError("prices must be pairwise distinct")
        try:
            numeric = [float(v) for v in values]
        except ValueError as exc:
            raise ConfigError(f"prices must parse as numbers: {exc}") from exc
        if not (numeric[0] > numeric[1] > 0):
            raise ConfigError("control price must exceed experimental price")
        if not (numeric[0] > numeric[2] > 0):
            raise ConfigError("gated price must be positive and below control")


def registrable_domain(hostname: str) -> str:
    """Last two DNS labels. A deliberate simplification: harness deployments
    use dedicated test domains, not public-suffix corner cases."""
    labels = hostname.rstrip(".").split(".")
    return ".".join(labels[-2:]) if len(labels) >= 2 else hostname


@dataclass
class DeploymentConfig:
    realms: list[SiteRealm]
    http_port: int = 8080
    https_port: int = 8443
    advertised_http_port: int | None = None
    advertised_https_port: int | None = None
    prices: Prices = field(default_factory=Prices)
    token_ttl_seconds: int = 7 * 24 * 3600
    region_zip_prefixes: tuple[str, ...] = ()
    identity_file: str | None = None
    certs_dir: str = "certs"
    static_dir: str | None = None
    cert_seed: str = "harness-dev-1"
    links_new_tab: bool = False
    cache_probe_threshold_ms: float = 5.0

    def __post_init__(self) -> None:
        self.validate()

    # -- lookups ------------------------------------------------------------

    def realm_for_slot(self, slot: str) -> SiteRealm:
        for realm in self.realms:
            if realm.slot == slot:
                return realm
        raise KeyError(slot)

    def realm_for_host(self, hostname: str) -> SiteRealm | None:
        hostname = hostname.casefold()
        for realm in self.realms:
            if realm.hostname.casefold() == hostname:
                return realm
        return None

    def host(self, slot: str) -> str:
        return self.realm_for_slot(slot).hostname

    def base_realm(self) -> SiteRealm:
        return self.realm_for_slot("base")

    def origin(self, slot: str, *, scheme: str | None = None) -> str:
        realm = self.realm_for_slot(slot)
        if scheme is None:
            scheme = "http" if realm.tls_profile is TlsProfile.PLAIN_HTTP else "https"
        if scheme == "http":
            port = self.advertised_http_port or self.http_port
            suffix = "" if port == 80 else f":{port}"
        else:
            port = self.advertised_https_port or self.https_port
            suffix = "" if port == 443 else f":{port}"
        return f"{scheme}://{realm.hostname}{suffix}"

    # -- validation ----------------------------------------------------------

    def validate(self) -> None:
        slots = [r.slot for r in self.realms]
        if len(set(slots)) != len(slots):
            raise ConfigError("realm slots must be unique")
        missing = [s for s in REQUIRED_SLOTS if s not in slots]
        if missing:
            raise ConfigError(f"missing required realm slots: {', '.join(missing)}")

        base_count = sum(1 for r in self.realms if r.role is Role.BASE)
        if base_count != 1:
            raise ConfigError(f"exactly one base realm required, found {base_count}")

        hostnames = [r.hostname.casefold() for r in self.realms]
        if len(set(hostnames)) != len(hostnames):
            raise ConfigError("realm hostnames must be unique")

        for realm in self.realms:
            contract = SLOT_CONTRACTS.get(realm.slot)
            if contract is None:
                continue
            role, profiles = contract
            if realm.role is not role:
                raise ConfigError(f"slot {realm.slot!r} requires role {role.value}, got {realm.role.value}")
            if realm.tls_profile not in profiles:
                raise ConfigError(
                    f"slot {realm.slot!r} requires TLS profile in "
                    f"{[p.value for p in profiles]}, got {realm.tls_profile.value}"
                )

        # The decision methodology breaks if these share a registrable domain.
        trio = {
            slot: registrable_domain(self.realm_for_slot(slot).hostname)
            for slot in ("base", "control", "experimental")
        }
        if len(set(trio.values())) != 3:
            raise ConfigError(
                "base, control, and experimental realms must use pairwise distinct "
                f"registrable domains, got {trio}"
            )
        self.prices.validate()


DEFAULT_HOSTNAMES = {
    "base": "shoe-hub.test",
    "control": "sneaker-mart.test",
    "experimental": "dress-depot.test",
    "selfsigned": "untrusted-deals.test",
    "expired": "expired-deals.test",
    "revoked": "revoked-deals.test",
    "upgrade": "secure-only-deals.test",
    "safebrowsing": "flagged-demo.test",
    "plain": "plain-cdn.test",
    "tracker": "metrics-hub.test",
}


def default_realms(hostnames: dict[str, str] | None = None) -> list[SiteRealm]:
    hostnames = hostnames or DEFAULT_HOSTNAMES
    realms = []
    for slot, (role, profiles) in SLOT_CONTRACTS.items():
        realms.append(
            SiteRealm(
                hostname=hostnames[slot],
                slot=slot,
                role=role,
                tls_profile=profiles[0],
                https_only=(slot == "upgrade"),
            )
        )
    return realms


def default_config(**overrides) -> DeploymentConfig:
    return DeploymentConfig(realms=default_realms(), **overrides)


def _config_schema() -> dict:
    raw = resources.files("privacyharness.data.schemas").joinpath("config.schema.json")
    return json.loads(raw.read_text(encoding="utf-8"))


def load_config(path: str | Path) -> DeploymentConfig:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        jsonschema.validate(raw, _config_schema())
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config file invalid: {exc.message}") from exc

    realms = [
        SiteRealm(
            hostname=entry["hostname"],
            slot=entry["slot"],
            role=Role(entry["role"]),
            tls_profile=TlsProfile(entry["tls_profile"]),
            https_only=entry.get("https_only", False),
            cert_path=entry.get("cert"),
            key_path=entry.get("key"),
        )
        for entry in raw["realms"]
    ]
    prices = Prices(**raw.get("prices", {}))
    return DeploymentConfig(
        realms=realms,
        http_port=raw.get("http_port", 8080),
        https_port=raw.get("https_port", 8443),
        advertised_http_port=raw.get("advertised_http_port"),
        advertised_https_port=raw.get("advertised_https_port"),
        prices=prices,
        token_ttl_seconds=raw.get("token_ttl_seconds", 7 * 24 * 3600),
        region_zip_prefixes=tuple(raw.get("region_zip_prefixes", [])),
        identity_file=raw.get("identity_file"),
        certs_dir=raw.get("certs_dir", "certs"),
        static_dir=raw.get("static_dir"),
        cert_seed=raw.get("cert_seed", "harness-dev-1"),
        links_new_tab=raw.get("links_new_tab", False),
        cache_probe_threshold_ms=raw.get("cache_probe_threshold_ms", 5.0),
    )


def dump_default_config() -> str:
    """Render the default deployment as a config file the operator can edit."""
    cfg = default_config()
    doc = {
        "realms": [
            {
                "hostname": r.hostname,
                "slot": r.slot,
                "role": r.role.value,
                "tls_profile": r.tls_profile.value,
                **({"https_only": True} if r.https_only else {}),
            }
            for r in cfg.realms
        ],
        "http_port": cfg.http_port,
        "https_port": cfg.https_port,
        "prices": {
            "control": cfg.prices.control,
            "experimental": cfg.prices.experimental,
            "gated": cfg.prices.gated,
        },
        "token_ttl_seconds": cfg.token_ttl_seconds,
        "region_zip_prefixes": list(cfg.region_zip_prefixes),
        "certs_dir": cfg.certs_dir,
        "cert_seed": cfg.cert_seed,
    }
    return json.dumps(doc, indent=2) + "\n"
