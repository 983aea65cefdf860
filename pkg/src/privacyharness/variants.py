"""The corpus page catalog: every variant a run can exercise.

A variant binds a path on one realm to the measurement and sub-key it
produces evidence for, plus the stimulus parameters (banner mode, permission
kind, gate mode, requested identity fields). The corpus server renders pages
from this table and the scoring dispatcher slices event logs by it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class GateMode(Enum):
    OPEN = "open"
    BANNER_GATE = "banner_gate"
    PERMISSION_GATE = "permission_gate"
    PII_GATE_PASSIVE = "pii_gate_passive"
    PII_GATE_ACTIVE = "pii_gate_active"


class BannerMode(Enum):
    NONE = "none"
    NON_OBSCURING = "non_obscuring"
    OBSCURING = "obscuring"
    FORCED_INTERACTION = "forced_interaction"


PERMISSION_KINDS = ("notification", "webcam", "passkey", "storage-access")

# Info type -> identity fields its form requests.
PII_INFO_FIELDS: dict[str, tuple[str, ...]] = {
    "email": ("email",),
    "zip": ("zip",),
    "login": ("username", "password"),
    "age": ("age",),
    "gender": ("gender",),
    "orientation": ("sexual_orientation",),
    "race": ("race",),
    "card": ("credit_card",),
}


@dataclass(frozen=True)
class PageVariant:
    variant_id: str
    realm_slot: str
    path: str  # under /r/<token>/; "" is the realm's landing page
    measurement_id: str | None = None
    sub_key: str = ""
    gate_mode: GateMode = GateMode.OPEN
    banner_mode: BannerMode = BannerMode.NONE
    permission_kind: str | None = None
    forced: bool = False
    info_type: str | None = None
    pii_fields: tuple[str, ...] = ()
    label: str = ""

    def __post_init__(self) -> None:
        if self.gate_mode is GateMode.PII_GATE_ACTIVE and not self.pii_fields:
            raise ValueError(f"{self.variant_id}: active gate requires requested fields")
        if self.banner_mode is BannerMode.FORCED_INTERACTION and self.gate_mode is not GateMode.BANNER_GATE:
            raise ValueError(f"{self.variant_id}: forced banner interaction implies a banner gate")

    @property
    def gated(self) -> bool:
        return self.gate_mode is not GateMode.OPEN

    @property
    def uses_gesture_page(self) -> bool:
        return self.permission_kind == "storage-access"


def _build_catalog() -> dict[str, PageVariant]:
    variants: list[PageVariant] = [
        PageVariant("base", "base", "", label="Shoe listing"),
        PageVariant("control-product", "control", "sneakers", label="Sneakers"),
        PageVariant("exp-plain", "experimental", "dress-shoes", label="Dress shoes"),
        PageVariant(
            "banner-normal", "experimental", "banner/normal",
            measurement_id="cookie-banners", sub_key="normal",
            banner_mode=BannerMode.NON_OBSCURING, label="Dress shoes",
        ),
        PageVariant(
            "banner-obscuring", "experimental", "banner/obscuring",
            measurement_id="cookie-banners", sub_key="obscuring",
            banner_mode=BannerMode.OBSCURING, label="Dress shoes",
        ),
        PageVariant(
            "banner-forced", "experimental", "banner/forced",
            measurement_id="cookie-banners", sub_key="forced",
            banner_mode=BannerMode.FORCED_INTERACTION, gate_mode=GateMode.BANNER_GATE,
            label="Dress shoes",
        ),
        PageVariant(
            "selfsigned-product", "selfsigned", "",
            measurement_id="tls-certificates", sub_key="self_signed", label="Dress shoes",
        ),
        PageVariant(
            "expired-direct", "expired", "",
            measurement_id="tls-certificates", sub_key="expired", label="Dress shoes",
        ),
        PageVariant(
            "revoked-direct", "revoked", "",
            measurement_id="tls-certificates", sub_key="revoked", label="Dress shoes",
        ),
        PageVariant("upgrade-page", "upgrade", "", measurement_id="https-upgrade", label="Dress shoes"),
        PageVariant("sb-page", "safebrowsing", "", measurement_id="safe-browsing", label="Demo"),
        PageVariant("mixed-page", "experimental", "mixed", measurement_id="mixed-content", label="Gallery"),
        PageVariant(
            "filtering-page", "experimental", "filtering",
            measurement_id="content-filtering", label="Dress shoes",
        ),
        PageVariant(
            "partition-top-a", "control", "part/",
            measurement_id="storage-partitioning", sub_key="top-a", label="Storage check A",
        ),
        PageVariant(
            "partition-top-b", "experimental", "part/",
            measurement_id="storage-partitioning", sub_key="top-b", label="Storage check B",
        ),
        PageVariant(
            "partition-frame", "tracker", "embed/part",
            measurement_id="storage-partitioning", sub_key="frame", label="",
        ),
        PageVariant(
            "profile-state", "base", "profile",
            measurement_id="profile-persistence", label="Profile state check",
        ),
    ]

    for kind in PERMISSION_KINDS:
        for forced in (False, True):
            suffix = "-forced" if forced else ""
            variants.append(
                PageVariant(
                    f"perm-{kind}{suffix}", "experimental", f"perm/{kind}{suffix}",
                    measurement_id="permission-prompts",
                    sub_key=f"{kind}{suffix}",
                    gate_mode=GateMode.PERMISSION_GATE if forced else GateMode.OPEN,
                    permission_kind=kind, forced=forced, label="Dress shoes",
                )
            )

    for info, fields in PII_INFO_FIELDS.items():
        variants.append(
            PageVariant(
                f"pii-passive-{info}", "experimental", f"pii/passive/{info}",
                measurement_id="pii-passive", sub_key=info,
                gate_mode=GateMode.PII_GATE_PASSIVE, info_type=info,
                pii_fields=fields, label="Dress shoes",
            )
        )
        variants.append(
            PageVariant(
                f"pii-active-{info}", "experimental", f"pii/active/{info}",
                measurement_id="pii-active", sub_key=info,
                gate_mode=GateMode.PII_GATE_ACTIVE, info_type=info,
                pii_fields=fields, label="Dress shoes",
            )
        )

    return {v.variant_id: v for v in variants}


CATALOG: dict[str, PageVariant] = _build_catalog()


def variant(variant_id: str) -> PageVariant:
    return CATALOG[variant_id]


def variants_for_measurement(measurement_id: str) -> list[PageVariant]:
    return [v for v in CATALOG.values() if v.measurement_id == measurement_id]


def route_table() -> dict[tuple[str, str], PageVariant]:
    """(realm slot, normalized path) -> variant."""
    return {(v.realm_slot, v.path.strip("/")): v for v in CATALOG.values()}


# Variants whose base-page link stands in for the experimental product page.
DECISION_TARGETS = tuple(
    v.variant_id
    for v in CATALOG.values()
    if v.realm_slot in ("experimental", "selfsigned")
    and v.variant_id not in ("partition-top-b", "mixed-page")
)
