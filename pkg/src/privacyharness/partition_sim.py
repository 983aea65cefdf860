"""Brute-force simulators of the two storage models under test.

The corpus's storage-matrix pages have an embedded third-party frame write
state under one top-level site and read it back under another. These
simulators replay that exact visit protocol against (a) one shared store per
embedded origin and (b) a store keyed additionally by top-level site, emitting
the same beacon shapes the real pages produce. Classification of the emitted
logs must match each model's ground truth for every state type; this is the
independent oracle for the partitioning classifier.
"""

from __future__ import annotations

import itertools

from .telemetry import BeaconEvent, EventKind

STATE_TYPES = (
    "cookie",
    "cookie-store",
    "localStorage",
    "sessionStorage",
    "indexedDB",
    "cache-api",
    "image-cache",
    "broadcast-channel",
)

FAST_LOAD_MS = 1.8
COLD_LOAD_MS = 82.0

EMBEDDED_ORIGIN = "metrics-hub.test"
PROBE_URL = "https://metrics-hub.test/part/probe.png"


class _SharedStore:
    """No partitioning: one bucket per (embedded origin, state type)."""

    def __init__(self):
        self.state: dict[tuple[str, str], str] = {}
        self.cache: set[tuple[str]] = set()

    def write(self, top: str, state_type: str, value: str) -> None:
        self.state[(EMBEDDED_ORIGIN, state_type)] = value

    def read(self, top: str, state_type: str) -> str:
        return self.state.get((EMBEDDED_ORIGIN, state_type), "")

    def cache_fetch(self, top: str, url: str) -> float:
        key = (url,)
        if key in self.cache:
            return FAST_LOAD_MS
        self.cache.add(key)
        return COLD_LOAD_MS

    @staticmethod
    def ground_truth() -> dict[str, str]:
        return {t: "Unpartitioned" for t in STATE_TYPES}


class _PartitionedStore:
    """Buckets keyed by (top-level site, embedded origin, state type)."""

    def __init__(self):
        self.state: dict[tuple[str, str, str], str] = {}
        self.cache: set[tuple[str, str]] = set()

    def write(self, top: str, state_type: str, value: str) -> None:
        self.state[(top, EMBEDDED_ORIGIN, state_type)] = value

    def read(self, top: str, state_type: str) -> str:
        return self.state.get((top, EMBEDDED_ORIGIN, state_type), "")

    def cache_fetch(self, top: str, url: str) -> float:
        key = (top, url)
        if key in self.cache:
            return FAST_LOAD_MS
        self.cache.add(key)
        return COLD_LOAD_MS

    @staticmethod
    def ground_truth() -> dict[str, str]:
        return {t: "Partitioned" for t in STATE_TYPES}


def _model(name: str):
    if name == "shared":
        return _SharedStore()
    if name == "partitioned":
        return _PartitionedStore()
    raise ValueError(name)


def ground_truth(model: str) -> dict[str, str]:
    return _model(model).ground_truth()


def simulate_matrix_visit(
    model: str,
    *,
    run_id: str = "sim-run",
    run_token: str = "sim-token",
    token_value: str = "probe-value-1",
) -> list[BeaconEvent]:
    """Replay the two-top visit protocol and emit the page beacons.

    Under each top the frame reads every state type first, then writes. Only
    the write under top A and the read under top B decide partitioning; the
    rest mirrors what the real pages emit.
    """
    store = _model(model)
    events: list[BeaconEvent] = []
    counter = itertools.count()
    clock = itertools.count(1000)

    def emit(kind: EventKind, payload: dict) -> None:
        index = next(counter)
        events.append(
            BeaconEvent(
                event_id=f"e:{run_id}/{index}",
                run_id=run_id,
                run_token=run_token,
                measurement_id="storage-partitioning",
                page_id="partition-frame",
                kind=kind,
                payload=payload,
                client_seq=index,
                server_ts=float(next(clock)),
                index=index,
                source="page",
            )
        )

    for top in ("a", "b"):
        context = {"top": top, "party": "third", "embedded_origin": EMBEDDED_ORIGIN}
        for state_type in STATE_TYPES:
            if state_type == "image-cache":
                elapsed = store.cache_fetch(top, PROBE_URL)
                emit(
                    EventKind.CACHE_TIMING,
                    {"state_type": state_type, "context": context, "elapsed_ms": elapsed, "url": PROBE_URL},
                )
                continue
            seen = store.read(top, state_type)
            emit(
                EventKind.STORAGE_READ,
                {"state_type": state_type, "context": context, "value": seen, "outcome": "ok"},
            )
            store.write(top, state_type, token_value)
            emit(
                EventKind.STORAGE_WRITE,
                {"state_type": state_type, "context": context, "value": token_value, "outcome": "ok"},
            )
    return events
