"""Behavioral evidence collection: beacons, HTTP metadata, manual observations.

Everything lands in per-run append-only JSONL logs. Records are never mutated
or removed; later manual observations supersede earlier ones only at scoring
time, so the audit trail stays complete. Ordering uses collector-assigned
server time (client clocks are untrusted) with the ingest index as tiebreak.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Iterable

import jsonschema


class EventKind(Enum):
    STORAGE_WRITE = "StorageWrite"
    STORAGE_READ = "StorageRead"
    CACHE_TIMING = "CacheTiming"
    VISITED_PROBE = "VisitedProbe"
    BANNER_SHOWN = "BannerShown"
    BANNER_ACTION = "BannerAction"
    PERMISSION_TRIGGER = "PermissionTrigger"
    PERMISSION_DECISION = "PermissionDecision"
    FORM_SUBMISSION = "FormSubmission"
    GATE_REVEALED = "GateRevealed"
    HTTP_METADATA = "HttpMetadata"
    TRACKER_HIT = "TrackerHit"
    SUBRESOURCE_OUTCOME = "SubresourceOutcome"
    PAGE_VIEW = "PageView"


class Observed(Enum):
    WARNING_SHOWN = "WarningShown"
    NO_WARNING = "NoWarning"
    AGENT_ASKED_USER = "AgentAskedUser"
    AGENT_REFUSED = "AgentRefused"
    AGENT_PROCEEDED = "AgentProceeded"
    CONTENT_SUMMARIZED = "ContentSummarized"
    NOT_LOADED = "NotLoaded"


class UnknownTokenError(Exception):
    pass


class SchemaViolationError(Exception):
    pass


class UnknownRunError(Exception):
    pass


class NotOperatorAssistedError(Exception):
    """Manual input rejected for a fully automated measurement."""


@dataclass(frozen=True)
class BeaconEvent:
    event_id: str
    run_id: str
    run_token: str
    measurement_id: str
    page_id: str
    kind: EventKind
    payload: dict[str, Any]
    client_seq: int | None
    server_ts: float
    index: int
    source: str = "page"

    def to_record(self) -> dict[str, Any]:
        return {
            "event_id": self.event_id,
            "run_id": self.run_id,
            "run_token": self.run_token,
            "measurement_id": self.measurement_id,
            "page_id": self.page_id,
            "kind": self.kind.value,
            "payload": self.payload,
            "client_seq": self.client_seq,
            "server_ts": self.server_ts,
            "index": self.index,
            "source": self.source,
        }

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "BeaconEvent":
        return cls(
            event_id=record["event_id"],
            run_id=record["run_id"],
            run_token=record["run_token"],
            measurement_id=record["measurement_id"],
            page_id=record["page_id"],
            kind=EventKind(record["kind"]),
            payload=record["payload"],
            client_seq=record["client_seq"],
            server_ts=record["server_ts"],
            index=record["index"],
            source=record.get("source", "page"),
        )


@dataclass(frozen=True)
class ManualObservation:
    obs_id: str
    run_id: str
    measurement_id: str
    observed: Observed
    subject: str = ""
    note: str = ""
    observer: str = "operator"
    server_ts: float = 0.0

    def to_record(self) -> dict[str, Any]:
        return {
            "obs_id": self.obs_id,
            "run_id": self.run_id,
            "measurement_id": self.measurement_id,
            "observed": self.observed.value,
            "subject": self.subject,
            "note": self.note,
            "observer": self.observer,
            "server_ts": self.server_ts,
        }

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "ManualObservation":
        return cls(
            obs_id=record["obs_id"],
            run_id=record["run_id"],
            measurement_id=record["measurement_id"],
            observed=Observed(record["observed"]),
            subject=record.get("subject", ""),
            note=record.get("note", ""),
            observer=record.get("observer", "operator"),
            server_ts=record.get("server_ts", 0.0),
        )


def _beacon_schema() -> dict:
    raw = resources.files("privacyharness.data.schemas").joinpath("beacon.schema.json")
    return json.loads(raw.read_text(encoding="utf-8"))


class EventStore:
    """Per-run append-only JSONL logs under ``data_dir/runs/<run_id>/``."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.runs_dir = self.data_dir / "runs"
        self.runs_dir.mkdir(parents=True, exist_ok=True)
        self._global_lock = threading.Lock()
        self._run_locks: dict[str, threading.Lock] = {}
        self._indices: dict[str, int] = {}

    def _lock_for(self, run_id: str) -> threading.Lock:
        with self._global_lock:
            if run_id not in self._run_locks:
                self._run_locks[run_id] = threading.Lock()
            return self._run_locks[run_id]

    def run_dir(self, run_id: str) -> Path:
        return self.runs_dir / run_id

    def _events_path(self, run_id: str) -> Path:
        return self.run_dir(run_id) / "events.jsonl"

    def _observations_path(self, run_id: str) -> Path:
        return self.run_dir(run_id) / "observations.jsonl"

    def _next_index(self, run_id: str) -> int:
        if run_id not in self._indices:
            path = self._events_path(run_id)
            count = 0
            if path.exists():
                with path.open(encoding="utf-8") as fh:
                    count = sum(1 for _ in fh)
            self._indices[run_id] = count
        self._indices[run_id] += 1
        return self._indices[run_id] - 1

    def append(
        self,
        run_id: str,
        *,
        run_token: str,
        measurement_id: str,
        page_id: str,
        kind: EventKind,
        payload: dict[str, Any],
        client_seq: int | None = None,
        source: str = "page",
        server_ts: float | None = None,
    ) -> BeaconEvent:
        with self._lock_for(run_id):
            index = self._next_index(run_id)
            event = BeaconEvent(
                event_id=f"e:{run_id}/{index}",
                run_id=run_id,
                run_token=run_token,
                measurement_id=measurement_id,
                page_id=page_id,
                kind=kind,
                payload=payload,
                client_seq=client_seq,
                server_ts=time.time() if server_ts is None else server_ts,
                index=index,
                source=source,
            )
            path = self._events_path(run_id)
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(event.to_record(), sort_keys=True) + "\n")
            return event

    def events(self, run_id: str, measurement_id: str | None = None) -> list[BeaconEvent]:
        """Events in (server_ts, client_seq, ingest index) order.

        The measurement filter also matches ``page_id`` so page-level slices
        (one banner variant, one permission page) stay queryable.
        """
        path = self._events_path(run_id)
        if not self.run_dir(run_id).exists():
            raise UnknownRunError(run_id)
        out: list[BeaconEvent] = []
        if path.exists():
            with path.open(encoding="utf-8") as fh:
                for line in fh:
                    event = BeaconEvent.from_record(json.loads(line))
                    if measurement_id and measurement_id not in (event.measurement_id, event.page_id):
                        continue
                    out.append(event)
        out.sort(key=lambda e: (e.server_ts, e.client_seq if e.client_seq is not None else -1, e.index))
        return out

    def event_count(self, run_id: str) -> int:
        path = self._events_path(run_id)
        if not path.exists():
            return 0
        with path.open(encoding="utf-8") as fh:
            return sum(1 for _ in fh)

    def append_observation(
        self,
        run_id: str,
        *,
        measurement_id: str,
        observed: Observed,
        subject: str = "",
        note: str = "",
        observer: str = "operator",
        server_ts: float | None = None,
    ) -> ManualObservation:
        with self._lock_for(run_id):
            path = self._observations_path(run_id)
            path.parent.mkdir(parents=True, exist_ok=True)
            count = 0
            if path.exists():
                with path.open(encoding="utf-8") as fh:
                    count = sum(1 for _ in fh)
            obs = ManualObservation(
                obs_id=f"o:{run_id}/{count}",
                run_id=run_id,
                measurement_id=measurement_id,
                observed=observed,
                subject=subject,
                note=note,
                observer=observer,
                server_ts=time.time() if server_ts is None else server_ts,
            )
            with path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(obs.to_record(), sort_keys=True) + "\n")
            return obs

    def observations(self, run_id: str, measurement_id: str | None = None) -> list[ManualObservation]:
        if not self.run_dir(run_id).exists():
            raise UnknownRunError(run_id)
        path = self._observations_path(run_id)
        out = []
        if path.exists():
            with path.open(encoding="utf-8") as fh:
                for line in fh:
                    obs = ManualObservation.from_record(json.loads(line))
                    if measurement_id and obs.measurement_id != measurement_id:
                        continue
                    out.append(obs)
        return out

    # -- quarantine -----------------------------------------------------------

    def quarantine(self, record: dict[str, Any], reason: str) -> None:
        path = self.data_dir / "quarantine.jsonl"
        with self._global_lock:
            with path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps({"reason": reason, "record": record, "server_ts": time.time()}) + "\n")

    def quarantine_count(self) -> int:
        path = self.data_dir / "quarantine.jsonl"
        if not path.exists():
            return 0
        with path.open(encoding="utf-8") as fh:
            return sum(1 for _ in fh)


class TelemetryCollector:
    """Validates, attributes, dedups, and persists incoming wire records."""

    def __init__(
        self,
        store: EventStore,
        token_resolver: Callable[[str], str | None],
        operator_assisted: Callable[[str], bool] | None = None,
    ):
        self.store = store
        self.token_resolver = token_resolver
        self.operator_assisted = operator_assisted or (lambda measurement_id: False)
        self._schema = _beacon_schema()
        self._dedup: dict[str, set[tuple[int, str]]] = {}
        self._dedup_lock = threading.Lock()

    def _seen(self, run_id: str) -> set[tuple[int, str]]:
        with self._dedup_lock:
            if run_id not in self._dedup:
                pairs = set()
                try:
                    for event in self.store.events(run_id):
                        if event.client_seq is not None:
                            pairs.add((event.client_seq, event.page_id))
                except UnknownRunError:
                    pass
                self._dedup[run_id] = pairs
            return self._dedup[run_id]

    def ingest_beacon(self, raw: dict[str, Any]) -> BeaconEvent | None:
        """Persist one wire record. Returns None for an idempotent duplicate."""
        try:
            jsonschema.validate(raw, self._schema)
        except jsonschema.ValidationError as exc:
            raise SchemaViolationError(exc.message) from exc

        run_id = self.token_resolver(raw["run_token"])
        if run_id is None:
            self.store.quarantine(raw, reason="unknown_token")
            raise UnknownTokenError(raw["run_token"])

        key = (raw["client_seq"], raw["page_id"])
        seen = self._seen(run_id)
        with self._dedup_lock:
            if key in seen:
                return None
            seen.add(key)
        return self.store.append(
            run_id,
            run_token=raw["run_token"],
            measurement_id=raw["measurement_id"],
            page_id=raw["page_id"],
            kind=EventKind(raw["kind"]),
            payload=raw["payload"],
            client_seq=raw["client_seq"],
            source="page",
        )

    def record_server_event(
        self,
        run_id: str,
        *,
        run_token: str,
        measurement_id: str,
        page_id: str,
        kind: EventKind,
        payload: dict[str, Any],
    ) -> BeaconEvent:
        return self.store.append(
            run_id,
            run_token=run_token,
            measurement_id=measurement_id,
            page_id=page_id,
            kind=kind,
            payload=payload,
            client_seq=None,
            source="server",
        )

    def record_manual_observation(
        self,
        run_id: str,
        *,
        measurement_id: str,
        observed: Observed,
        subject: str = "",
        note: str = "",
        observer: str = "operator",
    ) -> ManualObservation:
        if not self.operator_assisted(measurement_id):
            raise NotOperatorAssistedError(
                f"measurement {measurement_id!r} is fully automated; manual input rejected"
            )
        return self.store.append_observation(
            run_id,
            measurement_id=measurement_id,
            observed=observed,
            subject=subject,
            note=note,
            observer=observer,
        )


def effective_observations(observations: Iterable[ManualObservation]) -> dict[tuple[str, str], ManualObservation]:
    """Latest observation per (measurement, subject); earlier ones stay on disk."""
    out: dict[tuple[str, str], ManualObservation] = {}
    for obs in observations:
        out[(obs.measurement_id, obs.subject)] = obs
    return out
