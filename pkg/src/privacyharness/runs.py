"""Run records and lifecycle: token issuance, status machine, audit trail.

A run is one operator session with one agent tool over one disclosure
channel. Status only moves forward (Created -> Active -> Scored -> Archived);
the first attributed request activates a run, scoring freezes it, archiving
retires its token. Every transition lands in an append-only audit log.
"""

from __future__ import annotations

import json
import secrets
import threading
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from .server import TokenInfo


class Channel(Enum):
    CONTROL = "control"
    PERSONALIZATION = "personalization"
    CONNECTORS = "connectors"
    MEMORIES = "memories"  # saved chat memories or a previous message in-chat
    PROFILE = "profile"    # state planted in the browser profile


class RunStatus(Enum):
    CREATED = "created"
    ACTIVE = "active"
    SCORED = "scored"
    ARCHIVED = "archived"


_ORDER = [RunStatus.CREATED, RunStatus.ACTIVE, RunStatus.SCORED, RunStatus.ARCHIVED]


class UnknownRunError(KeyError):
    pass


class IllegalTransitionError(ValueError):
    pass


@dataclass(frozen=True)
class Run:
    run_id: str
    tool_name: str
    channel: Channel
    token: str
    status: RunStatus = RunStatus.CREATED
    created_at: float = 0.0
    persistence_group: str = ""
    measurement_selection: tuple[str, ...] = ()
    tool_meta: dict = field(default_factory=dict)
    baseline_ref: str = ""

    def to_record(self) -> dict:
        return {
            "run_id": self.run_id,
            "tool_name": self.tool_name,
            "channel": self.channel.value,
            "token": self.token,
            "status": self.status.value,
            "created_at": self.created_at,
            "persistence_group": self.persistence_group,
            "measurement_selection": list(self.measurement_selection),
            "tool_meta": self.tool_meta,
            "baseline_ref": self.baseline_ref,
        }

    @classmethod
    def from_record(cls, record: dict) -> "Run":
        return cls(
            run_id=record["run_id"],
            tool_name=record["tool_name"],
            channel=Channel(record["channel"]),
            token=record["token"],
            status=RunStatus(record["status"]),
            created_at=record["created_at"],
            persistence_group=record.get("persistence_group", ""),
            measurement_selection=tuple(record.get("measurement_selection", [])),
            tool_meta=record.get("tool_meta", {}),
            baseline_ref=record.get("baseline_ref", ""),
        )


class RunStore:
    def __init__(self, data_dir: str | Path, *, token_ttl_seconds: int = 7 * 24 * 3600):
        self.data_dir = Path(data_dir)
        self.runs_dir = self.data_dir / "runs"
        self.runs_dir.mkdir(parents=True, exist_ok=True)
        self.token_ttl_seconds = token_ttl_seconds
        self._lock = threading.Lock()
        self._cache: dict[str, Run] = {}
        self._token_index: dict[str, str] = {}
        self._load()

    def _load(self) -> None:
        for run_file in self.runs_dir.glob("*/run.json"):
            run = Run.from_record(json.loads(run_file.read_text(encoding="utf-8")))
            self._cache[run.run_id] = run
            self._token_index[run.token] = run.run_id

    def _persist(self, run: Run) -> None:
        run_dir = self.runs_dir / run.run_id
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "run.json").write_text(
            json.dumps(run.to_record(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    def _audit(self, run_id: str, entry: dict) -> None:
        path = self.runs_dir / run_id / "transitions.jsonl"
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps({**entry, "at": time.time()}, sort_keys=True) + "\n")

    # -- creation and lookup ---------------------------------------------------

    def create_run(
        self,
        tool_name: str,
        channel: Channel,
        *,
        measurement_selection: tuple[str, ...] = (),
        persistence_group: str = "",
        tool_meta: dict | None = None,
    ) -> Run:
        with self._lock:
            stamp = time.strftime("%Y%m%d")
            run_id = f"run-{stamp}-{secrets.token_hex(4)}"
            while run_id in self._cache:
                run_id = f"run-{stamp}-{secrets.token_hex(4)}"
            run = Run(
                run_id=run_id,
                tool_name=tool_name,
                channel=channel,
                token=secrets.token_urlsafe(12),
                status=RunStatus.CREATED,
                created_at=time.time(),
                persistence_group=persistence_group,
                measurement_selection=measurement_selection,
                tool_meta=dict(tool_meta or {}),
            )
            self._cache[run.run_id] = run
            self._token_index[run.token] = run.run_id
            self._persist(run)
            self._audit(run.run_id, {"event": "created", "actor": "operator",
                                     "status": run.status.value})
            return run

    def get(self, run_id: str) -> Run:
        run = self._cache.get(run_id)
        if run is None:
            raise UnknownRunError(run_id)
        return run

    def list_runs(self) -> list[Run]:
        return sorted(self._cache.values(), key=lambda r: r.created_at)

    # -- token resolution -------------------------------------------------------

    def resolve_token(self, token: str) -> str | None:
        """Token -> run id for live runs only; side effect: first resolution
        activates a freshly created run."""
        run_id = self._token_index.get(token)
        if run_id is None:
            return None
        run = self._cache[run_id]
        if run.status is RunStatus.ARCHIVED:
            return None
        if time.time() - run.created_at > self.token_ttl_seconds:
            return None
        if run.status is RunStatus.CREATED:
            try:
                self.transition(run_id, RunStatus.ACTIVE, actor="corpus-server")
            except IllegalTransitionError:
                pass
        return run_id

    def token_info(self, token: str) -> TokenInfo | None:
        run_id = self.resolve_token(token)
        if run_id is None:
            return None
        run = self._cache[run_id]
        return TokenInfo(
            run_id=run.run_id,
            token=run.token,
            group_id=run.persistence_group or run.run_id,
            channel=run.channel.value,
        )

    def group_info(self, group_id: str) -> TokenInfo | None:
        """Latest live run in a persistence group (or the run itself by id)."""
        candidates = [
            run for run in self._cache.values()
            if (run.persistence_group or run.run_id) == group_id
            and run.status is not RunStatus.ARCHIVED
        ]
        if not candidates:
            return None
        run = max(candidates, key=lambda r: r.created_at)
        return TokenInfo(run.run_id, run.token, group_id, run.channel.value)

    def persistence_partner(self, run: Run) -> Run | None:
        """The earlier half of this run's persistence pair, if any."""
        if not run.persistence_group:
            return None
        earlier = [
            other for other in self._cache.values()
            if other.persistence_group == run.persistence_group
            and other.run_id != run.run_id
            and other.created_at <= run.created_at
        ]
        return max(earlier, key=lambda r: r.created_at) if earlier else None

    # -- mutation ----------------------------------------------------------------

    def transition(self, run_id: str, new_status: RunStatus, *, actor: str) -> Run:
        with self._lock:
            run = self.get(run_id)
            if _ORDER.index(new_status) != _ORDER.index(run.status) + 1:
                raise IllegalTransitionError(
                    f"{run.status.value} -> {new_status.value} is not a forward step"
                )
            run = replace(run, status=new_status)
            self._cache[run_id] = run
            self._persist(run)
            self._audit(run_id, {"event": "transition", "actor": actor,
                                 "status": new_status.value})
            return run

    def annotate(self, run_id: str, updates: dict) -> Run:
        with self._lock:
            run = self.get(run_id)
            run = replace(run, tool_meta={**run.tool_meta, **updates})
            self._cache[run_id] = run
            self._persist(run)
            self._audit(run_id, {"event": "annotate", "actor": "operator",
                                 "keys": sorted(updates)})
            return run

    def set_baseline_ref(self, run_id: str, baseline_ref: str) -> Run:
        with self._lock:
            run = self.get(run_id)
            run = replace(run, baseline_ref=baseline_ref)
            self._cache[run_id] = run
            self._persist(run)
            return run
