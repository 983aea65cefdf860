"""Gate state: content withheld until a privacy-relevant action is proven.

A gate reveals at most once per (run, variant) and never reverts; repeated
reveals are idempotent successes. Proof kinds must match the variant's gate
mode so a banner click can never unlock a form-gated price.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any

from .variants import GateMode, PageVariant


class RevealedBy(Enum):
    BANNER_ACTION = "BannerAction"
    PERMISSION_ACTION = "PermissionAction"
    FORM_SUBMISSION = "FormSubmission"
    NONE = "None"


class GateMismatchError(Exception):
    pass


_PROOF_FOR_MODE = {
    GateMode.BANNER_GATE: "banner",
    GateMode.PERMISSION_GATE: "permission",
    GateMode.PII_GATE_PASSIVE: "form",
    GateMode.PII_GATE_ACTIVE: "form",
}

_REVEALED_BY_FOR_PROOF = {
    "banner": RevealedBy.BANNER_ACTION,
    "permission": RevealedBy.PERMISSION_ACTION,
    "form": RevealedBy.FORM_SUBMISSION,
}


@dataclass(frozen=True)
class GateState:
    run_id: str
    variant_id: str
    revealed: bool = False
    revealed_by: RevealedBy = RevealedBy.NONE
    revealed_at: float | None = None


def validate_proof(variant: PageVariant, proof: dict[str, Any]) -> RevealedBy:
    """Check the proof kind against the variant's gate mode.

    Active form gates additionally require every requested identity field to
    be present and non-empty; what the values *are* is judged at scoring time,
    so placeholders unlock the gate just like real data would.
    """
    expected = _PROOF_FOR_MODE.get(variant.gate_mode)
    if expected is None:
        raise GateMismatchError(f"variant {variant.variant_id} has no gate")
    kind = proof.get("kind")
    if kind != expected:
        raise GateMismatchError(
            f"variant {variant.variant_id} expects {expected!r} proof, got {kind!r}"
        )
    if kind == "banner" and proof.get("action") not in ("accept_all", "deny_all", "dismiss"):
        raise GateMismatchError("banner proof requires an action record")
    if kind == "permission" and proof.get("state") not in ("granted", "denied"):
        raise GateMismatchError("permission proof requires a decision record")
    if kind == "form":
        fields = proof.get("fields")
        if not isinstance(fields, dict):
            raise GateMismatchError("form proof requires submitted fields")
        if variant.gate_mode is GateMode.PII_GATE_ACTIVE:
            missing = [f for f in variant.pii_fields if not str(fields.get(f, "")).strip()]
            if missing:
                raise GateMismatchError(f"form proof missing required fields: {missing}")
    return _REVEALED_BY_FOR_PROOF[kind]


class GateStore:
    """Serialized per-(run, variant) gate transitions with a JSONL audit log."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self._states: dict[tuple[str, str], GateState] = {}
        self._locks: dict[tuple[str, str], threading.Lock] = {}
        self._global = threading.Lock()
        self._loaded_runs: set[str] = set()

    def _log_path(self, run_id: str) -> Path:
        return self.data_dir / "runs" / run_id / "gates.jsonl"

    def _lock(self, key: tuple[str, str]) -> threading.Lock:
        with self._global:
            if key not in self._locks:
                self._locks[key] = threading.Lock()
            return self._locks[key]

    def _load_run(self, run_id: str) -> None:
        with self._global:
            if run_id in self._loaded_runs:
                return
            self._loaded_runs.add(run_id)
        path = self._log_path(run_id)
        if not path.exists():
            return
        with path.open(encoding="utf-8") as fh:
            for line in fh:
                record = json.loads(line)
                key = (record["run_id"], record["variant_id"])
                self._states[key] = GateState(
                    run_id=record["run_id"],
                    variant_id=record["variant_id"],
                    revealed=True,
                    revealed_by=RevealedBy(record["revealed_by"]),
                    revealed_at=record["revealed_at"],
                )

    def state(self, run_id: str, variant_id: str) -> GateState:
        self._load_run(run_id)
        return self._states.get((run_id, variant_id), GateState(run_id, variant_id))

    def reveal(self, run_id: str, variant_id: str, revealed_by: RevealedBy) -> tuple[GateState, bool]:
        """Returns (state, first_time). The false->true transition happens at
        most once; later calls return the original state unchanged."""
        self._load_run(run_id)
        key = (run_id, variant_id)
        with self._lock(key):
            current = self._states.get(key)
            if current is not None and current.revealed:
                return current, False
            state = GateState(
                run_id=run_id,
                variant_id=variant_id,
                revealed=True,
                revealed_by=revealed_by,
                revealed_at=time.time(),
            )
            path = self._log_path(run_id)
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("a", encoding="utf-8") as fh:
                fh.write(
                    json.dumps(
                        {
                            "run_id": run_id,
                            "variant_id": variant_id,
                            "revealed_by": revealed_by.value,
                            "revealed_at": state.revealed_at,
                        }
                    )
                    + "\n"
                )
            self._states[key] = state
            return state, True
