"""Report documents: one canonical JSON source, two lossless projections.

The JSON document is the source of truth, serialized canonically (sorted
keys, compact separators). The Markdown rendering shows human tables in the
result-table vocabularies ("Auto. granted", "Shows warning", "L"/"P"/"N") and
embeds the canonical JSON in a fenced block; the CSV rendering is a key/value
metadata section plus one row per registry measurement. Both parse back to
the byte-identical JSON source.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Any

from .registry import SCALAR_KEY, Registry
from .runs import Run
from .scoring import BaselineProfile, Verdict, VulnerabilityMatrix

SCHEMA = "privacyharness-report/1"

DISPLAY_LABELS = {
    "AutoGranted": "Auto. granted",
    "AutoDenied": "Auto. denied",
    "AsksUser": "Asks user",
    "AskedUser": "Asks user",
    "NoAccess": "No access",
    "NotApplicable": "N/A",
    "Inconclusive": "Inconclusive",
    "WarningShown": "Shows warning",
    "NoWarning": "No warning",
    "NotLoaded": "Does not load website",
    "WarningHeeded": "Heeds warning",
    "WarningShownProceeded": "Proceeds despite warning",
    "NoWarningProceeded": "Proceeds, no warning",
    "OffDeviceOnly": "Off-device",
    "OnDeviceSupported": "On-device supported",
    "NoModel": "No model",
    "PersistsDisclosed": "Persists (disclosed)",
    "PersistsUndisclosed": "Persists (undisclosed)",
    "NoPersistence": "No persistence",
}


def display(outcome: str) -> str:
    return DISPLAY_LABELS.get(outcome, outcome)


class NotScoredError(RuntimeError):
    pass


class ReportParseError(ValueError):
    pass


def canonical_dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def build_document(
    run: Run,
    verdicts: dict[str, Verdict],
    matrix: VulnerabilityMatrix,
    baseline: BaselineProfile,
    registry: Registry,
) -> dict:
    return {
        "schema": SCHEMA,
        "run": {
            "run_id": run.run_id,
            "tool_name": run.tool_name,
            "channel": run.channel.value,
            "status": run.status.value,
            "created_at": run.created_at,
            "persistence_group": run.persistence_group,
        },
        "baseline": baseline.baseline_id,
        "registry_version": registry.version,
        "verdicts": {mid: v.to_record() for mid, v in verdicts.items()},
        "matrix": matrix.to_record(),
    }


def to_json(doc: dict) -> str:
    return canonical_dumps(doc)


# ---------------------------------------------------------------------------
# Markdown projection
# ---------------------------------------------------------------------------


def _md_table(headers: list[str], rows: list[list[str]]) -> str:
    out = ["| " + " | ".join(headers) + " |",
           "| " + " | ".join("---" for _ in headers) + " |"]
    for row in rows:
        out.append("| " + " | ".join(row) + " |")
    return "\n".join(out)


def _verdict_cell(doc: dict, measurement_id: str, sub_key: str = SCALAR_KEY) -> str:
    verdict = doc["verdicts"].get(measurement_id)
    if verdict is None:
        return "N/A"
    outcome = verdict["outcomes"].get(sub_key)
    if outcome is None and sub_key == SCALAR_KEY and len(verdict["outcomes"]) == 1:
        outcome = next(iter(verdict["outcomes"].values()))
    return display(outcome) if outcome else "N/A"


def _pii_rows(doc: dict) -> tuple[list[str], list[list[str]]]:
    cells: dict[tuple[str, str, bool], str] = {}
    channels: list[str] = []
    infos: list[str] = []
    for mid, active in (("pii-passive", False), ("pii-active", True)):
        verdict = doc["verdicts"].get(mid)
        if not verdict:
            continue
        for key, outcome in verdict["outcomes"].items():
            if ":" not in key:
                continue
            channel, info = key.split(":", 1)
            cells[(channel, info, active)] = outcome
            if channel not in channels:
                channels.append(channel)
            if info not in infos:
                infos.append(info)
    headers = ["Channel"] + [f"{i}{'*' if active else ''}" for i in infos for active in (False, True)]
    rows = []
    for channel in channels:
        row = [channel]
        for info in infos:
            for active in (False, True):
                row.append(cells.get((channel, info, active), "N/A"))
        rows.append(row)
    return headers, rows


def to_markdown(doc: dict) -> str:
    run = doc["run"]
    lines = [
        f"# Privacy report: {run['tool_name']}",
        "",
        f"- Run: `{run['run_id']}`  (channel: {run['channel']}, status: {run['status']})",
        f"- Baseline: `{doc['baseline']}`  (registry v{doc['registry_version']})",
        "",
        "## Concern matrix",
        "",
    ]
    matrix = doc["matrix"]
    categories = sorted(matrix["category_counts"])
    lines.append(_md_table(
        [*categories, "Total"],
        [[str(matrix["category_counts"][c]) for c in categories] + [str(matrix["total"])]],
    ))
    if matrix["not_comparable"]:
        lines += ["", "Not comparable (excluded from totals): "
                  + ", ".join(matrix["not_comparable"])]

    lines += ["", "## Protections", ""]
    lines.append(_md_table(
        ["Known-bad site", "Expired cert", "Self-signed cert", "Revoked cert",
         "HTTPS upgrade", "Opt-out headers"],
        [[
            _verdict_cell(doc, "safe-browsing"),
            _verdict_cell(doc, "tls-certificates", "expired"),
            _verdict_cell(doc, "tls-certificates", "self_signed"),
            _verdict_cell(doc, "tls-certificates", "revoked"),
            _verdict_cell(doc, "https-upgrade"),
            _verdict_cell(doc, "optout-headers"),
        ]],
    ))

    mixed = doc["verdicts"].get("mixed-content")
    if mixed:
        kinds = sorted(mixed["outcomes"])
        lines += ["", "## Mixed content", "",
                  _md_table(kinds, [[display(mixed["outcomes"][k]) for k in kinds]])]

    lines += ["", "## Cookie banners", ""]
    lines.append(_md_table(
        ["Normal", "Obscures content", "Forced to interact"],
        [[
            _verdict_cell(doc, "cookie-banners", "normal"),
            _verdict_cell(doc, "cookie-banners", "obscuring"),
            _verdict_cell(doc, "cookie-banners", "forced"),
        ]],
    ))

    perms = doc["verdicts"].get("permission-prompts")
    if perms:
        kinds = ["notification", "webcam", "passkey", "storage-access"]
        lines += ["", "## Permission prompts", ""]
        lines.append(_md_table(
            ["Setting"] + kinds,
            [
                ["Not forced"] + [_verdict_cell(doc, "permission-prompts", k) for k in kinds],
                ["Forced"] + [_verdict_cell(doc, "permission-prompts", f"{k}-forced") for k in kinds],
            ],
        ))

    filtering = doc["verdicts"].get("content-filtering")
    if filtering:
        lines += ["", "## Content filtering", ""]
        cats = sorted(filtering["outcomes"])
        lines.append(_md_table(cats, [[display(filtering["outcomes"][c]) for c in cats]]))

    part = doc["verdicts"].get("storage-partitioning")
    if part:
        lines += ["", "## Storage and network-state partitioning", ""]
        types = sorted(part["outcomes"])
        lines.append(_md_table(types, [[display(part["outcomes"][t]) for t in types]]))
    persistence = doc["verdicts"].get("profile-persistence")
    if persistence:
        lines += ["", f"Profile persistence: {_verdict_cell(doc, 'profile-persistence')}"]

    headers, rows = _pii_rows(doc)
    if rows:
        lines += ["", "## Information leakage", "",
                  "Cells: L leak, P placeholder, N no price reported, A asks user, "
                  "B out-of-band bypass. `*` marks price-gated (active) pages.", ""]
        lines.append(_md_table(headers, rows))

    lines += [
        "",
        "## Machine-readable source",
        "",
        "```json",
        canonical_dumps(doc),
        "```",
        "",
    ]
    return "\n".join(lines)


def from_markdown(text: str) -> dict:
    marker = "```json\n"
    start = text.rfind(marker)
    if start < 0:
        raise ReportParseError("no machine-readable block found")
    end = text.find("\n```", start + len(marker))
    if end < 0:
        raise ReportParseError("unterminated machine-readable block")
    return json.loads(text[start + len(marker):end])


# ---------------------------------------------------------------------------
# CSV projection
# ---------------------------------------------------------------------------

_META_KEYS = ("schema", "baseline", "registry_version")
_RUN_KEYS = ("run_id", "tool_name", "channel", "status", "created_at", "persistence_group")
_ROW_HEADER = ("measurement_id", "category", "confidence", "concern",
               "outcomes", "evidence", "detail")


def to_csv(doc: dict, registry: Registry) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    for key in _META_KEYS:
        writer.writerow([key, json.dumps(doc[key])])
    for key in _RUN_KEYS:
        writer.writerow([f"run.{key}", json.dumps(doc["run"][key])])
    writer.writerow([])
    writer.writerow(_ROW_HEADER)
    matrix = doc["matrix"]
    for measurement in registry:
        mid = measurement.id
        verdict = doc["verdicts"].get(mid)
        flag = matrix["flags"].get(mid, 0)
        concern = "Concern" if flag else (
            "NotComparable" if mid in matrix["not_comparable"] else "NoConcern"
        )
        writer.writerow([
            mid,
            measurement.category,
            verdict["confidence"] if verdict else "",
            concern,
            json.dumps(verdict["outcomes"], sort_keys=True) if verdict else "",
            json.dumps(verdict["evidence"]) if verdict else "",
            json.dumps(verdict["detail"], sort_keys=True) if verdict else "",
        ])
    return out.getvalue()


def csv_measurement_rows(text: str) -> int:
    rows = list(csv.reader(io.StringIO(text)))
    try:
        header_at = rows.index(list(_ROW_HEADER))
    except ValueError:
        return 0
    return sum(1 for row in rows[header_at + 1:] if row)


def from_csv(text: str) -> dict:
    rows = list(csv.reader(io.StringIO(text)))
    try:
        split_at = rows.index([])
    except ValueError:
        raise ReportParseError("missing section separator") from None
    doc: dict[str, Any] = {"run": {}}
    for key, raw in rows[:split_at]:
        value = json.loads(raw)
        if key.startswith("run."):
            doc["run"][key[4:]] = value
        else:
            doc[key] = value

    body = rows[split_at + 1:]
    if not body or body[0] != list(_ROW_HEADER):
        raise ReportParseError("missing measurement header row")
    verdicts: dict[str, dict] = {}
    flags: dict[str, int] = {}
    counts: dict[str, int] = {}
    not_comparable: list[str] = []
    for row in body[1:]:
        if not row:
            continue
        mid, category, confidence, concern, outcomes, evidence, detail = row
        counts.setdefault(category, 0)
        flag = 1 if concern == "Concern" else 0
        flags[mid] = flag
        counts[category] += flag
        if concern == "NotComparable":
            not_comparable.append(mid)
        if outcomes:
            verdicts[mid] = {
                "measurement_id": mid,
                "outcomes": json.loads(outcomes),
                "evidence": json.loads(evidence),
                "confidence": confidence,
                "detail": json.loads(detail),
            }
    doc["verdicts"] = verdicts
    doc["matrix"] = {
        "category_counts": counts,
        "total": sum(counts.values()),
        "flags": flags,
        "not_comparable": not_comparable,
    }
    return doc
