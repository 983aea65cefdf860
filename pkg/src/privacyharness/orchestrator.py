"""The operator-facing facade: run lifecycle, scoring, and report rendering."""

from __future__ import annotations

import json
from pathlib import Path

from . import reports
from .baselines import BaselineMissingError, BaselineStore, baseline_from_verdicts
from .canary import IdentityStatement, PlaceholderList, instantiate_identity
from .engine import classify_run
from .gates import GateStore
from .prompts import PromptEntry, build_bundle
from .realms import DeploymentConfig, default_config
from .registry import Registry, default_registry
from .runs import Channel, Run, RunStatus, RunStore, UnknownRunError
from .scoring import BaselineProfile, Verdict, VulnerabilityMatrix, aggregate_matrix
from .server import CorpusServer
from .telemetry import EventStore, Observed, TelemetryCollector


class NoEventsError(RuntimeError):
    pass


class NotScoredError(RuntimeError):
    pass


class RunNotActiveError(RuntimeError):
    pass


class Orchestrator:
    def __init__(
        self,
        data_dir: str | Path,
        config: DeploymentConfig | None = None,
        registry: Registry | None = None,
    ):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.config = config or default_config()
        self.registry = registry or default_registry()
        self.store = EventStore(self.data_dir)
        self.runs = RunStore(self.data_dir, token_ttl_seconds=self.config.token_ttl_seconds)
        self.baselines = BaselineStore(self.data_dir)
        self.gates = GateStore(self.data_dir)
        self.collector = TelemetryCollector(
            self.store,
            token_resolver=self.runs.resolve_token,
            operator_assisted=self.registry.operator_assisted,
        )
        self.identity = self._load_identity()
        self.placeholders = PlaceholderList.default()

    def _load_identity(self) -> IdentityStatement:
        if self.config.identity_file:
            with open(self.config.identity_file, encoding="utf-8") as fh:
                overrides = json.load(fh)
            return IdentityStatement(**overrides)
        return instantiate_identity()

    # -- runs -------------------------------------------------------------------

    def create_run(
        self,
        tool_name: str,
        channel: Channel,
        *,
        measurement_selection: tuple[str, ...] = (),
        persistence_group: str = "",
        tool_meta: dict | None = None,
    ) -> tuple[Run, list[PromptEntry]]:
        run = self.runs.create_run(
            tool_name,
            channel,
            measurement_selection=measurement_selection,
            persistence_group=persistence_group,
            tool_meta=tool_meta,
        )
        bundle = build_bundle(run, self.config, self.registry, self.identity)
        return run, bundle

    def observe(
        self,
        run_id: str,
        measurement_id: str,
        outcome: str,
        *,
        subject: str = "",
        note: str = "",
        observer: str = "operator",
    ):
        self.runs.get(run_id)
        return self.collector.record_manual_observation(
            run_id,
            measurement_id=measurement_id,
            observed=Observed(outcome),
            subject=subject,
            note=note,
            observer=observer,
        )

    # -- baselines ----------------------------------------------------------------

    def import_baseline(self, source: str, baseline_id: str | None = None) -> BaselineProfile:
        """Source is a scored run id, a shipped baseline name, or a fixture path."""
        try:
            run = self.runs.get(source)
        except UnknownRunError:
            run = None
        if run is not None:
            if run.status not in (RunStatus.SCORED, RunStatus.ARCHIVED):
                from .baselines import UnscoredRunError

                raise UnscoredRunError(f"run {source} is {run.status.value}, not scored")
            verdicts = self.load_verdicts(source)
            profile = baseline_from_verdicts(baseline_id or f"run-{source}", verdicts)
            self.baselines.save(profile)
            return profile
        if Path(source).exists():
            return self.baselines.import_fixture_file(source, baseline_id)
        return self.baselines.import_shipped(source)

    # -- scoring -------------------------------------------------------------------

    def score_run(self, run_id: str, baseline_ref: str) -> VulnerabilityMatrix:
        run = self.runs.get(run_id)
        if run.status is RunStatus.CREATED:
            raise RunNotActiveError(f"run {run_id} has no activity yet")
        events = self.store.events(run_id)
        if not events:
            raise NoEventsError(run_id)
        baseline = self.baselines.load(baseline_ref)

        session1_events = None
        partner = self.runs.persistence_partner(run)
        if partner is not None:
            session1_events = self.store.events(partner.run_id)

        verdicts = classify_run(
            events=events,
            observations=self.store.observations(run_id),
            annotations=run.tool_meta,
            registry=self.registry,
            channel=run.channel.value,
            identity=self.identity,
            placeholders=self.placeholders,
            session1_events=session1_events,
            region_zip_prefixes=self.config.region_zip_prefixes,
        )
        matrix = aggregate_matrix(verdicts, baseline, self.registry)

        run_dir = self.store.run_dir(run_id)
        (run_dir / "verdicts.json").write_text(
            json.dumps({m: v.to_record() for m, v in verdicts.items()},
                       indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        (run_dir / "matrix.json").write_text(
            json.dumps(matrix.to_record(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        self.runs.set_baseline_ref(run_id, baseline.baseline_id)
        if run.status is RunStatus.ACTIVE:
            self.runs.transition(run_id, RunStatus.SCORED, actor="scoring-engine")
        return matrix

    def load_verdicts(self, run_id: str) -> dict[str, Verdict]:
        path = self.store.run_dir(run_id) / "verdicts.json"
        if not path.exists():
            raise NotScoredError(run_id)
        raw = json.loads(path.read_text(encoding="utf-8"))
        return {mid: Verdict.from_record(record) for mid, record in raw.items()}

    def load_matrix(self, run_id: str) -> VulnerabilityMatrix:
        path = self.store.run_dir(run_id) / "matrix.json"
        if not path.exists():
            raise NotScoredError(run_id)
        return VulnerabilityMatrix.from_record(json.loads(path.read_text(encoding="utf-8")))

    # -- reports ---------------------------------------------------------------------

    def render_report(self, run_id: str, fmt: str) -> str:
        run = self.runs.get(run_id)
        if run.status not in (RunStatus.SCORED, RunStatus.ARCHIVED):
            raise NotScoredError(run_id)
        verdicts = self.load_verdicts(run_id)
        matrix = self.load_matrix(run_id)
        baseline = self.baselines.load(run.baseline_ref)
        doc = reports.build_document(run, verdicts, matrix, baseline, self.registry)
        if fmt == "json":
            return reports.to_json(doc)
        if fmt == "md":
            return reports.to_markdown(doc)
        if fmt == "csv":
            return reports.to_csv(doc, self.registry)
        raise ValueError(f"unknown report format {fmt!r}")

    # -- server ----------------------------------------------------------------------

    def build_server(self, *, bind_host: str = "127.0.0.1") -> CorpusServer:
        return CorpusServer(
            self.config,
            data_dir=self.data_dir,
            collector=self.collector,
            gates=self.gates,
            token_resolver=self.runs.token_info,
            group_resolver=self.runs.group_info,
            certs_dir=self.data_dir / self.config.certs_dir,
            static_dir=self.config.static_dir,
            bind_host=bind_host,
        )
