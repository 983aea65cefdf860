"""Operator command line. Data lives under --data-dir (env: HARNESS_DATA_DIR)."""

from __future__ import annotations

import functools
import json
from pathlib import Path

import click

from . import fixtures as fixtures_mod
from .baselines import BaselineMissingError, FixtureSchemaViolationError, UnscoredRunError
from .certs import forge_deployment
from .orchestrator import NoEventsError, NotScoredError, Orchestrator, RunNotActiveError
from .prompts import render_bundle_text
from .realms import ConfigError, DeploymentConfig, default_config, dump_default_config, load_config
from .registry import default_registry, load_registry
from .runs import Channel, IllegalTransitionError, UnknownRunError
from .telemetry import NotOperatorAssistedError

_OPERATOR_ERRORS = (
    BaselineMissingError, FixtureSchemaViolationError, UnscoredRunError, ConfigError,
    NoEventsError, NotScoredError, RunNotActiveError, UnknownRunError,
    IllegalTransitionError, NotOperatorAssistedError, FileNotFoundError,
)


def friendly_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _OPERATOR_ERRORS as exc:
            raise click.ClickException(f"{type(exc).__name__.removesuffix('Error')}: {exc}") from exc

    return wrapper


def _load_config(path: str | None) -> DeploymentConfig:
    return load_config(path) if path else default_config()


def _orchestrator(ctx: click.Context) -> Orchestrator:
    params = ctx.obj
    config = _load_config(params["config"])
    registry = load_registry(params["registry"]) if params["registry"] else default_registry()
    return Orchestrator(params["data_dir"], config=config, registry=registry)


@click.group()
@click.option("--data-dir", envvar="HARNESS_DATA_DIR", default="harness-data",
              show_default=True, help="State directory (env: HARNESS_DATA_DIR).")
@click.option("--config", "config", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Deployment config file; defaults to the built-in deployment.")
@click.option("--registry", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Measurement registry override.")
@click.pass_context
def main(ctx, data_dir, config, registry):
    """Privacy-behavior test harness for browser agents."""
    ctx.obj = {"data_dir": Path(data_dir), "config": config, "registry": registry}


@main.command("init-config")
@click.option("--out", type=click.Path(dir_okay=False), default="deployment.json", show_default=True)
def init_config(out):
    """Write the default deployment config for editing."""
    Path(out).write_text(dump_default_config(), encoding="utf-8")
    click.echo(f"wrote {out}")


@main.command()
@click.pass_context
@friendly_errors
def forge(ctx):
    """Regenerate CA, per-realm certificates, and the revocation list."""
    orch = _orchestrator(ctx)
    out_dir = orch.data_dir / orch.config.certs_dir
    manifest = forge_deployment(orch.config, out_dir)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    click.echo(f"forged {len(manifest['realms'])} realm certificates into {out_dir}")
    click.echo(f"install {out_dir / 'ca.pem'} into the agent browser's trust store")


@main.command()
@click.option("--bind", default="127.0.0.1", show_default=True)
@click.pass_context
@friendly_errors
def serve(ctx, bind):
    """Start the corpus server (expects forged certificates)."""
    orch = _orchestrator(ctx)
    server = orch.build_server(bind_host=bind)
    server.start()
    click.echo(f"http  listening on {bind}:{server.http_port}")
    click.echo(f"https listening on {bind}:{server.https_port}")
    click.echo("Ctrl-C to stop")
    try:
        import signal

        signal.pause()
    except (KeyboardInterrupt, AttributeError):
        pass
    finally:
        server.stop()


@main.group()
def run():
    """Run lifecycle."""


@run.command("new")
@click.option("--tool", required=True, help="Agent under test (free text).")
@click.option("--channel", type=click.Choice([c.value for c in Channel]), default="control",
              show_default=True)
@click.option("--measurements", default="", help="Comma-separated measurement ids (default: all).")
@click.option("--persist-group", default="", help="Link two-session measurements into one group.")
@click.option("--annotate", "annotations", multiple=True, metavar="KEY=VALUE",
              help="Tool annotations (model_location=..., browser_location=...).")
@click.option("--bundle-out", type=click.Path(dir_okay=False), default=None,
              help="Also write the prompt bundle to a file.")
@click.pass_context
@friendly_errors
def run_new(ctx, tool, channel, measurements, persist_group, annotations, bundle_out):
    """Create a run, issue its token, and print the prompt bundle."""
    orch = _orchestrator(ctx)
    selection = tuple(m.strip() for m in measurements.split(",") if m.strip())
    meta = dict(a.split("=", 1) for a in annotations)
    new_run, bundle = orch.create_run(
        tool, Channel(channel), measurement_selection=selection, tool_meta=meta,
        persistence_group=persist_group,
    )
    text = render_bundle_text(bundle, new_run)
    click.echo(f"run_id: {new_run.run_id}")
    click.echo(f"token:  {new_run.token}")
    if bundle_out:
        Path(bundle_out).write_text(text, encoding="utf-8")
        click.echo(f"bundle: {bundle_out}")
    else:
        click.echo(text)


@run.command("list")
@click.pass_context
@friendly_errors
def run_list(ctx):
    orch = _orchestrator(ctx)
    for r in orch.runs.list_runs():
        click.echo(f"{r.run_id}  {r.status.value:8}  {r.channel.value:15}  {r.tool_name}")


@run.command("annotate")
@click.argument("run_id")
@click.argument("pairs", nargs=-1, required=True, metavar="KEY=VALUE...")
@click.pass_context
@friendly_errors
def run_annotate(ctx, run_id, pairs):
    """Attach vendor-documentation annotations to a run."""
    orch = _orchestrator(ctx)
    updates: dict = {}
    for pair in pairs:
        key, _, value = pair.partition("=")
        if key == "permission_no_access":
            updates[key] = [v for v in value.split("+") if v]
        elif key == "latest_major":
            updates[key] = int(value)
        else:
            updates[key] = value
    orch.runs.annotate(run_id, updates)
    click.echo(f"annotated {run_id}: {', '.join(sorted(updates))}")


@main.command()
@click.option("--run", "run_id", required=True)
@click.option("--measurement", required=True)
@click.option("--outcome", required=True,
              type=click.Choice(["WarningShown", "NoWarning", "AgentAskedUser", "AgentRefused",
                                 "AgentProceeded", "ContentSummarized", "NotLoaded"]))
@click.option("--subject", default="", help="Sub-key (certificate profile, banner variant, info type).")
@click.option("--note", default="")
@click.option("--observer", default="operator", show_default=True)
@click.pass_context
@friendly_errors
def observe(ctx, run_id, measurement, outcome, subject, note, observer):
    """Record a manual observation for an operator-assisted measurement."""
    orch = _orchestrator(ctx)
    obs = orch.observe(run_id, measurement, outcome, subject=subject, note=note, observer=observer)
    click.echo(f"recorded {obs.obs_id}")


@main.group()
def baseline():
    """Baseline profiles."""


@baseline.command("import")
@click.argument("source")
@click.option("--id", "baseline_id", default=None, help="Store under this baseline id.")
@click.pass_context
@friendly_errors
def baseline_import(ctx, source, baseline_id):
    """SOURCE is a scored run id, a shipped name (stock-chrome, stock-firefox), or a fixture path."""
    orch = _orchestrator(ctx)
    profile = orch.import_baseline(source, baseline_id)
    click.echo(f"imported baseline {profile.baseline_id} ({len(profile.outcomes)} measurements)")


@main.command()
@click.option("--run", "run_id", required=True)
@click.option("--baseline", "baseline_ref", required=True)
@click.pass_context
@friendly_errors
def score(ctx, run_id, baseline_ref):
    """Classify the run's evidence and compute its concern matrix."""
    orch = _orchestrator(ctx)
    matrix = orch.score_run(run_id, baseline_ref)
    for category, count in matrix.category_counts.items():
        click.echo(f"{category:12} {count}")
    click.echo(f"{'total':12} {matrix.total}")
    if matrix.not_comparable:
        click.echo(f"not comparable: {', '.join(matrix.not_comparable)}")


@main.command()
@click.option("--run", "run_id", required=True)
@click.option("--format", "fmt", type=click.Choice(["json", "md", "csv"]), default="json",
              show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.pass_context
@friendly_errors
def report(ctx, run_id, fmt, out):
    """Render the scored run as a report document."""
    orch = _orchestrator(ctx)
    text = orch.render_report(run_id, fmt)
    if out:
        Path(out).write_text(text, encoding="utf-8")
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)
        if not text.endswith("\n"):
            click.echo()


@main.group()
def fixtures():
    """Shipped evaluation fixtures."""


@fixtures.command("install")
@click.pass_context
@friendly_errors
def fixtures_install(ctx):
    """Import the published per-tool fixture runs for scoring."""
    orch = _orchestrator(ctx)
    run_ids = fixtures_mod.install_all(orch)
    for tool, run_id in run_ids.items():
        click.echo(f"{tool:22} {run_id}  (baseline: {fixtures_mod.baseline_for(tool)})")


@fixtures.command("score-all")
@click.pass_context
@friendly_errors
def fixtures_score_all(ctx):
    """Install and score every fixture; print the concern summary table."""
    orch = _orchestrator(ctx)
    run_ids = fixtures_mod.install_all(orch)
    categories = list(orch.registry.categories)
    click.echo("tool".ljust(24) + "  ".join(c[:10].rjust(11) for c in categories) + "  total".rjust(8))
    grand = 0
    for tool, run_id in run_ids.items():
        matrix = orch.score_run(run_id, fixtures_mod.baseline_for(tool))
        grand += matrix.total
        row = "".join(str(matrix.category_counts[c]).rjust(13) for c in categories)
        click.echo(f"{tool:22}{row}{str(matrix.total).rjust(8)}")
    click.echo(f"{'grand total':22}{str(grand).rjust(13 * len(categories) + 8)}")


if __name__ == "__main__":
    main()
