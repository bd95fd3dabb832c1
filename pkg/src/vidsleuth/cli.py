"""Command-line interface."""

from __future__ import annotations

import json
import sys
import threading
import time
from pathlib import Path

import click

from . import benchmark as bench_mod
from .service import (
    AppConfig,
    RunStatus,
    SleuthService,
    build_deps,
    load_config,
)
from .service.posting import ApiPoster


def _service(
    config: AppConfig,
    *,
    replay: str | None = None,
    record: str | None = None,
    synchronous: bool = True,
) -> SleuthService:
    deps = build_deps(config, replay_dir=replay, record_dir=record)
    return SleuthService(config, deps, poster=ApiPoster(), synchronous=synchronous)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Path to the YAML config file (or set $VIDSLEUTH_CONFIG).")
@click.option("--data-dir", default=None, help="Override the data directory.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None, data_dir: str | None) -> None:
    """Fact-check a video's captions, draft grounded comments, run benchmarks."""
    config = load_config(config_path)
    if data_dir:
        config.data_dir = data_dir
    ctx.obj = config


@main.command()
@click.argument("video_id")
@click.option("--theme", default=None, help="Corpus theme for comment grounding.")
@click.option("--no-bender", is_flag=True, help="Stop after the fact-check report.")
@click.option("--replay", type=click.Path(exists=True), default=None,
              help="Run purely from recorded transcripts in this directory.")
@click.option("--record", type=click.Path(), default=None,
              help="Record every model/backend response into this directory.")
@click.pass_obj
def run(config: AppConfig, video_id: str, theme: str | None, no_bender: bool,
        replay: str | None, record: str | None) -> None:
    """Run the full pipeline for VIDEO_ID."""
    service = _service(config, replay=replay, record=record)
    run_id = service.start_run(video_id, theme, run_bender=not no_bender)
    result = service.store.get(run_id)
    click.echo(f"run:    {run_id}")
    click.echo(f"status: {result.status.value}")
    if result.error:
        click.echo(f"error:  {result.error}", err=True)
    run_dir = service.store.run_dir(run_id)
    for name in ("report.md", "report.txt", "report.json"):
        if (run_dir / name).exists():
            click.echo(f"report: {run_dir / name}")
    for ref in result.draft_refs:
        click.echo(f"draft:  {run_dir / ref}")
    if result.status is RunStatus.FAILED:
        sys.exit(1)


@main.command()
@click.argument("dataset", type=click.Choice(["fever", "averitec", "both"]))
@click.option("--path", "paths", multiple=True, required=True,
              help="Dataset file; pass twice (fever then averitec) for 'both'.")
@click.option("-n", "sample_n", type=int, default=None,
              help="Records per dataset (defaults: 50 FEVER, 55 AVeriTeC).")
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--replay", type=click.Path(exists=True), default=None)
@click.option("--record", type=click.Path(), default=None)
@click.option("--out", type=click.Path(), default=None, help="Directory for result files.")
@click.pass_obj
def bench(config: AppConfig, dataset: str, paths: tuple[str, ...], sample_n: int | None,
          seed: int, replay: str | None, record: str | None, out: str | None) -> None:
    """Run the benchmark protocol over FEVER and/or AVeriTeC samples."""
    wanted = ["fever", "averitec"] if dataset == "both" else [dataset]
    if len(paths) != len(wanted):
        raise click.UsageError(f"{dataset} needs {len(wanted)} --path argument(s)")
    records = []
    for name, path in zip(wanted, paths):
        if name == "fever":
            records += bench_mod.load_fever(path, sample_n if sample_n is not None else 50, seed)
        else:
            records += bench_mod.load_averitec(path, sample_n if sample_n is not None else 55, seed)
    deps = build_deps(config, replay_dir=replay, record_dir=record)
    assessor = bench_mod.pipeline_assessor(
        deps.model, deps.retrievers, k=config.retrieval_k, cache=deps.cache
    )
    table = bench_mod.evaluate(records, assessor)
    rendered = bench_mod.render_table(table)
    click.echo(rendered)
    out_dir = Path(out) if out else Path(config.data_dir) / "bench"
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = table.to_json()
    payload["seed"] = seed
    payload["datasets"] = wanted
    (out_dir / "results.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8"
    )
    (out_dir / "table.txt").write_text(rendered + "\n", encoding="utf-8")
    click.echo(f"results: {out_dir / 'results.json'}")


@main.command()
@click.argument("run_id")
@click.option("--approve", is_flag=True, help="Approve the latest draft before posting.")
@click.option("--dry-run", is_flag=True, help="Show what would be posted; no network.")
@click.pass_obj
def post(config: AppConfig, run_id: str, approve: bool, dry_run: bool) -> None:
    """Queue the run's latest draft for posting (requires approval)."""
    from .errors import VidsleuthError

    service = _service(config)
    try:
        record = service.store.get(run_id)
        if not record.draft_refs:
            raise click.ClickException(f"run {run_id} has no drafts")
        draft_id = Path(record.draft_refs[-1]).stem
        if approve:
            service.approve(draft_id)
        outcome = service.post_draft(draft_id, dry_run=dry_run)
    except VidsleuthError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(json.dumps(outcome, indent=2, sort_keys=True))


@main.command()
@click.argument("run_id")
@click.option("--format", "fmt", type=click.Choice(["md", "txt", "json"]), default="md",
              show_default=True)
@click.pass_obj
def report(config: AppConfig, run_id: str, fmt: str) -> None:
    """Print a run's fact-check report."""
    from .errors import VidsleuthError

    service = _service(config)
    try:
        content, _ = service.report(run_id, fmt)
    except VidsleuthError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(content)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8571, show_default=True)
@click.option("--dispatch-interval", default=30.0, show_default=True,
              help="Seconds between posting-queue dispatch sweeps.")
@click.option("--console-dir", type=click.Path(exists=True), default=None,
              help="Built operator console to serve at /console (default: ./frontend if present).")
@click.pass_obj
def serve(config: AppConfig, host: str, port: int, dispatch_interval: float,
          console_dir: str | None) -> None:
    """Serve the operator HTTP API (and drive the posting queue)."""
    import uvicorn
    from fastapi.staticfiles import StaticFiles

    from .service.api import create_app

    service = _service(config, synchronous=False)
    service.store.recover_interrupted()

    def dispatcher() -> None:
        while True:
            time.sleep(dispatch_interval)
            try:
                service.dispatch_now()
            except Exception:
                pass

    threading.Thread(target=dispatcher, daemon=True).start()
    app = create_app(service)
    console = Path(console_dir) if console_dir else Path("frontend")
    if (console / "index.html").exists():
        app.mount("/console", StaticFiles(directory=console, html=True), name="console")
        click.echo(f"console: http://{host}:{port}/console/")
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
