"""Command-line front door: serve, score, synth, export, report.

JSON goes to stdout for pipeline use; human-readable tables go to stderr
under --pretty.  Exit codes: 0 success, 1 scoring/domain error, 2
environment error.
"""
from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click

from .model import ConfigError, Task, TrialConfig, config_from_dict
from .scoring import bundle_from_jsonl, score_bundle
from .store import SessionStore, StoreError
from .synthetic import OperatorModel, synthesize_trial

EXIT_DOMAIN = 1
EXIT_ENV = 2


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_config(path: str | None, task: str | None = None, seed: int | None = None) -> TrialConfig:
    if path:
        try:
            cfg = config_from_dict(json.loads(Path(path).read_text()))
        except OSError as exc:
            _fail(EXIT_ENV, f"cannot read config: {exc}")
        except (ConfigError, KeyError, ValueError) as exc:
            _fail(EXIT_DOMAIN, f"bad config: {exc}")
    else:
        cfg = TrialConfig()
    overrides = {}
    if task:
        overrides["task"] = Task(task)
    if seed is not None:
        overrides["rng_seed"] = seed
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    return cfg


def _open_store(path: str, must_exist: bool = False) -> SessionStore:
    p = Path(path)
    if must_exist and not p.exists():
        _fail(EXIT_ENV, f"store not found: {path}")
    if not p.parent.exists():
        _fail(EXIT_ENV, f"store directory does not exist: {p.parent}")
    try:
        return SessionStore(path)
    except Exception as exc:
        _fail(EXIT_ENV, f"cannot open store: {exc}")


def _print_report(report_dict: dict, pretty: bool) -> None:
    click.echo(json.dumps(report_dict, sort_keys=True))
    if pretty:
        click.echo("measure            value", err=True)
        for name in ("t_d", "r_p", "t_s", "a_r", "a_s", "s", "v_avg", "t_ob"):
            v = report_dict.get(name)
            shown = "not defined" if v is None else f"{v:.6g}"
            click.echo(f"{name:<18} {shown}", err=True)


@click.group()
def main() -> None:
    """Interface-skill assessment engine."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True, type=int)
@click.option("--store", "store_path", default="skillbench.db", show_default=True)
@click.option("--config", "config_path", default=None, help="Default trial config JSON.")
@click.option("--time-scale", default=1.0, show_default=True, type=float,
              help="Wall seconds per session second (below 1 = faster than real time).")
def serve(host: str, port: int, store_path: str, config_path: str | None, time_scale: float) -> None:
    """Run the live session service."""
    from .server import run_server

    cfg = _load_config(config_path)
    parent = Path(store_path).parent
    if not parent.exists():
        _fail(EXIT_ENV, f"store directory does not exist: {parent}")
    try:
        run_server(host, port, store_path, cfg, time_scale)
    except OSError as exc:
        _fail(EXIT_ENV, f"cannot bind {host}:{port}: {exc}")


@main.command()
@click.option("--store", "store_path", default=None, help="Score a stored trial from this store.")
@click.option("--trial-id", default=None, type=int)
@click.option("--input", "input_path", default=None, help="Score a raw JSON-lines trial file.")
@click.option("--pretty", is_flag=True, help="Also print a table to stderr.")
def score(store_path: str | None, trial_id: int | None, input_path: str | None, pretty: bool) -> None:
    """Batch-score a trial and print its outcome report as JSON."""
    if input_path is not None:
        try:
            text = Path(input_path).read_text()
        except OSError as exc:
            _fail(EXIT_ENV, f"cannot read input: {exc}")
        try:
            bundle = bundle_from_jsonl(text)
        except ConfigError as exc:
            _fail(EXIT_DOMAIN, str(exc))
    elif store_path is not None and trial_id is not None:
        store = _open_store(store_path, must_exist=True)
        try:
            bundle = store.load_trial(trial_id)
        except StoreError as exc:
            _fail(EXIT_DOMAIN, str(exc))
        finally:
            store.close()
    else:
        _fail(EXIT_DOMAIN, "need either --input FILE or --store PATH with --trial-id N")
    try:
        report = score_bundle(bundle)
    except (ConfigError, ValueError) as exc:
        _fail(EXIT_DOMAIN, f"scoring failed: {exc}")
    _print_report(report.to_dict(), pretty)


@main.command()
@click.option("--task", type=click.Choice([t.value for t in Task]), default=Task.COMMAND_FOLLOWING.value,
              show_default=True)
@click.option("--store", "store_path", default="skillbench.db", show_default=True)
@click.option("--user", default="synthetic", show_default=True)
@click.option("--config", "config_path", default=None)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--delay", default=0.3, show_default=True, type=float, help="Reaction delay [s].")
@click.option("--angular-noise", default=0.0, show_default=True, type=float, help="Direction noise SD [rad].")
@click.option("--magnitude-noise", default=0.0, show_default=True, type=float)
@click.option("--lapse-rate", default=0.0, show_default=True, type=float)
@click.option("--pretty", is_flag=True)
def synth(task: str, store_path: str, user: str, config_path: str | None, seed: int,
          delay: float, angular_noise: float, magnitude_noise: float, lapse_rate: float,
          pretty: bool) -> None:
    """Generate, score and persist a synthetic trial."""
    cfg = _load_config(config_path, task=task, seed=seed)
    try:
        model = OperatorModel(
            reaction_delay=delay,
            angular_noise_sd=angular_noise,
            magnitude_noise_sd=magnitude_noise,
            lapse_rate=lapse_rate,
            seed=seed,
        )
    except ValueError as exc:
        _fail(EXIT_DOMAIN, f"bad operator parameters: {exc}")
    try:
        bundle = synthesize_trial(cfg, model, user=user)
    except ConfigError as exc:
        _fail(EXIT_DOMAIN, str(exc))
    store = _open_store(store_path)
    try:
        trial_id = store.persist_trial(bundle)
    except StoreError as exc:
        store.close()
        _fail(EXIT_DOMAIN, str(exc))
    store.close()
    out = bundle.report.to_dict()
    out["trial_id"] = trial_id
    _print_report(out, pretty)


@main.command()
@click.option("--store", "store_path", required=True)
@click.option("--user", default=None, help="Restrict to one user label.")
@click.option("--format", "fmt", type=click.Choice(["sql", "jsonl", "csv-summary"]), required=True)
@click.option("--trial-id", default=None, type=int, help="Trial for jsonl export.")
@click.option("--out", "out_path", default=None, help="Output file (default stdout).")
def export(store_path: str, user: str | None, fmt: str, trial_id: int | None, out_path: str | None) -> None:
    """Export stored data as SQL, JSON lines, or a CSV summary."""
    store = _open_store(store_path, must_exist=True)
    try:
        if fmt == "sql":
            text = store.export_sql(user)
        elif fmt == "csv-summary":
            text = store.export_csv_summary(user)
        else:
            if trial_id is None:
                ids = store.trial_ids(user)
                if len(ids) != 1:
                    _fail(EXIT_DOMAIN, "jsonl export needs --trial-id when the store has several trials")
                trial_id = ids[0]
            text = store.export_jsonl(trial_id)
    except StoreError as exc:
        _fail(EXIT_DOMAIN, str(exc))
    finally:
        store.close()
    if out_path:
        try:
            Path(out_path).write_text(text, encoding="utf-8")
        except OSError as exc:
            _fail(EXIT_ENV, f"cannot write {out_path}: {exc}")
        click.echo(out_path)
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--store", "store_path", required=True)
@click.option("--user", required=True)
@click.option("--out-dir", default="report", show_default=True)
def report(store_path: str, user: str, out_dir: str) -> None:
    """Render longitudinal figures and the summary table for one user."""
    from .report import render_user_report

    store = _open_store(store_path, must_exist=True)
    try:
        written = render_user_report(store, user, out_dir)
    except StoreError as exc:
        _fail(EXIT_DOMAIN, str(exc))
    except OSError as exc:
        _fail(EXIT_ENV, f"cannot write report: {exc}")
    finally:
        store.close()
    for path in written:
        click.echo(path)


if __name__ == "__main__":
    main()
