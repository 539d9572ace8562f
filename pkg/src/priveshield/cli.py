"""Command-line harness: scan-history, run, tangle, bench, profiles.

Exit codes: 0 success, 2 input error, 3 scenario failure, 64 usage.
"""

from __future__ import annotations

import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import click

from . import fixtures
from .catalog import ProfileCatalog
from .decision import DecisionEngine, Thresholds, read_history_jsonl
from .errors import (
    CannotDeleteDefaultError,
    CatalogFormatError,
    DuplicateProfileError,
    MalformedScriptError,
    ProfileNotFoundError,
    UnknownProfileError,
    UnknownSiteError,
)
from .harness import ExperimentSpec, run_bench, run_experiment
from .serde import dump_stable, parse_ts
from .tangle import GLOBAL_SCOPE, build, export_graph, tangle_summary
from .tracksim import MODES

EXIT_INPUT = 2
EXIT_SCENARIO = 3
EXIT_USAGE = 64

THRESHOLD_KEYS = (
    "regular_visits_per_week",
    "session_active_seconds",
    "interaction_events",
    "prune_window_days",
)


class InputError(click.ClickException):
    exit_code = EXIT_INPUT


class ScenarioError(click.ClickException):
    exit_code = EXIT_SCENARIO


def data_dir() -> Path:
    return Path(os.environ.get("PRIVESHIELD_DATA_DIR", "~/.priveshield")).expanduser()


def default_catalog_path() -> Path:
    return data_dir() / "catalog.json"


def parse_threshold_overrides(pairs: tuple[str, ...]) -> Thresholds:
    values: dict[str, float] = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep or key not in THRESHOLD_KEYS:
            raise click.UsageError(
                f"--thresholds expects <key>=<value> with key in {', '.join(THRESHOLD_KEYS)}"
            )
        values[key] = float(raw)
    defaults = Thresholds()
    try:
        return Thresholds(
            regular_visits_per_week=int(
                values.get("regular_visits_per_week", defaults.regular_visits_per_week)
            ),
            session_active_seconds=values.get(
                "session_active_seconds", defaults.session_active_seconds
            ),
            interaction_events=int(
                values.get("interaction_events", defaults.interaction_events)
            ),
            prune_window_days=values.get("prune_window_days", defaults.prune_window_days),
        )
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc


def load_catalog(path: Path, create: bool = True) -> ProfileCatalog:
    if path.exists():
        try:
            return ProfileCatalog.load(path)
        except CatalogFormatError as exc:
            raise InputError(f"cannot read catalog {path}: {exc}") from exc
    if not create:
        raise InputError(f"catalog file not found: {path}")
    return ProfileCatalog.bootstrap(datetime.now(timezone.utc))


def save_catalog(catalog: ProfileCatalog, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    catalog.save(path)


@click.group()
def cli() -> None:
    """Profile-isolation engine with a deterministic ad-ecosystem simulator."""


@cli.command("scan-history")
@click.argument("history_file", type=click.Path(path_type=Path))
@click.option("--catalog", "catalog_path", type=click.Path(path_type=Path), default=None)
@click.option(
    "--thresholds", "overrides", multiple=True, help="Override, e.g. regular_visits_per_week=10"
)
@click.option("--now", "now_raw", default=None, help="Scan reference time (ISO-8601 UTC)")
def cmd_scan_history(
    history_file: Path, catalog_path: Path | None, overrides: tuple[str, ...], now_raw: str | None
) -> None:
    """Apply the history scan to a catalog and print the changes."""
    catalog_path = catalog_path or default_catalog_path()
    thresholds = parse_threshold_overrides(overrides)
    now = parse_ts(now_raw) if now_raw else datetime.now(timezone.utc)
    try:
        entries, bad_lines = read_history_jsonl(history_file)
    except OSError as exc:
        raise InputError(f"cannot read history file: {exc}") from exc
    for lineno, reason in bad_lines:
        click.echo(f"line {lineno}: {reason}", err=True)
    catalog = load_catalog(catalog_path)
    engine = DecisionEngine(catalog, thresholds)
    result = engine.scan_history(entries, now)
    for change in result.changes:
        click.echo(str(change))
    save_catalog(catalog, catalog_path)


@cli.command("run")
@click.option(
    "--world",
    "world_file",
    type=click.Path(path_type=Path),
    default=None,
    help="World definition (defaults to the bundled fixture world)",
)
@click.option(
    "--scenario",
    "scenario_files",
    type=click.Path(path_type=Path),
    multiple=True,
    help="Scenario script; repeatable (defaults to the bundled suite)",
)
@click.option(
    "--scenario-dir",
    type=click.Path(path_type=Path),
    default=None,
    help="Directory of scenario scripts",
)
@click.option("--mode", "modes", multiple=True, type=click.Choice(MODES))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--thresholds", "overrides", multiple=True)
def cmd_run(
    world_file: Path | None,
    scenario_files: tuple[Path, ...],
    scenario_dir: Path | None,
    modes: tuple[str, ...],
    seed: int,
    out_dir: Path,
    overrides: tuple[str, ...],
) -> None:
    """Run scenarios under the requested modes and write reports."""
    if not modes:
        raise click.UsageError("at least one --mode is required")
    paths = list(scenario_files)
    if scenario_dir is not None:
        paths.extend(sorted(scenario_dir.glob("*.json")))
    if not paths:
        paths = fixtures.bundled_scenario_paths()
    spec = ExperimentSpec(
        world_file=world_file or fixtures.bundled_world_path(),
        scenario_files=paths,
        modes=list(modes),
        seed=seed,
        thresholds=parse_threshold_overrides(overrides),
    )
    try:
        aggregate = run_experiment(spec, out_dir)
    except (UnknownSiteError, MalformedScriptError) as exc:
        raise ScenarioError(f"scenario failed: {exc}") from exc
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        raise InputError(f"cannot run experiment: {exc}") from exc
    for row in aggregate["scenarios"]:
        shown = {
            mode: (row[mode]["scoring"] or {}).get("shown", "-") for mode in modes
        }
        summary = " ".join(f"{mode}={shown[mode]}" for mode in modes)
        click.echo(f"{row['name']}: {summary}")
    prevention = aggregate["prevention"]
    if prevention is not None:
        click.echo(
            f"prevention: {prevention['prevented']}/{prevention['retargeted_under_vanilla']}"
            f" rate={prevention['rate']}"
        )
    click.echo(f"reports written to {out_dir}")


@cli.command("tangle")
@click.argument("report_file", type=click.Path(path_type=Path))
@click.option(
    "--scope",
    default="all",
    show_default=True,
    help='"global", "all", or a profile id from the report',
)
@click.option("--export", "export_path", type=click.Path(path_type=Path), default=None)
def cmd_tangle(report_file: Path, scope: str, export_path: Path | None) -> None:
    """Print tangle factors for a scenario report."""
    try:
        report = json.loads(Path(report_file).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read report {report_file}: {exc}") from exc
    summary = tangle_summary(report)
    profile_names = {p["id"]: p.get("name", p["id"]) for p in report.get("profiles", [])}

    def fmt(result: dict) -> str:
        return str(result["value"]) + ("" if result["exact"] else " (approximate)")

    if scope in (GLOBAL_SCOPE, "all"):
        click.echo(f"global tangle factor: {fmt(summary['global'])}")
        if scope == "all":
            for pid, result in summary["per_profile"].items():
                click.echo(
                    f"profile {pid} ({profile_names.get(pid, '?')}): {fmt(result)}"
                )
    else:
        if scope not in summary["per_profile"]:
            raise InputError(f"report has no contacts for profile {scope!r}")
        click.echo(f"profile {scope} tangle factor: {fmt(summary['per_profile'][scope])}")
    if export_path is not None:
        graph_scope = scope if scope not in ("all",) else GLOBAL_SCOPE
        try:
            export_graph(build(report, graph_scope), export_path)
        except UnknownProfileError as exc:
            raise InputError(str(exc)) from exc
        click.echo(f"graph exported to {export_path}")


@cli.command("bench")
@click.option(
    "--cookies",
    "cookie_counts",
    multiple=True,
    type=int,
    default=(0, 100, 1000),
    show_default=True,
)
@click.option("--repetitions", type=int, default=20, show_default=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None)
def cmd_bench(cookie_counts: tuple[int, ...], repetitions: int, out_path: Path | None) -> None:
    """Time profile switches over synthetic cookie partitions."""
    report = run_bench(list(cookie_counts), repetitions)
    for row in report["results"]:
        rs, pl = row["resolve_and_switch"], row["partition_load"]
        click.echo(
            f"cookies={row['cookies']}: resolve_and_switch mean={rs['mean_us']:.1f}us"
            f" min={rs['min_us']:.1f}us max={rs['max_us']:.1f}us |"
            f" partition_load mean={pl['mean_us']:.1f}us"
        )
    if out_path is not None:
        dump_stable(report, out_path)
        click.echo(f"timing report written to {out_path}")


@cli.group("profiles")
def cmd_profiles() -> None:
    """Inspect and edit a profile catalog."""


def _catalog_option(func):
    return click.option(
        "--catalog", "catalog_path", type=click.Path(path_type=Path), default=None
    )(func)


@cmd_profiles.command("list")
@_catalog_option
def profiles_list(catalog_path: Path | None) -> None:
    catalog = load_catalog(catalog_path or default_catalog_path())
    for profile in sorted(catalog.profiles.values(), key=lambda p: p.id):
        hosts = ",".join(sorted(profile.member_hosts)) or "-"
        click.echo(f"{profile.id}  {profile.kind.value:<12} {profile.name}  hosts={hosts}")
    click.echo(f"temporary_mode={'on' if catalog.temporary_mode else 'off'}")


@cmd_profiles.command("create-manual")
@click.argument("name")
@click.option("--host", "hosts", multiple=True, required=True)
@_catalog_option
def profiles_create_manual(name: str, hosts: tuple[str, ...], catalog_path: Path | None) -> None:
    catalog_path = catalog_path or default_catalog_path()
    catalog = load_catalog(catalog_path)
    try:
        pid = catalog.create_manual(name, list(hosts), datetime.now(timezone.utc))
    except DuplicateProfileError as exc:
        raise InputError(str(exc)) from exc
    save_catalog(catalog, catalog_path)
    click.echo(f"created {pid} ({name}) with hosts {','.join(hosts)}")


@cmd_profiles.command("delete")
@click.argument("ident")
@_catalog_option
def profiles_delete(ident: str, catalog_path: Path | None) -> None:
    catalog_path = catalog_path or default_catalog_path()
    catalog = load_catalog(catalog_path, create=False)
    profile = catalog.profiles.get(ident) or catalog.by_name(ident)
    if profile is None:
        raise InputError(f"no profile with id or name {ident!r}")
    try:
        catalog.delete_profile(profile.id)
    except (ProfileNotFoundError, CannotDeleteDefaultError) as exc:
        raise InputError(str(exc)) from exc
    save_catalog(catalog, catalog_path)
    click.echo(f"deleted {profile.id} ({profile.name})")


@cmd_profiles.command("temp-mode")
@click.argument("state", type=click.Choice(["on", "off"]))
@_catalog_option
def profiles_temp_mode(state: str, catalog_path: Path | None) -> None:
    catalog_path = catalog_path or default_catalog_path()
    catalog = load_catalog(catalog_path)
    catalog.temporary_mode = state == "on"
    save_catalog(catalog, catalog_path)
    click.echo(f"temporary_mode={state}")


def main(argv: list[str] | None = None) -> int:
    """Run the CLI, mapping errors onto the documented exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())
