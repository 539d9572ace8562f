"""Batch experiment execution and the switch-timing benchmark.

``run_experiment`` replays every scenario under every requested mode
with identical scripts and seed, writes one report per (scenario, mode)
plus an aggregate document, and computes the prevention rate over the
scenarios that retarget under the vanilla jar. All report content is
deterministic; wall-clock numbers only ever appear in bench output.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .catalog import ProfileCatalog
from .decision import Thresholds
from .serde import dump_stable
from .store import ActiveContext, CookieRecord, activate, switch
from .tangle import tangle_summary
from .tracksim import MODES, ScenarioScript, World, run_scenario

RETARGETED = "retargeted"


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce one batch run."""

    world_file: Path
    scenario_files: list[Path]
    modes: list[str]
    seed: int = 0
    thresholds: Thresholds = field(default_factory=Thresholds)

    def validate(self) -> None:
        if not self.scenario_files:
            raise ValueError("experiment needs at least one scenario")
        if not self.modes:
            raise ValueError("experiment needs at least one mode")
        for mode in self.modes:
            if mode not in MODES:
                raise ValueError(f"unknown mode {mode!r}")


def report_filename(scenario: str, mode: str) -> str:
    return f"{scenario}__{mode}.json"


def run_experiment(spec: ExperimentSpec, out_dir: str | Path | None = None) -> dict:
    """Run the whole scenario grid and return the aggregate report.

    When ``out_dir`` is given, per-scenario reports land under
    ``<out_dir>/reports/`` and the aggregate under
    ``<out_dir>/experiment.json``.
    """
    spec.validate()
    world = World.load(spec.world_file)
    scenarios = sorted(
        (ScenarioScript.load(p) for p in spec.scenario_files), key=lambda s: s.name
    )
    reports_dir = None
    if out_dir is not None:
        reports_dir = Path(out_dir) / "reports"
        reports_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    for scenario in scenarios:
        row: dict = {"name": scenario.name}
        for mode in spec.modes:
            report = run_scenario(
                world, scenario, mode, seed=spec.seed, thresholds=spec.thresholds
            )
            if reports_dir is not None:
                dump_stable(report, reports_dir / report_filename(scenario.name, mode))
            row[mode] = {
                "scoring": report["scoring"],
                "profile_changes": report["profile_changes"],
                "tangle": tangle_summary(report),
                "timing": report["timing"],
            }
        rows.append(row)

    aggregate = {
        "format": 1,
        "seed": spec.seed,
        "modes": list(spec.modes),
        "thresholds": {
            "regular_visits_per_week": spec.thresholds.regular_visits_per_week,
            "session_active_seconds": spec.thresholds.session_active_seconds,
            "interaction_events": spec.thresholds.interaction_events,
            "prune_window_days": spec.thresholds.prune_window_days,
        },
        "scenarios": rows,
        "prevention": _prevention(rows, spec.modes),
    }
    if out_dir is not None:
        dump_stable(aggregate, Path(out_dir) / "experiment.json")
    return aggregate


def _scoring_shown(row: dict, mode: str) -> str | None:
    scoring = row.get(mode, {}).get("scoring")
    return scoring["shown"] if scoring else None


def _prevention(rows: list[dict], modes: list[str]) -> dict | None:
    """Prevented / retargeted-under-vanilla, when both modes were run."""
    if "vanilla" not in modes or "priveshield" not in modes:
        return None
    vanilla_hits = [r for r in rows if _scoring_shown(r, "vanilla") == RETARGETED]
    prevented = [
        r for r in vanilla_hits if _scoring_shown(r, "priveshield") != RETARGETED
    ]
    total = len(vanilla_hits)
    return {
        "retargeted_under_vanilla": total,
        "prevented": len(prevented),
        "rate": (len(prevented) / total) if total else None,
    }


# ---------------------------------------------------------------------------
# Switch-timing benchmark
# ---------------------------------------------------------------------------

BENCH_HOST_A = "bench-a.example"
BENCH_HOST_B = "bench-b.example"


def _synthetic_partition_cookies(count: int) -> list[CookieRecord]:
    return [
        CookieRecord(
            name=f"c{i:05d}",
            value=f"v{i:05d}",
            domain=f".t{i % 97}.{BENCH_HOST_A}",
            set_by=BENCH_HOST_A,
        )
        for i in range(count)
    ]


def _stats(samples_us: list[float]) -> dict:
    return {
        "samples": len(samples_us),
        "mean_us": sum(samples_us) / len(samples_us),
        "min_us": min(samples_us),
        "max_us": max(samples_us),
    }


def run_bench(cookie_counts: list[int], repetitions: int = 20) -> dict:
    """Time resolve+switch cycles over synthetic partitions.

    ``resolve_and_switch`` covers the whole backup-and-load cycle into a
    profile holding the given number of cookies; ``partition_load``
    isolates the load half. Wall-clock numbers, machine-dependent by
    nature.
    """
    now = datetime.now(timezone.utc)
    results = []
    for count in cookie_counts:
        catalog = ProfileCatalog.bootstrap(now)
        pid_a = catalog.create_manual("bench-a", [BENCH_HOST_A], now)
        catalog.create_manual("bench-b", [BENCH_HOST_B], now)
        loaded = catalog.get(pid_a)
        for cookie in _synthetic_partition_cookies(count):
            loaded.partition.cookies[cookie.key] = cookie

        ctx: ActiveContext = activate(catalog, catalog.default_profile.id)
        switch_samples: list[float] = []
        for _ in range(repetitions):
            for host in (BENCH_HOST_A, BENCH_HOST_B):
                t0 = time.perf_counter()
                target = catalog.resolve(host)
                ctx = switch(ctx, target, catalog)
                switch_samples.append((time.perf_counter() - t0) * 1e6)

        load_samples: list[float] = []
        for _ in range(repetitions):
            t0 = time.perf_counter()
            loaded.partition.clone()
            load_samples.append((time.perf_counter() - t0) * 1e6)

        results.append(
            {
                "cookies": count,
                "resolve_and_switch": _stats(switch_samples),
                "partition_load": _stats(load_samples),
            }
        )
    return {"repetitions": repetitions, "results": results}
