"""Bundled deterministic fixture suite: one world, 54 retargeting scenarios.

Ten shop categories are paired with publishers (9, 2, 3, 6, 4, 8, 7, 4,
8 and 3 of them respectively), drawn from a pool of 24 publisher sites
that are reused across categories. Every scenario browses all shops of
its category (four pages each, with clicks and a long dwell) and then
loads the publisher twice; the second publisher impression is the one
that scores. A history prelude marks each shop as regularly visited so
that isolation mode gives every shop its own history-based profile
before the first page loads.

The generated files are checked into ``priveshield/data``; regenerating
them with :func:`write_suite` is byte-stable.
"""

from __future__ import annotations

from pathlib import Path

from .serde import dump_stable, fmt_ts
from .tracksim import DEFAULT_START, ScenarioScript, World

DATA_DIR = Path(__file__).resolve().parent / "data"

HISTORY_VISITS = 50  # comfortably above the weekly regular-profile threshold

SHOPS_BY_CATEGORY: dict[str, list[str]] = {
    "running_shoes": ["nike.example", "reebok.example", "adidas.example"],
    "clothing": ["threadbare.example"],
    "watch": ["chronomart.example"],
    "jewelry": ["gemvault.example"],
    "cars": ["autovista.example"],
    "computer_equipment": ["chipmart.example"],
    "banking": ["fortebank.example"],
    "streaming": ["streamflix.example"],
    "home_decor": ["wayfair.example", "lampsplus.example"],
    "travel": ["roamly.example"],
}

# (category, number of publishers that retarget it)
CATEGORY_PUBLISHER_COUNTS: list[tuple[str, int]] = [
    ("running_shoes", 9),
    ("clothing", 2),
    ("watch", 3),
    ("jewelry", 6),
    ("cars", 4),
    ("computer_equipment", 8),
    ("banking", 7),
    ("streaming", 4),
    ("home_decor", 8),
    ("travel", 3),
]

PUBLISHER_POOL: list[str] = [
    "nypost.example",
    "9gag.example",
    "moneycontrol.example",
    "newsroom24.example",
    "sportsbeat.example",
    "viralfeed.example",
    "dailyherald.example",
    "technowire.example",
    "travelogue.example",
    "marketpulse.example",
    "cityguide.example",
    "recipeden.example",
    "gamerhub.example",
    "celebwatch.example",
    "quizmania.example",
    "streetstyle.example",
    "autoblogger.example",
    "homefront.example",
    "weatherly.example",
    "streamly.example",
    "bygonedays.example",
    "punditbox.example",
    "nightowl.example",
    "parkbench.example",
]

SSP_HOSTS = ("ssp-core.example", "ssp-nimbus.example")


def dsp_host(category: str) -> str:
    return f"dsp-{category.replace('_', '-')}.example"


def publisher_ssp(publisher: str) -> str:
    return SSP_HOSTS[PUBLISHER_POOL.index(publisher) % len(SSP_HOSTS)]


def category_publishers() -> list[tuple[str, list[str]]]:
    """Publisher assignment per category, cycling through the pool."""
    cursor = 0
    assignment = []
    for category, count in CATEGORY_PUBLISHER_COUNTS:
        pubs = [PUBLISHER_POOL[(cursor + i) % len(PUBLISHER_POOL)] for i in range(count)]
        cursor = (cursor + count) % len(PUBLISHER_POOL)
        assignment.append((category, pubs))
    return assignment


def build_world_dict() -> dict:
    categories = list(SHOPS_BY_CATEGORY)
    sites = []
    for category, shops in SHOPS_BY_CATEGORY.items():
        for shop in shops:
            sites.append(
                {
                    "host": shop,
                    "kind": "ecommerce",
                    "category": category,
                    "embedded": [dsp_host(category)],
                }
            )
    for publisher in PUBLISHER_POOL:
        sites.append(
            {"host": publisher, "kind": "publisher", "embedded": [publisher_ssp(publisher)]}
        )
    ssps = [
        {
            "host": ssp,
            "partners": [
                {"dsp": dsp_host(category), "buyer_id": f"b{i + 1:02d}"}
                for i, category in enumerate(categories)
            ],
        }
        for ssp in SSP_HOSTS
    ]
    dsps = [{"host": dsp_host(category)} for category in categories]
    return {"version": 1, "sites": sites, "ssps": ssps, "dsps": dsps}


def build_world() -> World:
    return World.from_dict(build_world_dict())


def scenario_name(category: str, publisher: str) -> str:
    return f"{category}__{publisher.split('.')[0]}"


def build_scenario_dict(category: str, publisher: str) -> dict:
    shops = SHOPS_BY_CATEGORY[category]
    steps: list[dict] = []
    for shop in shops:
        steps.append({"op": "visit", "tab": 1, "site": shop, "pages": 4})
        steps.append({"op": "interact", "tab": 1, "count": 6, "kind": "click"})
        steps.append({"op": "dwell", "tab": 1, "seconds": 75})
    steps.append({"op": "visit", "tab": 2, "site": publisher})
    steps.append({"op": "visit", "tab": 2, "site": publisher})
    steps.append({"op": "close_tab", "tab": 1})
    steps.append({"op": "close_tab", "tab": 2})
    return {
        "name": scenario_name(category, publisher),
        "start_at": fmt_ts(DEFAULT_START),
        "history": [{"host": shop, "visits": HISTORY_VISITS} for shop in shops],
        "steps": steps,
    }


def build_scenario_dicts() -> list[dict]:
    return [
        build_scenario_dict(category, publisher)
        for category, pubs in category_publishers()
        for publisher in pubs
    ]


def build_scenarios() -> list[ScenarioScript]:
    return [ScenarioScript.from_dict(raw) for raw in build_scenario_dicts()]


def write_suite(out_dir: str | Path) -> list[Path]:
    """Materialize world.json plus one file per scenario; returns the paths."""
    out_dir = Path(out_dir)
    scenario_dir = out_dir / "scenarios"
    scenario_dir.mkdir(parents=True, exist_ok=True)
    written = [out_dir / "world.json"]
    dump_stable(build_world_dict(), written[0])
    for raw in build_scenario_dicts():
        path = scenario_dir / f"{raw['name']}.json"
        dump_stable(raw, path)
        written.append(path)
    return written


def bundled_world_path() -> Path:
    return DATA_DIR / "world.json"


def bundled_scenario_paths() -> list[Path]:
    return sorted((DATA_DIR / "scenarios").glob("*.json"))
