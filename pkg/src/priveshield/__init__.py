"""Automatic browser-profile isolation with a deterministic ad-ecosystem simulator."""

from .catalog import Profile, ProfileCatalog, ProfileKind
from .categories import CategoryClassifier, CategoryModel, load_model
from .decision import (
    BrowsingEvent,
    DecisionEngine,
    HistoryEntry,
    ProfileChange,
    Thresholds,
)
from .harness import ExperimentSpec, run_bench, run_experiment
from .store import ActiveContext, CookieRecord, StoragePartition
from .tangle import ConflictGraph, ContactGraph, TangleResult, tangle_factor
from .tracksim import BrowserSession, ScenarioScript, World, run_scenario

__version__ = "0.1.0"

__all__ = [
    "ActiveContext",
    "BrowserSession",
    "BrowsingEvent",
    "CategoryClassifier",
    "CategoryModel",
    "ConflictGraph",
    "ContactGraph",
    "CookieRecord",
    "DecisionEngine",
    "ExperimentSpec",
    "HistoryEntry",
    "Profile",
    "ProfileCatalog",
    "ProfileChange",
    "ProfileKind",
    "ScenarioScript",
    "StoragePartition",
    "TangleResult",
    "Thresholds",
    "World",
    "__version__",
    "load_model",
    "run_bench",
    "run_experiment",
    "run_scenario",
    "tangle_factor",
]
