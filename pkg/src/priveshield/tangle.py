"""First-party/tracker contact graphs and the tangle factor.

The tangle factor of a set of first-party sites is the chromatic number
of their conflict graph (sites joined whenever they share at least one
third-party tracker): the minimum number of isolated profiles needed so
that no two sites sharing a tracker ever co-reside. Small graphs are
colored exactly with branch and bound; beyond the configured limit the
greedy bound is returned flagged as approximate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import UnknownProfileError
from .hostutil import registrable_domain
from .serde import dump_stable

GLOBAL_SCOPE = "global"


@dataclass
class ContactGraph:
    """Bipartite contacts between first-party sites and trackers.

    Tracker identity is collapsed to the registrable domain so subdomain
    churn cannot split one tracker into several nodes.
    """

    first_parties: set[str] = field(default_factory=set)
    trackers: set[str] = field(default_factory=set)
    edges: set[tuple[str, str]] = field(default_factory=set)
    scope: str = GLOBAL_SCOPE

    def add_contact(self, first_party: str, tracker_host: str) -> None:
        tracker = registrable_domain(tracker_host)
        self.first_parties.add(first_party)
        self.trackers.add(tracker)
        self.edges.add((first_party, tracker))

    def trackers_of(self, first_party: str) -> set[str]:
        return {t for (f, t) in self.edges if f == first_party}


@dataclass
class ConflictGraph:
    """Simple graph on first parties; an edge means a shared tracker."""

    nodes: set[str] = field(default_factory=set)
    edges: set[tuple[str, str]] = field(default_factory=set)  # sorted pairs

    def add_edge(self, a: str, b: str) -> None:
        if a == b:
            return
        self.edges.add((min(a, b), max(a, b)))
        self.nodes.update((a, b))

    def neighbors(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {n: set() for n in self.nodes}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj


@dataclass(frozen=True)
class TangleResult:
    """Tangle factor plus whether it was computed exactly."""

    value: int
    exact: bool = True

    def __str__(self) -> str:
        return f"{self.value}" + ("" if self.exact else " (approximate)")


def build(report: dict, scope: str = GLOBAL_SCOPE) -> ContactGraph:
    """Contact graph from a scenario report's tracker observations.

    ``scope`` is either the global scope or a profile id, restricting the
    graph to contacts recorded while that profile was active.

    Raises:
        UnknownProfileError: a per-profile scope that the report never
            mentions.
    """
    contacts = report.get("contacts", [])
    if scope != GLOBAL_SCOPE:
        known = {c["profile"] for c in contacts} | {
            p["id"] for p in report.get("profiles", [])
        }
        if scope not in known:
            raise UnknownProfileError(f"report has no profile {scope!r}")
    graph = ContactGraph(scope=scope)
    for contact in contacts:
        if scope == GLOBAL_SCOPE or contact["profile"] == scope:
            graph.add_contact(contact["first_party"], contact["tracker"])
    return graph


def profile_scopes(report: dict) -> list[str]:
    """Profile ids that recorded at least one tracker contact."""
    return sorted({c["profile"] for c in report.get("contacts", [])})


def conflict(graph: ContactGraph) -> ConflictGraph:
    """Join first parties that contact at least one common tracker."""
    result = ConflictGraph(nodes=set(graph.first_parties))
    parties = sorted(graph.first_parties)
    tracker_sets = {p: graph.trackers_of(p) for p in parties}
    for i, a in enumerate(parties):
        for b in parties[i + 1 :]:
            if tracker_sets[a] & tracker_sets[b]:
                result.add_edge(a, b)
    return result


def _greedy_coloring(adj: dict[str, set[str]]) -> int:
    colors: dict[str, int] = {}
    for node in sorted(adj, key=lambda n: (-len(adj[n]), n)):
        taken = {colors[m] for m in adj[node] if m in colors}
        color = 0
        while color in taken:
            color += 1
        colors[node] = color
    return max(colors.values()) + 1 if colors else 0


def _greedy_clique(adj: dict[str, set[str]]) -> int:
    if not adj:
        return 0
    start = max(adj, key=lambda n: (len(adj[n]), n))
    clique = {start}
    candidates = set(adj[start])
    while candidates:
        best = max(candidates, key=lambda n: (len(adj[n] & candidates), n))
        clique.add(best)
        candidates &= adj[best]
    return len(clique)


def tangle_factor(graph: ConflictGraph, exact_limit: int = 20) -> TangleResult:
    """Chromatic number of the conflict graph, never less than 1.

    Uses a greedy upper bound and a clique lower bound around a
    branch-and-bound search. Graphs larger than ``exact_limit`` nodes
    fall back to the greedy bound, flagged as approximate.
    """
    adj = graph.neighbors()
    if not graph.edges:
        return TangleResult(1, exact=True)
    upper = _greedy_coloring(adj)
    lower = max(_greedy_clique(adj), 2)
    if len(adj) > exact_limit:
        return TangleResult(max(upper, 1), exact=False)
    if lower == upper:
        return TangleResult(upper, exact=True)

    order = sorted(adj, key=lambda n: (-len(adj[n]), n))
    assignment: dict[str, int] = {}
    best = upper

    def descend(index: int, used: int) -> None:
        nonlocal best
        if used >= best:
            return
        if index == len(order):
            best = used
            return
        node = order[index]
        taken = {assignment[m] for m in adj[node] if m in assignment}
        for color in range(used):
            if color not in taken:
                assignment[node] = color
                descend(index + 1, used)
                del assignment[node]
                if best == lower:
                    return
        if used + 1 < best:
            assignment[node] = used
            descend(index + 1, used + 1)
            del assignment[node]

    descend(0, 0)
    return TangleResult(max(best, 1), exact=True)


def export_graph(graph: ContactGraph, path: str | Path) -> None:
    """Write a plot-friendly node/edge list with stable ordering."""
    payload = {
        "scope": graph.scope,
        "nodes": [
            {"id": n, "kind": "first_party"} for n in sorted(graph.first_parties)
        ]
        + [{"id": n, "kind": "tracker"} for n in sorted(graph.trackers)],
        "edges": sorted([a, b] for (a, b) in graph.edges),
    }
    dump_stable(payload, path)


def import_graph(path: str | Path) -> ContactGraph:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    graph = ContactGraph(scope=raw.get("scope", GLOBAL_SCOPE))
    for node in raw["nodes"]:
        if node["kind"] == "first_party":
            graph.first_parties.add(node["id"])
        else:
            graph.trackers.add(node["id"])
    graph.edges = {(a, b) for a, b in raw["edges"]}
    return graph


def tangle_summary(report: dict, exact_limit: int = 20) -> dict:
    """Global and per-profile tangle factors for one scenario report."""
    global_graph = conflict(build(report, GLOBAL_SCOPE))
    global_result = tangle_factor(global_graph, exact_limit)
    per_profile = {}
    for scope in profile_scopes(report):
        result = tangle_factor(conflict(build(report, scope)), exact_limit)
        per_profile[scope] = {"value": result.value, "exact": result.exact}
    return {
        "global": {"value": global_result.value, "exact": global_result.exact},
        "per_profile": per_profile,
    }
