"""Deterministic simulator of the cookie-syncing ad ecosystem.

The world holds shop ("ecommerce") sites that embed DSP interest
beacons, publisher sites that embed SSP ad slots, and the SSP/DSP
back-ends with their match tables and interest databases. A
:class:`BrowserSession` replays a scenario script against either a
single shared cookie jar ("vanilla") or the full profile-isolation stack
("priveshield"). Everything - identifiers, clock, report ordering - is
deterministic given (world, scenario, mode, seed).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .catalog import ProfileCatalog
from .categories import CategoryClassifier
from .decision import (
    BrowsingEvent,
    DecisionEngine,
    HistoryEntry,
    InteractionKind,
    ProfileChange,
    Thresholds,
    Transition,
)
from .errors import MalformedScriptError, UnknownSiteError
from .hostutil import normalize_host, registrable_domain
from .serde import fmt_ts, parse_ts
from .store import (
    ActiveContext,
    CookieRecord,
    activate,
    flush,
    get_cookies,
    set_cookie,
    switch,
    wipe,
)

MODE_VANILLA = "vanilla"
MODE_PRIVESHIELD = "priveshield"
MODES = (MODE_VANILLA, MODE_PRIVESHIELD)

ECOMMERCE = "ecommerce"
PUBLISHER = "publisher"

UID_COOKIE = "uid"
FIRST_PARTY_COOKIE = "sid"

# Simulated cost of one navigation or one interaction, in seconds.
STEP_SECONDS = 1.0

DEFAULT_START = datetime(2024, 6, 3, 8, 0, 0, tzinfo=timezone.utc)

SCRIPT_OPS = ("visit", "dwell", "interact", "focus", "blur", "close_tab")


# ---------------------------------------------------------------------------
# World entities
# ---------------------------------------------------------------------------


@dataclass
class Site:
    host: str
    kind: str
    embedded: list[str]
    category: str | None = None  # interest label, ecommerce only


@dataclass(frozen=True)
class SspPartner:
    dsp: str
    buyer_id: str


@dataclass
class Ssp:
    host: str
    partners: list[SspPartner]
    # (buyer_id, ssp_uid) -> dsp_uid; re-syncing the same pair overwrites.
    match_table: dict[tuple[str, str], str] = field(default_factory=dict)


@dataclass
class Dsp:
    host: str
    interest_db: dict[str, set[str]] = field(default_factory=dict)


class World:
    """Static topology plus the trackers' mutable server-side state."""

    def __init__(self, sites: list[Site], ssps: list[Ssp], dsps: list[Dsp]) -> None:
        self.sites = {s.host: s for s in sites}
        self.ssps = {s.host: s for s in ssps}
        self.dsps = {d.host: d for d in dsps}
        self.validate()

    def validate(self) -> None:
        for site in self.sites.values():
            if site.kind == ECOMMERCE:
                beacons = [t for t in site.embedded if t in self.dsps]
                if not beacons or not site.category:
                    raise ValueError(
                        f"ecommerce site {site.host} needs a category and >=1 DSP beacon"
                    )
            elif site.kind == PUBLISHER:
                slots = [t for t in site.embedded if t in self.ssps]
                if not slots or not any(self.ssps[t].partners for t in slots):
                    raise ValueError(
                        f"publisher {site.host} needs >=1 SSP slot with a sync partner"
                    )
            else:
                raise ValueError(f"site {site.host} has unknown kind {site.kind!r}")
        for ssp in self.ssps.values():
            buyers = [p.buyer_id for p in ssp.partners]
            if len(buyers) != len(set(buyers)):
                raise ValueError(f"SSP {ssp.host} reuses a buyer_id")
            for partner in ssp.partners:
                if partner.dsp not in self.dsps:
                    raise ValueError(f"SSP {ssp.host} references unknown DSP {partner.dsp}")

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "sites": [
                {
                    "host": s.host,
                    "kind": s.kind,
                    "embedded": list(s.embedded),
                    **({"category": s.category} if s.category else {}),
                }
                for s in self.sites.values()
            ],
            "ssps": [
                {
                    "host": s.host,
                    "partners": [{"dsp": p.dsp, "buyer_id": p.buyer_id} for p in s.partners],
                }
                for s in self.ssps.values()
            ],
            "dsps": [{"host": d.host} for d in self.dsps.values()],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> World:
        sites = [
            Site(
                host=normalize_host(s["host"]),
                kind=s["kind"],
                embedded=[normalize_host(t) for t in s["embedded"]],
                category=s.get("category"),
            )
            for s in raw["sites"]
        ]
        ssps = [
            Ssp(
                host=normalize_host(s["host"]),
                partners=[
                    SspPartner(normalize_host(p["dsp"]), p["buyer_id"])
                    for p in s["partners"]
                ],
            )
            for s in raw["ssps"]
        ]
        dsps = [Dsp(host=normalize_host(d["host"])) for d in raw["dsps"]]
        return cls(sites, ssps, dsps)

    @classmethod
    def load(cls, path: str | Path) -> World:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def pristine_copy(self) -> World:
        """Same topology with empty match tables and interest databases."""
        return World.from_dict(self.to_dict())


# ---------------------------------------------------------------------------
# Scenario scripts
# ---------------------------------------------------------------------------


@dataclass
class ScenarioScript:
    """A replayable browsing script plus its optional history prelude."""

    name: str
    steps: list[dict]
    history: list[HistoryEntry] = field(default_factory=list)
    start_at: datetime = DEFAULT_START

    @classmethod
    def from_dict(cls, raw: dict) -> ScenarioScript:
        if "name" not in raw or "steps" not in raw:
            raise MalformedScriptError("script needs 'name' and 'steps'")
        start_at = parse_ts(raw["start_at"]) if "start_at" in raw else DEFAULT_START
        history = [
            entry
            for item in raw.get("history", [])
            for entry in expand_history(item, start_at)
        ]
        steps = list(raw["steps"])
        for index, step in enumerate(steps):
            if not isinstance(step, dict) or step.get("op") not in SCRIPT_OPS:
                raise MalformedScriptError(
                    f"unknown op {step.get('op') if isinstance(step, dict) else step!r}",
                    index,
                )
            if step["op"] == "visit" and "site" not in step:
                raise MalformedScriptError("visit step needs 'site'", index)
            if step["op"] == "dwell" and "seconds" not in step:
                raise MalformedScriptError("dwell step needs 'seconds'", index)
        return cls(name=raw["name"], steps=steps, history=history, start_at=start_at)

    @classmethod
    def load(cls, path: str | Path) -> ScenarioScript:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "start_at": fmt_ts(self.start_at),
            "history": [
                {"host": h, "visits": n}
                for h, n in sorted(_history_counts(self.history).items())
            ],
            "steps": self.steps,
        }


def _history_counts(entries: list[HistoryEntry]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for entry in entries:
        counts[entry.host] = counts.get(entry.host, 0) + 1
    return counts


def expand_history(item: dict, start_at: datetime) -> list[HistoryEntry]:
    """Expand a {"host", "visits"} shorthand into concrete page views.

    Visits are spaced one minute apart, ending an hour before the
    scenario starts, so every entry lies inside the scan window.
    """
    host = normalize_host(item["host"])
    visits = int(item["visits"])
    entries = []
    for i in range(visits):
        ts = start_at - timedelta(hours=1, minutes=i)
        entries.append(
            HistoryEntry(
                ts=ts,
                url=f"https://{host}/p{i % 7}",
                host=host,
                transition=Transition.LINK if i % 3 else Transition.TYPED,
            )
        )
    return entries


@dataclass(frozen=True)
class AdOutcome:
    """What one publisher impression showed."""

    publisher: str
    visit: int
    shown: str  # "retargeted" | "generic"
    category: str | None
    at: datetime

    def to_dict(self) -> dict:
        return {
            "publisher": self.publisher,
            "visit": self.visit,
            "shown": self.shown,
            "category": self.category,
            "at": fmt_ts(self.at),
        }


# ---------------------------------------------------------------------------
# Browser session driver
# ---------------------------------------------------------------------------


class BrowserSession:
    """Replays browsing activity against one mode's storage stack.

    In priveshield mode every navigation resolves the target host to a
    profile and switches partitions before the page's trackers run; in
    vanilla mode everything happens in the Default profile's jar.
    """

    def __init__(
        self,
        world: World,
        mode: str = MODE_VANILLA,
        seed: int = 0,
        thresholds: Thresholds | None = None,
        classifier: CategoryClassifier | None = None,
        start_at: datetime = DEFAULT_START,
        catalog: ProfileCatalog | None = None,
    ) -> None:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        self.world = world
        self.mode = mode
        self.seed = seed
        self.rng = random.Random(seed)
        self.start_at = start_at
        self.clock = start_at
        self.catalog = catalog or ProfileCatalog.bootstrap(start_at)
        self.classifier = classifier or CategoryClassifier()
        self.ctx: ActiveContext = activate(self.catalog, self.catalog.default_profile.id)
        self.engine = (
            DecisionEngine(self.catalog, thresholds) if mode == MODE_PRIVESHIELD else None
        )
        self.changes: list[ProfileChange] = []
        self.outcomes: list[AdOutcome] = []
        self.events: list[dict] = []
        self.contacts: set[tuple[str, str, str]] = set()
        self._seen_profiles: dict[str, dict] = {}
        self._tab_temp: dict[int, str] = {}
        self._publisher_visits: dict[str, int] = {}
        self._focused_tab: int | None = None
        self.resolve_calls = 0
        self.switches = 0
        self._note_profile(self.ctx.active_profile)

    # -- plumbing -------------------------------------------------------

    def _engine_event(self, ev: BrowsingEvent) -> None:
        if self.engine is not None:
            self.changes.extend(self.engine.on_event(ev))

    def _note_profile(self, profile_id: str) -> None:
        profile = self.catalog.profiles.get(profile_id)
        if profile is not None:
            self._seen_profiles[profile_id] = {
                "id": profile_id,
                "kind": profile.kind.value,
                "name": profile.name,
            }

    def _log(self, op: str, **fields) -> None:
        entry = {"op": op, "at": fmt_ts(self.clock), "profile": self.ctx.active_profile}
        entry.update(fields)
        self.events.append(entry)

    def _contact(self, first_party: str, tracker: str) -> None:
        self.contacts.add((self.ctx.active_profile, first_party, tracker))

    def _fresh_uid(self) -> str:
        return f"{self.rng.getrandbits(64):016x}"

    def _focus(self, tab: int) -> None:
        if self._focused_tab == tab:
            return
        if self._focused_tab is not None:
            self._engine_event(BrowsingEvent.blur(self.clock, self._focused_tab))
        self._engine_event(BrowsingEvent.focus(self.clock, tab))
        self._focused_tab = tab

    def _site(self, host: str) -> Site:
        site = self.world.sites.get(normalize_host(host))
        if site is None:
            raise UnknownSiteError(f"no site {host!r} in world")
        return site

    def _resolve_and_switch(self, tab: int, host: str) -> None:
        if self.engine is None:
            return
        if self.catalog.temporary_mode:
            pid = self._tab_temp.get(tab)
            if pid is None or pid not in self.catalog.profiles:
                pid = self.catalog.resolve(host, now=self.clock)
                self._tab_temp[tab] = pid
        else:
            hint = self.classifier.classify(host)
            pid = self.catalog.resolve(host, hint, now=self.clock)
        self.resolve_calls += 1
        if pid != self.ctx.active_profile:
            self.ctx = switch(self.ctx, pid, self.catalog)
            self.switches += 1
        self._note_profile(pid)

    # -- cookie traffic ----------------------------------------------------

    def _read_or_set_uid(self, tracker_host: str, document_host: str) -> str:
        url = f"https://{tracker_host}/"
        for cookie in get_cookies(self.ctx, url, document_host, now=self.clock):
            if cookie.name == UID_COOKIE:
                self._log(
                    "cookie_read", tracker=tracker_host, site=document_host, uid=cookie.value
                )
                return cookie.value
        uid = self._fresh_uid()
        set_cookie(
            self.ctx,
            document_host,
            CookieRecord(UID_COOKIE, uid, domain=f".{tracker_host}"),
            setter_host=tracker_host,
        )
        self._log("cookie_set", tracker=tracker_host, site=document_host, uid=uid)
        return uid

    def _set_first_party(self, host: str) -> None:
        url = f"https://{host}/"
        names = {c.name for c in get_cookies(self.ctx, url, host, now=self.clock)}
        if FIRST_PARTY_COOKIE not in names:
            set_cookie(
                self.ctx,
                host,
                CookieRecord(FIRST_PARTY_COOKIE, self._fresh_uid(), domain=f".{host}"),
            )

    # -- page loads --------------------------------------------------------

    def _load_ecommerce(self, site: Site) -> None:
        self._set_first_party(site.host)
        for tracker in site.embedded:
            dsp = self.world.dsps.get(tracker)
            if dsp is None:
                continue
            self._contact(site.host, dsp.host)
            uid = self._read_or_set_uid(dsp.host, site.host)
            dsp.interest_db.setdefault(uid, set()).add(site.category)
            self._log(
                "interest", dsp=dsp.host, uid=uid, category=site.category, site=site.host
            )

    def _load_publisher(self, site: Site) -> AdOutcome:
        self._set_first_party(site.host)
        visit = self._publisher_visits.get(site.host, 0) + 1
        self._publisher_visits[site.host] = visit

        slots: list[tuple[Ssp, str]] = []
        for tracker in site.embedded:
            ssp = self.world.ssps.get(tracker)
            if ssp is None:
                continue
            self._contact(site.host, ssp.host)
            ssp_uid = self._read_or_set_uid(ssp.host, site.host)
            slots.append((ssp, ssp_uid))
            for partner in ssp.partners:
                self._contact(site.host, partner.dsp)
                dsp_uid = self._read_or_set_uid(partner.dsp, site.host)
                ssp.match_table[(partner.buyer_id, ssp_uid)] = dsp_uid
                self._log(
                    "sync",
                    publisher=site.host,
                    ssp=ssp.host,
                    dsp=partner.dsp,
                    buyer_id=partner.buyer_id,
                    ssp_uid=ssp_uid,
                    dsp_uid=dsp_uid,
                    endpoint=f"https://{ssp.host}/{partner.buyer_id}?{dsp_uid}",
                )

        shown, category, winner = "generic", None, None
        for ssp, ssp_uid in slots:
            for partner in ssp.partners:
                dsp_uid = ssp.match_table.get((partner.buyer_id, ssp_uid))
                if dsp_uid is None:
                    continue
                interests = self.world.dsps[partner.dsp].interest_db.get(dsp_uid, set())
                if interests:
                    shown, category = "retargeted", min(interests)
                    winner = {
                        "ssp": ssp.host,
                        "dsp": partner.dsp,
                        "buyer_id": partner.buyer_id,
                        "ssp_uid": ssp_uid,
                        "dsp_uid": dsp_uid,
                    }
                    break
            if winner:
                break
        self._log(
            "auction", publisher=site.host, visit=visit, shown=shown,
            category=category, winner=winner,
        )
        outcome = AdOutcome(site.host, visit, shown, category, self.clock)
        self.outcomes.append(outcome)
        return outcome

    def _open_page(self, tab: int, site: Site, path: str) -> None:
        self.clock += timedelta(seconds=STEP_SECONDS)
        url = f"https://{site.host}{path}"
        self._engine_event(BrowsingEvent.navigate(self.clock, tab, url))
        self._resolve_and_switch(tab, site.host)
        self._focus(tab)
        self._log("page", site=site.host, url=url, tab=tab)

    # -- public driver API ---------------------------------------------------

    def start(self, history: list[HistoryEntry] | None = None) -> None:
        """Browser start: feeds the start event and runs the history scan."""
        self._engine_event(BrowsingEvent.browser_start(self.clock))
        if self.engine is not None and history:
            result = self.engine.scan_history(history, self.clock)
            self.changes.extend(result.changes)

    def visit(self, tab: int, host: str, pages: int = 1) -> AdOutcome | None:
        """Visit a site; each page is a navigation plus its tracker traffic."""
        site = self._site(host)
        if site.kind == ECOMMERCE:
            self.visit_ecommerce(host, pages, tab=tab)
            return None
        outcome = None
        for _ in range(pages):
            outcome = self.visit_publisher(host, tab=tab)
        return outcome

    def visit_ecommerce(self, host: str, pages: int = 1, tab: int = 1) -> None:
        """Browse a shop: every page view lets its DSP beacons tag the jar."""
        site = self._site(host)
        if site.kind != ECOMMERCE:
            raise UnknownSiteError(f"{host} is not an ecommerce site")
        for page in range(pages):
            self._open_page(tab, site, f"/p{page + 1}")
            self._load_ecommerce(site)

    def visit_publisher(self, host: str, tab: int = 1) -> AdOutcome:
        """Load a publisher page: sync pixels fire, then the auction runs."""
        site = self._site(host)
        if site.kind != PUBLISHER:
            raise UnknownSiteError(f"{host} is not a publisher site")
        self._open_page(tab, site, "/")
        return self._load_publisher(site)

    def dwell(self, tab: int, seconds: float) -> None:
        """Focused time on the tab's current page."""
        self._focus(tab)
        self.clock += timedelta(seconds=seconds)
        self._engine_event(BrowsingEvent.focus(self.clock, tab))

    def interact(self, tab: int, count: int = 1, kind: str = "click") -> None:
        self._focus(tab)
        for _ in range(count):
            self.clock += timedelta(seconds=STEP_SECONDS)
            self._engine_event(
                BrowsingEvent.interaction(self.clock, tab, InteractionKind(kind))
            )

    def form_submit(self, tab: int, field_names: tuple[str, ...], text: str = "") -> None:
        self._focus(tab)
        self.clock += timedelta(seconds=STEP_SECONDS)
        self._engine_event(BrowsingEvent.form_submit(self.clock, tab, field_names, text))

    def focus(self, tab: int) -> None:
        self._focus(tab)

    def blur(self, tab: int) -> None:
        if self._focused_tab == tab:
            self._engine_event(BrowsingEvent.blur(self.clock, tab))
            self._focused_tab = None

    def close_tab(self, tab: int) -> None:
        self._engine_event(BrowsingEvent.tab_close(self.clock, tab))
        if self._focused_tab == tab:
            self._focused_tab = None
        temp_id = self._tab_temp.pop(tab, None)
        if temp_id is not None and temp_id in self.catalog.profiles:
            if self.ctx.active_profile == temp_id:
                self.ctx = switch(self.ctx, self.catalog.default_profile.id, self.catalog)
            wipe(self.catalog, temp_id)

    def close(self) -> None:
        """Browser close: back the live partition up, drop temporaries."""
        self._engine_event(BrowsingEvent.browser_close(self.clock))
        flush(self.ctx, self.catalog)
        dropped = set(self.catalog.drop_temporaries())
        if self.ctx.active_profile in dropped:
            self.ctx = activate(self.catalog, self.catalog.default_profile.id)

    # -- reporting ----------------------------------------------------------

    def report(self, name: str) -> dict:
        """Deterministic scenario report; timings are simulation counters."""
        profiles = dict(self._seen_profiles)
        for profile in self.catalog.profiles.values():
            profiles[profile.id] = {
                "id": profile.id,
                "kind": profile.kind.value,
                "name": profile.name,
                "hosts": sorted(profile.member_hosts),
            }
        scoring = self.outcomes[-1].to_dict() if self.outcomes else None
        return {
            "format": 1,
            "scenario": name,
            "mode": self.mode,
            "seed": self.seed,
            "outcomes": [o.to_dict() for o in self.outcomes],
            "scoring": scoring,
            "profile_changes": [c.to_dict() for c in self.changes],
            "profiles": [profiles[k] for k in sorted(profiles)],
            "contacts": [
                {"profile": p, "first_party": f, "tracker": registrable_domain(t)}
                for p, f, t in sorted(self.contacts)
            ],
            "events": self.events,
            "timing": {
                "simulated_seconds": (self.clock - self.start_at).total_seconds(),
                "resolve_calls": self.resolve_calls,
                "switches": self.switches,
                "engine_events": len(self.events),
            },
        }


def run_scenario(
    world: World,
    scenario: ScenarioScript,
    mode: str,
    seed: int = 0,
    thresholds: Thresholds | None = None,
    classifier: CategoryClassifier | None = None,
) -> dict:
    """Replay one scenario in one mode against a pristine world copy.

    Raises:
        UnknownSiteError: a visit step references a host outside the world.
        MalformedScriptError: a structurally invalid step (with its index).
    """
    session = BrowserSession(
        world.pristine_copy(),
        mode=mode,
        seed=seed,
        thresholds=thresholds,
        classifier=classifier,
        start_at=scenario.start_at,
    )
    session.start(scenario.history)
    for index, step in enumerate(scenario.steps):
        try:
            op = step["op"]
            if op == "visit":
                session.visit(int(step.get("tab", 1)), step["site"], int(step.get("pages", 1)))
            elif op == "dwell":
                session.dwell(int(step.get("tab", 1)), float(step["seconds"]))
            elif op == "interact":
                session.interact(
                    int(step.get("tab", 1)),
                    int(step.get("count", 1)),
                    step.get("kind", "click"),
                )
            elif op == "focus":
                session.focus(int(step.get("tab", 1)))
            elif op == "blur":
                session.blur(int(step.get("tab", 1)))
            elif op == "close_tab":
                session.close_tab(int(step.get("tab", 1)))
        except (KeyError, TypeError) as exc:
            raise MalformedScriptError(f"bad step fields: {exc}", index) from exc
    session.close()
    return session.report(scenario.name)
