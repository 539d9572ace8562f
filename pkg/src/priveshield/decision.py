"""Profile-creation decisions from history records and live browsing events.

The engine watches three signals: weekly visit counts from browsing
history (regular profiles, rescanned at every browser start), focused
dwell time per site (session profiles), and per-page interaction counts
plus login/signup form submits (interaction profiles). It applies its
decisions to the catalog directly and returns them as a change list so
callers can log, print or persist them.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum
from pathlib import Path

from .catalog import ProfileCatalog, ProfileKind
from .errors import OutOfOrderEventError
from .hostutil import host_of_url, normalize_host
from .serde import fmt_ts, parse_ts

logger = logging.getLogger(__name__)

LOGIN_KEYWORDS = ("log in", "login", "sign in", "sign up", "register")

HISTORY_WINDOW = timedelta(days=7)


class Transition(str, Enum):
    TYPED = "typed"
    LINK = "link"


@dataclass(frozen=True)
class HistoryEntry:
    """One past page view; both transition types count equally as a visit."""

    ts: datetime
    url: str
    host: str
    transition: Transition

    @classmethod
    def from_dict(cls, raw: dict) -> HistoryEntry:
        url = raw["url"]
        return cls(
            ts=parse_ts(raw["ts"]),
            url=url,
            host=host_of_url(url),
            transition=Transition(raw["transition"]),
        )

    def to_dict(self) -> dict:
        return {
            "ts": fmt_ts(self.ts),
            "url": self.url,
            "transition": self.transition.value,
        }


class EventType(str, Enum):
    NAVIGATE = "navigate"
    TAB_FOCUS = "tab_focus"
    TAB_BLUR = "tab_blur"
    INTERACTION = "interaction"
    FORM_SUBMIT = "form_submit"
    TAB_CLOSE = "tab_close"
    BROWSER_START = "browser_start"
    BROWSER_CLOSE = "browser_close"


class InteractionKind(str, Enum):
    CLICK = "click"
    KEYPRESS = "keypress"


@dataclass(frozen=True)
class BrowsingEvent:
    """One live browser signal; per tab, timestamps never go backwards."""

    ts: datetime
    type: EventType
    tab: int | None = None
    url: str | None = None
    kind: InteractionKind | None = None
    field_names: tuple[str, ...] = ()
    text: str = ""

    @classmethod
    def navigate(cls, ts: datetime, tab: int, url: str) -> BrowsingEvent:
        return cls(ts, EventType.NAVIGATE, tab=tab, url=url)

    @classmethod
    def focus(cls, ts: datetime, tab: int) -> BrowsingEvent:
        return cls(ts, EventType.TAB_FOCUS, tab=tab)

    @classmethod
    def blur(cls, ts: datetime, tab: int) -> BrowsingEvent:
        return cls(ts, EventType.TAB_BLUR, tab=tab)

    @classmethod
    def interaction(
        cls, ts: datetime, tab: int, kind: InteractionKind = InteractionKind.CLICK
    ) -> BrowsingEvent:
        return cls(ts, EventType.INTERACTION, tab=tab, kind=kind)

    @classmethod
    def form_submit(
        cls, ts: datetime, tab: int, field_names: tuple[str, ...], text: str = ""
    ) -> BrowsingEvent:
        return cls(ts, EventType.FORM_SUBMIT, tab=tab, field_names=field_names, text=text)

    @classmethod
    def tab_close(cls, ts: datetime, tab: int) -> BrowsingEvent:
        return cls(ts, EventType.TAB_CLOSE, tab=tab)

    @classmethod
    def browser_start(cls, ts: datetime) -> BrowsingEvent:
        return cls(ts, EventType.BROWSER_START)

    @classmethod
    def browser_close(cls, ts: datetime) -> BrowsingEvent:
        return cls(ts, EventType.BROWSER_CLOSE)


@dataclass(frozen=True)
class Thresholds:
    """Tunable decision thresholds; all comparisons are strictly greater-than."""

    regular_visits_per_week: int = 42
    session_active_seconds: float = 68.0
    interaction_events: int = 5
    prune_window_days: float = 30.0

    def __post_init__(self) -> None:
        for name in (
            "regular_visits_per_week",
            "session_active_seconds",
            "interaction_events",
            "prune_window_days",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"threshold {name} must be strictly positive")


class ChangeAction(str, Enum):
    CREATE = "create"
    DELETE = "delete"


@dataclass(frozen=True)
class ProfileChange:
    """One applied catalog mutation, attributable to its trigger."""

    action: ChangeAction
    kind: ProfileKind
    host: str
    profile_name: str
    at: datetime
    reason: str
    trigger_index: int | None = None

    def to_dict(self) -> dict:
        return {
            "action": self.action.value,
            "kind": self.kind.value,
            "host": self.host,
            "profile": self.profile_name,
            "at": fmt_ts(self.at),
            "reason": self.reason,
            "trigger_index": self.trigger_index,
        }

    def __str__(self) -> str:
        return f"{self.action.value.upper()} {self.profile_name}"


@dataclass
class ScanResult:
    """Outcome of a history scan: applied changes plus skipped entries."""

    changes: list[ProfileChange] = field(default_factory=list)
    skipped: list[int] = field(default_factory=list)


@dataclass
class _TabState:
    host: str | None = None
    focused: bool = False
    last_ts: datetime | None = None
    active_seconds: float = 0.0
    interactions: int = 0


def is_login_submit(field_names: tuple[str, ...], text: str) -> bool:
    """Login/signup heuristic on a form submission.

    Fires on a username/password field pair or on login keywords in
    field names or the submitted text.
    """
    fields = [f.lower() for f in field_names]
    has_user = any("user" in f or "email" in f for f in fields)
    has_pass = any("pass" in f for f in fields)
    if has_user and has_pass:
        return True
    haystacks = fields + [text.lower()]
    return any(kw in hay for kw in LOGIN_KEYWORDS for hay in haystacks)


class DecisionEngine:
    """Deterministic state machine turning signals into profile changes.

    Owns per-tab session clocks and interaction counters; safe to move
    between threads as a whole but not to drive concurrently.
    """

    def __init__(self, catalog: ProfileCatalog, thresholds: Thresholds | None = None) -> None:
        self.catalog = catalog
        self.thresholds = thresholds or Thresholds()
        self._tabs: dict[int, _TabState] = {}
        self._event_index = -1

    # -- history ---------------------------------------------------------

    def scan_history(self, entries: list[HistoryEntry], now: datetime) -> ScanResult:
        """Recompute regular profiles from the last week of history.

        Hosts visited strictly more than the weekly threshold gain a
        Regular profile; existing Regular profiles whose host dropped to
        or below it are deleted. Runs at install and at every browser
        start. Entries may be unsorted and may repeat; invalid ones are
        skipped and reported by index.
        """
        result = ScanResult()
        window_start = now - HISTORY_WINDOW
        counts: dict[str, int] = {}
        for index, entry in enumerate(entries):
            if entry.ts > now or entry.host != host_of_url(entry.url):
                result.skipped.append(index)
                continue
            if window_start <= entry.ts <= now:
                counts[entry.host] = counts.get(entry.host, 0) + 1
        threshold = self.thresholds.regular_visits_per_week
        for host in sorted(counts):
            if counts[host] <= threshold:
                continue
            existing = self.catalog.find(ProfileKind.REGULAR, host)
            if existing is None:
                self.catalog.create_profile(ProfileKind.REGULAR, host, now)
                result.changes.append(
                    ProfileChange(
                        ChangeAction.CREATE,
                        ProfileKind.REGULAR,
                        host,
                        f"Regular-{host}",
                        at=now,
                        reason="history_visits",
                    )
                )
            else:
                existing.last_qualified_at = now
        stale = [
            p
            for p in self.catalog.profiles.values()
            if p.kind is ProfileKind.REGULAR
            and counts.get(p.single_host, 0) <= threshold
        ]
        for profile in sorted(stale, key=lambda p: p.name):
            self.catalog.delete_profile(profile.id)
            result.changes.append(
                ProfileChange(
                    ChangeAction.DELETE,
                    ProfileKind.REGULAR,
                    profile.single_host,
                    profile.name,
                    at=now,
                    reason="history_decay",
                )
            )
        if result.skipped:
            logger.warning("history scan skipped %d malformed entries", len(result.skipped))
        return result

    # -- live events ---------------------------------------------------------

    def on_event(self, ev: BrowsingEvent) -> list[ProfileChange]:
        """Feed one browsing event; returns any changes it triggered.

        Raises:
            OutOfOrderEventError: the event's tab saw a later timestamp
                before.
        """
        self._event_index += 1
        changes: list[ProfileChange] = []
        if ev.type is EventType.BROWSER_START:
            return changes
        if ev.type is EventType.BROWSER_CLOSE:
            self._tabs.clear()
            return changes
        if ev.tab is None:
            raise ValueError(f"event {ev.type.value} requires a tab")
        tab = self._tabs.setdefault(ev.tab, _TabState())
        if tab.last_ts is not None and ev.ts < tab.last_ts:
            raise OutOfOrderEventError(
                f"tab {ev.tab}: {fmt_ts(ev.ts)} before {fmt_ts(tab.last_ts)}"
            )
        self._settle(tab, ev.ts, changes)
        handler = {
            EventType.NAVIGATE: self._on_navigate,
            EventType.TAB_FOCUS: self._on_focus,
            EventType.TAB_BLUR: self._on_blur,
            EventType.INTERACTION: self._on_interaction,
            EventType.FORM_SUBMIT: self._on_form_submit,
            EventType.TAB_CLOSE: self._on_tab_close,
        }[ev.type]
        handler(tab, ev, changes)
        return changes

    def _settle(self, tab: _TabState, ts: datetime, changes: list[ProfileChange]) -> None:
        """Account focused time elapsed since the tab's last event."""
        if tab.focused and tab.last_ts is not None and tab.host:
            before = tab.active_seconds
            tab.active_seconds += (ts - tab.last_ts).total_seconds()
            limit = self.thresholds.session_active_seconds
            if before <= limit < tab.active_seconds:
                self._qualify(ProfileKind.SESSION, tab.host, ts, "session_time", changes)
        tab.last_ts = ts

    def _qualify(
        self,
        kind: ProfileKind,
        host: str,
        ts: datetime,
        reason: str,
        changes: list[ProfileChange],
    ) -> None:
        existing = self.catalog.find(kind, host)
        if existing is not None:
            existing.last_qualified_at = ts
            return
        self.catalog.create_profile(kind, host, ts)
        changes.append(
            ProfileChange(
                ChangeAction.CREATE,
                kind,
                host,
                f"{kind.value}-{host}",
                at=ts,
                reason=reason,
                trigger_index=self._event_index,
            )
        )

    def _on_navigate(self, tab: _TabState, ev: BrowsingEvent, changes: list) -> None:
        del changes
        host = host_of_url(ev.url or "")
        if host != tab.host:
            tab.host = host
            tab.active_seconds = 0.0
        tab.interactions = 0  # per-page counter, resets on every navigation

    def _on_focus(self, tab: _TabState, ev: BrowsingEvent, changes: list) -> None:
        del ev, changes
        tab.focused = True

    def _on_blur(self, tab: _TabState, ev: BrowsingEvent, changes: list) -> None:
        del ev, changes
        tab.focused = False

    def _on_interaction(self, tab: _TabState, ev: BrowsingEvent, changes: list) -> None:
        if tab.host is None:
            return
        tab.interactions += 1
        limit = self.thresholds.interaction_events
        if tab.interactions > limit >= tab.interactions - 1:
            self._qualify(
                ProfileKind.INTERACTION, tab.host, ev.ts, "interaction_count", changes
            )

    def _on_form_submit(self, tab: _TabState, ev: BrowsingEvent, changes: list) -> None:
        if tab.host is None:
            return
        if is_login_submit(ev.field_names, ev.text):
            self._qualify(ProfileKind.INTERACTION, tab.host, ev.ts, "login_form", changes)

    def _on_tab_close(self, tab: _TabState, ev: BrowsingEvent, changes: list) -> None:
        del tab, changes
        assert ev.tab is not None
        self._tabs.pop(ev.tab, None)

    # -- pruning --------------------------------------------------------------

    def prune(self, now: datetime) -> list[ProfileChange]:
        """Delete Session/Interaction profiles idle past the prune window.

        A profile survives when its creation criterion was re-met at
        least once within the window. Regular profiles are governed by
        the history scan instead; Manual, Category and Default profiles
        are never pruned.
        """
        cutoff = now - timedelta(days=self.thresholds.prune_window_days)
        doomed = [
            p
            for p in self.catalog.profiles.values()
            if p.kind in (ProfileKind.SESSION, ProfileKind.INTERACTION)
            and p.last_qualified_at < cutoff
        ]
        changes = []
        for profile in sorted(doomed, key=lambda p: p.name):
            self.catalog.delete_profile(profile.id)
            changes.append(
                ProfileChange(
                    ChangeAction.DELETE,
                    profile.kind,
                    profile.single_host,
                    profile.name,
                    at=now,
                    reason="prune_window",
                )
            )
        return changes


def read_history_jsonl(path: str | Path) -> tuple[list[HistoryEntry], list[tuple[int, str]]]:
    """Parse a history file (one JSON entry per line).

    Returns the parsed entries plus (line_number, reason) pairs for the
    lines that could not be parsed.
    """
    entries: list[HistoryEntry] = []
    bad: list[tuple[int, str]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                entries.append(HistoryEntry.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                bad.append((lineno, str(exc)))
    return entries, bad
