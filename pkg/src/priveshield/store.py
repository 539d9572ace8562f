"""Per-profile isolated storage and the backup/load switch procedure.

Each profile owns one :class:`StoragePartition` holding its cookie jar,
local storage, session storage and cache markers. Exactly one partition
is "live" at a time, wrapped in an :class:`ActiveContext`; switching
profiles backs the live partition up into the outgoing profile and loads
a copy of the incoming profile's partition, so no profile can ever read
data written while another one was active.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import TYPE_CHECKING

from .errors import ProfileNotFoundError, ScopeViolationError
from .hostutil import (
    domain_match,
    host_of_url,
    normalize_host,
    path_match,
    path_of_url,
    same_registrable_domain,
)
from .serde import fmt_ts, parse_ts

if TYPE_CHECKING:
    from .catalog import ProfileCatalog

CookieKey = tuple[str, str, str]  # (name, domain, path)


@dataclass(frozen=True)
class CookieRecord:
    """One cookie with domain/path scoping and party context.

    ``set_by`` is the first-party host of the document that was loaded
    when the cookie was written; ``third_party`` is true when the cookie
    domain's registrable domain differs from ``set_by``'s.
    """

    name: str
    value: str
    domain: str
    path: str = "/"
    set_by: str = ""
    third_party: bool = False
    expires: datetime | None = None

    @property
    def key(self) -> CookieKey:
        return (self.name, normalize_host(self.domain.lstrip(".")), self.path)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "domain": self.domain,
            "path": self.path,
            "set_by": self.set_by,
            "third_party": self.third_party,
            "expires": fmt_ts(self.expires) if self.expires else None,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> CookieRecord:
        return cls(
            name=raw["name"],
            value=raw["value"],
            domain=raw["domain"],
            path=raw.get("path", "/"),
            set_by=raw.get("set_by", ""),
            third_party=bool(raw.get("third_party", False)),
            expires=parse_ts(raw["expires"]) if raw.get("expires") else None,
        )


@dataclass
class StoragePartition:
    """All isolated state of one profile.

    Cookie records are immutable, so cloning a partition only copies the
    containers; cache storage is tracked as an origin-presence marker.
    """

    cookies: dict[CookieKey, CookieRecord] = field(default_factory=dict)
    local_storage: dict[tuple[str, str], str] = field(default_factory=dict)
    session_storage: dict[tuple[int, str, str], str] = field(default_factory=dict)
    cache_marker: set[str] = field(default_factory=set)

    def clone(self) -> StoragePartition:
        return StoragePartition(
            cookies=dict(self.cookies),
            local_storage=dict(self.local_storage),
            session_storage=dict(self.session_storage),
            cache_marker=set(self.cache_marker),
        )

    def clear(self) -> None:
        self.cookies.clear()
        self.local_storage.clear()
        self.session_storage.clear()
        self.cache_marker.clear()

    def is_empty(self) -> bool:
        return not (
            self.cookies or self.local_storage or self.session_storage or self.cache_marker
        )

    def sorted_cookies(self) -> list[CookieRecord]:
        """Cookies ordered by (domain, path, name) for byte-stable dumps."""
        return sorted(
            self.cookies.values(), key=lambda c: (c.key[1], c.path, c.name)
        )

    def to_dict(self) -> dict:
        return {
            "cookies": [c.to_dict() for c in self.sorted_cookies()],
            "local_storage": [
                {"origin": o, "key": k, "value": v}
                for (o, k), v in sorted(self.local_storage.items())
            ],
            "session_storage": [
                {"tab": t, "origin": o, "key": k, "value": v}
                for (t, o, k), v in sorted(self.session_storage.items())
            ],
            "cache_marker": sorted(self.cache_marker),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> StoragePartition:
        part = cls()
        for entry in raw.get("cookies", []):
            record = CookieRecord.from_dict(entry)
            part.cookies[record.key] = record
        for entry in raw.get("local_storage", []):
            part.local_storage[(entry["origin"], entry["key"])] = entry["value"]
        for entry in raw.get("session_storage", []):
            part.session_storage[(entry["tab"], entry["origin"], entry["key"])] = entry["value"]
        part.cache_marker = set(raw.get("cache_marker", []))
        return part


@dataclass
class ActiveContext:
    """The currently loaded profile and its live partition."""

    active_profile: str
    live_partition: StoragePartition


def activate(catalog: ProfileCatalog, profile_id: str) -> ActiveContext:
    """Load a profile's stored partition as the live one."""
    profile = catalog.get(profile_id)
    return ActiveContext(profile_id, profile.partition.clone())


def set_cookie(
    ctx: ActiveContext,
    document_host: str,
    cookie: CookieRecord,
    setter_host: str | None = None,
) -> None:
    """Insert or overwrite a cookie in the live partition.

    ``setter_host`` is the origin executing the set: the document itself
    for first-party writes, or the embedded resource's host for
    third-party writes. The cookie domain must cover that origin.
    The stored record's ``set_by``/``third_party`` fields are recomputed
    from ``document_host``.

    Raises:
        ScopeViolationError: the cookie domain does not domain-match the
            setting origin.
    """
    document_host = normalize_host(document_host)
    setter = normalize_host(setter_host) if setter_host else document_host
    if not domain_match(cookie.domain, setter):
        raise ScopeViolationError(
            f"{setter} may not set a cookie scoped to {cookie.domain!r}"
        )
    record = replace(
        cookie,
        set_by=document_host,
        third_party=not same_registrable_domain(
            cookie.domain.lstrip("."), document_host
        ),
    )
    ctx.live_partition.cookies[record.key] = record


def get_cookies(
    ctx: ActiveContext,
    request_url: str,
    document_host: str,
    now: datetime | None = None,
) -> list[CookieRecord]:
    """Return live-partition cookies matching a request.

    Filters by domain match against the request host, path prefix match,
    and expiry when ``now`` is given. Only ever reads the live partition;
    ``document_host`` identifies the requesting document context and does
    not affect matching.
    """
    del document_host  # context only; matching is domain/path-based
    request_host = host_of_url(request_url)
    request_path = path_of_url(request_url)
    matched = [
        c
        for c in ctx.live_partition.sorted_cookies()
        if domain_match(c.domain, request_host)
        and path_match(c.path, request_path)
        and not (now is not None and c.expires is not None and c.expires <= now)
    ]
    return matched


def switch(ctx: ActiveContext, target: str, catalog: ProfileCatalog) -> ActiveContext:
    """Back up the live partition and load the target profile's one.

    Switching to the already-active profile is a no-op. The outgoing
    profile's stored partition afterwards equals the pre-switch live
    partition, mid-session writes included.

    Raises:
        ProfileNotFoundError: target id is not in the catalog.
    """
    target_profile = catalog.get(target)
    if target == ctx.active_profile:
        return ctx
    current = catalog.get(ctx.active_profile)
    current.partition = ctx.live_partition.clone()
    return ActiveContext(target, target_profile.partition.clone())


def flush(ctx: ActiveContext, catalog: ProfileCatalog) -> None:
    """Write the live partition back to its profile without switching.

    Used on browser close; the same backup step a switch performs.
    """
    catalog.get(ctx.active_profile).partition = ctx.live_partition.clone()


def wipe(catalog: ProfileCatalog, profile_id: str) -> None:
    """Empty a profile's stored partition.

    Applied to temporary profiles on tab close and to profiles about to
    be deleted.

    Raises:
        ProfileNotFoundError: unknown profile id.
    """
    profile = catalog.get(profile_id)
    if profile is None:  # pragma: no cover - get() raises
        raise ProfileNotFoundError(profile_id)
    profile.partition.clear()
