"""Profile catalog: kinds, naming, membership, resolution and persistence.

The catalog owns every profile and answers the one question the rest of
the system keeps asking: "which profile does this host open in?". The
resolution hierarchy is Manual > Interaction > Regular > Session >
Category, with the permanent Default profile as total fallback, and a
temporary mode that hands every request a fresh throwaway profile.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

from .errors import (
    CannotDeleteDefaultError,
    CatalogFormatError,
    DuplicateProfileError,
    ProfileNotFoundError,
)
from .hostutil import normalize_host
from .serde import dump_stable, fmt_ts, parse_ts
from .store import StoragePartition

DEFAULT_PROFILE_NAME = "Default"

# Reference instant used when a caller does not supply a clock.
_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


class ProfileKind(str, Enum):
    MANUAL = "Manual"
    INTERACTION = "Interaction"
    REGULAR = "Regular"
    SESSION = "Session"
    CATEGORY = "Category"
    TEMPORARY = "Temporary"
    DEFAULT = "Default"


# Kinds matched by membership during resolution, highest priority first.
RESOLUTION_ORDER = (
    ProfileKind.MANUAL,
    ProfileKind.INTERACTION,
    ProfileKind.REGULAR,
    ProfileKind.SESSION,
    ProfileKind.CATEGORY,
)

# Kinds that isolate exactly one host and carry a "<Kind>-<host>" name.
SINGLE_HOST_KINDS = (
    ProfileKind.INTERACTION,
    ProfileKind.REGULAR,
    ProfileKind.SESSION,
)


@dataclass
class Profile:
    """A named isolation unit: member hosts plus one storage partition."""

    id: str
    kind: ProfileKind
    name: str
    member_hosts: set[str]
    created_at: datetime
    last_qualified_at: datetime
    partition: StoragePartition = field(default_factory=StoragePartition)

    @property
    def single_host(self) -> str:
        """The lone member host of a Regular/Session/Interaction profile."""
        (host,) = self.member_hosts
        return host

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "name": self.name,
            "hosts": sorted(self.member_hosts),
            "created_at": fmt_ts(self.created_at),
            "last_qualified_at": fmt_ts(self.last_qualified_at),
            "partition": self.partition.to_dict(),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> Profile:
        return cls(
            id=raw["id"],
            kind=ProfileKind(raw["kind"]),
            name=raw["name"],
            member_hosts=set(raw.get("hosts", [])),
            created_at=parse_ts(raw["created_at"]),
            last_qualified_at=parse_ts(raw["last_qualified_at"]),
            partition=StoragePartition.from_dict(raw.get("partition", {})),
        )


class ProfileCatalog:
    """The set of all profiles plus the temporary-mode flag.

    All mutation goes through this single owner; callers that need a
    consistent view may snapshot via :meth:`to_dict`.
    """

    def __init__(self) -> None:
        self.profiles: dict[str, Profile] = {}
        self.temporary_mode: bool = False
        self._next_id = 1

    # -- construction ---------------------------------------------------

    @classmethod
    def bootstrap(
        cls, now: datetime | None = None, category_labels: list[str] | None = None
    ) -> ProfileCatalog:
        """New catalog holding the Default profile and the predefined
        category profiles (one per label of the shipped category set)."""
        from .categories import default_category_labels

        now = now or _EPOCH
        catalog = cls()
        catalog.create_profile(ProfileKind.DEFAULT, DEFAULT_PROFILE_NAME, now)
        for label in category_labels if category_labels is not None else default_category_labels():
            catalog.create_profile(ProfileKind.CATEGORY, label, now)
        return catalog

    # -- lookups ----------------------------------------------------------

    def get(self, profile_id: str) -> Profile:
        try:
            return self.profiles[profile_id]
        except KeyError:
            raise ProfileNotFoundError(f"no profile with id {profile_id!r}") from None

    def by_name(self, name: str) -> Profile | None:
        for profile in self.profiles.values():
            if profile.name == name:
                return profile
        return None

    def find(self, kind: ProfileKind, host: str) -> Profile | None:
        """The unique profile of ``kind`` containing ``host``, if any."""
        host = normalize_host(host)
        for profile in self.profiles.values():
            if profile.kind is kind and host in profile.member_hosts:
                return profile
        return None

    @property
    def default_profile(self) -> Profile:
        profile = self.by_name(DEFAULT_PROFILE_NAME)
        if profile is None:
            raise ProfileNotFoundError("catalog has no Default profile")
        return profile

    def category_profile(self, label: str) -> Profile | None:
        return self.by_name(f"Category-{label.strip().lower()}")

    # -- mutations --------------------------------------------------------

    def _take_id(self) -> str:
        pid = f"p-{self._next_id:04d}"
        self._next_id += 1
        return pid

    def create_profile(
        self, kind: ProfileKind, host_or_name: str, now: datetime
    ) -> str:
        """Register a new profile and return its id.

        ``host_or_name`` is the isolated host for single-host kinds, the
        category label for Category profiles, the profile name for Manual
        ones, and an arbitrary fresh token for Temporary ones.

        Raises:
            DuplicateProfileError: name or (kind, host) already taken.
        """
        if kind in SINGLE_HOST_KINDS:
            host = normalize_host(host_or_name)
            name = f"{kind.value}-{host}"
            hosts = {host}
            if self.find(kind, host) is not None:
                raise DuplicateProfileError(f"{kind.value} profile for {host} exists")
        elif kind is ProfileKind.CATEGORY:
            label = host_or_name.strip().lower()
            name = f"Category-{label}"
            hosts = set()
        elif kind is ProfileKind.TEMPORARY:
            name = f"Temporary-{host_or_name}"
            hosts = set()
        elif kind is ProfileKind.DEFAULT:
            name = DEFAULT_PROFILE_NAME
            hosts = set()
            if self.by_name(name) is not None:
                raise DuplicateProfileError("catalog already has a Default profile")
        else:  # Manual
            name = host_or_name
            hosts = set()
        if self.by_name(name) is not None:
            raise DuplicateProfileError(f"profile name {name!r} exists")
        profile = Profile(
            id=self._take_id(),
            kind=kind,
            name=name,
            member_hosts=hosts,
            created_at=now,
            last_qualified_at=now,
        )
        self.profiles[profile.id] = profile
        return profile.id

    def create_manual(self, name: str, hosts: list[str], now: datetime) -> str:
        """Manual profile holding one or several user-chosen hosts."""
        normalized = [normalize_host(h) for h in hosts]
        for host in normalized:
            other = self.find(ProfileKind.MANUAL, host)
            if other is not None:
                raise DuplicateProfileError(
                    f"host {host} already in manual profile {other.name!r}"
                )
        pid = self.create_profile(ProfileKind.MANUAL, name, now)
        self.profiles[pid].member_hosts.update(normalized)
        return pid

    def delete_profile(self, profile_id: str) -> None:
        """Remove a profile; its isolated storage is discarded with it.

        Raises:
            ProfileNotFoundError: unknown id.
            CannotDeleteDefaultError: the Default profile is permanent.
        """
        profile = self.get(profile_id)
        if profile.kind is ProfileKind.DEFAULT:
            raise CannotDeleteDefaultError("the Default profile cannot be deleted")
        del self.profiles[profile_id]

    def drop_temporaries(self) -> list[str]:
        """Discard all temporary profiles (browser close semantics)."""
        doomed = [p.id for p in self.profiles.values() if p.kind is ProfileKind.TEMPORARY]
        for pid in doomed:
            del self.profiles[pid]
        return doomed

    # -- resolution ---------------------------------------------------------

    def resolve(
        self,
        host: str,
        category_hint: str | None = None,
        now: datetime | None = None,
    ) -> str:
        """Pick the profile a navigation to ``host`` opens in.

        In temporary mode every call returns a freshly created Temporary
        profile. Otherwise membership is checked kind by kind in priority
        order; an unmatched host with a category hint lands in that
        predefined category profile (and is remembered there), and
        anything else falls back to Default.
        """
        if self.temporary_mode:
            token = f"{self._next_id:04d}"
            return self.create_profile(ProfileKind.TEMPORARY, token, now or _EPOCH)
        host = normalize_host(host)
        for kind in RESOLUTION_ORDER:
            profile = self.find(kind, host)
            if profile is not None:
                return profile.id
        if category_hint:
            profile = self.category_profile(category_hint)
            if profile is not None:
                profile.member_hosts.add(host)
                return profile.id
        return self.default_profile.id

    # -- persistence ----------------------------------------------------------

    def to_dict(self) -> dict:
        """Snapshot for persistence; temporary profiles are never included."""
        persisted = [
            p.to_dict()
            for p in sorted(self.profiles.values(), key=lambda p: p.id)
            if p.kind is not ProfileKind.TEMPORARY
        ]
        return {
            "version": 1,
            "temporary_mode": self.temporary_mode,
            "next_id": self._next_id,
            "profiles": persisted,
        }

    def save(self, path: str | Path) -> None:
        dump_stable(self.to_dict(), path)

    @classmethod
    def load(cls, path: str | Path) -> ProfileCatalog:
        """Read a catalog file back.

        Raises:
            CatalogFormatError: unparsable JSON (with byte offset) or a
                structurally invalid document.
        """
        text = Path(path).read_text(encoding="utf-8")
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CatalogFormatError(f"invalid catalog JSON: {exc.msg}", exc.pos) from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> ProfileCatalog:
        if not isinstance(raw, dict) or raw.get("version") != 1:
            raise CatalogFormatError("unsupported catalog document")
        catalog = cls()
        catalog.temporary_mode = bool(raw.get("temporary_mode", False))
        try:
            for entry in raw["profiles"]:
                profile = Profile.from_dict(entry)
                catalog.profiles[profile.id] = profile
            catalog._next_id = int(raw.get("next_id", len(catalog.profiles) + 1))
        except (KeyError, TypeError, ValueError) as exc:
            raise CatalogFormatError(f"invalid catalog structure: {exc}") from exc
        catalog.default_profile  # noqa: B018 - validates the invariant
        return catalog
