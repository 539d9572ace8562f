"""Exception types shared across the package."""

from __future__ import annotations


class PriveShieldError(Exception):
    """Base class for all errors raised by this package."""


class DuplicateProfileError(PriveShieldError):
    """A profile with the same name or (kind, host) pair already exists."""


class ProfileNotFoundError(PriveShieldError):
    """The referenced profile id or name is not in the catalog."""


class CannotDeleteDefaultError(PriveShieldError):
    """The default profile is permanent and cannot be deleted."""


class CatalogFormatError(PriveShieldError):
    """A catalog file could not be parsed.

    Attributes:
        offset: byte offset of the first unparsable position.
    """

    def __init__(self, message: str, offset: int = 0) -> None:
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class ScopeViolationError(PriveShieldError):
    """A cookie's domain does not cover the origin that tried to set it."""


class OutOfOrderEventError(PriveShieldError):
    """A tab delivered an event with a timestamp earlier than its last one."""


class UnknownSiteError(PriveShieldError):
    """A scenario step referenced a host that is not part of the world."""


class MalformedScriptError(PriveShieldError):
    """A scenario script step is structurally invalid.

    Attributes:
        step_index: zero-based index of the offending step, -1 for
            problems outside the step list.
    """

    def __init__(self, message: str, step_index: int = -1) -> None:
        super().__init__(f"step {step_index}: {message}")
        self.step_index = step_index


class UnknownProfileError(PriveShieldError):
    """A report scope referenced a profile id absent from the report."""
