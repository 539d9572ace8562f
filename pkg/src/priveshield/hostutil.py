"""Hostname normalization and cookie-style domain/path matching.

Hosts are compared after normalization: lowercase, trailing dot removed,
leading "www." stripped. Registrable domains are derived with a
last-two-labels rule plus a small table of known multi-label public
suffixes; that is enough for the synthetic ``.example`` hosts this
package works with and avoids an external suffix-list dependency.
"""

from __future__ import annotations

from urllib.parse import urlsplit

# Multi-label suffixes under which the registrable domain takes three labels.
_MULTI_LABEL_SUFFIXES = frozenset(
    {
        "co.uk",
        "org.uk",
        "ac.uk",
        "gov.uk",
        "com.au",
        "net.au",
        "org.au",
        "co.jp",
        "co.nz",
        "com.br",
    }
)


def normalize_host(host: str) -> str:
    """Return the canonical form of a hostname."""
    host = host.strip().lower().rstrip(".")
    if host.startswith("www."):
        host = host[4:]
    return host


def host_of_url(url: str) -> str:
    """Extract and normalize the hostname of an absolute URL."""
    parsed = urlsplit(url)
    if not parsed.hostname:
        raise ValueError(f"URL has no hostname: {url!r}")
    return normalize_host(parsed.hostname)


def path_of_url(url: str) -> str:
    """Extract the path component of a URL, defaulting to "/"."""
    return urlsplit(url).path or "/"


def registrable_domain(host: str) -> str:
    """Collapse a hostname to its registrable domain.

    "shop.nike.example" -> "nike.example"; already-registrable inputs are
    returned unchanged.
    """
    host = normalize_host(host)
    labels = host.split(".")
    if len(labels) <= 2:
        return host
    if ".".join(labels[-2:]) in _MULTI_LABEL_SUFFIXES:
        return ".".join(labels[-3:])
    return ".".join(labels[-2:])


def same_registrable_domain(a: str, b: str) -> bool:
    return registrable_domain(a) == registrable_domain(b)


def domain_match(cookie_domain: str, request_host: str) -> bool:
    """Cookie domain matching: exact host or dot-separated suffix.

    A leading dot on the cookie domain is ignored, as in the common
    jar convention where ".nike.example" covers the apex and every
    subdomain.
    """
    dom = normalize_host(cookie_domain.lstrip("."))
    host = normalize_host(request_host)
    if not dom:
        return False
    return host == dom or host.endswith("." + dom)


def path_match(cookie_path: str, request_path: str) -> bool:
    """Cookie path matching: prefix match on whole path segments."""
    cookie_path = cookie_path or "/"
    request_path = request_path or "/"
    if request_path == cookie_path:
        return True
    if request_path.startswith(cookie_path):
        return cookie_path.endswith("/") or request_path[len(cookie_path)] == "/"
    return False
