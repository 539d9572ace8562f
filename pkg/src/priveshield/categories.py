"""Website categorization for category-profile assignment.

Fully offline by default: stage 1 is a static host table, stage 2 a
transparent keyword scorer gated by a crude English detector. A remote
lookup seam sits between the two for callers that have a real
categorization service; any failure there degrades to the next stage.
"""

from __future__ import annotations

import json
import logging
import re
import string
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Protocol

from .hostutil import normalize_host

logger = logging.getLogger(__name__)

_WORD_RE = re.compile(r"[^\W\d_]+", re.UNICODE)
_ASCII_LETTERS = set(string.ascii_letters)

# Fraction of alphabetic tokens that must be plain-ASCII words for a page
# to count as English.
ENGLISH_ASCII_FRACTION = 0.8


class CategoryClient(Protocol):
    """Seam for an external categorization service.

    Implementations are responsible for honoring their own timeout; any
    exception they raise is treated as "no answer".
    """

    def lookup(self, host: str) -> str | None: ...


@dataclass(frozen=True)
class CategoryModel:
    """Loaded category data: closed label set, host table, keyword bags."""

    categories: tuple[str, ...]
    hosts: dict[str, str]
    keywords: dict[str, list[tuple[str, float]]]
    stopwords: frozenset[str]
    decision_threshold: float
    provenance: str

    def validate(self) -> None:
        if self.decision_threshold <= 0:
            raise ValueError("decision_threshold must be positive")
        for label in self.categories:
            bag = self.keywords.get(label, [])
            if len(bag) < 5:
                raise ValueError(f"category {label!r} needs at least 5 keywords")
            if any(weight <= 0 for _, weight in bag):
                raise ValueError(f"category {label!r} has a non-positive weight")
        for host, label in self.hosts.items():
            if label not in self.categories:
                raise ValueError(f"table maps {host} to unknown category {label!r}")


def load_model(path: str | Path | None = None) -> CategoryModel:
    """Load the packaged category data file, or an override."""
    if path is None:
        text = resources.files("priveshield.data").joinpath("categories.json").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    raw = json.loads(text)
    model = CategoryModel(
        categories=tuple(raw["categories"]),
        hosts={normalize_host(h): c for h, c in raw.get("hosts", {}).items()},
        keywords={
            label: [(kw, float(w)) for kw, w in pairs]
            for label, pairs in raw["keywords"].items()
        },
        stopwords=frozenset(raw.get("stopwords", [])),
        decision_threshold=float(raw["decision_threshold"]),
        provenance=raw.get("provenance", ""),
    )
    model.validate()
    return model


_default_model: CategoryModel | None = None


def default_model() -> CategoryModel:
    global _default_model
    if _default_model is None:
        _default_model = load_model()
    return _default_model


def default_category_labels() -> list[str]:
    return list(default_model().categories)


def is_english(text: str) -> bool:
    """True when at least 80% of the alphabetic tokens are ASCII words."""
    tokens = _WORD_RE.findall(text)
    if not tokens:
        return False
    ascii_tokens = sum(1 for t in tokens if set(t) <= _ASCII_LETTERS)
    return ascii_tokens / len(tokens) >= ENGLISH_ASCII_FRACTION


def remote_lookup(client: CategoryClient | None, host: str, model: CategoryModel) -> str | None:
    """Ask the configured service for a category, degrading to None.

    Transport failures, timeouts and labels outside the closed set are
    all logged with a reason code and swallowed so that classification
    can fall through to the keyword stage.
    """
    if client is None:
        logger.debug("remote_lookup skipped: no_client host=%s", host)
        return None
    try:
        label = client.lookup(normalize_host(host))
    except Exception as exc:  # noqa: BLE001 - any client failure degrades
        logger.warning(
            "remote_lookup failed: reason=%s host=%s", type(exc).__name__, host
        )
        return None
    if label is None:
        return None
    label = label.strip().lower()
    if label not in model.categories:
        logger.warning("remote_lookup failed: reason=UnknownLabel host=%s", host)
        return None
    return label


class CategoryClassifier:
    """Two-stage classifier: host table first, keyword scorer second.

    ``scorer_runs`` counts how many times the keyword stage actually ran,
    which lets tests assert that non-English pages never reach it.
    """

    def __init__(
        self, model: CategoryModel | None = None, client: CategoryClient | None = None
    ) -> None:
        self.model = model or default_model()
        self.client = client
        self.scorer_runs = 0

    def classify(self, host: str, page_text: str | None = None) -> str | None:
        """Category of a site, or None when nothing matches.

        Table hits shadow everything else; the keyword scorer only runs
        for English page text and only wins when the best score reaches
        the decision threshold. Ties break toward the category listed
        first in the data file.
        """
        host = normalize_host(host)
        label = self.model.hosts.get(host)
        if label is not None:
            return label
        if self.client is not None:
            label = remote_lookup(self.client, host, self.model)
            if label is not None:
                return label
        if page_text and is_english(page_text):
            return self._score(page_text)
        return None

    def _score(self, page_text: str) -> str | None:
        self.scorer_runs += 1
        tokens = [t.lower() for t in _WORD_RE.findall(page_text)]
        counts: dict[str, int] = {}
        for token in tokens:
            if token not in self.model.stopwords:
                counts[token] = counts.get(token, 0) + 1
        best_label: str | None = None
        best_score = 0.0
        for label in self.model.categories:
            score = sum(
                weight * counts.get(keyword, 0)
                for keyword, weight in self.model.keywords.get(label, [])
            )
            if score > best_score:
                best_label, best_score = label, score
        if best_label is not None and best_score >= self.model.decision_threshold:
            return best_label
        return None
