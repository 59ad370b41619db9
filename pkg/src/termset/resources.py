"""Loaders for data files shipped with the package."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources


def _data_text(name: str) -> str:
    return resources.files("termset").joinpath("data", name).read_text("utf-8")


@lru_cache(maxsize=None)
def load_stopwords() -> frozenset[str]:
    """Built-in English stopword list (casefolded)."""
    words = []
    for line in _data_text("stopwords.txt").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.append(line.casefold())
    return frozenset(words)


@lru_cache(maxsize=None)
def load_abbreviations() -> dict[str, tuple[str, ...]]:
    """Shipped abbreviation lexicon: normalized abbreviation -> expansions."""
    raw = json.loads(_data_text("abbreviations.json"))
    return {k: tuple(v) for k, v in raw.items()}


def toy_corpus_text() -> str:
    """The bundled demo corpus (plain text, blank-line document separation)."""
    return _data_text("toy_corpus.txt")
