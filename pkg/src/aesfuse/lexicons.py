"""Loaders for the bundled lexicon data files (see data/*.txt headers)."""

from functools import lru_cache
from importlib import resources


def _read_words(name: str) -> list[str]:
    ref = resources.files("aesfuse").joinpath("data", name)
    words = []
    for line in ref.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.append(line)
    return words


@lru_cache(maxsize=None)
def stopwords() -> frozenset[str]:
    return frozenset(_read_words("stopwords.txt"))


@lru_cache(maxsize=None)
def subordinating_conjunctions() -> frozenset[str]:
    return frozenset(_read_words("subordinating_conjunctions.txt"))


@lru_cache(maxsize=None)
def coordinating_conjunctions() -> frozenset[str]:
    return frozenset(_read_words("coordinating_conjunctions.txt"))


@lru_cache(maxsize=None)
def prepositions() -> frozenset[str]:
    return frozenset(_read_words("prepositions.txt"))


@lru_cache(maxsize=None)
def frequency_ranks() -> dict[str, int]:
    """word -> 1-based rank; unknown words rank one past the list."""
    return {w: i for i, w in enumerate(_read_words("word_frequency.txt"), start=1)}


@lru_cache(maxsize=None)
def spelling_lexicon() -> frozenset[str]:
    return frozenset(_read_words("spelling_lexicon.txt"))
