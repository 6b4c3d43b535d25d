from __future__ import annotations

import numpy as np
import pytest

from phocqa.corpus import Collection, Document, Line, Word
from phocqa.phoc import phoc_encode

ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789"


def random_word(rng: np.random.Generator, min_len: int = 1, max_len: int = 12) -> str:
    n = int(rng.integers(min_len, max_len + 1))
    return "".join(ALPHABET[i] for i in rng.integers(0, len(ALPHABET), size=n))


def make_document(doc_id: str, lines_of_words: list[list[str]]) -> Document:
    """Build a validated Document from a nested list of word strings."""
    words = []
    lines = []
    idx = 0
    for li, line_words in enumerate(lines_of_words):
        start = idx
        for w in line_words:
            words.append(Word(idx, li, w, phoc_encode(w)))
            idx += 1
        lines.append(Line(li, start, idx - 1))
    return Document(doc_id, tuple(words), tuple(lines))


def make_collection(docs: dict[str, list[list[str]]]) -> Collection:
    return Collection({k: make_document(k, v) for k, v in docs.items()})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
