"""Snippet-level answer extraction (the trainless QA baseline).

The document is cut into overlapping two-line snippets and each snippet is
scored against the query with the same max/mean attention score used for
retrieval.  The best snippet's line span is the predicted answer and its
score is the confidence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Document
from .retriever import _row_norms


@dataclass(frozen=True)
class Snippet:
    start_line: int
    end_line: int
    word_ids: tuple[int, ...]


@dataclass(frozen=True)
class AnswerPrediction:
    doc_id: str
    start_line: int
    end_line: int
    confidence: float
    # word-granularity span when the predictor works at word level
    start_word: int | None = None
    end_word: int | None = None


def make_snippets(document: Document) -> list[Snippet]:
    """Sliding window of two consecutive lines, stride 1; one-line documents
    yield the degenerate snippet (0, 0)."""
    n = document.num_lines
    if n == 1:
        return [Snippet(0, 0, tuple(sorted(document.word_ids_of_lines(0, 0))))]
    return [
        Snippet(i, i + 1, tuple(sorted(document.word_ids_of_lines(i, i + 1))))
        for i in range(n - 1)
    ]


def answer_attention(document: Document, query: list[np.ndarray]) -> AnswerPrediction:
    """Return the best-scoring snippet; ties go to the earlier start line."""
    if not query:
        raise ValueError("empty query")
    qmat = np.stack(query)
    dmat = document.phoc_matrix()
    sims = (qmat @ dmat.T) / np.outer(_row_norms(qmat), _row_norms(dmat))  # J x T
    best: Snippet | None = None
    best_score = -1.0
    for snip in make_snippets(document):
        cols = list(snip.word_ids)
        score = float(np.mean(np.max(sims[:, cols], axis=1)))
        if score > best_score:
            best, best_score = snip, score
    assert best is not None
    return AnswerPrediction(
        doc_id=document.doc_id,
        start_line=best.start_line,
        end_line=best.end_line,
        confidence=best_score,
    )
