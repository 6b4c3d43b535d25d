"""Attention-based document retrieval.

A document's relevance to a query is the mean over query PHOCs of the
maximum cosine similarity against any word PHOC in the document.  Ranking
is an exhaustive scan of the collection; ties are broken by doc_id so the
ordering is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Collection, Document


@dataclass(frozen=True)
class RetrievalResult:
    doc_id: str
    score: float
    rank: int  # 1-based


def _row_norms(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1)
    return np.where(norms == 0.0, 1.0, norms)


def doc_score(document: Document, query: list[np.ndarray]) -> float:
    """Mean over query vectors of the max cosine similarity to any document word."""
    if not query:
        raise ValueError("empty query")
    if not document.words:
        raise ValueError(f"document {document.doc_id!r} is empty")
    qmat = np.stack(query)
    dmat = document.phoc_matrix()
    # Take the raw dot products first and normalize afterwards.  For binary
    # PHOCs the dots are exact integers whatever the summation order, which
    # keeps the score bit-identical under word permutation.
    sims = (qmat @ dmat.T) / np.outer(_row_norms(qmat), _row_norms(dmat))
    return float(np.mean(np.max(sims, axis=1)))


def rank_collection(collection: Collection, query: list[np.ndarray], k: int) -> list[RetrievalResult]:
    """Score every document and return the top min(k, |collection|) results."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(collection) == 0:
        raise ValueError("empty collection")
    scored = []
    for doc in collection.ordered():
        try:
            scored.append((doc.doc_id, doc_score(doc, query)))
        except ValueError as e:
            raise ValueError(f"doc_id {doc.doc_id!r}: {e}") from e
    scored.sort(key=lambda t: (-t[1], t[0]))
    return [
        RetrievalResult(doc_id=d, score=s, rank=i + 1)
        for i, (d, s) in enumerate(scored[:k])
    ]
