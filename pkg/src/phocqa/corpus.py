"""Data model and ingestion for word/line-segmented document collections.

A document is an ordered word sequence with line membership; every word
carries the PHOC vector of its transcription.  Recognition noise (the
"predicted PHOC" condition) is simulated by independent Bernoulli bit
flips on the document-side vectors; query vectors stay exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .phoc import PHOC_DIM, normalize_token, phoc_encode
from .stopwords import NORMALIZED_STOPWORDS


@dataclass(frozen=True)
class Word:
    word_index: int
    line_index: int
    transcription: str
    phoc: np.ndarray
    bbox: tuple[float, float, float, float] | None = None


@dataclass(frozen=True)
class Line:
    line_index: int
    start_word: int
    end_word: int  # inclusive


@dataclass(frozen=True)
class Document:
    doc_id: str
    words: tuple[Word, ...]
    lines: tuple[Line, ...]

    @property
    def num_lines(self) -> int:
        return len(self.lines)

    def line_of_word(self, word_index: int) -> int:
        return self.words[word_index].line_index

    def word_ids_of_lines(self, start_line: int, end_line: int) -> set[int]:
        """All word indices on lines start_line..end_line inclusive."""
        ids: set[int] = set()
        for ln in self.lines[start_line : end_line + 1]:
            ids.update(range(ln.start_word, ln.end_word + 1))
        return ids

    def phoc_matrix(self) -> np.ndarray:
        return np.stack([w.phoc for w in self.words])


@dataclass(frozen=True)
class Collection:
    documents: dict[str, Document] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.documents)

    def __getitem__(self, doc_id: str) -> Document:
        return self.documents[doc_id]

    def ordered(self) -> list[Document]:
        return [self.documents[k] for k in sorted(self.documents)]


@dataclass(frozen=True)
class Question:
    question_id: str
    text: str
    tokens: tuple[str, ...]
    gold_doc_id: str
    gold_word_span: tuple[int, int]
    gold_line_span: tuple[int, int]


def _build_document(entry: dict) -> Document:
    doc_id = entry["doc_id"]
    raw_words = entry["words"]
    if not raw_words:
        raise ValueError(f"document {doc_id!r}: empty document")
    words = []
    for pos, w in enumerate(raw_words):
        idx = w["word_index"]
        if idx != pos:
            raise ValueError(
                f"document {doc_id!r}: word_index {idx} at position {pos} "
                "(indices must be 0-based and consecutive)"
            )
        text = normalize_token(w["text"])
        bbox = tuple(w["bbox"]) if w.get("bbox") is not None else None
        words.append(Word(idx, w["line_index"], text, phoc_encode(text), bbox))

    lines = tuple(
        Line(ln["line_index"], ln["start_word"], ln["end_word"])
        for ln in sorted(entry["lines"], key=lambda x: x["line_index"])
    )
    # Line spans must partition the word sequence in order.
    expected_start = 0
    for ln in lines:
        if ln.start_word != expected_start or ln.end_word < ln.start_word:
            raise ValueError(f"document {doc_id!r}: line {ln.line_index} span invalid or overlapping")
        expected_start = ln.end_word + 1
    if expected_start != len(words):
        raise ValueError(f"document {doc_id!r}: line spans do not cover all words")
    by_index = {ln.line_index: ln for ln in lines}
    for w in words:
        ln = by_index.get(w.line_index)
        if ln is None or not (ln.start_word <= w.word_index <= ln.end_word):
            raise ValueError(
                f"document {doc_id!r}: word_index {w.word_index} has line_index "
                f"{w.line_index} not covered by any line span"
            )
    return Document(doc_id, tuple(words), lines)


def load_collection(path: str | Path) -> Collection:
    """Load and fully validate a collection JSON file; PHOCs are computed here."""
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    documents: dict[str, Document] = {}
    for entry in data["documents"]:
        doc = _build_document(entry)
        if doc.doc_id in documents:
            raise ValueError(f"duplicate doc_id {doc.doc_id!r}")
        documents[doc.doc_id] = doc
    return Collection(documents)


def write_collection(collection: Collection, path: str | Path) -> None:
    data = {
        "documents": [
            {
                "doc_id": doc.doc_id,
                "lines": [
                    {"line_index": ln.line_index, "start_word": ln.start_word, "end_word": ln.end_word}
                    for ln in doc.lines
                ],
                "words": [
                    {
                        "word_index": w.word_index,
                        "line_index": w.line_index,
                        "text": w.transcription,
                        **({"bbox": list(w.bbox)} if w.bbox is not None else {}),
                    }
                    for w in doc.words
                ],
            }
            for doc in collection.ordered()
        ]
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=1)


def _line_span_of_word_span(doc: Document, span: tuple[int, int]) -> tuple[int, int]:
    return (doc.line_of_word(span[0]), doc.line_of_word(span[1]))


def load_questions(path: str | Path, collection: Collection) -> list[Question]:
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    questions = []
    for q in data["questions"]:
        qid = q["question_id"]
        doc = collection.documents.get(q["gold_doc_id"])
        if doc is None:
            raise ValueError(f"question {qid!r}: unknown gold_doc_id {q['gold_doc_id']!r}")
        span = (q["gold_start_word"], q["gold_end_word"])
        if not (0 <= span[0] <= span[1] < len(doc.words)):
            raise ValueError(f"question {qid!r}: gold span {span} outside document {doc.doc_id!r}")
        questions.append(
            Question(
                question_id=qid,
                text=q["text"],
                tokens=tuple(preprocess_query(q["text"])[0]),
                gold_doc_id=doc.doc_id,
                gold_word_span=span,
                gold_line_span=_line_span_of_word_span(doc, span),
            )
        )
    return questions


def write_questions(questions: list[Question], path: str | Path) -> None:
    data = {
        "questions": [
            {
                "question_id": q.question_id,
                "text": q.text,
                "gold_doc_id": q.gold_doc_id,
                "gold_start_word": q.gold_word_span[0],
                "gold_end_word": q.gold_word_span[1],
            }
            for q in questions
        ]
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=1)


def preprocess_query(text: str) -> tuple[list[str], list[np.ndarray]]:
    """Tokenize, normalize and stopword-filter a question; encode tokens to PHOC.

    If every normalized token is a stopword the filter is skipped, otherwise
    the query would be empty and the retrieval score undefined.
    """
    normalized = [t for t in (normalize_token(tok) for tok in text.split()) if t]
    if not normalized:
        raise ValueError("question has no usable tokens after normalization")
    kept = [t for t in normalized if t not in NORMALIZED_STOPWORDS]
    if not kept:
        kept = normalized
    return kept, [phoc_encode(t) for t in kept]


def corrupt_phoc(v: np.ndarray, flip_rate: float, rng: np.random.Generator) -> np.ndarray:
    """Flip each bit of a binary PHOC independently with probability flip_rate."""
    if not 0.0 <= flip_rate <= 1.0:
        raise ValueError(f"flip_rate {flip_rate} outside [0, 1]")
    if not np.all((v == 0.0) | (v == 1.0)):
        raise ValueError("corrupt_phoc expects a binary vector")
    flips = rng.random(PHOC_DIM) < flip_rate
    return np.abs(v - flips.astype(np.float64))


def corrupt_collection(collection: Collection, flip_rate: float, rng: np.random.Generator) -> Collection:
    """Corrupt every word PHOC in the collection; deterministic given the rng seed.

    Documents are visited in sorted doc_id order so the result does not depend
    on dict insertion order.
    """
    if flip_rate == 0.0:
        return collection
    documents = {}
    for doc in collection.ordered():
        words = tuple(replace(w, phoc=corrupt_phoc(w.phoc, flip_rate, rng)) for w in doc.words)
        documents[doc.doc_id] = replace(doc, words=words)
    return Collection(documents)
