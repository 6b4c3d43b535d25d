"""Recognition-free document retrieval and question answering over PHOC
embeddings: attention-based ranking, snippet scoring, and trainable BiDAF
span prediction with a Double Inclusion Score evaluation harness."""

from .phoc import PHOC_DIM, normalize_token, phoc_cosine, phoc_encode
from .corpus import (
    Collection,
    Document,
    Line,
    Question,
    Word,
    corrupt_phoc,
    load_collection,
    load_questions,
    preprocess_query,
    write_collection,
    write_questions,
)
from .retriever import RetrievalResult, doc_score, rank_collection
from .snippet_qa import AnswerPrediction, Snippet, answer_attention, make_snippets
from .evaluation import AnswerBoxes, EvalReport, build_boxes, dis, evaluate, top_k_accuracy
from .synth import GeneratorSpec, generate

__all__ = [
    "PHOC_DIM",
    "normalize_token",
    "phoc_encode",
    "phoc_cosine",
    "Collection",
    "Document",
    "Line",
    "Word",
    "Question",
    "load_collection",
    "load_questions",
    "write_collection",
    "write_questions",
    "preprocess_query",
    "corrupt_phoc",
    "RetrievalResult",
    "doc_score",
    "rank_collection",
    "Snippet",
    "AnswerPrediction",
    "make_snippets",
    "answer_attention",
    "AnswerBoxes",
    "EvalReport",
    "build_boxes",
    "dis",
    "top_k_accuracy",
    "evaluate",
    "GeneratorSpec",
    "generate",
]
