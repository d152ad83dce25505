"""Q&A mode: lexical retrieval over a curated corpus plus grounded synthesis.

Documents are chunked on paragraph boundaries (chunks concatenate back to
the document exactly) and indexed with BM25 (k1=1.2, b=0.75; idf is the
classic ln((N-df+0.5)/(df+0.5)) clamped at zero, so terms present in most
chunks contribute nothing and stopword-only questions score 0). A question
is answered only from retrieved chunks; when nothing scores above zero the
answer abstains with no citations and no provider call.
"Q:"-prefixed messages anywhere in a session route here without consuming
a workflow turn.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyDocument
from .prompts import build_qa_prompt
from .providers import CompletionProvider, ProviderConfig, complete
from .safety import require_clean

CHUNK_MAX_CHARS = 1200
BM25_K1 = 1.2
BM25_B = 0.75

_TOKEN = re.compile(r"[a-z0-9]+")
_QA_PREFIX = re.compile(r"^\s*q\s*:", re.IGNORECASE)


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class DocChunk:
    doc_id: str
    chunk_index: int
    text: str
    title: str

    @property
    def chunk_id(self) -> str:
        return f"{self.doc_id}:{self.chunk_index}"


def chunk_document(doc_id: str, text: str, title: str) -> list[DocChunk]:
    """Split on paragraph boundaries into chunks of at most 1200 characters.

    Separators stay attached to the preceding paragraph so the chunks of a
    document concatenate back to the document byte-for-byte; an oversized
    single paragraph is hard-split.
    """
    pieces: list[str] = []
    for piece in re.split(r"(\n\s*\n)", text):
        if not piece:
            continue
        while len(piece) > CHUNK_MAX_CHARS:
            pieces.append(piece[:CHUNK_MAX_CHARS])
            piece = piece[CHUNK_MAX_CHARS:]
        pieces.append(piece)
    chunks: list[str] = []
    buffer = ""
    for piece in pieces:
        if buffer and len(buffer) + len(piece) > CHUNK_MAX_CHARS:
            chunks.append(buffer)
            buffer = piece
        else:
            buffer += piece
    if buffer:
        chunks.append(buffer)
    return [
        DocChunk(doc_id=doc_id, chunk_index=i, text=chunk, title=title)
        for i, chunk in enumerate(chunks)
    ]


class Index:
    """Immutable BM25 index over document chunks."""

    def __init__(self, chunks: list[DocChunk]):
        self.chunks = list(chunks)
        self._tf: list[Counter] = [Counter(tokenize(c.text)) for c in self.chunks]
        self._doc_len = [sum(tf.values()) for tf in self._tf]
        self._avgdl = (sum(self._doc_len) / len(self._doc_len)) if self._doc_len else 0.0
        df: Counter = Counter()
        for tf in self._tf:
            df.update(tf.keys())
        n = len(self.chunks)
        self._idf = {
            term: max(0.0, math.log((n - count + 0.5) / (count + 0.5)))
            for term, count in df.items()
        }
        self._by_id = {c.chunk_id: c for c in self.chunks}

    def __len__(self) -> int:
        return len(self.chunks)

    def resolve(self, chunk_id: str) -> DocChunk:
        return self._by_id[chunk_id]

    def score(self, query_tokens: list[str], position: int) -> float:
        tf = self._tf[position]
        dl = self._doc_len[position]
        score = 0.0
        for term in query_tokens:
            f = tf.get(term)
            if not f:
                continue
            idf = self._idf.get(term, 0.0)
            denom = f + BM25_K1 * (1 - BM25_B + BM25_B * dl / self._avgdl)
            score += idf * f * (BM25_K1 + 1) / denom
        return score

    def search(self, query: str, k: int = 3) -> list[tuple[DocChunk, float]]:
        """Top-k chunks with score strictly above zero, deterministic order."""
        tokens = tokenize(query)
        if not tokens or not self.chunks:
            return []
        scored = [
            (self.chunks[i], self.score(tokens, i)) for i in range(len(self.chunks))
        ]
        scored = [(c, s) for c, s in scored if s > 0.0]
        scored.sort(key=lambda pair: (-pair[1], pair[0].doc_id, pair[0].chunk_index))
        return scored[:k]


def index_corpus(documents: list[dict]) -> Index:
    """Index documents given as {id, title, text} mappings."""
    chunks: list[DocChunk] = []
    for doc in documents:
        doc_id = doc["id"]
        text = doc["text"]
        if not text.strip():
            raise EmptyDocument(doc_id)
        chunks.extend(chunk_document(doc_id, text, doc.get("title", doc_id)))
    return Index(chunks)


def load_corpus(directory: str | Path) -> list[dict]:
    """Read a corpus directory: manifest.json listing {id, title, path}."""
    root = Path(directory)
    manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
    documents = []
    for item in manifest:
        path = root / item["path"]
        documents.append(
            {
                "id": item["id"],
                "title": item.get("title", item["id"]),
                "text": path.read_text(encoding="utf-8"),
            }
        )
    return documents


@dataclass
class GroundedAnswer:
    answer: str
    citations: list[str] = field(default_factory=list)
    scores: dict[str, float] = field(default_factory=dict)
    grounded: bool = True

    def as_dict(self) -> dict:
        return {
            "answer": self.answer,
            "citations": list(self.citations),
            "scores": {k: round(v, 6) for k, v in self.scores.items()},
            "grounded": self.grounded,
        }


UNGROUNDED_NOTICE = (
    "No grounded answer is available: the curated corpus has no passage "
    "matching this question."
)


def answer_question(
    question: str,
    index: Index,
    provider: CompletionProvider,
    config: ProviderConfig | None = None,
    k: int = 3,
) -> GroundedAnswer:
    """Retrieve top-k chunks and synthesize an answer grounded in them."""
    require_clean(question)
    hits = index.search(question, k)
    if not hits:
        return GroundedAnswer(answer=UNGROUNDED_NOTICE, grounded=False)
    bundle = build_qa_prompt(question, [(c.chunk_id, c.text) for c, _ in hits])
    answer = complete(bundle, provider, config)
    return GroundedAnswer(
        answer=answer,
        citations=[c.chunk_id for c, _ in hits],
        scores={c.chunk_id: s for c, s in hits},
    )


def route_message(session, text: str) -> tuple[str, str]:
    """Route "Q:"-prefixed messages to Q&A, everything else to the workflow.

    Routing never touches the session; returns ("qa", question) or
    ("workflow", original text).
    """
    match = _QA_PREFIX.match(text or "")
    if match:
        return "qa", text[match.end():].strip()
    return "workflow", text
