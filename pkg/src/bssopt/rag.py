"""Knowledge-base retrieval: hashed bag-of-words embeddings, cosine top-k
search and prompt augmentation.

Knowledge-base text files hold one record per document::

    #id greedy-recipe tags:solver,coverage
    Free text, any number of lines,
    until the next header line.
"""
from __future__ import annotations

import hashlib
import json
import math
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import numpy as np

from .model import InputError

_TOKEN = re.compile(r"[a-z0-9_]+")
_HEADER = re.compile(r"^#id\s+(\S+)(?:\s+tags:(\S*))?\s*$")


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    tags: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.id or any(c.isspace() for c in self.id):
            raise InputError(f"document id must be a non-empty token, got {self.id!r}")
        if not self.text.strip():
            raise InputError(f"document {self.id!r} has empty text")
        object.__setattr__(self, "tags", tuple(self.tags))


@dataclass(frozen=True)
class RetrievalHit:
    document: Document
    score: float


class Embedder(Protocol):
    name: str
    dim: int
    deterministic: bool

    def __call__(self, text: str) -> np.ndarray: ...


class HashingEmbedder:
    """Lowercase word tokens hashed (BLAKE2b) into ``dim`` buckets, L2-normalized.

    Text with no word tokens embeds to the zero vector.
    """

    deterministic = True

    def __init__(self, dim: int = 256):
        if dim <= 0:
            raise InputError("embedding dimension must be positive")
        self.dim = dim
        self.name = f"hash-bow-{dim}"

    @staticmethod
    def tokens(text: str) -> list[str]:
        return _TOKEN.findall(text.lower())

    def bucket(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little") % self.dim

    def __call__(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        for tok in self.tokens(text):
            vec[self.bucket(tok)] += 1.0
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec


def embed(text: str, embedder: Embedder | None = None) -> np.ndarray:
    if not isinstance(text, str) or not text:
        raise InputError("cannot embed empty text")
    embedder = embedder or HashingEmbedder()
    vec = np.asarray(embedder(text), dtype=float)
    if vec.shape != (embedder.dim,) or not np.all(np.isfinite(vec)):
        raise InputError(f"embedder {embedder.name} returned an invalid vector")
    return vec


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two vectors; 0 when either has zero norm."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


class VectorStore:
    """Exhaustive cosine-similarity store over documents.

    Reads may run concurrently; ``add``/``remove`` take an exclusive lock.
    """

    def __init__(self, embedder: Embedder | None = None):
        self.embedder = embedder or HashingEmbedder()
        self._docs: dict[str, Document] = {}
        self._vecs: dict[str, np.ndarray] = {}
        self._lock = threading.RLock()

    def __len__(self):
        return len(self._docs)

    def __contains__(self, doc_id):
        return doc_id in self._docs

    @property
    def documents(self) -> list[Document]:
        return [self._docs[k] for k in sorted(self._docs)]

    def add(self, doc: Document, vector=None) -> None:
        with self._lock:
            if doc.id in self._docs:
                raise InputError(f"duplicate document id {doc.id!r}")
            vec = embed(doc.text, self.embedder) if vector is None else np.asarray(vector, dtype=float)
            if vec.shape != (self.embedder.dim,):
                raise InputError(f"vector for {doc.id!r} has wrong dimension")
            self._docs[doc.id] = doc
            self._vecs[doc.id] = vec

    def extend(self, docs) -> None:
        for d in docs:
            self.add(d)

    def remove(self, doc_id: str) -> None:
        with self._lock:
            del self._docs[doc_id]
            del self._vecs[doc_id]

    def retrieve(self, query: str, k: int) -> list[RetrievalHit]:
        """Top ``k`` documents by cosine similarity; ties by ascending id."""
        if not isinstance(k, int) or k <= 0:
            raise InputError("k must be a positive integer")
        q = embed(query, self.embedder)
        with self._lock:
            scored = [(cosine_similarity(q, self._vecs[i]), i) for i in self._docs]
            scored.sort(key=lambda s: (-s[0], s[1]))
            return [RetrievalHit(self._docs[i], s) for s, i in scored[:k]]

    def save(self, path) -> None:
        """Write documents plus embedder identity; vectors are stored only
        when the embedder is not deterministic."""
        with self._lock:
            doc = {
                "embedder": {"name": self.embedder.name, "dim": self.embedder.dim},
                "documents": [
                    {"id": d.id, "text": d.text, "tags": list(d.tags)} for d in self.documents
                ],
            }
            if not getattr(self.embedder, "deterministic", False):
                doc["vectors"] = {i: self._vecs[i].tolist() for i in sorted(self._vecs)}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path, embedder: Embedder | None = None) -> "VectorStore":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        meta = doc.get("embedder", {})
        if embedder is None:
            name = meta.get("name", "")
            if not name.startswith("hash-bow-"):
                raise InputError(f"store {path} needs embedder {name!r}; pass one explicitly")
            embedder = HashingEmbedder(int(meta["dim"]))
        elif meta and (meta.get("name") != embedder.name or meta.get("dim") != embedder.dim):
            raise InputError(f"store {path} was built with {meta}, not {embedder.name}")
        store = cls(embedder)
        vectors = doc.get("vectors", {})
        for d in doc["documents"]:
            store.add(Document(d["id"], d["text"], tuple(d.get("tags", ()))), vectors.get(d["id"]))
        return store


def augment_prompt(query: str, hits: list[RetrievalHit], budget: int | None = 4000,
                   separator: str = "\n\n### Retrieved knowledge\n") -> str:
    """Query, separator, then ``[id] text`` per hit in rank order.

    With a character ``budget``, the query and separator are always kept and
    hits are cut from the lowest rank up so the total length stays within it.
    """
    out = query + separator
    remaining = None if budget is None else max(0, budget - len(out))
    parts = []
    for hit in hits:
        piece = f"[{hit.document.id}] {hit.document.text}\n"
        if remaining is not None:
            if remaining <= 0:
                break
            piece = piece[:remaining]
            remaining -= len(piece)
        parts.append(piece)
    return out + "".join(parts)


# ---------------------------------------------------------------------------
# knowledge-base text files


def parse_kb(text: str, source: str = "<kb>") -> list[Document]:
    docs = []
    current = None
    lines: list[str] = []

    def flush():
        if current is not None:
            body = "\n".join(lines).strip("\n")
            docs.append(Document(current[0], body, current[1]))

    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.startswith("#id"):
            m = _HEADER.match(line)
            if not m:
                raise InputError(f"{source}:{lineno}: malformed header {line!r}")
            flush()
            tags = tuple(t for t in (m.group(2) or "").split(",") if t)
            current = (m.group(1), tags)
            lines = []
        elif current is None:
            if line.strip():
                raise InputError(f"{source}:{lineno}: text before the first #id header")
        else:
            lines.append(line)
    flush()
    return docs


def format_kb(docs: list[Document]) -> str:
    chunks = []
    for d in docs:
        chunks.append(f"#id {d.id} tags:{','.join(d.tags)}\n{d.text}\n")
    return "".join(chunks)


def load_kb(path) -> list[Document]:
    """Read a knowledge-base file, or every ``*.kb``/``*.txt`` file in a directory."""
    path = Path(path)
    files = sorted(p for p in path.iterdir() if p.suffix in (".kb", ".txt")) if path.is_dir() else [path]
    docs = []
    for f in files:
        docs.extend(parse_kb(f.read_text(encoding="utf-8"), str(f)))
    return docs


def build_store(docs, embedder: Embedder | None = None) -> VectorStore:
    store = VectorStore(embedder)
    store.extend(docs)
    return store


@dataclass
class Retriever:
    """A store plus a fixed ``k``, as consumed by the agent harness."""

    store: VectorStore
    k: int = 3
    budget: int | None = 4000
    query_builder: Callable[[str], str] = field(default=lambda task: task)

    def __call__(self, task: str) -> tuple[str, list[RetrievalHit]]:
        hits = self.store.retrieve(self.query_builder(task), self.k)
        return augment_prompt(task, hits, self.budget), hits
