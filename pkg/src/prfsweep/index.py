"""Inverted index over a directory of UTF-8 text files.

One document per file. The on-disk format is a single self-describing
container (magic, version, analyzer config, doc table, postings, CRC32);
postings are delta-encoded on doc id with variable-length integers.
Byte layout is documented in docs/index_format.md.
"""

from __future__ import annotations

import logging
import os
import zlib
from dataclasses import dataclass
from pathlib import Path

from .analysis import AnalyzerConfig, tokenize

__all__ = [
    "Document",
    "InvertedIndex",
    "build_index",
    "save_index",
    "load_index",
    "CorpusError",
    "IndexFormatError",
    "IndexVersionError",
    "IndexChecksumError",
    "IndexTruncatedError",
]

log = logging.getLogger(__name__)

MAGIC = b"PRFSIDX\n"
FORMAT_VERSION = 1


class CorpusError(Exception):
    """The corpus directory yields no indexable documents."""


class IndexFormatError(Exception):
    """The file is not an index container."""


class IndexVersionError(IndexFormatError):
    """The container declares an unsupported format version."""


class IndexChecksumError(IndexFormatError):
    """The container's trailing CRC32 does not match its contents."""


class IndexTruncatedError(IndexFormatError):
    """The container ends before its structure is complete."""


@dataclass(frozen=True)
class Document:
    doc_id: int
    external_id: str
    length: int  # token count


class InvertedIndex:
    """Immutable term -> postings map plus the document table.

    Postings are (doc_id, term_freq) pairs sorted by ascending doc_id;
    doc ids are dense and assigned by lexicographic external_id order.
    """

    def __init__(self, config: AnalyzerConfig, docs: list[Document],
                 terms: dict[str, list[tuple[int, int]]]):
        self.config = config
        self.docs = docs
        self.terms = terms
        self.read_errors: list[tuple[str, str]] = []  # transient, not persisted
        self._forward: list[dict[str, int]] | None = None

    @property
    def doc_count(self) -> int:
        return len(self.docs)

    def doc(self, doc_id: int) -> Document:
        if not 0 <= doc_id < len(self.docs):
            raise ValueError(f"unknown doc_id: {doc_id}")
        return self.docs[doc_id]

    def doc_freq(self, term: str) -> int:
        postings = self.terms.get(term)
        return len(postings) if postings else 0

    def postings(self, term: str) -> list[tuple[int, int]]:
        """Exact postings for term, empty if absent; sorted by doc_id."""
        return self.terms.get(term, [])

    def doc_vector(self, doc_id: int) -> dict[str, int]:
        """term -> term_freq for one document (forward view of the postings)."""
        self.doc(doc_id)
        if self._forward is None:
            forward: list[dict[str, int]] = [{} for _ in self.docs]
            for term, postings in self.terms.items():
                for did, tf in postings:
                    forward[did][term] = tf
            self._forward = forward
        return self._forward[doc_id]

    def __eq__(self, other) -> bool:
        if not isinstance(other, InvertedIndex):
            return NotImplemented
        return (self.config == other.config and self.docs == other.docs
                and self.terms == other.terms)

    def __repr__(self) -> str:
        return (f"InvertedIndex(docs={len(self.docs)}, "
                f"terms={len(self.terms)})")


def build_index(corpus_dir, config: AnalyzerConfig | None = None) -> InvertedIndex:
    """Index every .txt file under corpus_dir (recursively).

    external_id is the file path relative to corpus_dir (POSIX separators).
    Unreadable files are recorded on index.read_errors and skipped; a corpus
    with no readable files is a fatal CorpusError.
    """
    if config is None:
        config = AnalyzerConfig()
    root = Path(corpus_dir)
    if not root.is_dir():
        raise CorpusError(f"not a directory: {root}")
    paths = sorted(root.rglob("*.txt"), key=lambda p: p.relative_to(root).as_posix())

    docs: list[Document] = []
    terms: dict[str, list[tuple[int, int]]] = {}
    errors: list[tuple[str, str]] = []
    for path in paths:
        external_id = path.relative_to(root).as_posix()
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            errors.append((external_id, str(exc)))
            log.warning("skipping unreadable file %s: %s", external_id, exc)
            continue
        tokens = tokenize(text, config)
        doc_id = len(docs)
        docs.append(Document(doc_id, external_id, len(tokens)))
        counts: dict[str, int] = {}
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
        for term, tf in counts.items():
            terms.setdefault(term, []).append((doc_id, tf))

    if not docs:
        raise CorpusError(f"no readable .txt files under {root}")
    # Postings arrive in ascending doc_id order already; sort defensively.
    for postings in terms.values():
        postings.sort()
    index = InvertedIndex(config, docs, terms)
    index.read_errors = errors
    return index


# ---------------------------------------------------------------------------
# Persistence: varint codec and the container format.

def write_varint(out: bytearray, value: int) -> None:
    if value < 0:
        raise ValueError("varints are unsigned")
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return


class _Reader:
    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def varint(self) -> int:
        value = 0
        shift = 0
        while True:
            if self.pos >= len(self.data):
                raise IndexTruncatedError("index file ends inside a varint")
            byte = self.data[self.pos]
            self.pos += 1
            value |= (byte & 0x7F) << shift
            if not byte & 0x80:
                return value
            shift += 7

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise IndexTruncatedError("index file ends inside a field")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def string(self) -> str:
        return self.take(self.varint()).decode("utf-8")


def _encode(index: InvertedIndex) -> bytes:
    body = bytearray(MAGIC)
    write_varint(body, FORMAT_VERSION)
    config_blob = index.config.to_json().encode("utf-8")
    write_varint(body, len(config_blob))
    body += config_blob
    write_varint(body, len(index.docs))
    for doc in index.docs:
        ext = doc.external_id.encode("utf-8")
        write_varint(body, len(ext))
        body += ext
        write_varint(body, doc.length)
    write_varint(body, len(index.terms))
    for term in sorted(index.terms):
        raw = term.encode("utf-8")
        write_varint(body, len(raw))
        body += raw
        postings = index.terms[term]
        write_varint(body, len(postings))
        prev = 0
        for doc_id, tf in postings:
            write_varint(body, doc_id - prev)
            write_varint(body, tf)
            prev = doc_id
    body += zlib.crc32(bytes(body)).to_bytes(4, "big")
    return bytes(body)


def save_index(index: InvertedIndex, path) -> None:
    """Write the index atomically (temp file + rename)."""
    path = Path(path)
    blob = _encode(index)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, path)


def load_index(path) -> InvertedIndex:
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + 4:
        raise IndexTruncatedError(f"file too short to be an index: {path}")
    if data[:len(MAGIC)] != MAGIC:
        raise IndexFormatError(f"not an index file: {path}")
    stored = int.from_bytes(data[-4:], "big")
    if zlib.crc32(data[:-4]) != stored:
        raise IndexChecksumError(f"checksum mismatch: {path}")
    reader = _Reader(data[:-4], len(MAGIC))
    version = reader.varint()
    if version != FORMAT_VERSION:
        raise IndexVersionError(
            f"unsupported index format version {version} (expected {FORMAT_VERSION})")
    config = AnalyzerConfig.from_json(reader.string())
    doc_count = reader.varint()
    docs = [Document(i, reader.string(), reader.varint()) for i in range(doc_count)]
    term_count = reader.varint()
    terms: dict[str, list[tuple[int, int]]] = {}
    for _ in range(term_count):
        term = reader.string()
        n = reader.varint()
        postings = []
        doc_id = 0
        for _ in range(n):
            doc_id += reader.varint()
            postings.append((doc_id, reader.varint()))
        terms[term] = postings
    if reader.pos != len(reader.data):
        raise IndexFormatError(f"trailing bytes after index payload: {path}")
    return InvertedIndex(config, docs, terms)
