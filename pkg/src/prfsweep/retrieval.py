"""Vector-space ranking over the inverted index.

Scoring is a classic tf-idf similarity, pinned exactly so every downstream
number is reproducible:

    score(q, d) = coord * sum_{t in q∩d} sqrt(tf(t,d)) * idf(t)^2 / sqrt(|d|)
    idf(t)      = 1 + ln(N / (df(t) + 1))
    coord       = |q∩d| / |q|

Query-level normalization constants are omitted (rank-invariant). Ties break
on ascending doc_id so orderings are total and deterministic.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

from .analysis import AnalyzerConfig, tokenize
from .index import InvertedIndex

__all__ = ["Query", "RankedList", "idf", "score", "search",
           "trec_run_lines", "load_queries"]

log = logging.getLogger(__name__)

# (doc_id, score) entries sorted by descending score, ties by ascending doc_id.
RankedList = list[tuple[int, float]]


@dataclass(frozen=True)
class Query:
    query_id: str
    terms: tuple[str, ...]  # unique, first-occurrence order

    def __post_init__(self) -> None:
        if len(set(self.terms)) != len(self.terms):
            raise ValueError(f"duplicate terms in query {self.query_id!r}")

    @classmethod
    def from_text(cls, query_id: str, text: str,
                  config: AnalyzerConfig | None = None) -> "Query":
        seen = set()
        terms = []
        for tok in tokenize(text, config):
            if tok not in seen:
                seen.add(tok)
                terms.append(tok)
        return cls(query_id, tuple(terms))


def idf(index: InvertedIndex, term: str) -> float:
    return 1.0 + math.log(index.doc_count / (index.doc_freq(term) + 1))


def score(index: InvertedIndex, query: Query, doc_id: int) -> float:
    """Score one document; same accumulation order as search()."""
    doc = index.doc(doc_id)
    total = 0.0
    overlap = 0
    for term in query.terms:
        tf = 0
        for did, freq in index.postings(term):
            if did == doc_id:
                tf = freq
                break
        if tf:
            total += math.sqrt(tf) * idf(index, term) ** 2
            overlap += 1
    if not overlap or not query.terms:
        return 0.0
    coord = overlap / len(query.terms)
    return total * coord / math.sqrt(doc.length)


def search(index: InvertedIndex, query: Query, k: int) -> RankedList:
    """All documents with score > 0, truncated to the top k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not query.terms:
        log.warning("empty query %s: returning no results", query.query_id)
        return []
    acc: dict[int, float] = {}
    overlap: dict[int, int] = {}
    for term in query.terms:
        postings = index.postings(term)
        if not postings:
            continue
        weight = idf(index, term) ** 2
        for doc_id, tf in postings:
            acc[doc_id] = acc.get(doc_id, 0.0) + math.sqrt(tf) * weight
            overlap[doc_id] = overlap.get(doc_id, 0) + 1
    n_terms = len(query.terms)
    scored = []
    for doc_id, total in acc.items():
        coord = overlap[doc_id] / n_terms
        scored.append((doc_id,
                       total * coord / math.sqrt(index.docs[doc_id].length)))
    scored.sort(key=lambda e: (-e[1], e[0]))
    return scored[:k]


def trec_run_lines(query_id: str, ranked: RankedList, index: InvertedIndex,
                   tag: str = "prfsweep") -> list[str]:
    """Run output in TREC format: `qid Q0 external_id rank score tag`."""
    return [
        f"{query_id} Q0 {index.docs[doc_id].external_id} {rank} {sc:.6f} {tag}"
        for rank, (doc_id, sc) in enumerate(ranked, start=1)
    ]


def load_queries(path, config: AnalyzerConfig | None = None) -> list[Query]:
    """Read a UTF-8 TSV queries file: `qid<TAB>query text`, '#' comments."""
    queries = []
    seen_ids = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if "\t" not in line:
                raise ValueError(
                    f"{Path(path).name}:{lineno}: expected `qid<TAB>text`")
            qid, text = line.split("\t", 1)
            qid = qid.strip()
            if not qid or qid in seen_ids:
                raise ValueError(
                    f"{Path(path).name}:{lineno}: missing or duplicate query id")
            seen_ids.add(qid)
            queries.append(Query.from_text(qid, text, config))
    return queries
