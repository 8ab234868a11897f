"""Blind feedback by local association clustering.

Pipeline per query: take the top-D documents of the initial ranking as the
feedback set, build the term-term association matrix over their vocabulary
(cell value = sum over feedback docs of the two terms' frequency product),
pick each query term's T strongest neighbours, and append the union of those
clusters to the query.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

from .index import InvertedIndex
from .retrieval import Query, RankedList

__all__ = [
    "PrfParams",
    "FeedbackSet",
    "AssociationMatrix",
    "sample_top",
    "association_matrix",
    "cluster_terms",
    "expand_query",
    "ExpansionTrace",
    "write_trace_csv",
    "TRACE_COLUMNS",
]

# Feedback documents in rank order.
FeedbackSet = list[int]


@dataclass(frozen=True)
class PrfParams:
    d: int  # feedback documents sampled
    t: int  # expansion terms per query term

    def __post_init__(self) -> None:
        if self.d < 1 or self.t < 1:
            raise ValueError("PRF parameters D and T must be >= 1")


def sample_top(ranked: RankedList, d: int) -> FeedbackSet:
    """First min(d, len(ranked)) documents in rank order."""
    if d < 1:
        raise ValueError("D must be >= 1")
    return [doc_id for doc_id, _ in ranked[:d]]


class AssociationMatrix:
    """Sparse symmetric term-term co-occurrence scores over a feedback set.

    Cell (u, v) holds sum over feedback docs of tf(u, doc) * tf(v, doc);
    zero cells are omitted from storage but defined as 0. When built with
    row_terms, only the named rows are materialized (enough to cluster a
    query), which is provably equivalent for those rows.
    """

    def __init__(self, vocabulary: frozenset[str],
                 rows: dict[str, dict[str, int]], complete: bool):
        self.vocabulary = vocabulary
        self.rows = rows
        self.complete = complete

    def value(self, u: str, v: str) -> int:
        if u in self.rows:
            return self.rows[u].get(v, 0)
        if v in self.rows:
            return self.rows[v].get(u, 0)
        if self.complete:
            return 0
        raise LookupError(f"row {u!r} was not materialized")


def association_matrix(index: InvertedIndex, feedback: FeedbackSet,
                       row_terms: Iterable[str] | None = None) -> AssociationMatrix:
    """Exact association scores over the feedback set's distinct terms.

    With row_terms given, only those rows are computed. An empty feedback
    set is an error: no expansion is possible without feedback documents.
    """
    if not feedback:
        raise ValueError("empty feedback set: no expansion possible")
    vectors = [index.doc_vector(doc_id) for doc_id in feedback]
    vocabulary = frozenset(term for vec in vectors for term in vec)
    if row_terms is None:
        wanted = vocabulary
        complete = True
    else:
        wanted = frozenset(row_terms) & vocabulary
        complete = False
    rows: dict[str, dict[str, int]] = {u: {} for u in wanted}
    for vec in vectors:
        for u in wanted:
            tf_u = vec.get(u)
            if not tf_u:
                continue
            row = rows[u]
            for v, tf_v in vec.items():
                row[v] = row.get(v, 0) + tf_u * tf_v
    return AssociationMatrix(vocabulary, rows, complete)


def cluster_terms(matrix: AssociationMatrix, u: str, t: int) -> list[str]:
    """Up to t terms v != u with the highest positive association to u.

    Ordered by descending score, ties by ascending token. Zero-valued cells
    are never selected; a term absent from the feedback vocabulary yields [].
    """
    if t < 1:
        raise ValueError("T must be >= 1")
    row = matrix.rows.get(u)
    if row is None:
        if not matrix.complete and u in matrix.vocabulary:
            raise LookupError(f"row {u!r} was not materialized")
        return []
    candidates = [(v, s) for v, s in row.items() if v != u and s > 0]
    candidates.sort(key=lambda e: (-e[1], e[0]))
    return [v for v, _ in candidates[:t]]


def expand_query(query: Query, matrix: AssociationMatrix, t: int) -> Query:
    """Append the union of all per-term clusters to the query.

    New terms keep a deterministic order (source-term position, then cluster
    rank) and are deduplicated against the original query and each other.
    If every cluster is empty the query is returned unchanged.
    """
    seen = set(query.terms)
    added: list[str] = []
    for term in query.terms:
        for v in cluster_terms(matrix, term, t):
            if v not in seen:
                seen.add(v)
                added.append(v)
    if not added:
        return query
    return Query(query.query_id, query.terms + tuple(added))


@dataclass(frozen=True)
class ExpansionTrace:
    """One query's expansion record, for inspection and debugging."""

    query_id: str
    original_terms: tuple[str, ...]
    feedback_docs: tuple[str, ...]  # external ids, rank order
    clusters: tuple[tuple[str, tuple[tuple[str, int], ...]], ...]
    added_terms: tuple[str, ...]
    final_terms: tuple[str, ...]


def trace_expansion(index: InvertedIndex, query: Query, feedback: FeedbackSet,
                    matrix: AssociationMatrix, t: int) -> ExpansionTrace:
    clusters = []
    for term in query.terms:
        members = cluster_terms(matrix, term, t)
        clusters.append((term, tuple((v, matrix.value(term, v)) for v in members)))
    expanded = expand_query(query, matrix, t)
    return ExpansionTrace(
        query_id=query.query_id,
        original_terms=query.terms,
        feedback_docs=tuple(index.docs[d].external_id for d in feedback),
        clusters=tuple(clusters),
        added_terms=expanded.terms[len(query.terms):],
        final_terms=expanded.terms,
    )


TRACE_COLUMNS = ["qid", "original_terms", "feedback_docs", "clusters",
                 "added_terms", "final_terms"]


def format_clusters(trace: ExpansionTrace) -> str:
    parts = []
    for term, members in trace.clusters:
        body = " ".join(f"{v}:{s}" for v, s in members)
        parts.append(f"{term} -> {body}")
    return "; ".join(parts)


def write_trace_csv(path, traces: Sequence[ExpansionTrace]) -> None:
    """One record per query: original terms, feedback docs, per-term clusters
    with association values, and the final expanded query."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for tr in traces:
            writer.writerow([
                tr.query_id,
                " ".join(tr.original_terms),
                " ".join(tr.feedback_docs),
                format_clusters(tr),
                " ".join(tr.added_terms),
                " ".join(tr.final_terms),
            ])
