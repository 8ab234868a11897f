"""TREC-style effectiveness metrics and the before/after outcome trichotomy.

A query's before and after runs are compared on their 11-point interpolated
precision curves: improved (+) means the after curve is strictly above the
before curve at all 11 recall points, not improved (-) is the strict
inverse, and everything else (any tie or crossing) is no-decision (X).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Sequence

__all__ = [
    "IMPROVED",
    "NOT_IMPROVED",
    "NO_DECISION",
    "Qrels",
    "QueryMetrics",
    "QrelsParseError",
    "parse_qrels",
    "precision_at_k",
    "average_precision",
    "interpolated_11pt",
    "classify",
    "evaluate_ranking",
    "metrics_csv_header",
    "write_metrics_csv",
    "PRECISION_CUTOFFS",
    "RECALL_POINTS",
]

IMPROVED = "+"
NOT_IMPROVED = "-"
NO_DECISION = "X"

PRECISION_CUTOFFS = (5, 10, 20, 100, 1000)
RECALL_POINTS = tuple(j / 10 for j in range(11))

# query_id -> set of relevant external ids
Qrels = dict[str, set[str]]


class QrelsParseError(Exception):
    pass


def parse_qrels(path) -> Qrels:
    """Read TREC qrels: `qid 0 external_id rel` per line; rel > 0 is relevant.

    Duplicate (qid, doc) pairs collapse; malformed lines fail with the line
    number. A query whose lines are all rel=0 maps to an empty set.
    """
    qrels: Qrels = {}
    name = Path(path).name
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split()
            if len(fields) != 4:
                raise QrelsParseError(
                    f"{name}:{lineno}: expected 4 fields `qid 0 doc rel`, "
                    f"got {len(fields)}")
            qid, _, doc, rel = fields
            try:
                relevance = int(rel)
            except ValueError:
                raise QrelsParseError(
                    f"{name}:{lineno}: relevance {rel!r} is not an integer") from None
            bucket = qrels.setdefault(qid, set())
            if relevance > 0:
                bucket.add(doc)
    return qrels


def precision_at_k(ranked: Sequence[Hashable], rel: set, k: int) -> float:
    """Relevant documents in the top k, over k (denominator always k)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    hits = sum(1 for doc in ranked[:k] if doc in rel)
    return hits / k


def average_precision(ranked: Sequence[Hashable], rel: set) -> float | None:
    """Mean of precision at each relevant hit's rank, over |rel|.

    Undefined (None) when the query has no relevant documents at all.
    """
    if not rel:
        return None
    total = 0.0
    hits = 0
    for rank, doc in enumerate(ranked, start=1):
        if doc in rel:
            hits += 1
            total += hits / rank
    return total / len(rel)


def interpolated_11pt(ranked: Sequence[Hashable], rel: set) -> tuple[float, ...] | None:
    """Interpolated precision at recall 0.0, 0.1, ..., 1.0.

    P(r) = max precision over all achieved recall points >= r, or 0 when no
    such point exists. Recall comparisons use integer arithmetic, so the
    curve is exact and platform-independent. Undefined (None) for queries
    with no relevant documents.
    """
    if not rel:
        return None
    n_rel = len(rel)
    points = []  # (hits, precision) at each relevant hit; recall = hits / n_rel
    hits = 0
    for rank, doc in enumerate(ranked, start=1):
        if doc in rel:
            hits += 1
            points.append((hits, hits / rank))
    curve = []
    for j in range(11):
        # hits / n_rel >= j / 10  <=>  10 * hits >= j * n_rel
        best = 0.0
        for hit_count, precision in points:
            if 10 * hit_count >= j * n_rel and precision > best:
                best = precision
        curve.append(best)
    return tuple(curve)


def classify(before: Sequence[float], after: Sequence[float]) -> str:
    """Outcome of an expansion: '+', '-' or 'X' by strict curve dominance."""
    if len(before) != 11 or len(after) != 11:
        raise ValueError("curves must have 11 points")
    if all(a > b for a, b in zip(after, before)):
        return IMPROVED
    if all(b > a for a, b in zip(after, before)):
        return NOT_IMPROVED
    return NO_DECISION


@dataclass(frozen=True)
class QueryMetrics:
    """Effectiveness of one (query, run) pair.

    average_precision and curve11 are None for queries with no relevant
    documents; such queries are excluded from aggregate means.
    """

    retrieved: int
    relevant_retrieved: int
    p_at: dict[int, float]
    average_precision: float | None
    curve11: tuple[float, ...] | None


def evaluate_ranking(ranked: Sequence[Hashable], rel: set,
                     cutoffs: Sequence[int] = PRECISION_CUTOFFS) -> QueryMetrics:
    return QueryMetrics(
        retrieved=len(ranked),
        relevant_retrieved=sum(1 for doc in ranked if doc in rel),
        p_at={k: precision_at_k(ranked, rel, k) for k in cutoffs},
        average_precision=average_precision(ranked, rel),
        curve11=interpolated_11pt(ranked, rel),
    )


def metrics_csv_header() -> list[str]:
    return (["qid", "retrieved", "rel_ret"]
            + [f"p{k}" for k in PRECISION_CUTOFFS]
            + ["ap"]
            + [f"r{j * 10:02d}" if j < 10 else "r100" for j in range(11)])


def metrics_csv_row(qid: str, metrics: QueryMetrics) -> list[str]:
    row = [qid, str(metrics.retrieved), str(metrics.relevant_retrieved)]
    row += [repr(metrics.p_at[k]) for k in PRECISION_CUTOFFS]
    row.append("" if metrics.average_precision is None
               else repr(metrics.average_precision))
    if metrics.curve11 is None:
        row += [""] * 11
    else:
        row += [repr(p) for p in metrics.curve11]
    return row


def write_metrics_csv(path, per_query: dict[str, QueryMetrics]) -> None:
    """Per-run metrics file, one row per query in the given order."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(metrics_csv_header())
        for qid, metrics in per_query.items():
            writer.writerow(metrics_csv_row(qid, metrics))
