"""Grid experiment: run every query before and after expansion for every
(D, T) combination, write one result file per cell, and record a manifest.

The before-run of a query does not depend on (D, T), so it is computed once
and shared across all cells. Cells are independent and may run in parallel;
identical inputs produce byte-identical result files for any worker count.
"""

from __future__ import annotations

import csv
import hashlib
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .evaluation import (PRECISION_CUTOFFS, QueryMetrics, Qrels, classify,
                         evaluate_ranking, parse_qrels)
from .index import InvertedIndex, load_index
from .prf import (association_matrix, expand_query, sample_top,
                  trace_expansion, write_trace_csv)
from .retrieval import Query, RankedList, load_queries, search

__all__ = [
    "SweepConfig",
    "QueryRecord",
    "RunResult",
    "SweepOutcome",
    "run_combination",
    "run_sweep",
    "compute_before_runs",
    "run_file_name",
    "write_run_csv",
    "read_run_csv",
    "MANIFEST_NAME",
]

log = logging.getLogger(__name__)

MANIFEST_NAME = "sweep_manifest.csv"

FLAG_EMPTY_BEFORE = "empty_before"
FLAG_NO_RELEVANT = "no_relevant"


@dataclass(frozen=True)
class SweepConfig:
    index_path: str
    queries_path: str
    qrels_path: str
    out_dir: str
    d_range: tuple[int, int] = (1, 20)
    t_range: tuple[int, int] = (1, 20)
    k: int = 1000
    workers: int = 1
    resume: bool = False
    trace: bool = False

    def __post_init__(self) -> None:
        for lo, hi in (self.d_range, self.t_range):
            if lo < 1 or hi < lo:
                raise ValueError(f"bad parameter range: {lo}:{hi}")
        if self.k < max(PRECISION_CUTOFFS):
            raise ValueError(
                f"retrieval depth k must cover the largest precision cutoff "
                f"({max(PRECISION_CUTOFFS)}), got {self.k}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def cells(self) -> list[tuple[int, int]]:
        return [(d, t)
                for d in range(self.d_range[0], self.d_range[1] + 1)
                for t in range(self.t_range[0], self.t_range[1] + 1)]


@dataclass(frozen=True)
class QueryRecord:
    qid: str
    outcome: str  # '+', '-', 'X', or '' when the query is not evaluated
    flags: tuple[str, ...]
    before: QueryMetrics
    after: QueryMetrics


@dataclass
class RunResult:
    d: int
    t: int
    records: list[QueryRecord]

    def outcome_counts(self) -> dict[str, int]:
        counts = {"+": 0, "-": 0, "X": 0}
        for rec in self.records:
            if rec.outcome:
                counts[rec.outcome] += 1
        return counts

    def evaluated(self) -> list[QueryRecord]:
        return [rec for rec in self.records if rec.outcome]

    def mean_after_p(self, cutoff: int) -> float | None:
        evaluated = self.evaluated()
        if not evaluated:
            return None
        return sum(rec.after.p_at[cutoff] for rec in evaluated) / len(evaluated)

    def mean_before_p(self, cutoff: int) -> float | None:
        evaluated = self.evaluated()
        if not evaluated:
            return None
        return sum(rec.before.p_at[cutoff] for rec in evaluated) / len(evaluated)

    def mean_before_ap(self) -> float | None:
        evaluated = self.evaluated()
        if not evaluated:
            return None
        return sum(rec.before.average_precision for rec in evaluated) / len(evaluated)

    def mean_after_ap(self) -> float | None:
        evaluated = self.evaluated()
        if not evaluated:
            return None
        return sum(rec.after.average_precision for rec in evaluated) / len(evaluated)


# before-run cache: qid -> (ranked doc ids, ranked external ids, metrics)
BeforeRuns = dict[str, tuple[RankedList, list[str], QueryMetrics]]


def compute_before_runs(index: InvertedIndex, queries: list[Query],
                        qrels: Qrels, k: int) -> BeforeRuns:
    before: BeforeRuns = {}
    for query in queries:
        ranked = search(index, query, k)
        external = [index.docs[doc_id].external_id for doc_id, _ in ranked]
        rel = qrels.get(query.query_id, set())
        before[query.query_id] = (ranked, external, evaluate_ranking(external, rel))
    return before


def run_combination(index: InvertedIndex, queries: list[Query], qrels: Qrels,
                    d: int, t: int, k: int,
                    before_runs: BeforeRuns | None = None,
                    collect_traces: bool = False):
    """Run every query through the full before/expand/after pipeline.

    Returns a RunResult, plus the expansion traces when collect_traces is
    set. Queries with an empty before-ranking proceed unexpanded; queries
    with no relevant documents are flagged and excluded from classification.
    """
    if not queries:
        raise ValueError("no queries to run")
    if before_runs is None:
        before_runs = compute_before_runs(index, queries, qrels, k)
    records = []
    traces = []
    for query in queries:
        ranked, external, before_metrics = before_runs[query.query_id]
        rel = qrels.get(query.query_id, set())
        flags = []
        if not rel:
            flags.append(FLAG_NO_RELEVANT)
        if not ranked:
            flags.append(FLAG_EMPTY_BEFORE)
            expanded = query
        else:
            feedback = sample_top(ranked, d)
            matrix = association_matrix(index, feedback, row_terms=query.terms)
            expanded = expand_query(query, matrix, t)
            if collect_traces:
                traces.append(trace_expansion(index, query, feedback, matrix, t))
        if expanded.terms == query.terms:
            after_metrics = before_metrics
        else:
            after_ranked = search(index, expanded, k)
            after_external = [index.docs[doc_id].external_id
                              for doc_id, _ in after_ranked]
            after_metrics = evaluate_ranking(after_external, rel)
        outcome = ""
        if rel:
            outcome = classify(before_metrics.curve11, after_metrics.curve11)
        records.append(QueryRecord(query.query_id, outcome, tuple(flags),
                                   before_metrics, after_metrics))
    result = RunResult(d, t, records)
    if collect_traces:
        return result, traces
    return result


# ---------------------------------------------------------------------------
# Run-file persistence.

def run_file_name(d: int, t: int) -> str:
    return f"run_D{d:02d}_T{t:02d}.csv"


def trace_file_name(d: int, t: int) -> str:
    return f"trace_D{d:02d}_T{t:02d}.csv"


def _metric_columns(prefix: str) -> list[str]:
    return ([f"{prefix}_retrieved", f"{prefix}_rel_ret"]
            + [f"{prefix}_p{k}" for k in PRECISION_CUTOFFS]
            + [f"{prefix}_ap"]
            + [f"{prefix}_r{j * 10:02d}" if j < 10 else f"{prefix}_r100"
               for j in range(11)])


RUN_COLUMNS = ["qid", "outcome", "flags"] + _metric_columns("before") + _metric_columns("after")


def _metric_cells(metrics: QueryMetrics) -> list[str]:
    cells = [str(metrics.retrieved), str(metrics.relevant_retrieved)]
    cells += [repr(metrics.p_at[k]) for k in PRECISION_CUTOFFS]
    cells.append("" if metrics.average_precision is None
                 else repr(metrics.average_precision))
    if metrics.curve11 is None:
        cells += [""] * 11
    else:
        cells += [repr(p) for p in metrics.curve11]
    return cells


def write_run_csv(path, result: RunResult) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RUN_COLUMNS)
        for rec in result.records:
            writer.writerow([rec.qid, rec.outcome, ";".join(rec.flags)]
                            + _metric_cells(rec.before) + _metric_cells(rec.after))


def _parse_metrics(cells: list[str]) -> QueryMetrics:
    p_at = {k: float(cells[2 + i]) for i, k in enumerate(PRECISION_CUTOFFS)}
    ap_cell = cells[7]
    curve_cells = cells[8:19]
    return QueryMetrics(
        retrieved=int(cells[0]),
        relevant_retrieved=int(cells[1]),
        p_at=p_at,
        average_precision=None if ap_cell == "" else float(ap_cell),
        curve11=None if curve_cells[0] == "" else tuple(float(c) for c in curve_cells),
    )


def read_run_csv(path, d: int, t: int) -> RunResult:
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RUN_COLUMNS:
            raise ValueError(f"unexpected run-file header in {path}")
        for row in reader:
            qid, outcome, flags = row[0], row[1], row[2]
            before = _parse_metrics(row[3:22])
            after = _parse_metrics(row[22:41])
            records.append(QueryRecord(
                qid, outcome,
                tuple(flags.split(";")) if flags else (),
                before, after))
    return RunResult(d, t, records)


# ---------------------------------------------------------------------------
# Sweep orchestration.

@dataclass
class SweepOutcome:
    cells_total: int
    executed: int
    skipped: int
    failures: list[tuple[int, int, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


_worker_state: dict = {}


def _init_worker(index_path: str, queries_path: str, qrels_path: str, k: int) -> None:
    index = load_index(index_path)
    queries = load_queries(queries_path, index.config)
    qrels = parse_qrels(qrels_path)
    _worker_state["index"] = index
    _worker_state["queries"] = queries
    _worker_state["qrels"] = qrels
    _worker_state["before"] = compute_before_runs(index, queries, qrels, k)
    _worker_state["k"] = k


def _run_cell(d: int, t: int, out_dir: str, trace: bool) -> tuple[int, int, str]:
    index = _worker_state["index"]
    queries = _worker_state["queries"]
    qrels = _worker_state["qrels"]
    before = _worker_state["before"]
    k = _worker_state["k"]
    out = Path(out_dir)
    if trace:
        result, traces = run_combination(index, queries, qrels, d, t, k,
                                         before_runs=before, collect_traces=True)
        write_trace_csv(out / trace_file_name(d, t), traces)
    else:
        result = run_combination(index, queries, qrels, d, t, k, before_runs=before)
    write_run_csv(out / run_file_name(d, t), result)
    return d, t, ""


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_dir, rows: list[dict]) -> None:
    path = Path(out_dir) / MANIFEST_NAME
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["d", "t", "file", "sha256", "status", "error"])
        for row in sorted(rows, key=lambda r: (r["d"], r["t"])):
            writer.writerow([row["d"], row["t"], row["file"],
                             row["sha256"], row["status"], row["error"]])


def read_manifest(sweep_dir) -> list[dict]:
    path = Path(sweep_dir) / MANIFEST_NAME
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for raw in reader:
            rows.append({"d": int(raw["d"]), "t": int(raw["t"]),
                         "file": raw["file"], "sha256": raw["sha256"],
                         "status": raw["status"], "error": raw["error"]})
    return rows


def run_sweep(config: SweepConfig, progress=None) -> SweepOutcome:
    """Execute the whole grid; returns a summary and writes the manifest.

    With resume set, cells whose run file already exists are skipped. A
    failing cell aborts only itself; the failure lands in the manifest and
    in the returned summary.
    """
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = config.cells()
    pending = []
    manifest_rows = []
    skipped = 0
    for d, t in cells:
        name = run_file_name(d, t)
        if config.resume and (out / name).exists():
            skipped += 1
            manifest_rows.append({"d": d, "t": t, "file": name,
                                  "sha256": _sha256(out / name),
                                  "status": "ok", "error": ""})
        else:
            pending.append((d, t))

    failures: list[tuple[int, int, str]] = []

    def record(d: int, t: int, error: str) -> None:
        name = run_file_name(d, t)
        if error:
            failures.append((d, t, error))
            manifest_rows.append({"d": d, "t": t, "file": name, "sha256": "",
                                  "status": "failed", "error": error})
        else:
            manifest_rows.append({"d": d, "t": t, "file": name,
                                  "sha256": _sha256(out / name),
                                  "status": "ok", "error": ""})
        if progress is not None:
            progress(d, t, error)

    if config.workers == 1:
        _init_worker(config.index_path, config.queries_path,
                     config.qrels_path, config.k)
        try:
            for d, t in pending:
                try:
                    _run_cell(d, t, str(out), config.trace)
                    record(d, t, "")
                except Exception as exc:  # noqa: BLE001 - cell isolation
                    log.exception("cell D=%d T=%d failed", d, t)
                    record(d, t, f"{type(exc).__name__}: {exc}")
        finally:
            _worker_state.clear()
    else:
        with ProcessPoolExecutor(
                max_workers=config.workers,
                initializer=_init_worker,
                initargs=(config.index_path, config.queries_path,
                          config.qrels_path, config.k)) as pool:
            futures = {pool.submit(_run_cell, d, t, str(out), config.trace): (d, t)
                       for d, t in pending}
            for future, (d, t) in futures.items():
                try:
                    future.result()
                    record(d, t, "")
                except Exception as exc:  # noqa: BLE001 - cell isolation
                    log.exception("cell D=%d T=%d failed", d, t)
                    record(d, t, f"{type(exc).__name__}: {exc}")

    write_manifest(out, manifest_rows)
    return SweepOutcome(cells_total=len(cells), executed=len(pending),
                        skipped=skipped, failures=failures)
