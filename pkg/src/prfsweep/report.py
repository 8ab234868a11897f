"""Aggregate a finished sweep into the four analysis tables and a
best-P@5 leaderboard.

Tables:
  3a  mean count of improved queries per D value (averaged over T)
  3b  mean count of improved queries per T value (averaged over D)
  4   cells bucketed by their exact count of improved queries
  5   per query: how many cells ended +, -, X
  6   leaderboard of cells by mean P@5 after expansion
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

from .sweep import MANIFEST_NAME, RunResult, read_manifest, read_run_csv

__all__ = [
    "SweepReport",
    "ReportError",
    "aggregate",
    "load_sweep_results",
    "render_csv",
    "render_markdown",
    "TABLE_FILES",
]

TABLE_FILES = ["table3a.csv", "table3b.csv", "table4.csv", "table5.csv",
               "table6.csv"]


class ReportError(Exception):
    pass


def _natural_key(qid: str):
    return [int(part) if part.isdigit() else part
            for part in re.split(r"(\d+)", qid)]


@dataclass
class SweepReport:
    d_values: list[int]
    t_values: list[int]
    n_cells: int
    n_queries: int  # evaluated queries (with relevance judgments)
    excluded_qids: list[str]  # flagged: no relevant documents
    table3a: list[tuple[int, float]]  # (D, mean improved count over T)
    table3b: list[tuple[int, float]]
    table4: list[dict]  # plus_count, n_tests, d_values, t_values
    table5: list[tuple[str, int, int, int]]  # (qid, plus, minus, x)
    table6: list[tuple[int, int, float]]  # (D, T, mean P@5 after) descending
    p5_improved: int
    p5_worsened: int
    p5_tied: int
    plus_grid: dict[tuple[int, int], int]
    p5_after_grid: dict[tuple[int, int], float]


def load_sweep_results(sweep_dir) -> list[RunResult]:
    """Read every run file listed in the sweep manifest."""
    sweep_dir = Path(sweep_dir)
    manifest_path = sweep_dir / MANIFEST_NAME
    if not manifest_path.exists():
        raise ReportError(f"missing sweep manifest: {manifest_path}")
    results = []
    for row in read_manifest(sweep_dir):
        cell = f"D={row['d']} T={row['t']}"
        if row["status"] != "ok":
            raise ReportError(f"cell {cell} failed in sweep: {row['error']}")
        path = sweep_dir / row["file"]
        if not path.exists():
            raise ReportError(f"missing run file for cell {cell}: {row['file']}")
        results.append(read_run_csv(path, row["d"], row["t"]))
    if not results:
        raise ReportError(f"manifest lists no runs: {manifest_path}")
    return results


def aggregate(results: list[RunResult]) -> SweepReport:
    """Compute all tables; fails if cells disagree on the query set."""
    if not results:
        raise ReportError("no run results to aggregate")
    results = sorted(results, key=lambda r: (r.d, r.t))
    reference = [rec.qid for rec in results[0].records]
    reference_eval = [rec.qid for rec in results[0].records if rec.outcome]
    for result in results[1:]:
        qids = [rec.qid for rec in result.records]
        if qids != reference:
            raise ReportError(
                f"manifest mismatch: cell D={result.d} T={result.t} evaluated a "
                f"different query set")
        evaluated = [rec.qid for rec in result.records if rec.outcome]
        if evaluated != reference_eval:
            raise ReportError(
                f"manifest mismatch: cell D={result.d} T={result.t} classified a "
                f"different query subset")

    d_values = sorted({r.d for r in results})
    t_values = sorted({r.t for r in results})
    n_cells = len(results)

    plus_grid = {(r.d, r.t): r.outcome_counts()["+"] for r in results}
    p5_after_grid = {}
    p5_improved = p5_worsened = p5_tied = 0
    for r in results:
        after = r.mean_after_p(5)
        before = r.mean_before_p(5)
        p5_after_grid[(r.d, r.t)] = after if after is not None else 0.0
        if after is None or before is None:
            p5_tied += 1
        elif after > before:
            p5_improved += 1
        elif after < before:
            p5_worsened += 1
        else:
            p5_tied += 1

    table3a = []
    for d in d_values:
        counts = [plus_grid[(d, t)] for t in t_values if (d, t) in plus_grid]
        table3a.append((d, sum(counts) / len(counts)))
    table3b = []
    for t in t_values:
        counts = [plus_grid[(d, t)] for d in d_values if (d, t) in plus_grid]
        table3b.append((t, sum(counts) / len(counts)))

    buckets: dict[int, list[tuple[int, int]]] = {}
    for (d, t), plus in plus_grid.items():
        buckets.setdefault(plus, []).append((d, t))
    n_queries = len(reference_eval)
    table4 = []
    for plus in sorted(buckets):
        cells = buckets[plus]
        table4.append({
            "plus_count": plus,
            "pct_queries": plus / n_queries if n_queries else 0.0,
            "n_tests": len(cells),
            "pct_tests": len(cells) / n_cells,
            "d_values": sorted({d for d, _ in cells}),
            "t_values": sorted({t for _, t in cells}),
        })

    per_query: dict[str, dict[str, int]] = {
        qid: {"+": 0, "-": 0, "X": 0} for qid in reference_eval}
    for result in results:
        for rec in result.records:
            if rec.outcome:
                per_query[rec.qid][rec.outcome] += 1
    table5 = [(qid, c["+"], c["-"], c["X"])
              for qid, c in sorted(per_query.items(),
                                   key=lambda kv: _natural_key(kv[0]))]
    for qid, plus, minus, x in table5:
        if plus + minus + x != n_cells:
            raise ReportError(
                f"internal error: outcome counts for {qid} do not sum to "
                f"{n_cells}")
    if sum(row["n_tests"] for row in table4) != n_cells:
        raise ReportError("internal error: table 4 buckets do not sum to the "
                          "number of cells")

    table6 = sorted(((d, t, p5) for (d, t), p5 in p5_after_grid.items()),
                    key=lambda e: (-e[2], e[0], e[1]))

    excluded = [rec.qid for rec in results[0].records if not rec.outcome]
    return SweepReport(
        d_values=d_values, t_values=t_values, n_cells=n_cells,
        n_queries=n_queries, excluded_qids=excluded,
        table3a=table3a, table3b=table3b, table4=table4, table5=table5,
        table6=table6, p5_improved=p5_improved, p5_worsened=p5_worsened,
        p5_tied=p5_tied, plus_grid=plus_grid, p5_after_grid=p5_after_grid)


# ---------------------------------------------------------------------------
# Rendering.

def _write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def render_csv(report: SweepReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "table3a.csv"
    _write_csv(path, ["d", "mean_improved_queries"],
               [[d, repr(v)] for d, v in report.table3a])
    written.append(path)

    path = out / "table3b.csv"
    _write_csv(path, ["t", "mean_improved_queries"],
               [[t, repr(v)] for t, v in report.table3b])
    written.append(path)

    path = out / "table4.csv"
    _write_csv(path,
               ["improved_queries", "pct_queries", "n_tests", "pct_tests",
                "d_values", "t_values"],
               [[row["plus_count"], repr(row["pct_queries"]), row["n_tests"],
                 repr(row["pct_tests"]),
                 " ".join(str(d) for d in row["d_values"]),
                 " ".join(str(t) for t in row["t_values"])]
                for row in report.table4])
    written.append(path)

    path = out / "table5.csv"
    _write_csv(path, ["qid", "plus", "minus", "x"],
               [[qid, plus, minus, x] for qid, plus, minus, x in report.table5])
    written.append(path)

    path = out / "table6.csv"
    _write_csv(path, ["d", "t", "mean_p5_after"],
               [[d, t, repr(p5)] for d, t, p5 in report.table6])
    written.append(path)
    return written


def render_markdown(report: SweepReport, out_dir,
                    leaderboard_rows: int = 8) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    lines.append("# Sweep report")
    lines.append("")
    lines.append(f"- grid: D in {report.d_values[0]}..{report.d_values[-1]}, "
                 f"T in {report.t_values[0]}..{report.t_values[-1]} "
                 f"({report.n_cells} cells)")
    lines.append(f"- evaluated queries: {report.n_queries}")
    if report.excluded_qids:
        lines.append(f"- excluded (no relevant documents): "
                     f"{', '.join(report.excluded_qids)}")
    lines.append("")

    lines.append("## Table 3a: mean improved queries by D")
    lines.append("")
    lines.append("| D | mean improved queries |")
    lines.append("|---:|---:|")
    for d, v in report.table3a:
        lines.append(f"| {d} | {v:.2f} |")
    lines.append("")

    lines.append("## Table 3b: mean improved queries by T")
    lines.append("")
    lines.append("| T | mean improved queries |")
    lines.append("|---:|---:|")
    for t, v in report.table3b:
        lines.append(f"| {t} | {v:.2f} |")
    lines.append("")

    lines.append("## Table 4: tests grouped by number of improved queries")
    lines.append("")
    lines.append("| improved queries | tests | D values | T values |")
    lines.append("|---:|---:|---|---|")
    for row in report.table4:
        lines.append(
            f"| {row['plus_count']} ({row['pct_queries']:.0%}) "
            f"| {row['n_tests']} ({row['pct_tests']:.2%}) "
            f"| {', '.join(str(d) for d in row['d_values'])} "
            f"| {', '.join(str(t) for t in row['t_values'])} |")
    lines.append("")

    lines.append("## Table 5: outcomes per query across all cells")
    lines.append("")
    lines.append("| query | + | - | X |")
    lines.append("|---|---:|---:|---:|")
    for qid, plus, minus, x in report.table5:
        lines.append(f"| {qid} | {plus} | {minus} | {x} |")
    lines.append("")

    lines.append(f"## Table 6: best mean P@5 after expansion "
                 f"(top {min(leaderboard_rows, len(report.table6))})")
    lines.append("")
    lines.append("| D | T | P@5 |")
    lines.append("|---:|---:|---:|")
    for d, t, p5 in report.table6[:leaderboard_rows]:
        lines.append(f"| {d} | {t} | {p5:.3f} |")
    lines.append("")

    lines.append("## P@5 before/after comparison across cells")
    lines.append("")
    lines.append(f"- improved: {report.p5_improved} of {report.n_cells}")
    lines.append(f"- worsened: {report.p5_worsened} of {report.n_cells}")
    lines.append(f"- tied: {report.p5_tied} of {report.n_cells}")
    lines.append("")

    path = out / "report.md"
    path.write_text("\n".join(lines), encoding="utf-8")
    return path
