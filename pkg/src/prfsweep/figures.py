"""Render the sweep report's tables as figures, written next to the CSVs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .report import SweepReport  # noqa: E402

__all__ = ["render_report_figures", "FIGURE_FILES"]

FIGURE_FILES = [
    "fig_improved_by_d.png",
    "fig_improved_by_t.png",
    "fig_improved_heatmap.png",
    "fig_p5_after_heatmap.png",
]

# Fixed metadata keeps the PNG bytes reproducible across renders.
_SAVE_KW = {"dpi": 120, "metadata": {"Software": "prfsweep"}}


def _bar(path: Path, pairs, xlabel: str) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    xs = [p[0] for p in pairs]
    ys = [p[1] for p in pairs]
    ax.bar(xs, ys, color="#4878a8")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("mean improved queries")
    ax.set_xticks(xs)
    ax.tick_params(labelsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def _heatmap(path: Path, grid, d_values, t_values, title: str,
             fmt: str | None = None) -> None:
    data = [[grid[(d, t)] for t in t_values] for d in d_values]
    fig, ax = plt.subplots(figsize=(7.2, 6.0))
    image = ax.imshow(data, origin="lower", aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(t_values)), [str(t) for t in t_values], fontsize=7)
    ax.set_yticks(range(len(d_values)), [str(d) for d in d_values], fontsize=7)
    ax.set_xlabel("T (expansion terms per query term)")
    ax.set_ylabel("D (feedback documents)")
    ax.set_title(title)
    if fmt is not None and len(d_values) <= 25 and len(t_values) <= 25:
        for i, d in enumerate(d_values):
            for j, t in enumerate(t_values):
                ax.text(j, i, format(grid[(d, t)], fmt),
                        ha="center", va="center", fontsize=5, color="white")
    fig.colorbar(image, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_report_figures(report: SweepReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "fig_improved_by_d.png"
    _bar(path, report.table3a, "D (feedback documents)")
    written.append(path)

    path = out / "fig_improved_by_t.png"
    _bar(path, report.table3b, "T (expansion terms per query term)")
    written.append(path)

    path = out / "fig_improved_heatmap.png"
    _heatmap(path, report.plus_grid, report.d_values, report.t_values,
             "improved queries per cell", fmt="d")
    written.append(path)

    path = out / "fig_p5_after_heatmap.png"
    _heatmap(path, report.p5_after_grid, report.d_values, report.t_values,
             "mean P@5 after expansion")
    written.append(path)
    return written
