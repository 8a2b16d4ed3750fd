"""Figure rendering for benchmark records.

Renders the two cost-trend charts next to the CSV output: per-value cost
against value index for each storage size (single-value suite), and
per-value cost against batch size (multi-value suite).
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .bench import BenchRecord  # noqa: E402


def _by_size(records: Sequence[BenchRecord]) -> dict[int, list[BenchRecord]]:
    groups: dict[int, list[BenchRecord]] = {}
    for record in records:
        groups.setdefault(record.storage_size, []).append(record)
    return groups


def render_single_suite(records: Sequence[BenchRecord], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for size, group in sorted(_by_size(records).items()):
        group = sorted(group, key=lambda r: r.value_index)
        ax.plot(
            [r.value_index for r in group],
            [r.per_value_cost for r in group],
            marker="o",
            markersize=3,
            linewidth=1,
            label=f"{size} entries",
        )
    ax.set_xlabel("value index (ordered by proof depth)")
    ax.set_ylabel("cost per value")
    ax.set_title("Single-value synchronization cost by storage location")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_multi_suite(records: Sequence[BenchRecord], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for size, group in sorted(_by_size(records).items()):
        group = sorted(group, key=lambda r: r.batch_size)
        ax.plot(
            [r.batch_size for r in group],
            [r.per_value_cost for r in group],
            marker="s",
            markersize=4,
            linewidth=1,
            label=f"{size} entries",
        )
    ax.set_xscale("log")
    ax.set_xlabel("values per synchronization")
    ax.set_ylabel("cost per value")
    ax.set_title("Multi-value synchronization cost by batch size")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_bench_figures(records: Iterable[BenchRecord], outdir: Path) -> list[Path]:
    """Write one figure per suite present in the records; returns the paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    singles = [r for r in records if r.scenario.startswith("single-")]
    multis = [r for r in records if r.scenario.startswith("multi-")]
    written = []
    if singles:
        path = outdir / "single_value_costs.png"
        render_single_suite(singles, path)
        written.append(path)
    if multis:
        path = outdir / "multi_value_costs.png"
        render_multi_suite(multis, path)
        written.append(path)
    return written
