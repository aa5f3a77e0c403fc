"""Deterministic CSV tables, JSON run manifests, and figure rendering."""

from __future__ import annotations

import csv
import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

ARTIFACT_VERSION = "ust3d 0.1.0"
UNDEFINED = "undefined"  # CSV cell for flags whose prerequisites never held


# ---------------------------------------------------------------------------
# cell formatting
# ---------------------------------------------------------------------------

def format_cell(value) -> str:
    """Render one CSV cell deterministically (floats at 12 significant digits)."""
    if value is None:
        return UNDEFINED
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


def write_csv(path, header, rows, manifest_name: str | None = None) -> None:
    """Write a CSV table; first line references the run manifest by name."""
    path = Path(path)
    with open(path, "w", encoding="ascii", newline="") as fh:
        if manifest_name is not None:
            fh.write(f"# manifest: {manifest_name}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([format_cell(v) for v in row])


# ---------------------------------------------------------------------------
# run manifests
# ---------------------------------------------------------------------------

@dataclass
class StageTimer:
    """Wall-clock bookkeeping for a run and its named stages."""

    started: float = field(default_factory=time.perf_counter)
    timings: dict = field(default_factory=dict)

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0

    def wall_clock(self) -> float:
        return time.perf_counter() - self.started


def write_manifest(path, command: str, config: dict, seed: int | None,
                   timer: StageTimer) -> None:
    """Write the JSON run manifest for one CLI invocation."""
    doc = {
        "command": command,
        "config": config,
        "seed": seed,
        "artifact_version": ARTIFACT_VERSION,
        "wall_clock_s": round(timer.wall_clock(), 6),
        "stage_timings_s": {k: round(v, 6) for k, v in sorted(timer.timings.items())},
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class OutputSet:
    """File name scheme for one run: <stem>.csv, <stem>.manifest.json, <stem>.png."""

    stem: Path

    @property
    def csv(self) -> Path:
        return self.stem.with_name(self.stem.name + ".csv")

    @property
    def manifest(self) -> Path:
        return self.stem.with_name(self.stem.name + ".manifest.json")

    @property
    def figure(self) -> Path:
        return self.stem.with_name(self.stem.name + ".png")

    @property
    def tree(self) -> Path:
        return self.stem.with_name(self.stem.name + ".tree")


# ---------------------------------------------------------------------------
# figures (auxiliary; the CSV is the contract)
# ---------------------------------------------------------------------------

def save_series_figure(path, xs, ys, xlabel: str, ylabel: str, title: str,
                       loglog: bool = False, logy: bool = False,
                       fit=None, yerr=None) -> None:
    """Render one x/y series (optionally log-log with a fitted power law)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    if yerr is not None:
        ax.errorbar(xs, ys, yerr=np.asarray(yerr, dtype=float),
                    fmt="o-", ms=4, lw=1, capsize=2, label="measured")
    else:
        ax.plot(xs, ys, "o-", ms=4, lw=1, label="measured")
    if fit is not None:
        grid = np.linspace(xs.min(), xs.max(), 128)
        ax.plot(grid, np.exp(fit.intercept) * grid ** fit.slope, "--", lw=1,
                label=f"slope {fit.slope:.3f}")
    if loglog:
        ax.set_xscale("log")
        ax.set_yscale("log")
    elif logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_bar_figure(path, labels, counts, expected: float, title: str) -> None:
    """Render a count histogram with the uniform expectation marked."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.bar(range(len(counts)), counts, width=0.8)
    ax.axhline(expected, color="k", ls="--", lw=1, label=f"uniform {expected:.1f}")
    ax.set_xlabel("tree index")
    ax.set_ylabel("count")
    ax.set_title(title)
    if len(labels) <= 16:
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels, rotation=90, fontsize=6)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_boxes_figure(path, centers, m: int, title: str) -> None:
    """Render a box-center sequence: axis projection plus transverse spiral."""
    pts = np.asarray(centers, dtype=float)
    order = np.arange(pts.shape[0])
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 4.2))
    axes[0].plot(order, pts[:, 2] / m, "-", lw=0.8)
    axes[0].set_xlabel("box index")
    axes[0].set_ylabel("z / m (long axis)")
    axes[0].grid(True, alpha=0.3)
    sc = axes[1].scatter(pts[:, 0] / m, pts[:, 1] / m, c=order, s=12, cmap="viridis")
    axes[1].plot(pts[:, 0] / m, pts[:, 1] / m, "-", lw=0.4, color="gray", alpha=0.5)
    axes[1].set_xlabel("x / m")
    axes[1].set_ylabel("y / m")
    axes[1].set_aspect("equal")
    fig.colorbar(sc, ax=axes[1], label="box index")
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
