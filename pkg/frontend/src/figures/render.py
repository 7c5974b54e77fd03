"""Pure CSV-to-image rendering: same input file, same output bytes."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

REPORT_COLUMNS = ["epsilon", "estimate", "stderr", "eps_log_estimate",
                  "threshold", "pass", "zero_hit", "cp_upper"]

KINDS = ("convergence", "tails", "overlay")

# fixed style so the bytes depend on nothing but the CSV contents
DPI = 150
STYLE = {
    "figure.figsize": (6.0, 4.0),
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "figures",
}


class FigureError(Exception):
    """Input CSV missing, empty, or with the wrong columns."""


@dataclass(frozen=True)
class FigureJob:
    kind: str
    inputs: tuple[Path, ...]
    output: Path
    xlabel: str = ""
    ylabel: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FigureError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise FigureError("at least one input CSV is required")


def _read_rows(path: Path) -> list[dict]:
    path = Path(path)
    if not path.is_file():
        raise FigureError(f"input CSV not found: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise FigureError(f"input CSV is empty: {path}")
    return rows


def load_report_csv(path) -> dict[str, np.ndarray]:
    """Columns of a verification report as float arrays (flags as booleans)."""
    rows = _read_rows(path)
    got = list(rows[0].keys())
    if got != REPORT_COLUMNS:
        raise FigureError(
            f"{path}: expected columns {REPORT_COLUMNS}, got {got}")
    out: dict[str, np.ndarray] = {}
    for col in REPORT_COLUMNS:
        if col in ("pass", "zero_hit"):
            out[col] = np.array([r[col] == "true" for r in rows])
        else:
            out[col] = np.array([float(r[col]) for r in rows])
    return out


def load_trajectory_csv(path) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Time nodes, state columns, and state-column names of a path CSV."""
    rows = _read_rows(path)
    names = list(rows[0].keys())
    if not names or names[0] != "t" or not all(n.startswith("x_") for n in names[1:]):
        raise FigureError(f"{path}: expected columns ['t', 'x_1', ...], got {names}")
    t = np.array([float(r["t"]) for r in rows])
    states = np.array([[float(r[n]) for n in names[1:]] for r in rows])
    return t, states, names[1:]


def _draw_convergence(ax, job: FigureJob) -> None:
    for path in job.inputs:
        data = load_report_csv(path)
        finite = np.isfinite(data["eps_log_estimate"])
        ax.plot(data["epsilon"][finite], data["eps_log_estimate"][finite],
                "o-", label=Path(path).stem)
        for thr in np.unique(data["threshold"]):
            ax.axhline(thr, linestyle="--", linewidth=1.0, color="k")
    ax.set_xscale("log")
    ax.set_xlabel(job.xlabel or "epsilon")
    ax.set_ylabel(job.ylabel or "epsilon * ln(estimate)")
    ax.legend(loc="best")


def clip_bound(bound: np.ndarray) -> np.ndarray:
    """Tail bounds are probabilities on the plot axis: clip at 1."""
    return np.minimum(np.asarray(bound, dtype=float), 1.0)


def _draw_tails(ax, job: FigureJob) -> None:
    # tails reports reuse the report schema: epsilon holds the threshold level
    # delta, estimate the empirical tail, threshold the analytic bound
    for path in job.inputs:
        data = load_report_csv(path)
        stem = Path(path).stem
        positive = data["estimate"] > 0
        ax.plot(data["epsilon"][positive], data["estimate"][positive],
                "o", label=f"{stem} empirical")
        ax.plot(data["epsilon"], clip_bound(data["threshold"]),
                "-", label=f"{stem} bound")
    ax.set_yscale("log")
    ax.set_xlabel(job.xlabel or "delta")
    ax.set_ylabel(job.ylabel or "tail probability")
    ax.legend(loc="best")


def _draw_overlay(ax, job: FigureJob) -> None:
    for i, path in enumerate(job.inputs):
        t, states, names = load_trajectory_csv(path)
        stem = Path(path).stem
        for k, name in enumerate(names):
            style = "-" if i == 0 else "--"
            ax.plot(t, states[:, k], style, linewidth=1.5 if i == 0 else 0.8,
                    label=f"{stem} {name}")
    ax.set_xlabel(job.xlabel or "t")
    ax.set_ylabel(job.ylabel or "state")
    ax.legend(loc="best", fontsize=8)


_DRAWERS = {
    "convergence": _draw_convergence,
    "tails": _draw_tails,
    "overlay": _draw_overlay,
}


def render(job: FigureJob) -> Path:
    """Write the figure for the job and return the output path."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        try:
            _DRAWERS[job.kind](ax, job)
            fig.tight_layout()
            job.output.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(job.output, dpi=DPI,
                        metadata={"Software": "ldplab-figures"})
        finally:
            plt.close(fig)
    return job.output
