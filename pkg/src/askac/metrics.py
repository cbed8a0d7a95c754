"""Metrics persistence (append-only CSV + JSON sidecar) and the derived
training-efficiency ratios computed from metrics files."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .trainer import MetricsRow

CSV_COLUMNS = MetricsRow.FIELDS
SMOOTHING_WINDOW = 10  # iterations of moving average for crossing detection


class MetricsWriter:
    """Writes one CSV row per iteration as training progresses."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._file = open(self.path, "w", newline="")
        self._writer = csv.writer(self._file)
        self._writer.writerow(CSV_COLUMNS)
        self._file.flush()

    def write(self, row: MetricsRow) -> None:
        self._writer.writerow([repr(v) if isinstance(v, float) else v for v in row.as_list()])
        self._file.flush()

    def close(self) -> None:
        self._file.close()


def read_metrics(path: str | Path) -> dict[str, np.ndarray]:
    """Load a metrics CSV into column arrays."""
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        rows = list(reader)
    if not rows:
        return {c: np.empty(0) for c in CSV_COLUMNS}
    out = {}
    for c in CSV_COLUMNS:
        if c in ("iteration", "global_step", "ask_count", "unstable_count"):
            out[c] = np.array([int(r[c]) for r in rows])
        else:
            out[c] = np.array([float(r[c]) for r in rows])
    return out


def moving_average(values: np.ndarray, window: int = SMOOTHING_WINDOW) -> np.ndarray:
    """Trailing moving average over full windows only: positions before the
    first complete window are NaN (a single lucky iteration must not count
    as a smoothed crossing). NaN entries inside a window are skipped."""
    values = np.asarray(values, dtype=float)
    out = np.full(len(values), math.nan)
    for i in range(window - 1, len(values)):
        chunk = values[i - window + 1: i + 1]
        finite = chunk[np.isfinite(chunk)]
        if len(finite):
            out[i] = finite.mean()
    return out


def first_crossing_step(metrics: dict[str, np.ndarray], target: float,
                        window: int = SMOOTHING_WINDOW) -> int | None:
    """Global step at which the smoothed training return first reaches the
    target; None if it never does."""
    smooth = moving_average(metrics["train_return"], window)
    hits = np.nonzero(smooth >= target)[0]
    if len(hits) == 0:
        return None
    return int(metrics["global_step"][hits[0]])


def cumulative_asks_at_step(metrics: dict[str, np.ndarray], step: int) -> int:
    mask = metrics["global_step"] <= step
    return int(metrics["ask_count"][mask].sum())


def compute_ser(run: dict[str, np.ndarray], reference: dict[str, np.ndarray],
                target: float) -> float | None:
    """Timesteps for the interactive run to reach the target return divided
    by the reference run's timesteps; None when either never crosses."""
    t_run = first_crossing_step(run, target)
    t_ref = first_crossing_step(reference, target)
    if t_run is None or t_ref is None:
        return None
    return t_run / t_ref


def compute_anr(run: dict[str, np.ndarray], cm_run: dict[str, np.ndarray],
                target: float) -> float | None:
    """Cumulative advisor queries at each run's own target crossing, as a
    ratio of ask-based over continuous monitoring; None when either run
    never crosses."""
    t_run = first_crossing_step(run, target)
    t_cm = first_crossing_step(cm_run, target)
    if t_run is None or t_cm is None:
        return None
    asks_run = cumulative_asks_at_step(run, t_run)
    asks_cm = cumulative_asks_at_step(cm_run, t_cm)
    if asks_cm == 0:
        return None
    return asks_run / asks_cm


def recovery_step(metrics: dict[str, np.ndarray], changepoint: int, target: float,
                  window: int = SMOOTHING_WINDOW) -> float:
    """Steps after a changepoint until the smoothed return is back at the
    target; +inf when it never recovers within the run."""
    smooth = moving_average(metrics["train_return"], window)
    steps = metrics["global_step"]
    after = np.nonzero((steps > changepoint) & (smooth >= target))[0]
    if len(after) == 0:
        return math.inf
    return float(steps[after[0]] - changepoint)


def save_summary(path: str | Path, summary: dict) -> None:
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True))
