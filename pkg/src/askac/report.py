"""Rendering of run metrics to figure files, next to the CSV they came from."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .metrics import moving_average, read_metrics


def render_run(run_dir: str | Path, out_dir: str | Path | None = None) -> list[Path]:
    """Training-curve figures for one run directory; returns written paths."""
    run_dir = Path(run_dir)
    out_dir = Path(out_dir) if out_dir else run_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    m = read_metrics(run_dir / "metrics.csv")
    steps = m["global_step"]
    written = []

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(steps, m["train_return"], alpha=0.25, label="per iteration")
    ax.plot(steps, moving_average(m["train_return"]), label="smoothed (10 it.)")
    ax.set_xlabel("environment steps")
    ax.set_ylabel("training return")
    ax.legend()
    fig.tight_layout()
    path = out_dir / "return.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(steps, m["roa"], color="tab:orange")
    ax.set_xlabel("environment steps")
    ax.set_ylabel("rate of asking")
    ax.set_ylim(0, 1)
    fig.tight_layout()
    path = out_dir / "roa.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    axes[0].semilogy(steps, np.maximum(m["value_loss"], 1e-12), label="value loss")
    axes[0].semilogy(steps, np.maximum(m["ewma"], 1e-12), label="moving average")
    axes[0].set_ylabel("value loss")
    axes[0].legend()
    axes[1].plot(steps, m["unstable_rate"], label="unstable rate")
    axes[1].plot(steps, m["unstable_count"] / np.maximum(m["unstable_count"].max(), 1),
                 alpha=0.5, label="unstable count (scaled)")
    axes[1].set_xlabel("environment steps")
    axes[1].legend()
    fig.tight_layout()
    path = out_dir / "selector.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written


def render_comparison(run_dirs: list[str | Path], labels: list[str] | None,
                      out_path: str | Path) -> Path:
    """Overlay smoothed training returns of several runs in one figure."""
    labels = labels or [Path(d).name for d in run_dirs]
    fig, ax = plt.subplots(figsize=(7, 4))
    for run_dir, label in zip(run_dirs, labels):
        m = read_metrics(Path(run_dir) / "metrics.csv")
        ax.plot(m["global_step"], moving_average(m["train_return"]), label=label)
    ax.set_xlabel("environment steps")
    ax.set_ylabel("training return (smoothed)")
    ax.legend()
    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path
