"""Learning-curve artifacts: CSV alongside a rendered figure."""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def write_curve(rows, out_dir: str, stem: str = "curve") -> list[str]:
    """Write ``iteration,mean_return`` CSV and a matching PNG line plot."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "mean_return"])
        for iteration, value in rows:
            w.writerow([iteration, f"{value:.6f}"])

    png_path = os.path.join(out_dir, f"{stem}.png")
    fig, ax = plt.subplots(figsize=(7, 4))
    if rows:
        ax.plot([r[0] for r in rows], [r[1] for r in rows], marker="o", ms=3)
    ax.set_xlabel("iteration")
    ax.set_ylabel("mean return")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return [csv_path, png_path]
