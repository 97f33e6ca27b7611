"""Report artifacts: CSV tables plus matplotlib figures rendered to files."""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .fuzz import FuzzReport  # noqa: E402


def write_fuzz_report(report: FuzzReport, out_dir: str) -> list[str]:
    """Write games.csv and a decision-count histogram PNG; returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "games.csv")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "decisions", "rounds", "winner", "vp0", "vp1",
                    "budget_exhausted"])
        for g in report.games:
            w.writerow([g.seed, g.decisions, g.rounds, g.winner,
                        g.vp[0], g.vp[1], int(g.budget_exhausted)])

    png_path = os.path.join(out_dir, "decisions_hist.png")
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.hist(report.decision_counts, bins=40, color="#4878b0", edgecolor="black")
    ax.set_xlabel("decisions per game")
    ax.set_ylabel("games")
    ax.set_title(f"Decision counts over {len(report.games)} games")
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return [csv_path, png_path]


def write_curve(rows: list[tuple[int, float]], out_dir: str,
                stem: str = "curve", ylabel: str = "mean return") -> list[str]:
    """Write ``iteration,mean_return`` CSV and a matching line-plot PNG."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "mean_return"])
        for it, value in rows:
            w.writerow([it, f"{value:.6f}"])

    png_path = os.path.join(out_dir, f"{stem}.png")
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot([r[0] for r in rows], [r[1] for r in rows], marker="o", ms=3)
    ax.set_xlabel("iteration")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return [csv_path, png_path]
