"""Figure and table rendering for analysis reports.

Writes a small report directory next to the machine-readable JSON: a
Table-style summary.csv plus PNG figures for the posterior density, the
per-question score trend, and the per-category accuracy spread.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import CATEGORIES, ResponseSet, beta_pdf, question_trend

SUMMARY_COLUMNS = ["group", "n", "mean", "median", "sd", "t_statistic", "p_value"]


def write_summary_csv(path: Path, summary: dict) -> None:
    groups = [("overall", summary["overall"])]
    groups += [(cat, stats) for cat, stats in summary["categories"].items()]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for name, stats in groups:
            writer.writerow([
                name, stats["n"],
                f"{stats['mean']:.6f}",
                "" if stats["median"] is None else f"{stats['median']:.6f}",
                f"{stats['sd']:.6f}",
                "" if stats["t_statistic"] is None else f"{stats['t_statistic']:.6f}",
                "" if stats["p_value"] is None else f"{stats['p_value']:.6f}",
            ])


def plot_posterior(path: Path, summary: dict, grid_points: int = 512) -> None:
    alpha = summary["posterior"]["alpha"]
    beta = summary["posterior"]["beta"]
    lo = summary["credible_interval"]["lo"]
    hi = summary["credible_interval"]["hi"]
    mass = summary["credible_interval"]["mass"]

    q = np.linspace(0.0, 1.0, grid_points)
    pdf = beta_pdf(q, alpha, beta)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(q, pdf, color="C0")
    band = (q >= lo) & (q <= hi)
    ax.fill_between(q[band], pdf[band], alpha=0.3, color="C0",
                    label=f"{mass:.0%} credible interval")
    ax.axvline(0.5, color="0.4", linestyle="--", linewidth=1, label="chance (0.5)")
    ax.set_xlabel("pick probability q")
    ax.set_ylabel("posterior density")
    ax.set_title(f"Beta({alpha:g}, {beta:g}) posterior")
    ax.legend(loc="upper left")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_question_scores(path: Path, responses: ResponseSet) -> None:
    means = responses.per_question_means()
    k = np.asarray([m[0] for m in means], dtype=np.float64)
    y = np.asarray([m[1] for m in means], dtype=np.float64)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(k, y, "o", color="C0", markersize=4, label="per-question mean score")
    if len(means) >= 2:
        slope, intercept = question_trend(responses)
        ax.plot(k, intercept + slope * k, color="C3",
                label=f"trend: slope {slope:+.4f}")
    ax.axhline(0.5, color="0.4", linestyle="--", linewidth=1)
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel("question presentation index")
    ax.set_ylabel("mean score")
    ax.set_title("Question scores")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_category_accuracy(path: Path, responses: ResponseSet) -> None:
    labels, series = [], []
    for cat in (*CATEGORIES, None):
        accs = list(responses.per_participant_accuracy(cat).values())
        if accs:
            labels.append(cat or "overall")
            series.append(accs)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.boxplot(series, tick_labels=labels)
    ax.axhline(0.5, color="0.4", linestyle="--", linewidth=1)
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("per-participant accuracy")
    ax.set_title("Response accuracy by category")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_report(report_dir: str | Path, summary: dict, responses: ResponseSet) -> list[Path]:
    """Write summary.csv and the three figures; returns the paths written."""
    report_dir = Path(report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)
    written = []

    csv_path = report_dir / "summary.csv"
    write_summary_csv(csv_path, summary)
    written.append(csv_path)

    for name, renderer in [
        ("posterior.png", lambda p: plot_posterior(p, summary)),
        ("question_scores.png", lambda p: plot_question_scores(p, responses)),
        ("category_accuracy.png", lambda p: plot_category_accuracy(p, responses)),
    ]:
        out = report_dir / name
        renderer(out)
        written.append(out)
    return written
