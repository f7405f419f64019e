"""
Rendering: the clustered t-SNE scatter as SVG, and plain-text result tables.
"""

from io import StringIO

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

import config
from src.cluster import NOISE
from src.errors import InputError


# ── Plot ──────────────────────────────────────────────────────────────────────

def render_svg(points, labels, title=None):
    """
    Scatter plot of the embedding: one color per cluster, noise drawn as crosses.
    Output bytes depend only on the inputs (fixed hash salt, no date metadata).
    """
    points = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    if points.ndim != 2 or points.shape[0] == 0:
        raise InputError("cannot render an empty embedding")

    with plt.rc_context({"svg.hashsalt": config.SVG_HASH_SALT, "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(6, 5))
        for cluster in sorted(set(labels.tolist()) - {NOISE}):
            mask = labels == cluster
            sc = ax.scatter(
                points[mask, 0], points[mask, 1], s=22,
                c=config.CLUSTER_COLORS[cluster % len(config.CLUSTER_COLORS)],
                edgecolors="white", linewidth=0.4, zorder=3,
            )
            sc.set_gid(f"cluster-{cluster}")
        noise = labels == NOISE
        if noise.any():
            sc = ax.scatter(
                points[noise, 0], points[noise, 1], s=40, marker="x",
                c=config.NOISE_COLOR, linewidth=1.4, zorder=4,
            )
            sc.set_gid("noise")

        n_clusters = len(set(labels.tolist()) - {NOISE})
        ax.set_title(
            title or f"GLA t-SNE embedding: {n_clusters} clusters, {int(noise.sum())} outliers",
            fontsize=11, fontweight="600",
        )
        ax.spines[["top", "right"]].set_visible(False)
        ax.tick_params(labelsize=9)
        fig.tight_layout()

        buf = StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


# ── Tables ────────────────────────────────────────────────────────────────────

def fmt(val, decimals=3):
    if val is None or pd.isna(val):
        return "n/a"
    return f"{val:.{decimals}f}"


def format_experiment_table(results_df, name, description):
    """Per-seed outcome table plus a summary line, in the style of a results printout."""
    buf = StringIO()
    buf.write("=" * 78 + "\n")
    buf.write(f"GLA SYNTHETIC EXPERIMENT: {name}\n")
    buf.write(f"{description}\n")
    buf.write("=" * 78 + "\n\n")
    buf.write(f"  {'Seed':>6} {'Flagged':>8} {'TP':>5} {'FP':>5} {'FN':>5} "
              f"{'Prec.':>7} {'Recall':>7} {'F1':>7} {'Exact':>6} {'Secs':>7}\n")
    buf.write("  " + "-" * 74 + "\n")
    for _, row in results_df.iterrows():
        buf.write(
            f"  {int(row['seed']):>6} {int(row['flagged']):>8} {int(row['tp']):>5} "
            f"{int(row['fp']):>5} {int(row['fn']):>5} {fmt(row['precision']):>7} "
            f"{fmt(row['recall']):>7} {fmt(row['f1']):>7} "
            f"{'yes' if row['exact'] else 'no':>6} {fmt(row['seconds'], 1):>7}\n"
        )
    buf.write("  " + "-" * 74 + "\n\n")
    exact = int(results_df["exact"].sum())
    buf.write(f"Exact recovery of the labeled anomalies: {exact} of {len(results_df)} seeds\n")
    buf.write(f"Mean F1: {fmt(results_df['f1'].mean())}\n")
    buf.write("=" * 78 + "\n")
    return buf.getvalue()
