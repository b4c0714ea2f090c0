"""Figure rendering for the report paths (kernels, sweeps, eval summaries)."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_kernel_montage(kernels, path, max_tiles: int = 30) -> None:
    """Tile kernels into one figure; weights are gamma-lifted for visibility."""
    kernels = list(kernels)[:max_tiles]
    if not kernels:
        raise ValueError("no kernels to render")
    cols = min(6, len(kernels))
    rows = math.ceil(len(kernels) / cols)
    fig, axes = plt.subplots(rows, cols, figsize=(2.0 * cols, 2.0 * rows), squeeze=False)
    for ax in axes.flat:
        ax.axis("off")
    for ax, k in zip(axes.flat, kernels):
        ax.imshow(np.power(k.weights, 0.3), cmap="inferno", interpolation="nearest")
        label = "/".join(s for s in (k.meta.p_label, k.meta.e_label) if s)
        if label:
            ax.set_title(label, fontsize=8)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=120)
    plt.close(fig)


def save_sweep_figure(rows, path) -> None:
    """Scatter of the (P, E) sweep colored by mAP@0.5; P on a log axis."""
    filled = [r for r in rows if r["map50"] is not None]
    if not filled:
        raise ValueError("sweep produced no successful cells")
    ps = [r["p"] for r in filled]
    es = [r["e"] for r in filled]
    vals = [r["map50"] for r in filled]
    fig, ax = plt.subplots(figsize=(6, 4))
    sc = ax.scatter(es, ps, c=vals, cmap="RdYlGn", vmin=0.0, vmax=1.0, s=120, edgecolors="k")
    ax.set_yscale("log")
    ax.set_xlabel("exposure fraction")
    ax.set_ylabel("shake intensity")
    fig.colorbar(sc, ax=ax, label="mAP@0.5")
    fig.tight_layout()
    fig.savefig(Path(path), dpi=120)
    plt.close(fig)


def save_eval_figure(report, path) -> None:
    """Per-class AP bars at the first configured IoU threshold."""
    if not report.per_class_ap:
        raise ValueError("report has no per-class entries")
    cats = sorted(report.per_class_ap)
    first_thr = next(iter(report.map_at))
    aps = [report.per_class_ap[c][first_thr] for c in cats]
    fig, ax = plt.subplots(figsize=(max(4, 0.6 * len(cats)), 4))
    ax.bar([str(c) for c in cats], aps, color="steelblue")
    ax.axhline(report.map_at[first_thr], color="firebrick", linestyle="--", label="mAP")
    ax.set_ylim(0, 1.05)
    ax.set_xlabel("category id")
    ax.set_ylabel(f"AP@{first_thr:.2f}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(Path(path), dpi=120)
    plt.close(fig)
