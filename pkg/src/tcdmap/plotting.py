"""Figures for run directories.

Everything here reads the CSV/JSON files the commands write, so figures can be
regenerated without recomputing anything.
"""
from __future__ import annotations

import json
import math
import os

import numpy as np

from .synthetic import LABEL_NAMES

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 7,
    "ytick.labelsize": 7,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams.update(STYLE)
    return plt


def figsize(width=4.0, height=None):
    golden = (math.sqrt(5) - 1.0) / 2.0
    return width, height or width * golden


def read_embedding(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def plot_embedding(path, out, labels=None, title=None):
    """Scatter of the first two (and, if present, first three pairs of) coordinates."""
    plt = _pyplot()
    header, emb = read_embedding(path)
    pairs = [(0, 1)] if emb.shape[1] < 3 else [(0, 1), (0, 2), (1, 2)]
    if emb.shape[1] < 2:
        pairs = [(0, None)]
    fig, axes = plt.subplots(1, len(pairs), figsize=figsize(3.2 * len(pairs), 3.0), squeeze=False)
    for ax, (a, b) in zip(axes[0], pairs):
        y = emb[:, b] if b is not None else np.zeros(emb.shape[0])
        if labels is None:
            ax.scatter(emb[:, a], y, s=2, color="k", linewidths=0)
        else:
            for c in np.unique(labels):
                name = LABEL_NAMES[c] if 0 <= c < len(LABEL_NAMES) else str(c)
                sel = labels == c
                ax.scatter(emb[sel, a], y[sel], s=2, linewidths=0, label=name)
        ax.set_xlabel(header[a])
        ax.set_ylabel(header[b] if b is not None else "")
    if labels is not None:
        axes[0][0].legend(markerscale=4, frameon=False)
    if title:
        fig.suptitle(title)
    fig.savefig(out)
    plt.close(fig)
    return out


def plot_heat_sweep(path, out):
    plt = _pyplot()
    table = np.genfromtxt(path, delimiter=",", names=True)
    fig, ax = plt.subplots(figsize=figsize())
    ax.loglog(table["epsilon"], table["rel_l2_error"], "o-", color="k")
    slope = float(np.atleast_1d(table["fitted_slope"])[0])
    ax.set_xlabel("bandwidth / time step")
    ax.set_ylabel("relative L2 error")
    ax.set_title(f"fitted slope {slope:.2f}")
    fig.savefig(out)
    plt.close(fig)
    return out


def plot_spectrum(report_path, out):
    plt = _pyplot()
    with open(report_path) as fh:
        report = json.load(fh)
    s = np.asarray(report.get("singular_values", []), dtype=float)
    if s.size == 0:
        return None
    fig, ax = plt.subplots(figsize=figsize())
    ax.semilogy(np.arange(s.size), np.maximum(s, 1e-300), "o", color="k")
    ax.set_xlabel("index")
    ax.set_ylabel("singular value")
    ax.set_title(report.get("method", ""))
    fig.savefig(out)
    plt.close(fig)
    return out


def render_run(run_dir, fmt="png"):
    """Render every figure that the files in ``run_dir`` support; return written paths."""
    written = []
    emb = os.path.join(run_dir, "embedding.csv")
    labels_path = os.path.join(run_dir, "labels.csv")
    report = os.path.join(run_dir, "report.json")
    sweep = os.path.join(run_dir, "heat_sweep.csv")
    if os.path.isfile(emb):
        labels = np.loadtxt(labels_path, dtype=np.int64, ndmin=1) if os.path.isfile(labels_path) else None
        title = None
        if os.path.isfile(report):
            with open(report) as fh:
                meta = json.load(fh)
            title = f"{meta.get('method', '')}  t={meta.get('t', '')}"
        written.append(plot_embedding(emb, os.path.join(run_dir, f"embedding.{fmt}"), labels, title))
    if os.path.isfile(report):
        out = plot_spectrum(report, os.path.join(run_dir, f"spectrum.{fmt}"))
        if out:
            written.append(out)
    if os.path.isfile(sweep):
        written.append(plot_heat_sweep(sweep, os.path.join(run_dir, f"heat_sweep.{fmt}")))
    return written
