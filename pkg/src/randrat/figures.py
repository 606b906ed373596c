"""Matplotlib figure rendering for the report paths.

Every figure is written next to its delimited output with the same
content-hash stem; rendering is deterministic (fixed size, dpi, fonts from
the Agg defaults, constant metadata).
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KW = {"dpi": 120, "metadata": {"Software": "randrat"}}


def save_pressure_figure(path, rows, *, reference=None):
    """Estimate vs horizon, one line per epsilon, with half-width bars."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    by_eps = {}
    for n, eps, mean, half in rows:
        by_eps.setdefault(eps, []).append((n, mean, half))
    for eps in sorted(by_eps, reverse=True):
        pts = sorted(by_eps[eps])
        ns = [p[0] for p in pts]
        ms = [p[1] for p in pts]
        hs = [p[2] for p in pts]
        ax.errorbar(ns, ms, yerr=hs, marker="o", capsize=3, label=f"eps={eps:g}")
    if reference is not None:
        ax.axhline(reference, color="k", linestyle="--", linewidth=1,
                   label="mean log degree")
    ax.set_xlabel("horizon n")
    ax.set_ylabel("pressure estimate")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_measure_figure(path, mu):
    """Atom scatter in the plane chart, weight-scaled, infinity flagged."""
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    finite = ~mu.inf
    w = mu.weights[finite]
    scale = 40.0 * w / max(np.max(w), 1e-300)
    ax.scatter(mu.values[finite].real, mu.values[finite].imag,
               s=np.maximum(scale, 0.2), c="tab:blue", alpha=0.5, linewidths=0)
    n_inf = int(np.count_nonzero(mu.inf))
    ax.set_title(f"{len(mu.weights)} atoms ({n_inf} at infinity)", fontsize=9)
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_julia_figure(path, field, extent):
    """Escape-horizon field as an image."""
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    ax.imshow(field, origin="lower", extent=extent, cmap="magma")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_verify_figure(path, reports):
    """Worst margins per lemma (log scale of |margin|, sign-colored)."""
    fig, ax = plt.subplots(figsize=(6.0, 3.5))
    labels = [r.lemma for r in reports]
    margins = [r.worst_margin for r in reports]
    heights = [math.log10(max(abs(m), 1e-18)) for m in margins]
    colors = ["tab:red" if m > 0 else "tab:green" for m in margins]
    ax.bar(range(len(labels)), heights, color=colors)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, fontsize=8)
    ax.set_ylabel("log10 |worst margin|")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_trajectory_figure(path, traj):
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    xs = [p.value.real for p in traj.points if not p.is_infinity]
    ys = [p.value.imag for p in traj.points if not p.is_infinity]
    ax.plot(xs, ys, "o-", markersize=3, linewidth=0.8)
    if xs:
        ax.plot(xs[0], ys[0], "rs", markersize=6)
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
