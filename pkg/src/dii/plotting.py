"""Figure rendering for the CLI report path.

Renders the optimization trace and the DII-vs-cardinality curve to image
files next to the delimited outputs.  Uses the non-interactive Agg backend so
runs work headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["plot_trace", "plot_dii_curve"]


def plot_trace(epochs, diis, out_path, title="DII optimization") -> Path:
    """DII per epoch on a log scale."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.plot(epochs, diis, color="tab:blue", lw=1.5)
    ax.set_xlabel("epoch")
    ax.set_ylabel("DII")
    ax.set_yscale("log")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def plot_dii_curve(n_nonzero, diis, out_path, title="DII vs number of nonzero features") -> Path:
    """Best DII per cardinality, the axes of a sparsity-path report."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.plot(n_nonzero, diis, "o-", color="tab:orange", lw=1.2, ms=5)
    ax.set_xlabel("nonzero features")
    ax.set_ylabel("best DII")
    ax.set_yscale("log")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
