"""Figure rendering for the CLI report path.

Every figure is written next to its delimited data file; nothing here is
needed by the numerical core.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["plot_profile", "plot_branch", "plot_w_trend"]


def plot_profile(path, x, f, phi=None, title="wave profile"):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(x, f, lw=1.5, label="f")
    if phi is not None:
        ax.plot(x, phi, lw=1.2, ls="--", label="phi")
    ax.set_xlabel("x")
    ax.set_title(title)
    ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_branch(path, branch):
    pts = branch.points
    amp = [p.amplitude for p in pts]
    c = [p.state.c for p in pts]
    gap = [p.gap for p in pts]
    slope = [p.crest_slope for p in pts]

    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
    axes[0].plot(c, amp, "o-", ms=3)
    axes[0].set_xlabel("c")
    axes[0].set_ylabel("amplitude")
    axes[1].semilogy(amp, np.maximum(gap, 1e-16), "o-", ms=3)
    axes[1].set_xlabel("amplitude")
    axes[1].set_ylabel("gap  a*(c) - max f")
    axes[2].plot(gap, slope, "o-", ms=3)
    axes[2].set_xlabel("gap")
    axes[2].set_ylabel("crest slope")
    if branch.theta_extrapolated is not None:
        axes[2].axhline(branch.theta_extrapolated, color="k", ls=":", lw=1,
                        label=f"extrapolated {branch.theta_extrapolated:.4f}")
        axes[2].legend(frameon=False)
    for ax in axes:
        ax.grid(alpha=0.3)
    fig.suptitle(f"branch ({branch.stop_reason}, {len(pts)} points)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_w_trend(path, trend):
    xi = [t[0] for t in trend]
    w = [t[1] for t in trend]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(xi, w, "o-", ms=3)
    ax.set_xlabel("xi")
    ax.set_ylabel("W_delta(xi)")
    ax.set_title("growth gauge over the top decade")
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
