"""Report figures rendered to PNG files (no display needed)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# no software/version stamp so repeated runs produce identical files
_META = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)


def plot_rates(path, reports):
    th = [r.threshold for r in reports]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(th, [r.tmr for r in reports], label="TMR")
    ax.plot(th, [r.fmr for r in reports], label="FMR")
    ax.plot(th, [r.fnmr for r in reports], label="FNMR")
    ax2 = ax.twinx()
    ax2.step(th, [len(r.masterprints) for r in reports], where="post", color="k", lw=0.8, label="MasterPrints")
    ax2.set_ylabel("MasterPrint count")
    ax.set_xlabel("threshold")
    ax.set_ylabel("rate")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="center right")
    _save(fig, path)


def plot_cmc(path, cmc, theta):
    fig, ax = plt.subplots(figsize=(5, 4))
    ranks = np.arange(1, len(cmc) + 1)
    ax.plot(ranks, cmc, marker="o", ms=3)
    ax.set_xlabel("rank")
    ax.set_ylabel("identification rate")
    ax.set_ylim(0, 1.02)
    ax.set_title(f"CMC at threshold {theta:.3f}")
    _save(fig, path)


def plot_scatter(path, top, correct):
    top = np.asarray(top)
    correct = np.asarray(correct, dtype=bool)
    idx = np.arange(top.size)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.scatter(idx[correct], top[correct], s=4, c="tab:blue", label="true subject on top")
    ax.scatter(idx[~correct], top[~correct], s=4, c="tab:red", label="other subject on top")
    ax.set_xlabel("probe")
    ax.set_ylabel("best score")
    ax.legend(loc="upper right")
    _save(fig, path)


def plot_verify(path, histogram, theta):
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.bar(np.arange(len(histogram)), histogram)
    ax.set_xlabel("same-subject partials above threshold")
    ax.set_ylabel("probes")
    ax.set_title(f"verification at threshold {theta:.3f}")
    _save(fig, path)
