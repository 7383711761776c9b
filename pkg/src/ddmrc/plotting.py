"""PNG figures for a noise-level sweep, written next to the CSV files."""
from __future__ import annotations

import os

import numpy as np


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_sweep(res, out_dir) -> list[str]:
    plt = _pyplot()
    files = []
    st = res.stats
    lv = np.array([s["level"] for s in st])

    fig, ax = plt.subplots(figsize=(6, 4))
    for key, label in (("DA", "tr(D_A)"), ("DB", "tr(D_B)")):
        mean = np.array([s[f"mean_trace_{key}"] for s in st])
        lo = np.array([s[f"p05_trace_{key}"] for s in st])
        hi = np.array([s[f"p95_trace_{key}"] for s in st])
        ax.plot(lv, mean, marker="o", label=label)
        ax.fill_between(lv, lo, hi, alpha=0.25)
    ax.set_xlabel("noise level")
    ax.set_ylabel("trace")
    ax.legend()
    ax.grid(True, alpha=0.3)
    p = os.path.join(out_dir, "traces.png")
    fig.tight_layout()
    fig.savefig(p, dpi=120)
    plt.close(fig)
    files.append(p)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(lv, [100 * s["success_rate"] for s in st], marker="s")
    ax.set_xlabel("noise level")
    ax.set_ylabel("success rate [%]")
    ax.set_ylim(-5, 105)
    ax.grid(True, alpha=0.3)
    p = os.path.join(out_dir, "success_rate.png")
    fig.tight_layout()
    fig.savefig(p, dpi=120)
    plt.close(fig)
    files.append(p)

    if res.errors:
        n = next(iter(res.errors.values()))["e"].shape[0]
        fig, axes = plt.subplots(n, 1, figsize=(6, 2.2 * n), sharex=True)
        axes = np.atleast_1d(axes)
        for level, run in sorted(res.errors.items()):
            for i in range(n):
                axes[i].plot(run["t"], run["e"][i], label=f"level {level:g}", lw=1)
        for i, a in enumerate(axes):
            a.set_ylabel(f"e_{i + 1}")
            a.grid(True, alpha=0.3)
        axes[0].legend(fontsize=8)
        axes[-1].set_xlabel("t")
        p = os.path.join(out_dir, "tracking_error.png")
        fig.tight_layout()
        fig.savefig(p, dpi=120)
        plt.close(fig)
        files.append(p)
    return files
