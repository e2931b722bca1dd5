"""Figure rendering for sweep and extraction reports.

Figures complement the delimited output, they never replace it: every value
plotted here is also in the CSV/JSON report. Rendering uses the Agg backend
so it works headless, and writes deterministic PNGs next to the report.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def sweep_figures(rows: list[dict], out_dir: str) -> list[str]:
    """Render error and separation decay for one sweep.

    ``rows`` are the per-(N, seed) sweep records. Produces a log-log error
    plot against the analytic bound with the fitted slope annotated, and a
    log-log plot of the worst separation residuals.
    """
    os.makedirs(out_dir, exist_ok=True)
    ns = sorted({r["N"] for r in rows})
    seeds = sorted({r["seed"] for r in rows})
    written = []

    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for seed in seeds:
        pts = sorted((r["N"], r["err"]) for r in rows if r["seed"] == seed)
        ax.loglog([p[0] for p in pts], [p[1] for p in pts],
                  "o-", ms=3.5, lw=0.9, label=f"seed {seed}")
    bound = [next(r["bound_total"] for r in rows if r["N"] == n) for n in ns]
    ax.loglog(ns, bound, "k--", lw=1.2, label="bound")
    mean_err = [np.mean([r["err"] for r in rows if r["N"] == n]) for n in ns]
    if len(ns) >= 2:
        slope = np.polyfit(np.log(ns), np.log(mean_err), 1)[0]
        ax.set_title(f"rotation error vs N (fitted slope {slope:.3f})")
    else:
        ax.set_title("rotation error vs N")
    ax.set_xlabel("N")
    ax.set_ylabel("trace-norm error")
    ax.legend(fontsize=7)
    written.append(_finish(fig, os.path.join(out_dir, "sweep_error.png")))

    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    diag_cols = ["sep_xx", "sep_yy", "sep_zz"]
    off_cols = ["off_xy", "off_xz", "off_yx", "off_yz", "off_zx", "off_zy"]
    worst_diag = [max(r[c] for r in rows if r["N"] == n for c in diag_cols) for n in ns]
    worst_off = [max(r[c] for r in rows if r["N"] == n for c in off_cols) for n in ns]
    ax.loglog(ns, worst_diag, "o-", label="worst diagonal balance")
    ax.loglog(ns, worst_off, "s-", label="worst off-diagonal leak")
    ax.set_xlabel("N")
    ax.set_ylabel("separation residual")
    ax.set_title("battery separation vs N")
    ax.legend(fontsize=7)
    written.append(_finish(fig, os.path.join(out_dir, "sweep_separation.png")))
    return written


def extraction_figures(report: dict, out_dir: str) -> list[str]:
    """Render measured battery gains against their targets."""
    os.makedirs(out_dir, exist_ok=True)
    parts = ("x", "y", "z")
    comps = ("x", "y", "z")
    gains = np.array([[report["ledger"][p][i] for i in range(3)] for p in parts])
    targets = np.array([report["target_gains"][p] for p in parts])

    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    width = 0.35
    pos = np.arange(9)
    ax.bar(pos - width / 2, gains.ravel(), width, label="measured gain")
    ax.bar(pos + width / 2, targets.ravel(), width, label="target")
    ax.set_xticks(pos)
    ax.set_xticklabels([f"{p}-part\n{c}" for p in parts for c in comps], fontsize=7)
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_ylabel("spin change")
    ax.set_title(f"battery gains (N = {report['N']})")
    ax.legend(fontsize=7)
    return [_finish(fig, os.path.join(out_dir, "extract_gains.png"))]
