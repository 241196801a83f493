"""Figure rendering for harness outputs.

All functions take already-computed data (histograms, sweep rows, bench
reports) and write a figure to a file; nothing here recomputes physics.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .harness import Histogram


def plot_histogram(hist: Histogram, path: str, title: str = "") -> str:
    """Violation-value histogram with the classical/quantum bounds marked."""
    fig, ax = plt.subplots(figsize=(7, 4.2))
    edges = np.asarray(hist.edges)
    counts = np.asarray(hist.counts, dtype=float)
    ax.bar(edges[:-1], counts, width=np.diff(edges), align="edge",
           color="#4878b0", edgecolor="white", linewidth=0.4)
    ax.axvline(hist.classical_bound, color="crimson", linestyle="--",
               linewidth=1.2, label=f"classical bound {hist.classical_bound:g}")
    ax.axvline(hist.quantum_bound, color="black", linestyle=":",
               linewidth=1.2, label=f"quantum bound {hist.quantum_bound:.4g}")
    ax.set_xlabel("violation level")
    ax.set_ylabel("circuits")
    label = title or f"violation fraction {hist.violation_fraction:.2%}"
    ax.set_title(label)
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_sweep(rows, path: str, xlabel: str, title: str = "") -> str:
    """Violation fraction versus a swept parameter (noise level or depth)."""
    xs = [x for x, _ in rows]
    fracs = [h.violation_fraction for _, h in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, fracs, "o-", color="#4878b0")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("violation fraction")
    ax.set_ylim(-0.02, 1.02)
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_bench(report: dict, path: str, title: str = "") -> str:
    """Per-bin ideal vs measured values from a benchmarking report."""
    bins = report["bins"]
    centers = [(b["lo"] + b["hi"]) / 2 for b in bins]
    ideal = [b["ideal_value"] for b in bins]
    meas = [b["measured_mean"] for b in bins]
    errs = [b["measured_std"] for b in bins]
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    ax.plot(centers, ideal, "s--", color="black", label="ideal")
    ax.errorbar(centers, meas, yerr=errs, fmt="o", color="#c44e52",
                capsize=3, label="measured")
    ax.set_xlabel("bin center (ideal violation level)")
    ax.set_ylabel("violation level")
    verdict = "pass" if report.get("pass") else "fail"
    ax.set_title(title or f"device benchmark ({verdict}, "
                          f"max |delta| {report['max_abs_delta']:.3f})")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
