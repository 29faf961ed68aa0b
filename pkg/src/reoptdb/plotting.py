"""Figures for the CLI report paths (headless backend)."""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_sn(rows, path) -> None:
    """``rows``: dicts with n, closed_form and optionally monte_carlo_mean/stderr."""
    ns = [r["n"] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ns, [r["closed_form"] for r in rows], "o-", label="S_N (closed form)")
    ax.plot(ns, [math.sqrt(n) for n in ns], "--", label="sqrt(N)")
    mc = [r for r in rows if r.get("monte_carlo_mean") is not None]
    if mc:
        ax.errorbar([r["n"] for r in mc], [r["monte_carlo_mean"] for r in mc],
                    yerr=[3 * r["monte_carlo_stderr"] for r in mc], fmt="x", label="simulation ±3 SE")
    ax.set_xlabel("N")
    ax.set_ylabel("expected steps")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_bench(result: dict, path) -> None:
    qs = result["queries"]
    labels = ["".join(map(str, q["constants"])) for q in qs]
    x = range(len(qs))
    fig, ax = plt.subplots(figsize=(max(6, len(qs) * 0.7), 4))
    w = 0.4
    ax.bar([i - w / 2 for i in x], [q["rows_processed_original"] for q in qs], w, label="histogram only")
    ax.bar([i + w / 2 for i in x], [q["rows_processed_reopt"] for q in qs], w, label="re-optimized")
    ax.set_yscale("log")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=45)
    ax.set_xlabel("selection constants")
    ax.set_ylabel("rows processed")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
