"""SVG figure emission for reports and path bundles (matplotlib, Agg backend)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .paths import CadlagStep


def plot_step_path(path: CadlagStep, out_file: str, title: str = ""):
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ts = np.concatenate([[0.0], path.jump_times, [1.0]])
    vs = np.concatenate([path.levels(), [path.final_value()]])
    ax.step(ts, vs, where="post")
    if path.n_jumps:
        ax.plot(path.jump_times, path.values, "o", ms=4)
    ax.set_xlabel("t")
    ax.set_ylabel("W(t)")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_file)
    plt.close(fig)


def plot_trend(xs, ys, out_file: str, *, ci=None, xlabel="N", ylabel="", title="",
               logx: bool = True):
    fig, ax = plt.subplots(figsize=(6, 3.2))
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if ci is not None:
        lo = np.array([c[0] for c in ci])
        hi = np.array([c[1] for c in ci])
        ax.errorbar(xs, ys, yerr=[ys - lo, hi - ys], fmt="o-", capsize=3)
    else:
        ax.plot(xs, ys, "o-")
    if logx:
        ax.set_xscale("log", base=2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_file)
    plt.close(fig)


def plot_histogram(counts_by_label: dict, out_file: str, *, xlabel="count",
                   title=""):
    fig, ax = plt.subplots(figsize=(6, 3.2))
    for label, counts in counts_by_label.items():
        counts = np.asarray(counts, dtype=float)
        ax.plot(np.arange(counts.size), counts / max(counts.sum(), 1), "o-",
                label=str(label))
    ax.set_xlabel(xlabel)
    ax.set_ylabel("frequency")
    ax.legend(fontsize=7)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_file)
    plt.close(fig)


def emit_plots(report, out_dir: str) -> list:
    """One self-contained SVG per plottable report entry; returns file list."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for entry in report.entries:
        stats = entry.stats
        base = os.path.join(out_dir, f"{entry.name}")
        if "ladder" in stats and "frac_over_budget" in stats:
            f = base + "_trend.svg"
            plot_trend(stats["ladder"], stats["frac_over_budget"], f,
                       ci=stats.get("ci"), ylabel="P(count > r)",
                       title=f"{entry.name} ({'pass' if entry.passed else 'FAIL'})")
            written.append(f)
            if "histograms" in stats:
                f = base + "_hist.svg"
                plot_histogram(stats["histograms"], f, title="exceedance counts")
                written.append(f)
        elif "ladder" in stats and "medians" in stats:
            f = base + "_trend.svg"
            plot_trend(stats["ladder"], stats["medians"], f,
                       ylabel="median sup-remainder", title=entry.name)
            written.append(f)
        elif "ladder" in stats and "ratio" in stats:
            f = base + "_trend.svg"
            plot_trend(stats["ladder"], stats["ratio"], f, ci=stats.get("ci"),
                       ylabel="hit rate / prediction", title=entry.name)
            written.append(f)
        elif "half_corr" in stats:
            f = base + "_decay.svg"
            fig, ax = plt.subplots(figsize=(6, 3.2))
            vals = np.abs(np.asarray(stats["half_corr"]))
            ax.semilogy(np.arange(1, vals.size + 1), np.maximum(vals, 1e-12), "o-")
            ax.set_xlabel("lag")
            ax.set_ylabel("|correlation|")
            ax.set_title("mixing decay")
            fig.tight_layout()
            fig.savefig(f)
            plt.close(fig)
            written.append(f)
    return written
