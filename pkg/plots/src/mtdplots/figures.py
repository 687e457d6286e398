"""Render training curves, metric bars, and cumulative-cost panels.

Consumes the mtdswarm CSV/JSON formats only. Figures are written as PNG and
SVG side by side and regenerate byte-stable for identical inputs (fixed style,
fixed svg hash salt, no embedded dates).
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

# Okabe-Ito colorblind-safe palette.
PALETTE = ("#0072B2", "#D55E00", "#009E73", "#CC79A7", "#E69F00", "#56B4E9")

STYLE = {
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "mtdswarm-plots",
}

REQUIRED_COLUMNS = ("episode", "return")


class PlotError(ValueError):
    """Missing data, schema mismatch, or empty input."""


def load_metrics_csv(path):
    """Episode/return arrays from a metrics CSV (schema-checked)."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh)
                if r and not r[0].startswith("#")]
    if not rows:
        raise PlotError(f"{path}: empty metrics file")
    header = rows[0]
    for col in REQUIRED_COLUMNS:
        if col not in header:
            raise PlotError(f"{path}: missing column {col!r}")
    data = rows[1:]
    if not data:
        raise PlotError(f"{path}: no data rows")
    ep_idx = header.index("episode")
    ret_idx = header.index("return")
    episodes = np.array([int(r[ep_idx]) for r in data])
    returns = np.array([float(r[ret_idx]) for r in data])
    return episodes, returns


def smooth(values, window: int):
    """Trailing window mean (shorter windows during warm-up)."""
    values = np.asarray(values, dtype=float)
    if window <= 1:
        return values.copy()
    out = np.empty_like(values)
    csum = np.cumsum(np.insert(values, 0, 0.0))
    for i in range(len(values)):
        lo = max(0, i - window + 1)
        out[i] = (csum[i + 1] - csum[lo]) / (i + 1 - lo)
    return out


def _save(fig, out_dir: Path, stem: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for ext in ("png", "svg"):
        target = out_dir / f"{stem}.{ext}"
        meta = {"Date": None} if ext == "svg" else {}
        fig.savefig(target, metadata=meta)
        written.append(target)
    plt.close(fig)
    return written


def plot_learning_curves(csv_by_scenario: dict, out_dir, smoothing: int = 50):
    """One figure per attack kind, one smoothed curve per attacker strategy.

    csv_by_scenario maps 'strategy:kind' to a list of metrics.csv paths
    (one per seed; curves are seed-averaged before smoothing).
    """
    out_dir = Path(out_dir)
    written = []
    kinds = sorted({key.split(":")[1] for key in csv_by_scenario})
    with plt.rc_context(STYLE):
        for kind in kinds:
            fig, ax = plt.subplots(figsize=(4.2, 3.0))
            color = 0
            for strategy in ("fixed", "random", "greedy"):
                key = f"{strategy}:{kind}"
                paths = csv_by_scenario.get(key)
                if not paths:
                    continue
                curves = []
                episodes = None
                for path in paths:
                    ep, ret = load_metrics_csv(path)
                    episodes = ep if episodes is None else episodes
                    if len(ret) != len(episodes):
                        raise PlotError(
                            f"{path}: episode count differs across seeds")
                    curves.append(ret)
                mean_curve = smooth(np.mean(curves, axis=0), smoothing)
                ax.plot(episodes, mean_curve, label=f"{strategy} attacker",
                        color=PALETTE[color], linewidth=1.4)
                color += 1
            ax.set_xlabel("training episode")
            ax.set_ylabel(f"average return (window {smoothing})")
            ax.set_title(f"{kind} attack")
            ax.legend(frameon=False, fontsize=8)
            fig.tight_layout()
            written += _save(fig, out_dir, f"learning_{kind}")
    return written


def _scenario_order(summaries: dict):
    order = []
    for kind in ("node", "link"):
        for strategy in ("fixed", "random", "greedy"):
            key = f"{strategy}:{kind}"
            if key in summaries:
                order.append(key)
    return order or sorted(summaries)


def plot_bars_and_cumcost(summaries: dict, out_dir):
    """Grouped bars for recovery/energy plus per-scenario cumulative cost.

    summaries maps 'strategy:kind' to the scenario summary dict produced by
    the sweep (means/stds and the per-step cumcost curve).
    """
    if not summaries:
        raise PlotError("no scenario summaries given")
    out_dir = Path(out_dir)
    order = _scenario_order(summaries)
    written = []

    with plt.rc_context(STYLE):
        for metric, label, stem in (
                ("mean_recovery_s", "mean recovery time (s)", "bars_recovery"),
                ("energy_J", "energy per episode (J)", "bars_energy")):
            fig, ax = plt.subplots(figsize=(4.6, 3.0))
            means, stds = [], []
            for key in order:
                stats = summaries[key].get(metric)
                if stats is None:
                    raise PlotError(f"scenario {key}: missing {metric!r}")
                means.append(stats["mean"] if stats["mean"] is not None else 0.0)
                stds.append(stats["std"] or 0.0)
            x = np.arange(len(order))
            ax.bar(x, means, yerr=stds, capsize=3,
                   color=[PALETTE[i % len(PALETTE)] for i in range(len(order))])
            ax.set_xticks(x)
            ax.set_xticklabels([k.replace(":", "\n") for k in order], fontsize=7)
            ax.set_ylabel(label)
            fig.tight_layout()
            written += _save(fig, out_dir, stem)

        # One cumulative-cost panel per scenario.
        n = len(order)
        ncols = 3 if n > 2 else n
        nrows = int(np.ceil(n / ncols))
        fig, axes = plt.subplots(nrows, ncols,
                                 figsize=(2.6 * ncols, 2.2 * nrows),
                                 squeeze=False)
        for idx, key in enumerate(order):
            ax = axes[idx // ncols][idx % ncols]
            curve = summaries[key].get("cumcost_curve")
            if curve is None:
                raise PlotError(f"scenario {key}: missing 'cumcost_curve'")
            ax.plot(np.arange(1, len(curve) + 1), curve,
                    color=PALETTE[idx % len(PALETTE)], linewidth=1.4)
            ax.set_title(key, fontsize=8)
            ax.set_xlabel("step")
            ax.set_ylabel("cumulative cost")
        for idx in range(n, nrows * ncols):
            axes[idx // ncols][idx % ncols].axis("off")
        fig.tight_layout()
        written += _save(fig, out_dir, "cumcost_grid")
    return written
