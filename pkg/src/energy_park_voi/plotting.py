"""Figures written next to the CSV artifacts (Agg backend, PNG)."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
from matplotlib.figure import Figure  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.frameon": False,
}

# fixed colours so a technology looks the same in every figure
PALETTE = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"]


def colour_for(key: str, keys: Sequence[str]) -> str:
    return PALETTE[sorted(keys).index(key) % len(PALETTE)]


def _save(fig: Figure, path: str | Path) -> Path:
    path = Path(path)
    fig.tight_layout()
    # no timestamp/software metadata, so repeated runs give identical files
    fig.savefig(path, dpi=120, metadata={"Software": None})
    return path


def _figure(width=6.0, height=3.6) -> Figure:
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(width, height))
        fig.add_subplot(1, 1, 1)
    return fig


def plot_prior_costs(rows: Sequence[Mapping], path: str | Path) -> Path:
    """Stacked annual cost components per technology subset."""
    with matplotlib.rc_context(STYLE):
        fig = _figure()
        ax = fig.axes[0]
        labels = [r["subset"] for r in rows]
        parts = ["wind_capital", "solar_capital", "storage_capital", "grid_energy", "carbon"]
        bottom_pos = [0.0] * len(rows)
        bottom_neg = [0.0] * len(rows)
        for k, part in enumerate(parts):
            vals = [r[part] / 1e6 for r in rows]
            base = [bp if v >= 0 else bn for v, bp, bn in zip(vals, bottom_pos, bottom_neg)]
            ax.bar(labels, vals, bottom=base, color=PALETTE[k], label=part.replace("_", " "))
            bottom_pos = [b + max(v, 0) for b, v in zip(bottom_pos, vals)]
            bottom_neg = [b + min(v, 0) for b, v in zip(bottom_neg, vals)]
        ax.scatter(labels, [r["objective"] / 1e6 for r in rows], color="k", marker="_", s=300, zorder=3,
                   label="objective")
        ax.set_ylabel("cost (EUR m/yr)")
        ax.legend(fontsize=7, ncol=2)
        return _save(fig, path)


def plot_design_scatter(rows: Sequence[Mapping], path: str | Path, title: str = "") -> Path:
    """Wind capacity against storage capacity per measurement sample, coloured by technology."""
    with matplotlib.rc_context(STYLE):
        fig = _figure(5.0, 4.0)
        ax = fig.axes[0]
        keys = sorted({r["technologies"] for r in rows})
        for key in keys:
            pts = [r for r in rows if r["technologies"] == key]
            ax.scatter([r["storage_kwh"] / 1e3 for r in pts], [r["wind_kwp"] / 1e3 for r in pts],
                       s=14, color=colour_for(key, keys), label=key)
        ax.set_xlabel("storage capacity (MWh)")
        ax.set_ylabel("wind capacity (MWp)")
        if title:
            ax.set_title(title)
        ax.legend(fontsize=7)
        return _save(fig, path)


def plot_sweep(rows: Sequence[Mapping], axis: str, path: str | Path) -> Path:
    """VoI and VoO with 2-SE error bars along a sweep axis."""
    with matplotlib.rc_context(STYLE):
        fig = _figure()
        ax = fig.axes[0]
        x = [str(r["axis_value"]) for r in rows]
        for col, se, label, c in (("voi", "voi_se", "VoI", PALETTE[0]), ("voo", "voo_se", "VoO", PALETTE[1])):
            ax.errorbar(x, [r[col] / 1e6 for r in rows], yerr=[2 * r[se] / 1e6 for r in rows],
                        marker="o", capsize=3, color=c, label=label)
        ax.axhline(0.0, color="k", lw=0.6)
        ax.set_xlabel(axis)
        ax.set_ylabel("value (EUR m/yr)")
        ax.legend()
        return _save(fig, path)


def plot_operation(trace: Mapping[str, Sequence[float]], path: str | Path) -> Path:
    """State of charge per technology and net grid exchange over the horizon."""
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(7.0, 4.5))
        ax1, ax2 = fig.subplots(2, 1, sharex=True)
        hours = trace["hour"]
        soc_cols = sorted(k for k in trace if k.startswith("soc_"))
        names = [k[4:] for k in soc_cols]
        for k, n in zip(soc_cols, names):
            ax1.plot(hours, [v / 1e3 for v in trace[k]], color=colour_for(n, names), label=n, lw=1)
        ax1.set_ylabel("state of charge (MWh)")
        if soc_cols:
            ax1.legend(fontsize=7)
        net = [(i - e) / 1e3 for i, e in zip(trace["grid_import"], trace["grid_export"])]
        ax2.plot(hours, net, color="k", lw=0.8, label="import - export")
        ax2.plot(hours, [c / 1e3 for c in trace["curtailment"]], color=PALETTE[1], lw=0.8, label="curtailment")
        ax2.set_ylabel("MW")
        ax2.set_xlabel("hour")
        ax2.legend(fontsize=7)
        return _save(fig, path)
