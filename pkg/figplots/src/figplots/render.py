"""Renderers, one per figure family. Pixel content is a pure function of
the CSV rows and the recipe: fixed size, fixed color cycle, fixed colormap,
peak markers located by argmax over the loaded data."""

import os

import numpy as np
import pandas as pd
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .loader import beta_label, load_csv, require

FIGSIZE = (7.2, 4.8)
PANEL_HEIGHT = 2.6
DPI = 120
COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")
CMAP = "viridis"


def _fmt_field(column, value):
    if pd.isna(value):
        return None
    if isinstance(value, str):
        return f"{column}={value}"
    value = float(value)
    return f"{column}={int(value)}" if value.is_integer() else f"{column}={value:g}"


def _series_label(series_cols, key):
    key = key if isinstance(key, tuple) else (key,)
    named = dict(zip(series_cols, key))
    parts = []
    if "beta_re" in named and "beta_im" in named:
        parts.append(beta_label(named.pop("beta_re"), named.pop("beta_im")))
    parts += [_fmt_field(c, v) for c, v in named.items()]
    return ", ".join(p for p in parts if p)


def _grouped(frame, recipe):
    for i, (key, group) in enumerate(
        frame.groupby(list(recipe.series), dropna=False, sort=True)
    ):
        rows = group.dropna(subset=[recipe.y]).sort_values(recipe.x)
        if not rows.empty:
            yield i, _series_label(recipe.series, key), rows


def series_maxima(frame, recipe):
    """Per-series (x, y) of the maximum y value — the marker the curve
    renderer draws. Exposed so tests can check marker placement."""
    out = {}
    for _, label, rows in _grouped(frame, recipe):
        best = rows.loc[rows[recipe.y].idxmax()]
        out[label] = (float(best[recipe.x]), float(best[recipe.y]))
    return out


def overlay_zero_crossings(panel):
    """Fock levels where the overlay changes sign (linear midpoint)."""
    rows = panel.sort_values("n")
    n = rows["n"].to_numpy(dtype=float)
    s = rows["overlay_cos"].to_numpy(dtype=float)
    flips = np.nonzero(np.sign(s[:-1]) * np.sign(s[1:]) < 0)[0]
    return (n[flips] + n[flips + 1]) / 2.0


def histogram_body_peak(panel, skip=2):
    """Fock level of the tallest bar at n >= skip (past the vacuum spike)."""
    rows = panel[panel["n"] >= skip]
    return int(rows.loc[rows["p_n"].idxmax(), "n"])


def _new_axes(figsize=FIGSIZE):
    fig = Figure(figsize=figsize)
    FigureCanvasAgg(fig)
    return fig


def _render_map(frame, recipe):
    fig = _new_axes()
    ax = fig.add_subplot()
    table = frame.pivot_table(
        index=recipe.y, columns=recipe.x, values=recipe.value
    )
    mesh = ax.pcolormesh(
        table.columns.to_numpy(dtype=float),
        table.index.to_numpy(dtype=float),
        table.to_numpy(dtype=float),
        shading="nearest", cmap=CMAP,
    )
    fig.colorbar(mesh, ax=ax, label=recipe.value)
    return fig, ax


def _render_curve(frame, recipe):
    fig = _new_axes()
    ax = fig.add_subplot()
    for i, label, rows in _grouped(frame, recipe):
        ax.plot(
            rows[recipe.x], rows[recipe.y], marker="o", markersize=3,
            color=COLORS[i % len(COLORS)], label=label,
        )
        best = rows.loc[rows[recipe.y].idxmax()]
        ax.plot(
            [best[recipe.x]], [best[recipe.y]], marker="*", markersize=13,
            color="black", linestyle="none", zorder=5,
        )
    ax.set_xscale(recipe.xscale)
    ax.grid(alpha=0.3)
    ax.legend(loc="lower right", fontsize=8)
    return fig, ax


def _render_dist(frame, recipe):
    panels = list(_grouped(frame, recipe))
    fig = _new_axes((FIGSIZE[0], PANEL_HEIGHT * max(len(panels), 1)))
    axes = fig.subplots(len(panels), 1, squeeze=False)[:, 0]
    for ax, (_, label, rows) in zip(axes, panels):
        ax.bar(rows["n"], rows[recipe.y], width=1.0, color=COLORS[0])
        if recipe.overlay:
            twin = ax.twinx()
            twin.plot(
                rows["n"], rows[recipe.overlay],
                color=COLORS[3], linewidth=0.9, linestyle="--",
            )
            twin.set_ylim(-1.05, 1.05)
            twin.set_yticks(())
        ax.set_title(label, fontsize=9)
        ax.set_ylabel(recipe.ylabel)
    axes[-1].set_xlabel(recipe.xlabel)
    return fig, axes[0]


_FAMILIES = {"map": _render_map, "curve": _render_curve, "dist": _render_dist}


def render(recipe, out_dir="."):
    """Load the recipe's CSV and write <figure>.png into out_dir."""
    frame = load_csv(recipe.csv_path)
    referenced = [
        c for c in (recipe.x, recipe.y, recipe.value, recipe.overlay,
                    *recipe.series) if c
    ]
    require(frame, referenced, context=f"figure {recipe.figure}")
    fig, ax = _FAMILIES[recipe.kind](frame, recipe)
    if recipe.kind == "dist":
        fig.suptitle(f"figure {recipe.figure}", fontsize=10)
    else:
        ax.set_xlabel(recipe.xlabel)
        ax.set_ylabel(recipe.ylabel)
        if recipe.xlim:
            ax.set_xlim(*recipe.xlim)
        if recipe.ylim:
            ax.set_ylim(*recipe.ylim)
        ax.set_title(f"figure {recipe.figure}", fontsize=10)
    fig.set_layout_engine("tight")
    out = os.path.join(out_dir, f"{recipe.figure}.png")
    fig.savefig(out, dpi=DPI)
    return out
