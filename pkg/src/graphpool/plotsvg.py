"""Minimal hand-written SVG plots (no plotting dependency).

The CSV reports are the source of truth; these figures are advisory
overlays: spectra scatter plots, loss curves, and storage scaling.
"""

from __future__ import annotations

import numpy as np

_W, _H = 720, 440
_ML, _MR, _MT, _MB = 70, 20, 40, 50


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _ticks(lo: float, hi: float, count: int = 5) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, count)


def plot_series(path, series, title: str = "", xlabel: str = "", ylabel: str = "") -> None:
    """Write an SVG with the given series.

    ``series`` is a list of dicts with keys x, y (arrays), label, color,
    and optional ``markers=True`` to draw points instead of a line.
    """
    xs = np.concatenate([np.asarray(s["x"], dtype=float) for s in series if len(s["x"])])
    ys = np.concatenate([np.asarray(s["y"], dtype=float) for s in series if len(s["y"])])
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(v):
        return _ML + (v - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def sy(v):
        return _H - _MB - (v - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="22" text-anchor="middle" font-size="14">{_esc(title)}</text>',
    ]
    axis = f'stroke="#333" stroke-width="1"'
    parts.append(f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" {axis}/>')
    parts.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" {axis}/>')
    for tx in _ticks(x_lo, x_hi):
        parts.append(f'<line x1="{sx(tx)}" y1="{_H - _MB}" x2="{sx(tx)}" y2="{_H - _MB + 5}" {axis}/>')
        parts.append(
            f'<text x="{sx(tx)}" y="{_H - _MB + 18}" text-anchor="middle">{tx:.3g}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        parts.append(f'<line x1="{_ML - 5}" y1="{sy(ty)}" x2="{_ML}" y2="{sy(ty)}" {axis}/>')
        parts.append(
            f'<text x="{_ML - 8}" y="{sy(ty) + 4}" text-anchor="end">{ty:.3g}</text>'
        )
    parts.append(
        f'<text x="{(_ML + _W - _MR) / 2}" y="{_H - 10}" text-anchor="middle">{_esc(xlabel)}</text>'
    )
    parts.append(
        f'<text x="16" y="{(_MT + _H - _MB) / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(_MT + _H - _MB) / 2})">{_esc(ylabel)}</text>'
    )
    legend_y = _MT + 4
    for s in series:
        x = np.asarray(s["x"], dtype=float)
        y = np.asarray(s["y"], dtype=float)
        color = s.get("color", "#1f77b4")
        if s.get("markers"):
            for xv, yv in zip(x, y):
                parts.append(f'<circle cx="{sx(xv):.2f}" cy="{sy(yv):.2f}" r="2.5" fill="{color}"/>')
        else:
            pts = " ".join(f"{sx(xv):.2f},{sy(yv):.2f}" for xv, yv in zip(x, y))
            parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if s.get("label"):
            parts.append(f'<rect x="{_W - _MR - 130}" y="{legend_y - 9}" width="10" height="10" fill="{color}"/>')
            parts.append(f'<text x="{_W - _MR - 115}" y="{legend_y}">{_esc(s["label"])}</text>')
            legend_y += 16
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def plot_spectra(path, alignment, title: str) -> None:
    plot_series(
        path,
        [
            {"x": alignment.positions_before, "y": alignment.values_before,
             "label": "before", "color": "#222222", "markers": True},
            {"x": alignment.positions_after, "y": alignment.values_after,
             "label": "after", "color": "#1f77b4", "markers": True},
        ],
        title=title, xlabel="rescaled eigenvalue index", ylabel="normalized Laplacian eigenvalue",
    )


def plot_loss_curve(path, curve, title: str) -> None:
    plot_series(
        path,
        [{"x": np.arange(len(curve)), "y": np.asarray(curve), "label": "training loss"}],
        title=title, xlabel="epoch", ylabel="loss",
    )
