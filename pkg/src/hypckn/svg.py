"""Minimal SVG line plots (no plotting dependency)."""

from xml.sax.saxutils import escape

import numpy as np

from ._io import atomic_write

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
W, H = 640, 420
ML, MR, MT, MB = 70, 20, 40, 50


def _ticks(lo, hi, n=5):
    return np.linspace(lo, hi, n)


def line_plot(series, title="", xlabel="", ylabel="", logy=False):
    """SVG text for ``series = [(x, y, label), ...]``."""
    xs = np.concatenate([np.asarray(s[0], float) for s in series])
    ys = np.concatenate([np.asarray(s[1], float) for s in series])
    if logy:
        ys = np.log10(np.abs(ys[ys != 0])) if np.any(ys != 0) else np.zeros(1)
    fin = np.isfinite(ys)
    x0, x1 = float(np.min(xs)), float(np.max(xs))
    y0, y1 = (float(np.min(ys[fin])), float(np.max(ys[fin]))) if fin.any() else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = W - ML - MR, H - MT - MB

    def X(x):
        return ML + (x - x0) / (x1 - x0) * pw

    def Y(y):
        return MT + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">',
           f'<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
           f'<text x="{W / 2:.1f}" y="24" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<text x="{ML + pw / 2:.1f}" y="{H - 10}" text-anchor="middle">{escape(xlabel)}</text>',
           f'<text x="16" y="{MT + ph / 2:.1f}" text-anchor="middle" transform="rotate(-90 16 {MT + ph / 2:.1f})">'
           f'{escape(ylabel + (" (log10)" if logy else ""))}</text>']
    for tx in _ticks(x0, x1):
        out.append(f'<text x="{X(tx):.1f}" y="{MT + ph + 16}" text-anchor="middle">{tx:.3g}</text>')
    for ty in _ticks(y0, y1):
        out.append(f'<text x="{ML - 6}" y="{Y(ty) + 4:.1f}" text-anchor="end">{ty:.3g}</text>')
    for k, (x, y, label) in enumerate(series):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if logy:
            keep = y != 0
            x, y = x[keep], np.log10(np.abs(y[keep]))
        keep = np.isfinite(y)
        pts = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(x[keep], y[keep]))
        c = _COLORS[k % len(_COLORS)]
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{ML + 10}" y="{MT + 16 + 14 * k}" fill="{c}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_line_plot(path, series, **kw):
    atomic_write(path, line_plot(series, **kw))
