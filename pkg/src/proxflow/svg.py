"""Minimal hand-written SVG line charts."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN = 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _num(v):
    return f"{v:.3f}"


def line_chart(series, title="", xlabel="t", ylabel="", logy=False, comment=None):
    """
    Render ``series`` (a list of ``(label, x, y)``) as an SVG document string.

    With ``logy`` the y axis is log10 and nonpositive or non-finite points are
    dropped. Output depends only on the inputs, so identical data gives
    identical bytes.
    """
    prepared = []
    for label, x, y in series:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        if logy:
            keep &= y > 0
        x, y = x[keep], y[keep]
        if logy:
            y = np.log10(y)
        prepared.append((label, x, y))
    xs = np.concatenate([p[1] for p in prepared]) if prepared else np.zeros(0)
    ys = np.concatenate([p[2] for p in prepared]) if prepared else np.zeros(0)
    x0, x1 = (float(xs.min()), float(xs.max())) if xs.size else (0.0, 1.0)
    y0, y1 = (float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def px(v):
        return MARGIN + (v - x0) / (x1 - x0) * pw

    def py(v):
        return HEIGHT - MARGIN - (v - y0) / (y1 - y0) * ph

    out = ['<?xml version="1.0" encoding="UTF-8"?>']
    if comment:
        out.append(f"<!-- {escape(comment)} -->")
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
               f'viewBox="0 0 {WIDTH} {HEIGHT}">')
    out.append(f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    out.append(f'<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" '
               'stroke="black"/>')
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="{MARGIN / 2}" text-anchor="middle" '
                   f'font-size="14">{escape(title)}</text>')
    for i in range(5):
        fx = x0 + (x1 - x0) * i / 4
        fy = y0 + (y1 - y0) * i / 4
        out.append(f'<text x="{_num(px(fx))}" y="{HEIGHT - MARGIN + 16}" '
                   f'text-anchor="middle" font-size="10">{fx:.3g}</text>')
        ytxt = f"1e{fy:.1f}" if logy else f"{fy:.3g}"
        out.append(f'<text x="{MARGIN - 6}" y="{_num(py(fy) + 3)}" text-anchor="end" '
                   f'font-size="10">{ytxt}</text>')
    out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 15}" text-anchor="middle" '
               f'font-size="12">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="15" y="{HEIGHT / 2}" text-anchor="middle" font-size="12" '
                   f'transform="rotate(-90 15 {HEIGHT / 2})">'
                   f'{escape(ylabel + (" (log10)" if logy else ""))}</text>')
    for k, (label, x, y) in enumerate(prepared):
        color = COLORS[k % len(COLORS)]
        if x.size:
            pts = " ".join(f"{_num(px(a))},{_num(py(b))}" for a, b in zip(x, y))
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                       f'points="{pts}"/>')
        ly = MARGIN + 14 + 14 * k
        out.append(f'<text x="{WIDTH - MARGIN - 6}" y="{ly}" text-anchor="end" '
                   f'font-size="11" fill="{color}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

