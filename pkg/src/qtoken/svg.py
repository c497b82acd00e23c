"""Minimal self-contained SVG line plots."""

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=80, right=20, top=30, bottom=55)


def _ticks(lo, hi, count=5):
    if not math.isfinite(lo) or not math.isfinite(hi):
        return []
    if hi == lo:
        return [lo]
    raw = (hi - lo) / count
    step = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 5, 10):
        if m * step >= raw:
            step *= m
            break
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def _fmt(v):
    return f"{v:.4g}"


def line_plot(x, y, xlabel="", ylabel="", title="", markers=None):
    """Return an SVG document plotting y against x.

    Non-finite y values break the line. ``markers`` maps a label to an x
    position drawn as a dashed vertical line.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(x) & np.isfinite(y)
    x0, x1 = (x[ok].min(), x[ok].max()) if ok.any() else (0.0, 1.0)
    y0, y1 = (min(0.0, y[ok].min()), y[ok].max()) if ok.any() else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y1 = y0 + 1.0
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(v):
        return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def py(v):
        return MARGIN["top"] + (1 - (v - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
           'fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{px(t):.2f}" y1="{MARGIN["top"] + ph}" x2="{px(t):.2f}" '
                   f'y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px(t):.2f}" y="{MARGIN["top"] + ph + 18}" '
                   f'text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{py(t):.2f}" x2="{MARGIN["left"]}" '
                   f'y2="{py(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{py(t) + 4:.2f}" '
                   f'text-anchor="end">{_fmt(t)}</text>')

    segments, cur = [], []
    for xi, yi, good in zip(x, y, ok):
        if good:
            cur.append(f"{px(xi):.2f},{py(yi):.2f}")
        elif cur:
            segments.append(cur)
            cur = []
    if cur:
        segments.append(cur)
    for seg in segments:
        out.append(f'<polyline fill="none" stroke="#1f5fa8" stroke-width="1.8" '
                   f'points="{" ".join(seg)}"/>')

    for label, xm in (markers or {}).items():
        if xm is None or not (x0 <= xm <= x1):
            continue
        out.append(f'<line x1="{px(xm):.2f}" y1="{MARGIN["top"]}" x2="{px(xm):.2f}" '
                   f'y2="{MARGIN["top"] + ph}" stroke="#b03030" stroke-dasharray="6,4"/>')
        out.append(f'<text x="{px(xm) + 4:.2f}" y="{MARGIN["top"] + 14}" fill="#b03030">'
                   f'{escape(str(label))}</text>')

    out.append(f'<text x="{MARGIN["left"] + pw / 2}" y="{HEIGHT - 15}" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{MARGIN["top"] + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 18 {MARGIN["top"] + ph / 2})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="18" text-anchor="middle">{escape(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
