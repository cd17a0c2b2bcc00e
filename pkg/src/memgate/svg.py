"""Minimal static SVG documents: line overlays, heat maps and bar charts.

Coordinates are written with fixed precision so output is byte-stable.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 480, 360
MARGIN = 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _f(x):
    return f"{x:.2f}"


class _Frame:
    def __init__(self, x_range, y_range):
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 == self.y0:
            self.y1 = self.y0 + 1.0

    def px(self, x):
        return MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2 * MARGIN)

    def py(self, y):
        return HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2 * MARGIN)


def _document(body, title, xlabel, ylabel, frame=None):
    head = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="20" text-anchor="middle" font-size="14">'
        f'{escape(title)}</text>',
        f'<text x="{WIDTH / 2:.0f}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">'
        f'{escape(xlabel)}</text>',
        f'<text x="14" y="{HEIGHT / 2:.0f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {HEIGHT / 2:.0f})">{escape(ylabel)}</text>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
        f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="black"/>',
    ]
    if frame is not None:
        for x in (frame.x0, frame.x1):
            head.append(f'<text x="{_f(frame.px(x))}" y="{HEIGHT - MARGIN + 15}" '
                        f'text-anchor="middle" font-size="10">{x:.3g}</text>')
        for y in (frame.y0, frame.y1):
            head.append(f'<text x="{MARGIN - 5}" y="{_f(frame.py(y) + 4)}" '
                        f'text-anchor="end" font-size="10">{y:.3g}</text>')
    return "\n".join(head + body + ["</svg>"]) + "\n"


def line_plot(series, title="", xlabel="", ylabel="", y_range=None):
    """Overlay of ``(label, x, y)`` traces."""
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series])
    frame = _Frame((xs.min(), xs.max()), y_range or (ys.min(), ys.max()))
    body = []
    for k, (label, x, y) in enumerate(series):
        colour = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{_f(frame.px(a))},{_f(frame.py(b))}" for a, b in zip(x, y))
        body.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" '
                    f'points="{pts}"/>')
        body.append(f'<text x="{WIDTH - MARGIN + 4}" y="{MARGIN + 14 * k + 10}" '
                    f'font-size="10" fill="{colour}">{escape(str(label))}</text>')
    return _document(body, title, xlabel, ylabel, frame)


def heat_map(x, y, z, title="", xlabel="", ylabel=""):
    """Grey-scale map of ``z[i, j]`` at ``(x[j], y[i])``; dark is low."""
    x, y, z = np.asarray(x, float), np.asarray(y, float), np.asarray(z, float)
    frame = _Frame((x.min(), x.max()), (y.min(), y.max()))
    lo, hi = float(z.min()), float(z.max())
    span = hi - lo or 1.0
    dx = (WIDTH - 2 * MARGIN) / len(x)
    dy = (HEIGHT - 2 * MARGIN) / len(y)
    body = []
    for i in range(len(y)):
        for j in range(len(x)):
            g = int(round(255 * (z[i, j] - lo) / span))
            body.append(f'<rect x="{_f(MARGIN + j * dx)}" y="{_f(HEIGHT - MARGIN - (i + 1) * dy)}" '
                        f'width="{_f(dx)}" height="{_f(dy)}" fill="rgb({g},{g},{g})"/>')
    return _document(body, title, xlabel, ylabel, frame)


def bar_chart(labels, values, title="", ylabel="", colours=None):
    values = [float(v) for v in values]
    top = max(max(values), 1e-12)
    frame = _Frame((0, len(values)), (0, top))
    bw = (WIDTH - 2 * MARGIN) / len(values)
    body = []
    for k, (label, v) in enumerate(zip(labels, values)):
        colour = (colours or PALETTE)[k % len(colours or PALETTE)]
        y = frame.py(v)
        body.append(f'<rect x="{_f(MARGIN + k * bw + 2)}" y="{_f(y)}" width="{_f(bw - 4)}" '
                    f'height="{_f(HEIGHT - MARGIN - y)}" fill="{colour}"/>')
        body.append(f'<text x="{_f(MARGIN + (k + 0.5) * bw)}" y="{HEIGHT - MARGIN + 15}" '
                    f'text-anchor="middle" font-size="10">{escape(str(label))}</text>')
    return _document(body, title, "", ylabel)
