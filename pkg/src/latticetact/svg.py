"""Tiny self-contained SVG writer for data figures."""

from __future__ import annotations

from html import escape

import numpy as np

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
           "#7f7f7f", "#bcbd22", "#17becf")


class Canvas:
    def __init__(self, width, height, background="white"):
        self.width = width
        self.height = height
        self.items = [f'<rect x="0" y="0" width="{width}" height="{height}" fill="{background}"/>']

    def add(self, element):
        self.items.append(element)

    def line(self, x1, y1, x2, y2, stroke="black", width=1.0, cls=None, dash=None):
        extra = f' class="{cls}"' if cls else ""
        if dash:
            extra += f' stroke-dasharray="{dash}"'
        self.add(f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
                 f'stroke="{stroke}" stroke-width="{width}"{extra}/>')

    def rect(self, x, y, w, h, fill, cls=None):
        extra = f' class="{cls}"' if cls else ""
        self.add(f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" fill="{fill}"{extra}/>')

    def polyline(self, xs, ys, stroke, width=1.0, opacity=1.0):
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
        self.add(f'<polyline points="{pts}" fill="none" stroke="{stroke}" '
                 f'stroke-width="{width}" stroke-opacity="{opacity}"/>')

    def polygon(self, xs, ys, fill, opacity=0.25):
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
        self.add(f'<polygon points="{pts}" fill="{fill}" fill-opacity="{opacity}" stroke="none"/>')

    def circle(self, x, y, r, fill, opacity=1.0):
        self.add(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r}" fill="{fill}" fill-opacity="{opacity}"/>')

    def path(self, d, stroke, width=1.0, cls=None):
        extra = f' class="{cls}"' if cls else ""
        self.add(f'<path d="{d}" fill="none" stroke="{stroke}" stroke-width="{width}"{extra}/>')

    def text(self, x, y, s, size=11, anchor="middle", fill="black"):
        self.add(f'<text x="{x:.2f}" y="{y:.2f}" font-size="{size}" font-family="sans-serif" '
                 f'text-anchor="{anchor}" fill="{fill}">{escape(str(s))}</text>')

    def render(self):
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
                f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">')
        return "\n".join([head, *self.items, "</svg>"]) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.render())


class Axes:
    """Linear data-to-pixel mapping inside a rectangle of a canvas."""

    def __init__(self, canvas, x0, y0, w, h, xlim, ylim, title="", xlabel="", ylabel=""):
        self.c = canvas
        self.x0, self.y0, self.w, self.h = x0, y0, w, h
        self.xlim = _pad(xlim)
        self.ylim = _pad(ylim)
        canvas.add(f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#444"/>')
        if title:
            canvas.text(x0 + w / 2, y0 - 6, title)
        if xlabel:
            canvas.text(x0 + w / 2, y0 + h + 28, xlabel, size=10)
        if ylabel:
            canvas.add(f'<text transform="translate({x0 - 34},{y0 + h / 2}) rotate(-90)" font-size="10" '
                       f'font-family="sans-serif" text-anchor="middle">{escape(ylabel)}</text>')
        for v in np.linspace(*self.xlim, 3):
            canvas.text(self.px(v), y0 + h + 13, f"{v:.3g}", size=9)
        for v in np.linspace(*self.ylim, 3):
            canvas.text(x0 - 4, self.py(v) + 3, f"{v:.3g}", size=9, anchor="end")

    def px(self, x):
        return self.x0 + (np.asarray(x) - self.xlim[0]) / (self.xlim[1] - self.xlim[0]) * self.w

    def py(self, y):
        return self.y0 + self.h - (np.asarray(y) - self.ylim[0]) / (self.ylim[1] - self.ylim[0]) * self.h

    def plot(self, x, y, color, width=1.2, opacity=1.0):
        self.c.polyline(self.px(x), self.py(y), color, width, opacity)

    def band(self, x, lo, hi, color):
        xs = np.concatenate([self.px(x), self.px(x)[::-1]])
        ys = np.concatenate([self.py(hi), self.py(lo)[::-1]])
        self.c.polygon(xs, ys, color)

    def scatter(self, x, y, color, r=1.5, opacity=0.6):
        for a, b in zip(self.px(x), self.py(y)):
            self.c.circle(a, b, r, color, opacity)


def _pad(lim):
    lo, hi = float(lim[0]), float(lim[1])
    if not np.isfinite(lo) or not np.isfinite(hi):
        return (0.0, 1.0)
    if hi <= lo:
        return (lo - 1.0, hi + 1.0)
    return (lo, hi)


def limits(*arrays):
    vals = np.concatenate([np.ravel(np.asarray(a, dtype=float)) for a in arrays])
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        return (0.0, 1.0)
    return (float(vals.min()), float(vals.max()))
