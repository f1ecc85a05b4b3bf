"""Maze map rendering: an edge abstraction plus the 1 mm heuristic cell map.

Colours: walls white, open edges and traversed cells green, contacts red,
unknown edges grey dashed, on a dark background.
"""

from __future__ import annotations

import math

import numpy as np

from .maze import Cell, Edge
from .svg import Canvas

WALL = "#ffffff"
OPEN = "#2ecc40"
CONTACT = "#ff4136"
UNKNOWN = "#777777"
BACKGROUND = "#111111"


def render_ascii(m):
    """Two text lines per maze row, top row first.

    ``---``/``|`` wall, blank open, ``?`` unknown; ``.`` marks visited cells.
    """
    visited = _visited_cells(m)
    h_tok = {Edge.WALL: "---", Edge.OPEN: "   ", Edge.UNKNOWN: " ? "}
    v_tok = {Edge.WALL: "|", Edge.OPEN: " ", Edge.UNKNOWN: "?"}
    lines = []
    for y in range(m.height, -1, -1):
        lines.append("+" + "+".join(h_tok[Edge(m.h_state[y, x])] for x in range(m.width)) + "+")
        if y == 0:
            break
        row = y - 1
        parts = []
        for x in range(m.width):
            parts.append(v_tok[Edge(m.v_state[row, x])])
            parts.append(" . " if (x, row) in visited else "   ")
        parts.append(v_tok[Edge(m.v_state[row, m.width])])
        lines.append("".join(parts))
    return "\n".join(lines) + "\n"


def render_svg(m, scale=2.0, margin=20):
    """Left panel: maze abstraction.  Right panel: 1 mm cell map with contact arcs."""
    side_w = m.width * m.pitch * scale
    side_h = m.height * m.pitch * scale
    canvas = Canvas(int(2 * side_w + 3 * margin), int(side_h + 2 * margin + 16), BACKGROUND)
    canvas.text(margin + side_w / 2, 14, "maze abstraction", fill="#dddddd")
    canvas.text(2 * margin + 1.5 * side_w, 14, "cell map", fill="#dddddd")
    top = margin + 16

    def to_px(x_mm, y_mm, left):
        return left + x_mm * scale, top + side_h - y_mm * scale

    left = margin
    p = m.pitch
    for x, y in sorted(_visited_cells(m)):
        cx, cy = to_px(x * p, (y + 1) * p, left)
        canvas.rect(cx, cy, p * scale, p * scale, "#1b3d1f", cls="visited")
    for (kind, arr) in (("h", m.h_state), ("v", m.v_state)):
        rows, cols = arr.shape
        for r in range(rows):
            for c in range(cols):
                state = Edge(arr[r, c])
                if kind == "h":
                    a, b = to_px(c * p, r * p, left), to_px((c + 1) * p, r * p, left)
                else:
                    a, b = to_px(c * p, r * p, left), to_px(c * p, (r + 1) * p, left)
                if state == Edge.WALL:
                    canvas.line(*a, *b, stroke=WALL, width=3, cls="wall")
                elif state == Edge.OPEN:
                    canvas.line(*a, *b, stroke=OPEN, width=1.5, cls="open", dash="4 3")
                else:
                    canvas.line(*a, *b, stroke=UNKNOWN, width=1, cls="unknown", dash="2 4")

    left = 2 * margin + side_w
    canvas.rect(left, top, side_w, side_h, "#000000")
    ys, xs = np.nonzero(m.grid == Cell.TRAVERSED)
    for x_mm, y_mm in zip(xs, ys):
        cx, cy = to_px(x_mm, y_mm + 1, left)
        canvas.rect(cx, cy, scale, scale, OPEN, cls="traversed")
    ys, xs = np.nonzero(m.grid == Cell.CONTACT)
    for x_mm, y_mm in zip(xs, ys):
        cx, cy = to_px(x_mm, y_mm + 1, left)
        canvas.rect(cx - scale, cy - scale, 3 * scale, 3 * scale, CONTACT, cls="contact")
    for ev in m.contacts:
        bearing = math.pi - ev.arc.center_angle
        a0, a1 = bearing - ev.arc.span / 2, bearing + ev.arc.span / 2
        r = ev.arc.radius
        x0, y0 = to_px(ev.position[0] + r * math.sin(a0), ev.position[1] + r * math.cos(a0), left)
        x1, y1 = to_px(ev.position[0] + r * math.sin(a1), ev.position[1] + r * math.cos(a1), left)
        rp = r * scale
        large = 1 if ev.arc.span > math.pi else 0
        # bearings increase clockwise on screen (y flipped)
        canvas.path(f"M {x0:.2f} {y0:.2f} A {rp:.2f} {rp:.2f} 0 {large} 1 {x1:.2f} {y1:.2f}",
                    CONTACT, width=1.5, cls="arc")
    return canvas.render()


def _visited_cells(m):
    cells = {(int(a // m.pitch), int(b // m.pitch)) for a, b in m.trace}
    return {(x, y) for x, y in cells if 0 <= x < m.width and 0 <= y < m.height}
