"""Tactile exploration of a planar grid maze.

The arm carries the fingertip pointing down into the maze.  It moves along
x or y in 1 mm steps and stops as soon as the estimated lateral tip
deflection reaches a threshold.  A depth-first search over maze cells decides
where to probe next.

Mounting frame: the sensor hangs tip-down, i.e. rotated 180 degrees about
the world y axis, so sensor ``(x, y, z) = (-X, Y, -Z)`` in world
coordinates.  A wall ahead in +X pushes the tip toward -X, which the sensor
reads as +dx; the contact bearing ``arctan2(dx, dy)`` is then pi/2.  The
world bearing of the contact (from +Y toward +X) is ``pi - angle``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, SimulationIntegrityError
from .estimator import ContactArc, contact_arc, estimate_displacement
from .model import synth_tip_pressures

# neighbour visit order: +x, +y, -x, -y
DIRECTIONS = ((1, 0), (0, 1), (-1, 0), (0, -1))
LATTICE_RADIUS = 16.0  # mm, 32 mm outer diameter
N, E, S, W = 1, 2, 4, 8  # wall bits in the maze file format


class Edge(IntEnum):
    UNKNOWN = 0
    WALL = 1
    OPEN = 2


class Cell(IntEnum):
    UNTOUCHED = 0
    TRAVERSED = 1
    CONTACT = 2


@dataclass
class Maze:
    """Ground truth.  ``h_walls[y, x]`` is the edge below row ``y`` (y = 0..H),
    ``v_walls[y, x]`` the edge left of column ``x`` (x = 0..W)."""

    width: int
    height: int
    h_walls: np.ndarray  # (H + 1, W) bool
    v_walls: np.ndarray  # (H, W + 1) bool
    pitch: float = 60.0  # mm

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidInputError("maze must have at least one cell")
        if self.h_walls.shape != (self.height + 1, self.width) or self.v_walls.shape != (
            self.height,
            self.width + 1,
        ):
            raise InvalidInputError("wall arrays do not match maze size")
        if not (self.h_walls[0].all() and self.h_walls[-1].all()
                and self.v_walls[:, 0].all() and self.v_walls[:, -1].all()):
            raise InvalidInputError("boundary edges must be walls")

    def contains(self, cell):
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def is_wall(self, cell, direction):
        return bool(edge_lookup(self.h_walls, self.v_walls, cell, direction))

    def is_connected(self):
        seen = {(0, 0)}
        todo = [(0, 0)]
        while todo:
            c = todo.pop()
            for d in DIRECTIONS:
                n = (c[0] + d[0], c[1] + d[1])
                if self.contains(n) and n not in seen and not self.is_wall(c, d):
                    seen.add(n)
                    todo.append(n)
        return len(seen) == self.width * self.height

    @property
    def n_interior_edges(self):
        return (self.height - 1) * self.width + (self.width - 1) * self.height


def edge_index(cell, direction):
    """(array name, row, col) of the edge leaving ``cell`` toward ``direction``."""
    x, y = cell
    dx, dy = direction
    if dx == 1:
        return "v", y, x + 1
    if dx == -1:
        return "v", y, x
    if dy == 1:
        return "h", y + 1, x
    return "h", y, x


def edge_lookup(h, v, cell, direction):
    kind, r, c = edge_index(cell, direction)
    return (h if kind == "h" else v)[r, c]


def generate_maze(width, height, rng, pitch=60.0, extra_openings=0):
    """Recursive-backtracker maze; ``extra_openings`` knocks out interior walls
    afterwards so the maze has loops."""
    h = np.ones((height + 1, width), dtype=bool)
    v = np.ones((height, width + 1), dtype=bool)
    start = (int(rng.integers(width)), int(rng.integers(height)))
    seen = {start}
    stack = [start]
    while stack:
        x, y = stack[-1]
        options = []
        for d in DIRECTIONS:
            n = (x + d[0], y + d[1])
            if 0 <= n[0] < width and 0 <= n[1] < height and n not in seen:
                options.append((n, d))
        if not options:
            stack.pop()
            continue
        n, d = options[int(rng.integers(len(options)))]
        kind, r, c = edge_index((x, y), d)
        (h if kind == "h" else v)[r, c] = False
        seen.add(n)
        stack.append(n)
    interior = [("h", r, c) for r in range(1, height) for c in range(width) if h[r, c]]
    interior += [("v", r, c) for r in range(height) for c in range(1, width) if v[r, c]]
    if extra_openings and interior:
        picks = rng.choice(len(interior), size=min(extra_openings, len(interior)), replace=False)
        for i in picks:
            kind, r, c = interior[i]
            (h if kind == "h" else v)[r, c] = False
    return Maze(width, height, h, v, pitch)


# -- maze text format --------------------------------------------------------
# Lines starting with '#' are comments.  An optional "pitch_mm = <float>" line
# sets the cell pitch.  Then one line per row of cells, top row (highest y)
# first; each cell is one hex digit of wall bits N=1 (+y), E=2 (+x), S=4 (-y),
# W=8 (-x), separated by whitespace.  Shared edges must agree.


def maze_to_text(maze):
    lines = ["# maze: one row per line, top row first; hex wall bits N=1 E=2 S=4 W=8",
             f"pitch_mm = {maze.pitch!r}"]
    for y in range(maze.height - 1, -1, -1):
        row = []
        for x in range(maze.width):
            bits = 0
            for bit, d in ((N, (0, 1)), (E, (1, 0)), (S, (0, -1)), (W, (-1, 0))):
                if maze.is_wall((x, y), d):
                    bits |= bit
            row.append(f"{bits:x}")
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


def maze_from_text(text):
    pitch = 60.0
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("pitch_mm"):
            try:
                pitch = float(line.split("=", 1)[1])
            except (IndexError, ValueError) as exc:
                raise InvalidInputError(f"line {lineno}: bad pitch line") from exc
            continue
        try:
            rows.append([int(tok, 16) for tok in line.split()])
        except ValueError as exc:
            raise InvalidInputError(f"line {lineno}: cells must be hex digits") from exc
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise InvalidInputError("maze rows must be non-empty and equally long")
    height, width = len(rows), len(rows[0])
    h = np.zeros((height + 1, width), dtype=bool)
    v = np.zeros((height, width + 1), dtype=bool)
    assigned = set()
    for i, row in enumerate(rows):
        y = height - 1 - i
        for x, bits in enumerate(row):
            if bits > 15:
                raise InvalidInputError(f"cell ({x}, {y}): wall bits out of range")
            for bit, d in ((N, (0, 1)), (E, (1, 0)), (S, (0, -1)), (W, (-1, 0))):
                kind, r, c = edge_index((x, y), d)
                arr = h if kind == "h" else v
                wall = bool(bits & bit)
                if (kind, r, c) in assigned and arr[r, c] != wall:
                    n = (x + d[0], y + d[1])
                    raise InvalidInputError(f"cells ({x}, {y}) and {n} disagree on their shared edge")
                assigned.add((kind, r, c))
                arr[r, c] = wall
    return Maze(width, height, h, v, pitch)


def load_maze(path):
    return maze_from_text(Path(path).read_text(encoding="utf-8"))


def save_maze(maze, path):
    Path(path).write_text(maze_to_text(maze), encoding="utf-8")


# -- exploration -------------------------------------------------------------


@dataclass
class ContactEvent:
    cell: tuple
    direction: tuple
    position: tuple  # arm position (mm) when the threshold tripped
    arc: ContactArc
    world_point: tuple  # mm, contact point on the lattice surface


@dataclass
class MazeMap:
    width: int
    height: int
    pitch: float
    h_state: np.ndarray
    v_state: np.ndarray
    grid: np.ndarray  # (height * pitch, width * pitch) Cell states, index [y_mm, x_mm]
    stack: list = field(default_factory=list)
    contacts: list = field(default_factory=list)
    trace: list = field(default_factory=list)  # arm positions, integer mm
    guarded_moves: int = 0
    travel_moves: int = 0

    @classmethod
    def empty(cls, maze):
        size = (int(round(maze.height * maze.pitch)), int(round(maze.width * maze.pitch)))
        return cls(
            maze.width,
            maze.height,
            maze.pitch,
            np.zeros((maze.height + 1, maze.width), dtype=np.int8),
            np.zeros((maze.height, maze.width + 1), dtype=np.int8),
            np.zeros(size, dtype=np.int8),
        )

    def edge(self, cell, direction):
        return Edge(edge_lookup(self.h_state, self.v_state, cell, direction))

    def set_edge(self, cell, direction, state):
        kind, r, c = edge_index(cell, direction)
        arr = self.h_state if kind == "h" else self.v_state
        if arr[r, c] != Edge.UNKNOWN and arr[r, c] != state:
            raise SimulationIntegrityError(f"edge {kind}{r},{c} already classified as {Edge(arr[r, c]).name}")
        arr[r, c] = state

    def mark(self, pos, state):
        x, y = int(round(pos[0])), int(round(pos[1]))
        gy, gx = self.grid.shape
        x = min(max(x, 0), gx - 1)
        y = min(max(y, 0), gy - 1)
        if state == Cell.CONTACT or self.grid[y, x] != Cell.CONTACT:
            self.grid[y, x] = state

    def counts(self):
        states = np.concatenate([self.h_state.ravel(), self.v_state.ravel()])
        return {e.name.lower(): int(np.sum(states == e)) for e in Edge}

    def snapshot(self):
        return MazeMap(
            self.width, self.height, self.pitch, self.h_state.copy(), self.v_state.copy(),
            self.grid.copy(), list(self.stack), list(self.contacts), list(self.trace),
            self.guarded_moves, self.travel_moves,
        )


@dataclass
class ExploreConfig:
    threshold: float = 2.0  # mm of estimated lateral deflection
    thickness: float = 1.0  # mm, contact surface offset
    arc_span_deg: float = 60.0
    noisy: bool = True
    max_steps: int | None = None  # stop early (partial map) after this many guarded moves


def cell_center(maze, cell):
    return ((cell[0] + 0.5) * maze.pitch, (cell[1] + 0.5) * maze.pitch)


def world_to_sensor(delta_world):
    return np.array([-delta_world[0], delta_world[1], -delta_world[2]])


def _tip_deflection(maze, cell, direction, travelled):
    """World-frame lateral deflection from the wall ahead (unilateral spring)."""
    if not maze.is_wall(cell, direction):
        return np.zeros(3)
    gap = maze.pitch / 2.0 - travelled
    penetration = LATTICE_RADIUS - gap
    if penetration <= 0:
        return np.zeros(3)
    return -penetration * np.array([direction[0], direction[1], 0.0])


class Explorer:
    """Owns the simulated arm, the sensor pipeline and the evolving map."""

    def __init__(self, maze, params, cal, config=None, rng=None):
        self.maze = maze
        self.params = params
        self.cal = cal
        self.config = config or ExploreConfig()
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.map = MazeMap.empty(maze)
        self.pos = None
        self.log = []  # (world force N, pressures, estimate, arm position) per sensed step

    def _goto(self, pos):
        if self.pos is not None:
            step = max(abs(pos[0] - self.pos[0]), abs(pos[1] - self.pos[1]))
            if step > 1.0 + 1e-9:
                raise SimulationIntegrityError(f"teleport from {self.pos} to {pos}")
        self.pos = pos
        self.map.trace.append(pos)
        self.map.mark(pos, Cell.TRAVERSED)

    def _sense(self, cell, direction, travelled):
        world = _tip_deflection(self.maze, cell, direction, travelled)
        p = synth_tip_pressures(self.params, world_to_sensor(world), noisy=self.config.noisy, rng=self.rng)
        est = estimate_displacement(p, self.cal)
        force = world * np.array([self.params.lattice_stiffness_xy, self.params.lattice_stiffness_xy, 0.0])
        self.log.append((force, p, est.as_array(), np.array([self.pos[0], self.pos[1], 0.0])))
        return est

    def _straight(self, start, direction, distance):
        """Yield 1 mm waypoints from ``start`` along ``direction``."""
        for s in range(1, int(round(distance)) + 1):
            yield s, (start[0] + direction[0] * s, start[1] + direction[1] * s)

    def guarded_move(self, cell, direction):
        """Probe the edge from ``cell`` toward ``direction``.

        Returns ``("reached", None)`` with the arm at the neighbour's centre,
        or ``("blocked", event)`` with the arm back at ``cell``'s centre.
        """
        if direction not in DIRECTIONS:
            raise InvalidInputError(f"direction must be axis-aligned, got {direction}")
        self.map.guarded_moves += 1
        start = cell_center(self.maze, cell)
        if self.pos is None:
            self._goto(start)
        path = []
        for s, pos in self._straight(start, direction, self.maze.pitch):
            self._goto(pos)
            path.append(pos)
            est = self._sense(cell, direction, s)
            arc = contact_arc(est, LATTICE_RADIUS, self.config.thickness,
                              self.config.threshold, self.config.arc_span_deg)
            if arc is not None:
                bearing = math.pi - arc.center_angle
                point = (pos[0] + arc.radius * math.sin(bearing), pos[1] + arc.radius * math.cos(bearing))
                self.map.mark(point, Cell.CONTACT)
                event = ContactEvent(cell, direction, pos, arc, point)
                self.map.contacts.append(event)
                self.map.set_edge(cell, direction, Edge.WALL)
                for back in reversed(path[:-1]):
                    self._goto(back)
                self._goto(start)
                return "blocked", event
        target = (cell[0] + direction[0], cell[1] + direction[1])
        if not self.maze.contains(target):
            raise SimulationIntegrityError(f"left the maze at {target} without detecting the boundary")
        self.map.set_edge(cell, direction, Edge.OPEN)
        return "reached", None

    def travel(self, cell, direction):
        """Move along an edge already known to be open (backtracking)."""
        self.map.travel_moves += 1
        start = cell_center(self.maze, cell)
        for _, pos in self._straight(start, direction, self.maze.pitch):
            self._goto(pos)

    def explore(self, start=(0, 0)):
        maze, m = self.maze, self.map
        if not maze.contains(start):
            raise InvalidInputError(f"start cell {start} outside maze")
        for x in range(maze.width):
            m.set_edge((x, 0), (0, -1), Edge.WALL)
            m.set_edge((x, maze.height - 1), (0, 1), Edge.WALL)
        for y in range(maze.height):
            m.set_edge((0, y), (-1, 0), Edge.WALL)
            m.set_edge((maze.width - 1, y), (1, 0), Edge.WALL)
        self._goto(cell_center(maze, start))
        m.stack.append(start)
        budget = self.config.max_steps
        while m.stack:
            if budget is not None and m.guarded_moves >= budget:
                break
            current = m.stack[-1]
            for d in DIRECTIONS:
                n = (current[0] + d[0], current[1] + d[1])
                if maze.contains(n) and n not in m.stack and m.edge(current, d) == Edge.UNKNOWN:
                    outcome, _ = self.guarded_move(current, d)
                    if outcome == "reached":
                        m.stack.append(n)
                    break
            else:
                m.stack.pop()
                if m.stack:
                    prev = m.stack[-1]
                    self.travel(current, (prev[0] - current[0], prev[1] - current[1]))
        return m


def dfs_explore(maze, params, cal, start=(0, 0), config=None, rng=None):
    return Explorer(maze, params, cal, config, rng).explore(start)


def agreement(maze, m):
    """Fraction of edges whose classification matches ground truth (unknown counts as wrong)."""
    truth = np.concatenate([maze.h_walls.ravel(), maze.v_walls.ravel()])
    state = np.concatenate([m.h_state.ravel(), m.v_state.ravel()])
    expected = np.where(truth, Edge.WALL, Edge.OPEN)
    return float(np.mean(state == expected))


def classified_fraction(m):
    state = np.concatenate([m.h_state.ravel(), m.v_state.ravel()])
    return float(np.mean(state != Edge.UNKNOWN))
