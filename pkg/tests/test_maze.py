import math
import re

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latticetact import maze as mz
from latticetact.errors import InvalidInputError, SimulationIntegrityError
from latticetact.render import render_ascii, render_svg


def explorer(maze, params, cal, seed=0, **kw):
    return mz.Explorer(maze, params, cal, mz.ExploreConfig(**kw), rng=np.random.default_rng(seed))


def open_box(w, h):
    """Maze with only the boundary walls."""
    hw = np.zeros((h + 1, w), dtype=bool)
    vw = np.zeros((h, w + 1), dtype=bool)
    hw[0] = hw[-1] = True
    vw[:, 0] = vw[:, -1] = True
    return mz.Maze(w, h, hw, vw)


@pytest.mark.parametrize("seed", range(5))
def test_generator_makes_perfect_maze(seed):
    m = mz.generate_maze(6, 4, np.random.default_rng(seed))
    assert m.is_connected()
    open_edges = (~m.h_walls).sum() + (~m.v_walls).sum()
    assert open_edges == 6 * 4 - 1  # spanning tree


def test_generator_extra_openings():
    m = mz.generate_maze(5, 5, np.random.default_rng(1), extra_openings=3)
    assert (~m.h_walls).sum() + (~m.v_walls).sum() == 24 + 3


def test_maze_validation():
    with pytest.raises(InvalidInputError):
        mz.Maze(0, 1, np.ones((2, 0), bool), np.ones((1, 1), bool))
    box = open_box(2, 2)
    box.v_walls[0, 0] = False
    with pytest.raises(InvalidInputError):
        mz.Maze(2, 2, box.h_walls, box.v_walls)


def test_edge_index_shared():
    for cell, d in (((1, 1), (1, 0)), ((1, 1), (0, 1))):
        n = (cell[0] + d[0], cell[1] + d[1])
        assert mz.edge_index(cell, d) == mz.edge_index(n, (-d[0], -d[1]))


def test_text_roundtrip(tmp_path):
    m = mz.generate_maze(5, 3, np.random.default_rng(4), pitch=55.0)
    path = tmp_path / "m.txt"
    mz.save_maze(m, path)
    back = mz.load_maze(path)
    assert back.pitch == 55.0
    assert np.array_equal(back.h_walls, m.h_walls) and np.array_equal(back.v_walls, m.v_walls)


@pytest.mark.parametrize("text", ["", "f f\nf\n", "g\n", "# only comment\n", "b 9\nf f\n", "1f\n"])
def test_text_errors(text):
    with pytest.raises(InvalidInputError):
        mz.maze_from_text(text)


def test_text_vertical_disagreement():
    # top cell says no south wall, bottom cell says north wall
    with pytest.raises(InvalidInputError, match="disagree"):
        mz.maze_from_text("b\nf\n")


def test_text_example():
    m = mz.maze_from_text("# 2x1 corridor\nd 7\n")
    assert m.width == 2 and m.height == 1
    assert not m.is_wall((0, 0), (1, 0))


def test_tip_deflection_geometry(params, cal):
    m = open_box(1, 1)
    # no contact until the lattice surface reaches the wall
    assert np.all(mz._tip_deflection(m, (0, 0), (1, 0), 14) == 0)
    d = mz._tip_deflection(m, (0, 0), (1, 0), 16)
    assert d[0] == pytest.approx(-2.0) and d[1] == 0


def test_head_on_contact_bearing(params, cal):
    m = open_box(2, 1)
    m.v_walls[0, 1] = True
    ex = explorer(m, params, cal, noisy=False)
    outcome, ev = ex.guarded_move((0, 0), (1, 0))
    assert outcome == "blocked"
    assert ev.arc.center_angle == pytest.approx(math.pi / 2, abs=1e-9)
    assert ex.map.edge((0, 0), (1, 0)) == mz.Edge.WALL
    # back at the start cell centre
    assert ex.pos == mz.cell_center(m, (0, 0))
    # contact point lies on the wall plane, ahead of the arm
    assert ev.world_point[0] == pytest.approx(ev.position[0] + 17.0)
    assert ev.world_point[1] == pytest.approx(ev.position[1])


@pytest.mark.parametrize("direction, bearing", [((0, 1), 0.0), ((-1, 0), -math.pi / 2), ((0, -1), math.pi)])
def test_contact_bearing_all_directions(params, cal, direction, bearing):
    m = open_box(1, 1)
    ex = explorer(m, params, cal, noisy=False)
    _, ev = ex.guarded_move((0, 0), direction)
    world = math.pi - ev.arc.center_angle
    assert math.cos(world) == pytest.approx(math.cos(bearing), abs=1e-9)
    assert math.sin(world) == pytest.approx(math.sin(bearing), abs=1e-9)


def test_move_through_opening(params, cal):
    m = open_box(2, 1)
    ex = explorer(m, params, cal)
    outcome, ev = ex.guarded_move((0, 0), (1, 0))
    assert outcome == "reached" and ev is None
    assert ex.map.edge((1, 0), (-1, 0)) == mz.Edge.OPEN
    assert ex.pos == mz.cell_center(m, (1, 0))


def test_non_axis_direction_rejected(params, cal):
    ex = explorer(open_box(2, 2), params, cal)
    with pytest.raises(InvalidInputError):
        ex.guarded_move((0, 0), (1, 1))


def test_one_by_one(params, cal):
    m = mz.dfs_explore(open_box(1, 1), params, cal)
    assert m.counts() == {"unknown": 0, "wall": 4, "open": 0}
    assert m.guarded_moves == 0 and m.travel_moves == 0


@pytest.mark.parametrize("seed", range(8))
def test_random_maze_complete_and_correct(params, cal, seed):
    maze = mz.generate_maze(5, 5, np.random.default_rng(100 + seed), extra_openings=seed % 3)
    ex = explorer(maze, params, cal, seed=seed)
    m = ex.explore()
    assert mz.classified_fraction(m) == 1.0
    assert mz.agreement(maze, m) == 1.0
    walls_touched = len(m.contacts)
    assert m.guarded_moves <= 2 * maze.n_interior_edges + walls_touched
    # soundness: interior walls only via a blocked event, openings only via a traversal
    blocked = {mz.edge_index(e.cell, e.direction) for e in m.contacts}
    for kind, arr in (("h", m.h_state), ("v", m.v_state)):
        for (r, c), state in np.ndenumerate(arr):
            interior = (0 < r < arr.shape[0] - 1) if kind == "h" else (0 < c < arr.shape[1] - 1)
            if interior and state == mz.Edge.WALL:
                assert (kind, r, c) in blocked
    visited = {(int(x // maze.pitch), int(y // maze.pitch)) for x, y in m.trace}
    assert len(visited) == 25


def test_no_teleport_and_determinism(params, cal):
    maze = mz.generate_maze(4, 4, np.random.default_rng(9))
    a = explorer(maze, params, cal, seed=3).explore()
    b = explorer(maze, params, cal, seed=3).explore()
    assert a.trace == b.trace
    steps = np.abs(np.diff(np.array(a.trace), axis=0)).max(axis=1)
    assert steps.max() <= 1.0


@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**31), st.integers(0, 3))
@settings(max_examples=25, deadline=None)
def test_property_any_maze(params, cal, w, h, seed, extra):
    maze = mz.generate_maze(w, h, np.random.default_rng(seed), extra_openings=extra)
    start = (seed % w, (seed // 7) % h)
    m = mz.Explorer(maze, params, cal, rng=np.random.default_rng(seed)).explore(start)
    assert mz.agreement(maze, m) == 1.0


def test_threshold_affects_contact_depth(params, cal):
    m = open_box(1, 1)
    shallow = explorer(m, params, cal, noisy=False, threshold=1.0)
    deep = explorer(m, params, cal, noisy=False, threshold=4.0)
    _, e1 = shallow.guarded_move((0, 0), (1, 0))
    _, e2 = deep.guarded_move((0, 0), (1, 0))
    assert e2.position[0] - e1.position[0] == pytest.approx(3.0)


def test_partial_run_and_renders(params, cal):
    maze = mz.generate_maze(5, 5, np.random.default_rng(2))
    ex = explorer(maze, params, cal, max_steps=6)
    m = ex.explore()
    assert m.guarded_moves == 6
    assert 0 < mz.classified_fraction(m) < 1
    svg = render_svg(m)
    assert svg.startswith("<svg") and 'class="unknown"' in svg
    assert "?" in render_ascii(m)


def test_empty_map_all_unknown(params, cal):
    maze = mz.generate_maze(3, 3, np.random.default_rng(0))
    m = mz.MazeMap.empty(maze)
    svg = render_svg(m)
    assert 'class="wall"' not in svg and 'class="open"' not in svg
    assert svg.count('class="unknown"') == 4 * 3 + 3 * 4
    text = render_ascii(m)
    assert "---" not in text and "|" not in text


def test_render_wall_count_matches_map(params, cal):
    maze = mz.generate_maze(5, 5, np.random.default_rng(5))
    m = mz.dfs_explore(maze, params, cal, rng=np.random.default_rng(0))
    svg = render_svg(m)
    assert svg.count('class="wall"') == m.counts()["wall"]
    assert svg.count('class="open"') == m.counts()["open"]
    text = render_ascii(m)
    assert text.count("---") + len(re.findall(r"\|", text)) == m.counts()["wall"]
    assert svg.count('class="arc"') == len(m.contacts)


def test_set_edge_refuses_reclassification(params, cal):
    m = mz.MazeMap.empty(open_box(2, 2))
    m.set_edge((0, 0), (1, 0), mz.Edge.OPEN)
    with pytest.raises(SimulationIntegrityError):
        m.set_edge((1, 0), (-1, 0), mz.Edge.WALL)


def test_start_outside_rejected(params, cal):
    with pytest.raises(InvalidInputError):
        explorer(open_box(2, 2), params, cal).explore((5, 5))
