"""Cyclic-loading log analysis: per-cycle hysteresis and drift."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

DISCARD_FIRST = 5  # stress-softening cycles
FORCE_BOUNDS = (0.05, 5.05)  # N
HIGHLIGHT = (1, 50, 100, 500, 1000, 5000)  # retained-cycle ordinals; the last one is added


@dataclass
class FatigueCycle:
    index: int
    force: np.ndarray  # N
    disp: np.ndarray  # mm
    hysteresis_area: float  # N*mm
    peak_disp: float  # mm


@dataclass
class FatigueReport:
    total_cycles: int
    discarded: int
    nan_dropped: int
    cycles: list = field(default_factory=list)
    drift: np.ndarray = field(default_factory=lambda: np.empty(0))
    force_in_bounds: bool = True

    @property
    def retained(self):
        return len(self.cycles)

    def highlighted(self):
        n = self.retained
        picks = [k for k in HIGHLIGHT if k <= n]
        if n and (not picks or picks[-1] != n):
            picks.append(n)
        return picks


def loop_area(disp, force):
    """Enclosed area of the closed (disp, force) polygon (shoelace)."""
    x = np.asarray(disp, dtype=float)
    y = np.asarray(force, dtype=float)
    if len(x) < 3:
        return 0.0
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def group_cycles(cycle, force, disp):
    """Split flat log columns into per-cycle arrays, preserving first-seen order."""
    cycle = np.asarray(cycle)
    if cycle.size == 0:
        return []
    force = np.asarray(force, dtype=float)
    disp = np.asarray(disp, dtype=float)
    uniq, first, inv = np.unique(cycle, return_index=True, return_inverse=True)
    by_label = np.argsort(inv, kind="stable")
    splits = np.cumsum(np.bincount(inv))[:-1]
    f_parts = np.split(force[by_label], splits)
    d_parts = np.split(disp[by_label], splits)
    return [(int(uniq[k]), f_parts[k], d_parts[k]) for k in np.argsort(first)]


def analyze_fatigue(cycle, force, disp, discard_first=DISCARD_FIRST, force_bounds=FORCE_BOUNDS, tol=1e-6):
    """Discard the first cycles, drop any containing NaN, then measure the rest.

    Drift is each retained cycle's peak displacement minus that of the first
    retained cycle.
    """
    groups = group_cycles(cycle, force, disp)
    if not groups:
        raise InvalidInputError("fatigue log is empty")
    kept = groups[discard_first:]
    report = FatigueReport(total_cycles=len(groups), discarded=min(discard_first, len(groups)), nan_dropped=0)
    lo, hi = force_bounds
    for idx, f, d in kept:
        if np.isnan(f).any() or np.isnan(d).any():
            report.nan_dropped += 1
            continue
        if f.min() < lo - tol or f.max() > hi + tol:
            report.force_in_bounds = False
        report.cycles.append(FatigueCycle(idx, f, d, loop_area(d, f), float(d.max())))
    if report.cycles:
        peaks = np.array([c.peak_disp for c in report.cycles])
        report.drift = peaks - peaks[0]
    return report


def synth_cycle(n_points=101, force_bounds=FORCE_BOUNDS, k=0.5, softening=0.02, hysteresis=0.15):
    """One loading/unloading loop: force ramps up then down, unloading lags."""
    lo, hi = force_bounds
    up = np.linspace(lo, hi, n_points)
    down = up[::-1]
    # nonlinear softening spring; unloading path shifted to open the loop
    disp_up = up / k * (1.0 + softening * up)
    s = (down - lo) / (hi - lo)
    disp_down = down / k * (1.0 + softening * down) + hysteresis * np.sin(math.pi * s)
    return np.concatenate([up, down[1:]]), np.concatenate([disp_up, disp_down[1:]])


def synth_fatigue_log(n_cycles, nan_cycles=(), rng=None, noise=0.0, drift_per_cycle=0.0, **cycle_kw):
    """Flat arrays ``(cycle, t_s, force_N, disp_mm)``; cycles are numbered from 1.

    Cycles listed in ``nan_cycles`` get one displacement sample set to NaN.
    At 1 mm/s the time axis follows the displacement path length.
    """
    f, d = synth_cycle(**cycle_kw)
    steps = np.abs(np.diff(d, prepend=d[0]))
    t_cycle = np.cumsum(steps)
    period = t_cycle[-1] + steps.mean()
    n = len(f)
    cycle = np.repeat(np.arange(1, n_cycles + 1), n)
    t = (np.arange(n_cycles)[:, None] * period + t_cycle[None, :]).ravel()
    force = np.tile(f, n_cycles)
    disp = np.tile(d, n_cycles).reshape(n_cycles, n)
    if drift_per_cycle:
        disp = disp + drift_per_cycle * np.arange(n_cycles)[:, None] * (d / d.max())[None, :]
    if noise and rng is not None:
        disp = disp + rng.normal(0.0, noise, disp.shape)
    disp = disp.ravel()
    for c in nan_cycles:
        disp[(c - 1) * n + n // 2] = np.nan
    return cycle, t, force, disp


def read_fatigue_log(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["cycle", "t_s", "force_N", "disp_mm"]:
            raise InvalidInputError(f"{path}: expected header cycle,t_s,force_N,disp_mm")
        rows = [row for row in reader if row]
    if not rows:
        raise InvalidInputError(f"{path}: fatigue log is empty")
    cycle = np.array([int(r[0]) for r in rows])
    vals = np.array([[float(v) for v in r[1:]] for r in rows])
    return cycle, vals[:, 0], vals[:, 1], vals[:, 2]


def write_fatigue_log(path, cycle, t, force, disp):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["cycle", "t_s", "force_N", "disp_mm"])
        for row in zip(cycle, t, force, disp):
            w.writerow([int(row[0]), f"{row[1]:.4f}", f"{row[2]:.6f}", f"{row[3]:.6f}"])


def write_report(path, report):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["ordinal", "cycle", "hysteresis_area_Nmm", "peak_disp_mm", "drift_mm"])
        for k, (c, drift) in enumerate(zip(report.cycles, report.drift), 1):
            w.writerow([k, c.index, f"{c.hysteresis_area:.9f}", f"{c.peak_disp:.9f}", f"{drift:.9f}"])
