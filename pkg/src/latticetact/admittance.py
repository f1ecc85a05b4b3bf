"""Admittance control of a position-controlled arm from fingertip deflection.

Each cycle at 200 Hz: the passive lattice deflects under the external force,
the forward model produces channel pressures, the geometric estimator turns
them into a deflection estimate, and the arm is commanded to
``u = beta * delta`` (an absolute set-point, not an increment).  The arm
tracks the set-point through a first-order lag.

The z axis follows the forward-model frame: pushing the tip toward the base
is a negative force and a negative deflection, so the arm yields downward.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidInputError, MeasurementError
from .estimator import estimate_displacement, fit_through_origin
from .model import synth_tip_pressures

RATE_HZ = 200.0
DT = 1.0 / RATE_HZ
AXIS_INDEX = {"x": 0, "y": 1, "z": 2}
# products alpha_i * beta_i chosen for a natural interaction feel
ALPHA_BETA = (1.0 / 15.0, 1.0 / 15.0, 1.0 / 7.5)


@dataclass(frozen=True)
class AdmittanceGains:
    beta_x: float
    beta_y: float
    beta_z: float

    def __post_init__(self):
        for v in self.as_array():
            if not (math.isfinite(v) and v >= 0):
                raise InvalidInputError(f"gains must be finite and >= 0, got {v}")

    def as_array(self):
        return np.array([self.beta_x, self.beta_y, self.beta_z])


def default_gains(cal):
    return AdmittanceGains(
        ALPHA_BETA[0] / cal.alpha_x, ALPHA_BETA[1] / cal.alpha_y, ALPHA_BETA[2] / cal.alpha_z
    )


@dataclass(frozen=True)
class LoopConfig:
    tau: float = 0.05  # s, arm lag
    deadband: float = 0.1  # mm, per-axis on the estimated deflection
    noisy: bool = False

    @property
    def lag(self):
        return 1.0 - math.exp(-DT / self.tau) if self.tau > 0 else 1.0


@dataclass
class LoopState:
    u: np.ndarray = field(default_factory=lambda: np.zeros(3))
    delta_true: np.ndarray = field(default_factory=lambda: np.zeros(3))
    delta_est: np.ndarray = field(default_factory=lambda: np.zeros(3))
    force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    pressures: np.ndarray = field(default_factory=lambda: np.zeros(7))
    step: int = 0

    @property
    def total(self):
        """Tip position relative to the unloaded start, ``delta + u``."""
        return self.delta_true + self.u


def lattice_deflection(params, force):
    k = np.array([params.lattice_stiffness_xy, params.lattice_stiffness_xy, params.lattice_stiffness_z])
    return np.asarray(force, dtype=float) / k


def control_step(state, force, gains, cal, params, config=LoopConfig(), rng=None, pressure_offset=0.0):
    """Advance the loop by one 5 ms cycle under external ``force`` (N, 3)."""
    force = np.asarray(force, dtype=float)
    if force.shape != (3,) or not np.all(np.isfinite(force)):
        raise InvalidInputError("force must be 3 finite components")
    delta_true = lattice_deflection(params, force)
    p = synth_tip_pressures(params, delta_true, noisy=config.noisy, rng=rng) + pressure_offset
    est = estimate_displacement(p, cal).as_array()
    est = np.where(np.abs(est) < config.deadband, 0.0, est)
    target = gains.as_array() * est
    u = state.u + config.lag * (target - state.u)
    return LoopState(u=u, delta_true=delta_true, delta_est=est, force=force, pressures=p, step=state.step + 1)


def run_profile(forces, gains, cal, params, config=LoopConfig(), rng=None, state=None):
    """Run the loop over an (N, 3) force sequence sampled at 200 Hz."""
    state = state or LoopState()
    states = []
    for f in np.asarray(forces, dtype=float):
        state = control_step(state, f, gains, cal, params, config, rng)
        states.append(state)
    return states


def run_to_steady_state(force, gains, cal, params, config=LoopConfig(), rng=None,
                        tol=1e-4, window=20, max_steps=20000, state=None):
    """Hold ``force`` until ``|du| < tol`` mm on every axis for ``window`` steps."""
    state = state or LoopState()
    quiet = 0
    for _ in range(max_steps):
        nxt = control_step(state, force, gains, cal, params, config, rng)
        quiet = quiet + 1 if np.all(np.abs(nxt.u - state.u) < tol) else 0
        state = nxt
        if quiet >= window:
            return state
    raise MeasurementError(f"loop did not settle within {max_steps} steps at force {force}")


@dataclass
class StiffnessResult:
    axis: str
    forces: np.ndarray  # N, magnitudes
    displacements: np.ndarray  # mm, magnitudes of delta + u
    k: float  # N/mm
    r2: float


def measure_stiffness(axis, forces, gains, cal, params, config=LoopConfig(), rng=None, average=400):
    """Effective stiffness along ``axis`` from steady-state force/position pairs.

    Forces are positive magnitudes; the z axis is loaded in compression.  With
    a noisy sensor the position is averaged over ``average`` settled steps.
    """
    if axis not in AXIS_INDEX:
        raise InvalidInputError(f"axis must be one of x, y, z, got {axis!r}")
    forces = np.asarray(forces, dtype=float)
    if len(forces) < 2 or np.any(forces <= 0) or len(np.unique(forces)) != len(forces):
        raise InvalidInputError("need distinct positive force magnitudes")
    i = AXIS_INDEX[axis]
    sign = -1.0 if axis == "z" else 1.0
    xs = np.empty(len(forces))
    for j, f in enumerate(forces):
        vec = np.zeros(3)
        vec[i] = sign * f
        if config.noisy:
            # noise keeps |du| above any sensible tolerance: settle for 10 tau, then average
            settle = int(math.ceil(10 * config.tau / DT)) + 1
            states = run_profile(np.tile(vec, (settle + average, 1)), gains, cal, params, config, rng)
            xs[j] = sign * np.mean([s.total[i] for s in states[settle:]])
        else:
            state = run_to_steady_state(vec, gains, cal, params, config, rng)
            xs[j] = sign * state.total[i]
    # fit F = k x through the origin
    k, r2 = fit_through_origin(xs, forces)
    return StiffnessResult(axis, forces, xs, k, r2)


def expected_stiffness(params, gains, axis):
    k_lat = params.lattice_stiffness_z if axis == "z" else params.lattice_stiffness_xy
    return k_lat / (1.0 + gains.as_array()[AXIS_INDEX[axis]])


def default_forces(params, axis, n=10):
    """``n`` evenly spaced forces keeping the deflection inside the linear range."""
    if axis == "z":
        top = 0.9 * params.linear_range_z * params.lattice_stiffness_z
    else:
        top = 0.9 * params.linear_range_xy * params.lattice_stiffness_xy
    return np.linspace(top / n, top, n)


def read_force_profile(path):
    """Read ``t_s,Fx_N,Fy_N,Fz_N`` and resample (zero-order hold) at 200 Hz."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["t_s", "Fx_N", "Fy_N", "Fz_N"]:
            raise InvalidInputError(f"{path}: expected header t_s,Fx_N,Fy_N,Fz_N")
        rows = np.array([[float(v) for v in row] for row in reader if row])
    if rows.size == 0:
        raise InvalidInputError(f"{path}: empty force profile")
    t = rows[:, 0]
    if np.any(np.diff(t) < 0):
        raise InvalidInputError(f"{path}: time stamps must be non-decreasing")
    grid = np.arange(0.0, t[-1] + DT / 2, DT)
    idx = np.searchsorted(t, grid + 1e-12, side="right") - 1
    forces = np.where(idx[:, None] >= 0, rows[np.clip(idx, 0, None), 1:], 0.0)
    return grid, forces


def write_run_log(path, times, states):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t_s", "Fx", "Fy", "Fz"] + [f"p{i}" for i in range(1, 8)]
                   + ["dx", "dy", "dz", "ux", "uy", "uz"])
        for t, s in zip(times, states):
            w.writerow([f"{t:.4f}"] + [f"{v:.6f}" for v in
                        (*s.force, *s.pressures, *s.delta_est, *s.u)])


def write_stiffness_report(path, result):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["# axis", result.axis, "k_N_per_mm", f"{result.k:.6f}", "r2", f"{result.r2:.9f}"])
        w.writerow(["F_N", "x_mm"])
        for f, x in zip(result.forces, result.displacements):
            w.writerow([f"{f:.6f}", f"{x:.6f}"])


def with_gain(gains, axis, value):
    return replace(gains, **{f"beta_{axis}": value})
