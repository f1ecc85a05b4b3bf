"""Geometric tip-displacement estimator.

Each channel is weighted by its signed distance from the bending neutral
plane.  The weights of every axis sum to zero, so a pressure offset common
to all channels (ambient temperature drift in a closed volume) cancels.

Sign convention: the z weighted sum is positive under compression, while
:class:`~latticetact.model.TipDisplacement` counts compression as negative
``dz``.  ``alpha_z`` stays positive and :func:`estimate_displacement` returns
``dz = -alpha_z * wz`` so estimates live in the same frame as the forward
model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationError, InvalidInputError
from .kvfile import format_kv, read_kv
from .model import TipDisplacement, synth_tip_pressures

SQRT3_2 = math.sqrt(3.0) / 2.0
AXES = ("x", "y", "z")


def _as_pressures(p):
    p = np.asarray(p, dtype=float)
    if p.shape[-1:] != (7,):
        raise InvalidInputError(f"expected 7 channel pressures, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InvalidInputError("channel pressures must be finite")
    return p


def weighted_sums(p):
    """Return ``(wx, wy, wz)`` in Pa for pressures of shape (..., 7)."""
    p = _as_pressures(p)
    p1, p2, p3, p4, p5, p6, p7 = (p[..., i] for i in range(7))
    wx = SQRT3_2 * ((p5 + p6) - (p2 + p3))
    wy = (p1 - p4) + 0.5 * ((p2 - p3) - (p5 - p6))
    wz = p7 - ((p1 + p2 + p3) + (p4 + p5 + p6)) / 6.0
    return wx, wy, wz


@dataclass(frozen=True)
class EstimatorCalibration:
    alpha_x: float
    alpha_y: float
    alpha_z: float
    r2: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for axis in AXES:
            a = getattr(self, f"alpha_{axis}")
            if not (math.isfinite(a) and a > 0):
                raise CalibrationError(f"alpha_{axis} must be finite and > 0, got {a}")

    @property
    def alphas(self):
        return np.array([self.alpha_x, self.alpha_y, self.alpha_z])

    def to_text(self):
        comments = ["estimator calibration (mm per Pa)"]
        comments += [f"r2_{axis} = {self.r2[axis]!r}" for axis in AXES if axis in self.r2]
        return format_kv(
            {"alpha_x": self.alpha_x, "alpha_y": self.alpha_y, "alpha_z": self.alpha_z}, comments
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path):
        values = read_kv(path)
        unknown = set(values) - {"alpha_x", "alpha_y", "alpha_z"}
        if unknown:
            raise CalibrationError(f"unknown calibration key(s): {sorted(unknown)}")
        try:
            return cls(*(float(values[f"alpha_{a}"]) for a in AXES))
        except KeyError as exc:
            raise CalibrationError(f"calibration file missing {exc.args[0]}") from exc


def estimate_displacement(p, cal):
    """Estimated tip displacement; returns a TipDisplacement for one sample,
    an (N, 3) array for a batch."""
    wx, wy, wz = weighted_sums(p)
    est = np.stack([cal.alpha_x * wx, cal.alpha_y * wy, -cal.alpha_z * wz], axis=-1)
    if est.ndim == 1:
        return TipDisplacement.from_array(est)
    return est


def fit_through_origin(w, target):
    """Least squares ``target ~ alpha * w``; returns ``(alpha, r2)``."""
    w = np.asarray(w, dtype=float)
    target = np.asarray(target, dtype=float)
    ww = float(w @ w)
    if ww == 0.0:
        raise CalibrationError("all weighted sums are zero")
    alpha = float(w @ target) / ww
    resid = target - alpha * w
    ss_tot = float(np.sum((target - target.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return alpha, r2


def calibrate_arrays(pressures, displacements):
    pressures = _as_pressures(pressures)
    d = np.asarray(displacements, dtype=float).reshape(-1, 3)
    if len(d) < 2 or len(pressures) != len(d):
        raise CalibrationError("need >= 2 paired samples to calibrate")
    w = np.column_stack(weighted_sums(pressures))
    targets = d * np.array([1.0, 1.0, -1.0])
    alphas, r2 = {}, {}
    for i, axis in enumerate(AXES):
        if not np.any(targets[:, i]):
            raise CalibrationError(f"degenerate calibration on axis {axis}: no displacement along it")
        try:
            alphas[axis], r2[axis] = fit_through_origin(w[:, i], targets[:, i])
        except CalibrationError as exc:
            raise CalibrationError(f"degenerate calibration on axis {axis}: {exc}") from exc
        if not alphas[axis] > 0:
            raise CalibrationError(f"degenerate calibration on axis {axis}: fitted scale {alphas[axis]:g}")
    return EstimatorCalibration(alphas["x"], alphas["y"], alphas["z"], r2=r2)


def calibrate(samples):
    """Fit per-axis scale factors from ``(pressures, TipDisplacement)`` pairs."""
    samples = list(samples)
    if len(samples) < 2:
        raise CalibrationError("need >= 2 samples to calibrate")
    pressures = np.array([np.asarray(p, dtype=float) for p, _ in samples])
    disps = np.array([d.as_array() if isinstance(d, TipDisplacement) else d for _, d in samples])
    return calibrate_arrays(pressures, disps)


def calibration_sweep(params, xy_range=None, z_range=None, n=41):
    """Axis-by-axis displacement sweep covering the linear ranges.

    Returns ``(displacements (M, 3), axis_index (M,))``: x then y over
    ``[-xy_range, xy_range]``, then compression ``[0, z_range]``.
    """
    xy = params.linear_range_xy if xy_range is None else xy_range
    zr = params.linear_range_z if z_range is None else z_range
    lateral = np.linspace(-xy, xy, n)
    depth = np.linspace(0.0, zr, n)
    disp = np.zeros((3 * n, 3))
    disp[:n, 0] = lateral
    disp[n : 2 * n, 1] = lateral
    disp[2 * n :, 2] = -depth
    axis = np.repeat([0, 1, 2], n)
    return disp, axis


def calibrate_from_model(params, rng=None, noisy=False, **sweep):
    disp, _ = calibration_sweep(params, **sweep)
    pressures = synth_tip_pressures(params, disp, noisy=noisy, rng=rng)
    return calibrate_arrays(pressures, disp)


@dataclass(frozen=True)
class ContactArc:
    center_angle: float  # rad, arctan2(dx, dy)
    span: float  # rad
    radius: float  # mm


def contact_arc(delta, lattice_radius=16.0, thickness=1.0, threshold=0.5, span_deg=60.0):
    """Contact arc from an estimated displacement, or ``None`` below threshold.

    The angle is ``arctan2(dx, dy)``, i.e. a bearing measured from +y toward
    +x.  This argument order is intentional and differs from the usual
    ``arctan2(y, x)``.
    """
    if not threshold > 0:
        raise InvalidInputError("threshold must be > 0")
    if isinstance(delta, TipDisplacement):
        dx, dy = delta.dx, delta.dy
    else:
        dx, dy = float(delta[0]), float(delta[1])
    if math.hypot(dx, dy) < threshold:
        return None
    span = math.radians(span_deg)
    if not 0 < span <= math.pi:
        raise InvalidInputError("arc span must be in (0, 180] degrees")
    return ContactArc(math.atan2(dx, dy), span, lattice_radius + thickness)
