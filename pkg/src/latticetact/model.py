"""Simulated physics of the fluidically innervated lattice.

Maps tip displacements and mid-lattice point contacts to the seven
deformation-induced channel pressures (Pa, baseline-subtracted).  Channels
1..6 run along the peripheral struts, channel 7 along the central strut.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidInputError
from .kvfile import format_kv, read_kv

N_CHANNELS = 7
N_AXIAL = 5
N_RADIAL = 6
CHANNEL_ANGLES_DEG = (90.0, 150.0, 210.0, 270.0, 330.0, 30.0)


@dataclass(frozen=True)
class LatticeParams:
    bend_gain: float = 15.0  # Pa/mm of lateral tip displacement along a channel
    axial_gain: float = 40.0  # Pa/mm of compression, channel 7
    axial_coupling: float = 5.0  # Pa/mm of compression, channels 1..6
    contact_compression_gain: float = 25.0  # Pa/N, direct compression at the base
    contact_bending_gain: float = 30.0  # Pa/N, bending at the tip
    contact_axial_gain: float = 3.0  # Pa/N, central channel at the base
    lattice_stiffness_xy: float = 0.5  # N/mm
    lattice_stiffness_z: float = 2.0  # N/mm
    linear_range_xy: float = 10.0  # mm
    linear_range_z: float = 3.0  # mm
    noise_sigma: float = 0.5  # Pa
    channel_angles: tuple = field(default=CHANNEL_ANGLES_DEG)

    def __post_init__(self):
        angles = tuple(float(a) for a in self.channel_angles)
        object.__setattr__(self, "channel_angles", angles)
        if angles != CHANNEL_ANGLES_DEG:
            raise ConfigError(f"channel_angles are fixed at {CHANNEL_ANGLES_DEG}, got {angles}")
        for name in (
            "bend_gain",
            "axial_gain",
            "axial_coupling",
            "contact_compression_gain",
            "contact_bending_gain",
            "contact_axial_gain",
            "lattice_stiffness_xy",
            "lattice_stiffness_z",
            "linear_range_xy",
            "linear_range_z",
        ):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be finite and > 0, got {value}")
        if not (math.isfinite(self.noise_sigma) and self.noise_sigma >= 0):
            raise ConfigError(f"noise_sigma must be finite and >= 0, got {self.noise_sigma}")

    @property
    def directions(self):
        """(6, 2) unit vectors of the peripheral channels in the cross-section."""
        return channel_directions()

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_file(cls, path):
        return cls.from_mapping(read_kv(path))

    @classmethod
    def from_mapping(cls, values):
        known = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise ConfigError(f"unknown lattice parameter {key!r}")
            try:
                if key == "channel_angles":
                    kwargs[key] = tuple(float(v) for v in str(raw).split(","))
                else:
                    kwargs[key] = float(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {raw!r}") from exc
        return cls(**kwargs)

    def to_text(self):
        return format_kv(dataclasses.asdict(self), comments=["lattice parameters"])


def channel_directions():
    rad = np.deg2rad(CHANNEL_ANGLES_DEG)
    return np.column_stack([np.cos(rad), np.sin(rad)])


@dataclass(frozen=True)
class TipDisplacement:
    """Tip displacement in mm; dz < 0 is compression toward the base."""

    dx: float = 0.0
    dy: float = 0.0
    dz: float = 0.0

    def as_array(self):
        return np.array([self.dx, self.dy, self.dz], dtype=float)

    @classmethod
    def from_array(cls, a):
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class ContactSpec:
    axial_pos: int
    radial_angle: int
    force: float

    def __post_init__(self):
        validate_contact(self.axial_pos, self.radial_angle, self.force)


def validate_contact(axial_pos, radial_angle, force):
    if not (isinstance(axial_pos, (int, np.integer)) and 0 <= axial_pos < N_AXIAL):
        raise InvalidInputError(f"axial_pos must be an integer in 0..{N_AXIAL - 1}, got {axial_pos!r}")
    if not (isinstance(radial_angle, (int, np.integer)) and 0 <= radial_angle < N_RADIAL):
        raise InvalidInputError(
            f"radial_angle must be an integer in 0..{N_RADIAL - 1}, got {radial_angle!r}"
        )
    if not (math.isfinite(force) and 0.0 <= force <= 10.0):
        raise InvalidInputError(f"force must be in [0, 10] N, got {force!r}")


def saturate(x, limit):
    """Identity inside ``|x| <= limit``; smooth tanh roll-off beyond it.

    The roll-off is C1 at the boundary and bounded by ``2 * limit``.
    """
    x = np.asarray(x, dtype=float)
    mag = np.abs(x)
    over = mag > limit
    if not np.any(over):
        return x
    out = x.copy()
    out[over] = np.sign(x[over]) * (limit + limit * np.tanh((mag[over] - limit) / limit))
    return out


def _as_displacement_array(disp):
    if isinstance(disp, TipDisplacement):
        d = disp.as_array()
    else:
        d = np.asarray(disp, dtype=float)
    if d.shape[-1] != 3:
        raise InvalidInputError(f"displacement must have 3 components, got shape {d.shape}")
    if not np.all(np.isfinite(d)):
        raise InvalidInputError("displacement must be finite")
    return d


def synth_tip_pressures(params, disp, noisy=False, rng=None):
    """Channel pressures for a tip displacement.

    ``disp`` may be a :class:`TipDisplacement` or an array of shape (..., 3);
    the result has shape (..., 7).  Lateral displacement saturates radially
    beyond ``linear_range_xy``, compression beyond ``linear_range_z``.
    """
    d = _as_displacement_array(disp)
    lateral = d[..., :2]
    radius = np.linalg.norm(lateral, axis=-1)
    sat_radius = saturate(radius, params.linear_range_xy)
    scale = np.ones_like(radius)
    np.divide(sat_radius, radius, out=scale, where=radius > 0)
    lateral = lateral * scale[..., None]
    compression = saturate(-d[..., 2], params.linear_range_z)

    p = np.empty(d.shape[:-1] + (N_CHANNELS,))
    p[..., :6] = params.bend_gain * (lateral @ channel_directions().T)
    p[..., :6] += params.axial_coupling * compression[..., None]
    p[..., 6] = params.axial_gain * compression
    if noisy:
        p += _noise(params, rng, p.shape)
    return p


def _noise(params, rng, shape):
    if rng is None:
        raise InvalidInputError("noisy synthesis needs an explicit numpy Generator")
    return rng.normal(0.0, params.noise_sigma, size=shape)


def contact_profile(params, axial_pos, radial_angle):
    """Per-newton pressure response (7,) of a point contact.

    With ``s = axial_pos / 4`` the direct-compression gain falls from
    ``a_max`` at the base to ``0.2 a_max`` at the tip, while the bending gain
    rises from 0 to ``b_max``.  Channel j at angular distance ``d`` from the
    contact receives ``a(s) max(0, cos d)**2 - b(s) cos d``: the contacted side
    is squeezed locally and stretched by bending, the opposite side is
    compressed by bending.  The squared lobe keeps local indentation narrower
    than the bending pattern; with equal lobes a mid-lattice contact would be
    indistinguishable from a base contact on the opposite strut.
    """
    validate_contact(axial_pos, radial_angle, 0.0)
    s = axial_pos / (N_AXIAL - 1)
    a = params.contact_compression_gain * (1.0 - 0.8 * s)
    b = params.contact_bending_gain * s
    c = params.contact_axial_gain * (1.0 - 0.5 * s)
    # contact k sits on channel k+1; neighbours are 60 deg apart
    offsets = (np.arange(6) - radial_angle) % 6
    cosd = np.cos(np.deg2rad(60.0 * offsets))
    cosd = np.round(cosd, 15)
    profile = np.empty(N_CHANNELS)
    profile[:6] = a * np.maximum(0.0, cosd) ** 2 - b * cosd
    profile[6] = c
    return profile


def synth_contact_pressures(params, contact, noisy=False, rng=None):
    p = contact_profile(params, contact.axial_pos, contact.radial_angle) * contact.force
    if noisy:
        p = p + _noise(params, rng, p.shape)
    return p


@dataclass
class CharacterizationData:
    """Labelled samples from the synthetic indentation protocol."""

    trial: np.ndarray
    axial: np.ndarray
    radial: np.ndarray
    force: np.ndarray
    pressures: np.ndarray

    def __len__(self):
        return len(self.force)

    def subset(self, mask):
        return CharacterizationData(
            self.trial[mask], self.axial[mask], self.radial[mask], self.force[mask], self.pressures[mask]
        )

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["trial", "axial", "radial", "force_N"] + [f"p{i}" for i in range(1, 8)])
            for t, a, r, f, p in zip(self.trial, self.axial, self.radial, self.force, self.pressures):
                w.writerow([int(t), int(a), int(r), f"{f:.6f}"] + [f"{v:.6f}" for v in p])

    @classmethod
    def from_csv(cls, path):
        path = Path(path)
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            expected = ["trial", "axial", "radial", "force_N"] + [f"p{i}" for i in range(1, 8)]
            if header != expected:
                raise InvalidInputError(f"{path}: expected header {','.join(expected)}")
            rows = [list(map(float, row)) for row in reader if row]
        if not rows:
            return cls(*(np.empty(0, dtype=int) for _ in range(3)), np.empty(0), np.empty((0, 7)))
        arr = np.array(rows)
        return cls(
            arr[:, 0].astype(int), arr[:, 1].astype(int), arr[:, 2].astype(int), arr[:, 3], arr[:, 4:]
        )


def force_ramp(start=0.05, stop=5.05, step=0.05):
    """Indentation force levels in N (101 levels by default).

    The ramp starts at a 0.05 N preload so the indenter is always in contact;
    a zero-force sample carries no location information.
    """
    n = int(round((stop - start) / step)) + 1
    return start + step * np.arange(n)


def run_characterization(params, trials=5, rng=None, forces=None, n_axial=N_AXIAL, n_radial=N_RADIAL):
    """Indent every (axial, radial) location with a force ramp, ``trials`` times.

    Samples are ordered trial-major, then axial, radial, force.  Noise is drawn
    in a single block from ``rng`` so the output is a pure function of the seed.
    """
    if int(trials) < 1:
        raise InvalidInputError(f"trials must be >= 1, got {trials}")
    trials = int(trials)
    forces = force_ramp() if forces is None else np.asarray(forces, dtype=float)
    profiles = np.array(
        [[contact_profile(params, a, r) for r in range(n_radial)] for a in range(n_axial)]
    )
    shape = (trials, n_axial, n_radial, len(forces))
    clean = profiles[None, :, :, None, :] * forces[None, None, None, :, None]
    clean = np.broadcast_to(clean, shape + (N_CHANNELS,))
    if params.noise_sigma > 0:
        if rng is None:
            raise InvalidInputError("run_characterization needs a numpy Generator when noise_sigma > 0")
        pressures = clean + rng.normal(0.0, params.noise_sigma, size=clean.shape)
    else:
        pressures = np.array(clean)
    t, a, r, f = np.meshgrid(
        np.arange(trials), np.arange(n_axial), np.arange(n_radial), np.arange(len(forces)), indexing="ij"
    )
    return CharacterizationData(
        trial=t.ravel(),
        axial=a.ravel(),
        radial=r.ravel(),
        force=forces[f.ravel()],
        pressures=pressures.reshape(-1, N_CHANNELS),
    )
