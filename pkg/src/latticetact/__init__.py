"""Tactile sensing stack for a fluidically innervated lattice fingertip, in simulation."""

__version__ = "0.1.0"

from .errors import LatticeTactError  # noqa: F401
from .model import ContactSpec, LatticeParams, TipDisplacement  # noqa: F401
