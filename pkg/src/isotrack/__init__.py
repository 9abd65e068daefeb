"""Isolating-neighborhood boundary verification and quasiperiodic orbit
tracking in the circular and elliptic restricted three-body problems."""

__version__ = "0.1.0"

from .kepler import SystemParams, EARTH_MOON_MU
from .models import Frame, ModelKind, PhaseState

__all__ = [
    "SystemParams",
    "EARTH_MOON_MU",
    "Frame",
    "ModelKind",
    "PhaseState",
    "__version__",
]
