"""Right-hand sides and constants of motion for all dynamical models.

Every model shares the state layout [x, y, z, vx, vy, vz]; which frame the
coordinates live in, and whether the independent variable is time or true
anomaly, is carried by the :class:`Frame` tag.  The heavy lifting happens in
the numba kernels; the functions here validate, pack parameters, and keep a
friendly scalar surface for tests and exploratory use.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .kepler import SystemParams


class Frame(enum.Enum):
    INERTIAL = "inertial"
    CONSTANT_ROTATING = "constant_rotating"
    VARIABLE_ROTATING = "variable_rotating"
    PULSATING = "pulsating"


class ModelKind(enum.IntEnum):
    """Dynamical models; integer values match the kernel dispatch ids."""

    CRTBP = _kernels.M_CRTBP
    ERTBP_PULSATING = _kernels.M_PULSATING
    ERTBP_NONUNIFORM_NU = _kernels.M_VR_NU
    ERTBP_NONUNIFORM_TIME = _kernels.M_VR_TIME
    ERTBP_UNIFORM = _kernels.M_UNIFORM
    ERTBP_INERTIAL = _kernels.M_INERTIAL
    TOY = _kernels.M_TOY


#: Natural state representation of each model.
MODEL_FRAME = {
    ModelKind.CRTBP: Frame.CONSTANT_ROTATING,
    ModelKind.ERTBP_PULSATING: Frame.PULSATING,
    ModelKind.ERTBP_NONUNIFORM_NU: Frame.VARIABLE_ROTATING,
    ModelKind.ERTBP_NONUNIFORM_TIME: Frame.VARIABLE_ROTATING,
    ModelKind.ERTBP_UNIFORM: Frame.CONSTANT_ROTATING,
    ModelKind.ERTBP_INERTIAL: Frame.INERTIAL,
}

#: Models whose independent variable is true anomaly rather than time.
NU_PARAMETERIZED = frozenset(
    {ModelKind.ERTBP_PULSATING, ModelKind.ERTBP_NONUNIFORM_NU})


class CollisionError(RuntimeError):
    """Trajectory or state came within the collision radius of a primary."""


class FrameError(ValueError):
    """A state carried the wrong frame tag for the requested operation."""


@dataclass(frozen=True)
class PhaseState:
    """Independent variable plus 3D position/velocity, tagged with a frame.

    ``vel`` holds the derivative with respect to the state's own independent
    variable: d/dt for inertial and constant-rotating states, d/dnu for
    variable-rotating and pulsating states.
    """

    s: float
    pos: np.ndarray
    vel: np.ndarray
    frame: Frame

    def __post_init__(self):
        object.__setattr__(self, "pos", np.asarray(self.pos, dtype=float))
        object.__setattr__(self, "vel", np.asarray(self.vel, dtype=float))
        if self.pos.shape != (3,) or self.vel.shape != (3,):
            raise ValueError("pos and vel must be length-3 vectors")

    def vector(self) -> np.ndarray:
        return np.concatenate([self.pos, self.vel])

    @classmethod
    def from_vector(cls, s: float, y, frame: Frame) -> "PhaseState":
        y = np.asarray(y, dtype=float)
        return cls(s=s, pos=y[:3].copy(), vel=y[3:6].copy(), frame=frame)


def _require_frame(state: PhaseState, frame: Frame, op: str):
    if state.frame is not frame:
        raise FrameError(f"{op} requires a {frame.value} state, "
                         f"got {state.frame.value}")


def _primary_distances(pos, mu):
    r1 = math.sqrt((pos[0] + mu) ** 2 + pos[1] ** 2 + pos[2] ** 2)
    r2 = math.sqrt((pos[0] - 1.0 + mu) ** 2 + pos[1] ** 2 + pos[2] ** 2)
    return r1, r2


def _guard_collision(r1, r2):
    if min(r1, r2) < _kernels.COLLISION_RADIUS:
        raise CollisionError(
            f"state within {_kernels.COLLISION_RADIUS} of a primary "
            f"(r1={r1:.3e}, r2={r2:.3e})")


def _eval_rhs(model: ModelKind, s: float, y: np.ndarray,
              params: SystemParams) -> np.ndarray:
    out = np.empty(6)
    _kernels.rhs(int(model), s, y, params.kernel_params(), out)
    if not np.all(np.isfinite(out)):
        raise CollisionError(f"model {model.name} RHS singular at s={s}")
    return out


def crtbp_rhs(state: PhaseState, mu: float) -> np.ndarray:
    """CRTBP acceleration in the constant rotating frame.

    Returns the 6-vector state derivative (velocity, acceleration).
    """
    _require_frame(state, Frame.CONSTANT_ROTATING, "crtbp_rhs")
    r1, r2 = _primary_distances(state.pos, mu)
    _guard_collision(r1, r2)
    out = np.empty(6)
    p = np.zeros(_kernels.N_PARAMS)
    p[_kernels.P_MU] = mu
    _kernels.rhs(_kernels.M_CRTBP, state.s, state.vector(), p, out)
    return out


def ertbp_pulsating_rhs(nu: float, state: PhaseState,
                        params: SystemParams) -> np.ndarray:
    """Pulsating-frame ERTBP state derivative with respect to true anomaly."""
    _require_frame(state, Frame.PULSATING, "ertbp_pulsating_rhs")
    r1, r2 = _primary_distances(state.pos, params.mu)
    _guard_collision(r1, r2)
    return _eval_rhs(ModelKind.ERTBP_PULSATING, nu, state.vector(), params)


def ertbp_nonuniform_nu_rhs(nu: float, state: PhaseState,
                            params: SystemParams) -> np.ndarray:
    """Variable-rotating (non-pulsating) ERTBP derivative w.r.t. true anomaly."""
    _require_frame(state, Frame.VARIABLE_ROTATING, "ertbp_nonuniform_nu_rhs")
    return _eval_rhs(ModelKind.ERTBP_NONUNIFORM_NU, nu, state.vector(), params)


def ertbp_nonuniform_time_rhs(t: float, state: PhaseState,
                              params: SystemParams) -> np.ndarray:
    """Variable-rotating ERTBP derivative with time as independent variable."""
    _require_frame(state, Frame.VARIABLE_ROTATING, "ertbp_nonuniform_time_rhs")
    return _eval_rhs(ModelKind.ERTBP_NONUNIFORM_TIME, t, state.vector(), params)


def ertbp_uniform_rhs(t: float, state: PhaseState,
                      params: SystemParams) -> np.ndarray:
    """Uniformly rotating ERTBP derivative; both primaries move in x and y."""
    _require_frame(state, Frame.CONSTANT_ROTATING, "ertbp_uniform_rhs")
    return _eval_rhs(ModelKind.ERTBP_UNIFORM, t, state.vector(), params)


def ertbp_inertial_rhs(t: float, state: PhaseState,
                       params: SystemParams) -> np.ndarray:
    """Newtonian acceleration toward the two primaries on their ellipse."""
    _require_frame(state, Frame.INERTIAL, "ertbp_inertial_rhs")
    return _eval_rhs(ModelKind.ERTBP_INERTIAL, t, state.vector(), params)


def jacobi_constant(state: PhaseState, mu: float) -> float:
    """Jacobi constant C = -v^2 + x^2 + y^2 + 2(1-mu)/r1 + 2 mu/r2."""
    _require_frame(state, Frame.CONSTANT_ROTATING, "jacobi_constant")
    r1, r2 = _primary_distances(state.pos, mu)
    _guard_collision(r1, r2)
    return _kernels.jacobi_direct(state.vector(), mu)


def jacobi_direct(y, mu: float) -> float:
    """Jacobi expression on a raw 6-vector of rotating/pulsating coordinates."""
    return _kernels.jacobi_direct(np.asarray(y, dtype=float), mu)


def instantaneous_jacobi(state: PhaseState, nu: float, params: SystemParams,
                         via: str = "direct") -> float:
    """Instantaneous Jacobi value of a pulsating-frame state.

    via="direct" evaluates the Jacobi expression on the pulsating
    coordinates themselves (the definition the energy layer uses);
    via="crtbp_view" first maps the state through the variable-rotating
    frame into the constant rotating frame.  The two agree exactly at e=0.
    """
    _require_frame(state, Frame.PULSATING, "instantaneous_jacobi")
    if via == "direct":
        return _kernels.jacobi_direct(state.vector(), params.mu)
    if via == "crtbp_view":
        from .frames import pulsating_to_crtbp_view
        cs = pulsating_to_crtbp_view(state, nu, params)
        return _kernels.jacobi_direct(cs.vector(), params.mu)
    raise ValueError(f"via must be 'direct' or 'crtbp_view', got {via!r}")


def effective_potential(pos, mu: float) -> float:
    """Phi = (x^2 + y^2)/2 + (1-mu)/r1 + mu/r2 on rotating-frame coordinates."""
    pos = np.asarray(pos, dtype=float)
    x, y = pos[0], pos[1]
    z = pos[2] if pos.size > 2 else 0.0
    r1 = math.sqrt((x + mu) ** 2 + y * y + z * z)
    r2 = math.sqrt((x - 1.0 + mu) ** 2 + y * y + z * z)
    return 0.5 * (x * x + y * y) + (1.0 - mu) / r1 + mu / r2


def collinear_lagrange_x(mu: float, point: str = "L2") -> float:
    """x coordinate of a collinear equilibrium, by root finding."""

    def fx(x):
        r1 = abs(x + mu)
        r2 = abs(x - 1.0 + mu)
        return (x - (1.0 - mu) * (x + mu) / r1**3
                - mu * (x - 1.0 + mu) / r2**3)

    if point == "L1":
        return brentq(fx, mu - 1.0 + 1e-9, 1.0 - mu - 1e-9, xtol=1e-14)
    if point == "L2":
        return brentq(fx, 1.0 - mu + 1e-9, 2.0, xtol=1e-14)
    if point == "L3":
        return brentq(fx, -2.0, -mu - 1e-9, xtol=1e-14)
    raise ValueError(f"point must be L1, L2, or L3, got {point!r}")


@dataclass(frozen=True)
class ToyParams:
    """Placeholder params for the toy model when using the shared kernels."""

    epsilon: float

    def kernel_params(self, eps: float = 0.0) -> np.ndarray:
        p = np.zeros(_kernels.N_PARAMS)
        p[_kernels.P_EPS] = self.epsilon
        return p
