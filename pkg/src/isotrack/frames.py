"""Transformations among the inertial, constant rotating, variable rotating,
and pulsating coordinate systems.

Conventions:

* R(theta) is the counterclockwise rotation about z; all frames share the
  z axis, so z and its velocity pass through planar rotations unchanged.
* The pulsating frame scales positions by the instantaneous primary
  separation: X = r(nu) * u.  (One summary line in the source material has
  this inverted as X = u/r; the derivation's X = r u is the version that
  makes the circular limit the identity and makes cross-model propagation
  agree, so that is what is implemented.)
* Velocity conversions always carry the full chain rule, including the
  r'(nu) term and dnu/dt = sigma / r^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kepler import (SystemParams, gamma, gamma_log_derivative, nu_to_time,
                     radius, time_to_nu)
from .models import Frame, FrameError, PhaseState, _require_frame

_A = np.array([[0.0, -1.0, 0.0],
               [1.0, 0.0, 0.0],
               [0.0, 0.0, 0.0]])


def _rotz(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class RotationContext:
    """Cached per-epoch quantities shared by the transforms."""

    nu: float
    t: float
    r: float
    r_prime: float
    omega: float

    @classmethod
    def at_nu(cls, nu: float, params: SystemParams) -> "RotationContext":
        r = radius(nu, params)
        return cls(nu=nu, t=nu_to_time(nu, params), r=r,
                   r_prime=-r * gamma_log_derivative(nu, params.e),
                   omega=params.omega)

    @classmethod
    def at_time(cls, t: float, params: SystemParams) -> "RotationContext":
        nu = time_to_nu(t, params)
        r = radius(nu, params)
        return cls(nu=nu, t=t, r=r,
                   r_prime=-r * gamma_log_derivative(nu, params.e),
                   omega=params.omega)


def constant_rotating_to_inertial(state: PhaseState, t: float,
                                  params: SystemParams) -> PhaseState:
    """Q = R(omega t) X,  Qdot = Rdot X + R Xdot."""
    _require_frame(state, Frame.CONSTANT_ROTATING,
                   "constant_rotating_to_inertial")
    R = _rotz(params.omega * t)
    pos = R @ state.pos
    vel = R @ (params.omega * (_A @ state.pos) + state.vel)
    return PhaseState(s=t, pos=pos, vel=vel, frame=Frame.INERTIAL)


def inertial_to_constant_rotating(state: PhaseState, t: float,
                                  params: SystemParams) -> PhaseState:
    _require_frame(state, Frame.INERTIAL, "inertial_to_constant_rotating")
    Rt = _rotz(-params.omega * t)
    pos = Rt @ state.pos
    vel = Rt @ state.vel - params.omega * (_A @ pos)
    return PhaseState(s=t, pos=pos, vel=vel, frame=Frame.CONSTANT_ROTATING)


def variable_to_constant_rotating(state: PhaseState, nu: float,
                                  params: SystemParams) -> PhaseState:
    """Re-express a nu-parameterized rotating state at time t(nu).

    The frames differ by the rotation R(nu - omega t); velocities convert
    from per-nu to per-time derivatives via dnu/dt = sigma / r^2.
    """
    _require_frame(state, Frame.VARIABLE_ROTATING,
                   "variable_to_constant_rotating")
    ctx = RotationContext.at_nu(nu, params)
    nudot = params.sigma / ctx.r**2
    R = _rotz(nu - params.omega * ctx.t)
    pos = R @ state.pos
    vel = R @ (nudot * (_A @ state.pos + state.vel)) \
        - params.omega * (_A @ pos)
    return PhaseState(s=ctx.t, pos=pos, vel=vel,
                      frame=Frame.CONSTANT_ROTATING)


def constant_to_variable_rotating(state: PhaseState, t: float,
                                  params: SystemParams) -> PhaseState:
    _require_frame(state, Frame.CONSTANT_ROTATING,
                   "constant_to_variable_rotating")
    ctx = RotationContext.at_time(t, params)
    nudot = params.sigma / ctx.r**2
    Rt = _rotz(-(ctx.nu - params.omega * t))
    pos = Rt @ state.pos
    vel = Rt @ (state.vel + params.omega * (_A @ state.pos)) / nudot \
        - _A @ pos
    return PhaseState(s=ctx.nu, pos=pos, vel=vel,
                      frame=Frame.VARIABLE_ROTATING)


def pulsating_to_variable_rotating(state: PhaseState, nu: float,
                                   params: SystemParams) -> PhaseState:
    """X = r u,  X' = r u' + r' u, with r' = -r * gamma'/gamma."""
    _require_frame(state, Frame.PULSATING, "pulsating_to_variable_rotating")
    r = radius(nu, params)
    rp = -r * gamma_log_derivative(nu, params.e)
    pos = r * state.pos
    vel = r * state.vel + rp * state.pos
    return PhaseState(s=nu, pos=pos, vel=vel, frame=Frame.VARIABLE_ROTATING)


def variable_to_pulsating(state: PhaseState, nu: float,
                          params: SystemParams) -> PhaseState:
    _require_frame(state, Frame.VARIABLE_ROTATING, "variable_to_pulsating")
    r = radius(nu, params)
    rp = -r * gamma_log_derivative(nu, params.e)
    pos = state.pos / r
    vel = (state.vel - rp * pos) / r
    return PhaseState(s=nu, pos=pos, vel=vel, frame=Frame.PULSATING)


def pulsating_to_crtbp_view(state: PhaseState, nu: float,
                            params: SystemParams) -> PhaseState:
    """Composition pulsating -> variable rotating -> constant rotating."""
    _require_frame(state, Frame.PULSATING, "pulsating_to_crtbp_view")
    return variable_to_constant_rotating(
        pulsating_to_variable_rotating(state, nu, params), nu, params)


def crtbp_view_to_pulsating(state: PhaseState, t: float,
                            params: SystemParams) -> PhaseState:
    _require_frame(state, Frame.CONSTANT_ROTATING, "crtbp_view_to_pulsating")
    vr = constant_to_variable_rotating(state, t, params)
    return variable_to_pulsating(vr, vr.s, params)


def to_inertial(state: PhaseState, params: SystemParams) -> PhaseState:
    """Map any tagged state to the inertial frame using its own s value."""
    if state.frame is Frame.INERTIAL:
        return state
    if state.frame is Frame.CONSTANT_ROTATING:
        return constant_rotating_to_inertial(state, state.s, params)
    if state.frame is Frame.VARIABLE_ROTATING:
        return to_inertial(
            variable_to_constant_rotating(state, state.s, params), params)
    if state.frame is Frame.PULSATING:
        return to_inertial(
            pulsating_to_variable_rotating(state, state.s, params), params)
    raise FrameError(f"unknown frame {state.frame}")


def from_inertial(state: PhaseState, target: Frame, t: float,
                  params: SystemParams) -> PhaseState:
    _require_frame(state, Frame.INERTIAL, "from_inertial")
    if target is Frame.INERTIAL:
        return state
    cs = inertial_to_constant_rotating(state, t, params)
    if target is Frame.CONSTANT_ROTATING:
        return cs
    vr = constant_to_variable_rotating(cs, t, params)
    if target is Frame.VARIABLE_ROTATING:
        return vr
    if target is Frame.PULSATING:
        return variable_to_pulsating(vr, vr.s, params)
    raise FrameError(f"unknown frame {target}")


def convert_state(state: PhaseState, target: Frame,
                  params: SystemParams) -> PhaseState:
    """General frame change; the state's own s fixes the epoch."""
    if state.frame is target:
        return state
    inert = to_inertial(state, params)
    return from_inertial(inert, target, inert.s, params)


def convert_trajectory(s: np.ndarray, states: np.ndarray, source: Frame,
                       target: Frame, params: SystemParams):
    """Convert a sampled trajectory between frames, row by row.

    Returns (s_converted, states_converted); the independent variable
    switches between time and true anomaly as the target frame requires.
    """
    out_s = np.empty_like(np.asarray(s, dtype=float))
    out = np.empty_like(np.asarray(states, dtype=float))
    for i in range(out_s.size):
        st = PhaseState.from_vector(float(s[i]), states[i], source)
        cv = convert_state(st, target, params)
        out_s[i] = cv.s
        out[i] = cv.vector()
    return out_s, out
