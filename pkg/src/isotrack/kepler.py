"""Two-body machinery for the reference orbit of the primaries.

Kepler's equation, anomaly/time conversions, and the elliptic reference
solution that drives every elliptic-model formulation.  Units are
dimensionless throughout: the sum of gravitational parameters is chosen so
the mean motion is 1 (one primary revolution per 2*pi time units), and the
distance unit is set either by the periapse separation (``a_norm="peri"``,
the default, so a(1-e) = 1) or by the semi-major axis (``a_norm="sma"``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

TWO_PI = 2.0 * math.pi

#: Earth-Moon mass ratio used throughout the study.
EARTH_MOON_MU = 1.2150584270571545e-2

#: Default lunar eccentricity.  The source analysis does not state the value
#: it used; this standard mean value is a documented assumption.
DEFAULT_MOON_E = 0.0549

#: Default dimensional velocity unit (m/s per dimensionless velocity unit),
#: the Earth-Moon circular-orbit speed.
DEFAULT_VEL_UNIT_MPS = 1024.0


class KeplerConvergenceError(RuntimeError):
    """Kepler's equation failed to converge; eccentricity is likely invalid."""


@dataclass(frozen=True)
class SystemParams:
    """Physical and normalization constants for one primary-secondary pair.

    Prefer :meth:`build` (or :meth:`from_json`) over direct construction;
    they derive the dependent constants consistently.
    """

    mu: float
    e: float
    a: float
    K: float
    sigma: float
    omega: float
    vel_unit_mps: float = DEFAULT_VEL_UNIT_MPS

    def __post_init__(self):
        if not 0.0 <= self.e < 1.0:
            raise ValueError(f"eccentricity must be in [0, 1), got {self.e}")
        if not 0.0 < self.mu < 0.5:
            raise ValueError(f"mass ratio must be in (0, 0.5), got {self.mu}")
        if self.a <= 0.0:
            raise ValueError(f"semi-major axis must be positive, got {self.a}")
        sig2 = self.K * self.a * (1.0 - self.e**2)
        if abs(self.sigma**2 - sig2) > 1e-14 * max(sig2, 1.0):
            raise ValueError("sigma inconsistent with K*a*(1 - e^2)")

    @classmethod
    def build(cls, mu: float = EARTH_MOON_MU, e: float = DEFAULT_MOON_E,
              a_norm: str = "peri",
              vel_unit_mps: float = DEFAULT_VEL_UNIT_MPS) -> "SystemParams":
        """Construct params with mean motion 1 and the requested length unit."""
        if a_norm == "peri":
            a = 1.0 / (1.0 - e)
        elif a_norm == "sma":
            a = 1.0
        else:
            raise ValueError(f"a_norm must be 'peri' or 'sma', got {a_norm!r}")
        K = a**3
        sigma = math.sqrt(K * a * (1.0 - e**2))
        omega = math.sqrt(K / a**3)
        return cls(mu=mu, e=e, a=a, K=K, sigma=sigma, omega=omega,
                   vel_unit_mps=vel_unit_mps)

    @classmethod
    def from_json(cls, source) -> "SystemParams":
        """Load from a JSON config: keys mu, e, a_norm, vel_unit_mps."""
        if isinstance(source, dict):
            cfg = source
        else:
            with open(source) as fh:
                cfg = json.load(fh)
        return cls.build(
            mu=cfg.get("mu", EARTH_MOON_MU),
            e=cfg.get("e", DEFAULT_MOON_E),
            a_norm=cfg.get("a_norm", "peri"),
            vel_unit_mps=cfg.get("vel_unit_mps", DEFAULT_VEL_UNIT_MPS),
        )

    @property
    def mean_motion(self) -> float:
        return math.sqrt(self.K / self.a**3)

    @property
    def p_semilatus(self) -> float:
        return self.a * (1.0 - self.e**2)

    def kernel_params(self, eps: float = 0.0) -> np.ndarray:
        """Pack into the flat vector the numba kernels expect."""
        p = np.zeros(_kernels.N_PARAMS)
        p[_kernels.P_MU] = self.mu
        p[_kernels.P_E] = self.e
        p[_kernels.P_A] = self.a
        p[_kernels.P_K] = self.K
        p[_kernels.P_SIGMA] = self.sigma
        p[_kernels.P_OMEGA] = self.omega
        p[_kernels.P_EPS] = eps
        return p

    def circular(self) -> "SystemParams":
        """The e = 0 counterpart (the circular problem), same mass ratio."""
        return SystemParams.build(mu=self.mu, e=0.0, a_norm="sma",
                                  vel_unit_mps=self.vel_unit_mps)


@dataclass(frozen=True)
class AnomalyTriple:
    """Consistent (nu, E, M, t) tuple for one point on the reference orbit."""

    nu: float
    E: float
    M: float
    t: float


def solve_kepler(M: float, e: float) -> float:
    """Solve Kepler's equation E - e sin E = M for the eccentric anomaly.

    Newton iteration with a bisection fallback; the branch of M (its
    revolution count) is preserved on output.
    """
    if not 0.0 <= e < 1.0:
        raise ValueError(f"eccentricity must be in [0, 1), got {e}")
    if not math.isfinite(M):
        raise ValueError("mean anomaly must be finite")
    k = math.floor(M / TWO_PI)
    Mr = M - TWO_PI * k
    E = Mr + e * math.sin(Mr)
    for _ in range(50):
        f = E - e * math.sin(E) - Mr
        if abs(f) < 1e-14:
            return E + TWO_PI * k
        E -= f / (1.0 - e * math.cos(E))
    # Newton stalled; f is monotone in E so bisection on [Mr - e, Mr + e]
    # is guaranteed to bracket
    lo, hi = Mr - e, Mr + e
    flo = lo - e * math.sin(lo) - Mr
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = mid - e * math.sin(mid) - Mr
        if abs(fm) < 1e-14 or hi - lo < 1e-16:
            return mid + TWO_PI * k
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    raise KeplerConvergenceError(
        f"Kepler solve failed for M={M}, e={e}; eccentricity out of range?")


def eccentric_from_true(nu: float, e: float) -> float:
    """Eccentric anomaly from true anomaly, branch preserving."""
    return _kernels.E_from_nu(nu, e)


def true_from_eccentric(E: float, e: float) -> float:
    """True anomaly from eccentric anomaly, branch preserving."""
    return _kernels.nu_from_E(E, e)


def time_to_nu(t: float, params: SystemParams) -> float:
    """True anomaly at time t past periapse (quadrant correct, continuous)."""
    M = params.mean_motion * t
    E = solve_kepler(M, params.e)
    return true_from_eccentric(E, params.e)


def nu_to_time(nu: float, params: SystemParams) -> float:
    """Time past periapse at true anomaly nu.  Inverse of :func:`time_to_nu`."""
    E = eccentric_from_true(nu, params.e)
    M = E - params.e * math.sin(E)
    return M / params.mean_motion


def anomalies_from_time(t: float, params: SystemParams) -> AnomalyTriple:
    M = params.mean_motion * t
    E = solve_kepler(M, params.e)
    return AnomalyTriple(nu=true_from_eccentric(E, params.e), E=E, M=M, t=t)


def anomalies_from_nu(nu: float, params: SystemParams) -> AnomalyTriple:
    E = eccentric_from_true(nu, params.e)
    M = E - params.e * math.sin(E)
    return AnomalyTriple(nu=nu, E=E, M=M, t=M / params.mean_motion)


def gamma(nu: float, e: float) -> float:
    """gamma(nu) = 1 + e cos nu."""
    return 1.0 + e * math.cos(nu)


def gamma_log_derivative(nu: float, e: float) -> float:
    """phi(nu) = gamma'/gamma, the logarithmic derivative of gamma."""
    return -e * math.sin(nu) / (1.0 + e * math.cos(nu))


def radius(nu: float, params: SystemParams) -> float:
    """Instantaneous primary separation r(nu) = a(1 - e^2)/(1 + e cos nu)."""
    return params.p_semilatus / gamma(nu, params.e)


def radius_derivative(nu: float, params: SystemParams) -> float:
    """dr/dnu = -r * phi."""
    return -radius(nu, params) * gamma_log_derivative(nu, params.e)


def kepler_reference_state(nu: float, params: SystemParams):
    """Inertial position and velocity of the relative Kepler solution.

    Initial conditions put periapse on the +x axis: position a(1-e) * xhat,
    velocity sqrt(K(1+e)/(a(1-e))) * yhat.

    Returns (position, velocity) as length-3 arrays.
    """
    r = radius(nu, params)
    rp = radius_derivative(nu, params)
    nud = params.sigma / r**2
    c, s = math.cos(nu), math.sin(nu)
    pos = np.array([r * c, r * s, 0.0])
    vel = nud * np.array([rp * c - r * s, rp * s + r * c, 0.0])
    return pos, vel
