"""Bisection search for forward-asymptotic trajectories and the
section-crossing orbit tracker.

The common primitive: classify an initial velocity by which boundary of the
isolating neighborhood its trajectory exits through.  The left-exit and
right-exit sets are open, so a bracket with one endpoint in each contains a
direction whose orbit stays inside far longer than either endpoint; driven
to convergence it lands on the forward asymptotic set of the isolated
invariant set.  The tracker re-runs this bisection at every surface-of-
section crossing and applies the (tiny) velocity-only correction that puts
the orbit back on the asymptotic set.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .integrate import (DEFAULT_ATOL, DEFAULT_EXIT_BUDGET, DEFAULT_RTOL,
                        EventSpec, NoCrossingError, next_section_crossing)
from .kepler import SystemParams
from .models import CollisionError, ModelKind, effective_potential
from .neighborhood import NeighborhoodSpec, speed_from_jacobi

LEFT, RIGHT, REMAINS = "Left", "Right", "Remains"


class BracketError(ValueError):
    """Bisection endpoints do not classify to opposite exit faces."""


@dataclass(frozen=True)
class VelocityCircleProbe:
    """One in-plane velocity direction on the circle at a planar base point."""

    base_point: tuple
    c_target: float
    nu0: float
    angle: float

    def direction(self) -> np.ndarray:
        return np.array([math.cos(self.angle), math.sin(self.angle), 0.0])


@dataclass(frozen=True)
class VelocitySphereProbe:
    """One velocity direction on the sphere at a spatial base point."""

    base_point: tuple
    c_target: float
    nu0: float
    direction: tuple

    def unit(self) -> np.ndarray:
        d = np.asarray(self.direction, dtype=float)
        n = np.linalg.norm(d)
        if abs(n - 1.0) > 1e-12:
            raise ValueError("sphere probe direction must be a unit vector")
        return d


class _Classifier:
    """Precompiled exit classification for one (model, params, region)."""

    def __init__(self, model: ModelKind, params: SystemParams,
                 nspec: NeighborhoodSpec,
                 budget: float = DEFAULT_EXIT_BUDGET,
                 rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL):
        self.model = int(model)
        self.params = params
        self.pvec = params.kernel_params()
        self.nspec = nspec
        region = nspec.region(params.mu)
        self.kinds, self.pars = region.compiled(6)
        self.labels = region.labels
        self.budget = budget
        self.rtol = rtol
        self.atol = atol
        self.n_probes = 0
        self.exit_c_min = math.inf
        self.exit_c_max = -math.inf

    def classify(self, state, s0: float, sense: float = 1.0):
        """Exit face label for the trajectory from (s0, state).

        sense +1 integrates forward, -1 backward.  Returns (label, exit_s).
        """
        y0 = np.asarray(state, dtype=float)
        y_exit = np.empty(6)
        s_end = s0 + sense * self.budget
        status, s_exit, _, _, _, _ = _kernels.propagate_until_exit(
            self.model, self.pvec, s0, y0, s_end, self.rtol, self.atol,
            self.kinds, self.pars, False, 0.0, 0.0, y_exit)
        if status == _kernels.STAT_ERR_COLLISION:
            raise CollisionError(f"probe fell onto a primary near s={s_exit}")
        if status < 0:
            raise RuntimeError(f"probe propagation failed (status {status})")
        self.n_probes += 1
        if status > 0:
            c = _kernels.jacobi_direct(y_exit, self.params.mu)
            self.exit_c_min = min(self.exit_c_min, c)
            self.exit_c_max = max(self.exit_c_max, c)
            return self.labels[status - 1], s_exit
        return REMAINS, s_exit


def _probe_state(base_point, c_target, direction3, mu, speed=None):
    pos = np.array([base_point[0], base_point[1],
                    base_point[2] if len(base_point) > 2 else 0.0])
    if speed is None:
        speed = speed_from_jacobi(pos, c_target, mu)
    return np.concatenate([pos, speed * np.asarray(direction3, dtype=float)])


def classify_velocity(probe, nspec: NeighborhoodSpec, model: ModelKind,
                      params: SystemParams, direction: str = "forward",
                      budget: float = DEFAULT_EXIT_BUDGET,
                      rtol: float = DEFAULT_RTOL,
                      atol: float = DEFAULT_ATOL) -> str:
    """Exit-face label (Left / Right / Remains) for a velocity probe."""
    cls = _Classifier(model, params, nspec, budget, rtol, atol)
    if isinstance(probe, VelocityCircleProbe):
        d = probe.direction()
    else:
        d = probe.unit()
    y0 = _probe_state(probe.base_point, probe.c_target, d, params.mu)
    sense = 1.0 if direction == "forward" else -1.0
    label, _ = cls.classify(y0, probe.nu0, sense)
    return label


@dataclass
class CircleBisection:
    """Converged left/right boundary on a velocity circle."""

    angle: float
    bracket: tuple
    n_iter: int
    dwell: float
    dwell_history: list
    base_point: tuple
    c_target: float
    nu0: float
    speed: float

    def state_vector(self, mu: float) -> np.ndarray:
        return _probe_state(self.base_point, self.c_target,
                            (math.cos(self.angle), math.sin(self.angle), 0.0),
                            mu, speed=self.speed)


def find_circle_brackets(base_point, C: float, nu0: float, model: ModelKind,
                         params: SystemParams, nspec: NeighborhoodSpec,
                         n_scan: int = 90,
                         budget: float = DEFAULT_EXIT_BUDGET,
                         rtol: float = DEFAULT_RTOL,
                         atol: float = DEFAULT_ATOL):
    """Scan the velocity circle and return (angle_a, angle_b) sign-change
    brackets whose endpoints classify Left and Right."""
    cls = _Classifier(model, params, nspec, budget, rtol, atol)
    mu = params.mu
    angles = np.linspace(0.0, 2.0 * math.pi, n_scan, endpoint=False)
    labels = []
    for a in angles:
        y0 = _probe_state(base_point, C, (math.cos(a), math.sin(a), 0.0), mu)
        labels.append(cls.classify(y0, nu0)[0])
    brackets = []
    for i in range(n_scan):
        a, b = labels[i], labels[(i + 1) % n_scan]
        if {a, b} == {LEFT, RIGHT}:
            brackets.append((angles[i], angles[i] + 2.0 * math.pi / n_scan))
    return brackets


def bisect_circle_boundary(base_point, C: float, nu0: float,
                           model: ModelKind, params: SystemParams,
                           nspec: NeighborhoodSpec, bracket,
                           tol_angle: float = 1e-12,
                           budget: float = DEFAULT_EXIT_BUDGET,
                           rtol: float = DEFAULT_RTOL,
                           atol: float = DEFAULT_ATOL) -> CircleBisection:
    """Bisect a velocity-circle bracket down to the left/right exit boundary.

    The bracket endpoints must classify to opposite faces; the invariant is
    maintained every iteration.  A midpoint that outlives the exit budget is
    accepted immediately (it is on the asymptotic set to working precision).
    """
    cls = _Classifier(model, params, nspec, budget, rtol, atol)
    mu = params.mu
    speed = speed_from_jacobi(
        np.array([base_point[0], base_point[1], 0.0]), C, mu)

    def classify_angle(a):
        y0 = _probe_state(base_point, C, (math.cos(a), math.sin(a), 0.0),
                          mu, speed=speed)
        return cls.classify(y0, nu0)

    lo, hi = float(bracket[0]), float(bracket[1])
    lab_lo, s_lo = classify_angle(lo)
    lab_hi, s_hi = classify_angle(hi)
    if {lab_lo, lab_hi} != {LEFT, RIGHT}:
        raise BracketError(
            f"endpoints classify {lab_lo}/{lab_hi}; need one Left, one Right")
    dwell_history = [max(abs(s_lo - nu0), abs(s_hi - nu0))]
    n = 0
    mid = 0.5 * (lo + hi)
    while hi - lo > tol_angle:
        mid = 0.5 * (lo + hi)
        lab, s_exit = classify_angle(mid)
        n += 1
        if lab == REMAINS:
            lo = hi = mid
            dwell_history.append(abs(s_exit - nu0))
            break
        dwell_history.append(abs(s_exit - nu0))
        if lab == lab_lo:
            lo = mid
        else:
            hi = mid
    lab, s_exit = classify_angle(mid)
    return CircleBisection(angle=mid, bracket=(lo, hi), n_iter=n,
                           dwell=abs(s_exit - nu0),
                           dwell_history=dwell_history,
                           base_point=tuple(base_point), c_target=C, nu0=nu0,
                           speed=speed)


@dataclass
class SphereExitMap:
    """Left/Right/Remains classification over a sphere of velocities."""

    base_point: tuple
    c_target: float
    nu0: float
    speed: float
    azimuth: np.ndarray
    polar: np.ndarray
    forward: np.ndarray   # (n_polar, n_azimuth) int8: 0 Remains, 1 Left, 2 Right
    backward: np.ndarray

    @staticmethod
    def direction(az: float, pol: float) -> np.ndarray:
        cp = math.cos(pol)
        return np.array([cp * math.cos(az), cp * math.sin(az), math.sin(pol)])


_LABEL_CODE = {REMAINS: 0, LEFT: 1, RIGHT: 2}


def sphere_exit_sets(base_point, C: float, nu0: float, model: ModelKind,
                     params: SystemParams, nspec: NeighborhoodSpec,
                     n_azimuth: int = 48, n_polar: int = 24,
                     budget: float = DEFAULT_EXIT_BUDGET,
                     rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
                     jobs: int = 1) -> SphereExitMap:
    """Classify every direction on a velocity sphere, forward and backward."""
    cls = _Classifier(model, params, nspec, budget, rtol, atol)
    mu = params.mu
    pos = np.array([base_point[0], base_point[1], 0.0])
    speed = speed_from_jacobi(pos, C, mu)
    azimuth = np.linspace(0.0, 2.0 * math.pi, n_azimuth, endpoint=False)
    polar = (-0.5 * math.pi
             + (np.arange(n_polar) + 0.5) * math.pi / n_polar)
    fwd = np.zeros((n_polar, n_azimuth), dtype=np.int8)
    bwd = np.zeros((n_polar, n_azimuth), dtype=np.int8)

    def run_cell(ij):
        i, j = ij
        d = SphereExitMap.direction(azimuth[j], polar[i])
        y0 = np.concatenate([pos, speed * d])
        lf, _ = cls.classify(y0, nu0, 1.0)
        lb, _ = cls.classify(y0, nu0, -1.0)
        return i, j, _LABEL_CODE[lf], _LABEL_CODE[lb]

    cells = [(i, j) for i in range(n_polar) for j in range(n_azimuth)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_cell, cells, chunksize=8))
    else:
        results = [run_cell(c) for c in cells]
    for i, j, cf, cb in results:
        fwd[i, j] = cf
        bwd[i, j] = cb
    return SphereExitMap(base_point=tuple(base_point), c_target=C, nu0=nu0,
                         speed=speed, azimuth=azimuth, polar=polar,
                         forward=fwd, backward=bwd)


@dataclass(frozen=True)
class IntersectionState:
    """A direction on both the forward and backward exit boundaries."""

    azimuth: float
    polar: float
    direction: np.ndarray
    state: np.ndarray
    nu0: float
    c_target: float


def boundary_intersection_states(smap: SphereExitMap, model: ModelKind,
                                 params: SystemParams,
                                 nspec: NeighborhoodSpec,
                                 refine_tol: float = 1e-11,
                                 budget: float = DEFAULT_EXIT_BUDGET,
                                 rtol: float = DEFAULT_RTOL,
                                 atol: float = DEFAULT_ATOL):
    """Intersect the forward and backward left/right boundaries on the sphere.

    Grid cells whose corners show a left/right flip in both time senses are
    refined: the forward boundary azimuth is located by bisection on each
    polar line, and the polar angle is then bisected on the backward label
    along that curve.  The refined directions start orbits that remain in
    the neighborhood in both time directions.
    """
    cls = _Classifier(model, params, nspec, budget, rtol, atol)
    mu = params.mu
    pos = np.array([smap.base_point[0], smap.base_point[1], 0.0])
    speed = smap.speed

    memo = {}

    def label(az, pol, sense):
        key = (round(az, 14), round(pol, 14), sense)
        if key not in memo:
            d = SphereExitMap.direction(az, pol)
            y0 = np.concatenate([pos, speed * d])
            memo[key] = cls.classify(y0, smap.nu0, sense)[0]
        return memo[key]

    def fwd_boundary_az(pol, az_a, az_b):
        """Bisect the forward flip in azimuth on one polar line.

        Returns the boundary azimuth, or None when the line does not
        bracket a left/right flip.
        """
        la = label(az_a, pol, 1.0)
        lb = label(az_b, pol, 1.0)
        if {la, lb} != {LEFT, RIGHT}:
            return None
        a, b = az_a, az_b
        for _ in range(50):
            m = 0.5 * (a + b)
            lm = label(m, pol, 1.0)
            if lm == la:
                a = m
            else:
                b = m
            if b - a < refine_tol:
                break
        return 0.5 * (a + b)

    n_pol, n_az = smap.forward.shape
    daz = smap.azimuth[1] - smap.azimuth[0] if n_az > 1 else 2.0 * math.pi
    found = []
    for i in range(n_pol - 1):
        for j in range(n_az):
            j2 = (j + 1) % n_az
            az_lo = smap.azimuth[j]
            az_hi = smap.azimuth[j] + daz
            f = {smap.forward[i, j], smap.forward[i, j2],
                 smap.forward[i + 1, j], smap.forward[i + 1, j2]}
            b = {smap.backward[i, j], smap.backward[i, j2],
                 smap.backward[i + 1, j], smap.backward[i + 1, j2]}
            if not ({1, 2} <= f and {1, 2} <= b):
                continue
            # require a forward flip in azimuth on both polar lines so the
            # forward boundary is az-parameterizable across the cell
            if (smap.forward[i, j] == smap.forward[i, j2]
                    or smap.forward[i + 1, j] == smap.forward[i + 1, j2]):
                continue
            if 0 in (smap.forward[i, j], smap.forward[i, j2],
                     smap.forward[i + 1, j], smap.forward[i + 1, j2]):
                continue

            az0 = fwd_boundary_az(smap.polar[i], az_lo, az_hi)
            az1 = fwd_boundary_az(smap.polar[i + 1], az_lo, az_hi)
            if az0 is None or az1 is None:
                continue
            b0 = label(az0, smap.polar[i], -1.0)
            b1 = label(az1, smap.polar[i + 1], -1.0)
            if b0 == b1 or REMAINS in (b0, b1):
                continue
            p_lo, p_hi = smap.polar[i], smap.polar[i + 1]
            azc = az0
            for _ in range(50):
                pm = 0.5 * (p_lo + p_hi)
                az_m = fwd_boundary_az(pm, az_lo, az_hi)
                if az_m is None:
                    break
                azc = az_m
                bm = label(azc, pm, -1.0)
                if bm == REMAINS:
                    break
                if bm == b0:
                    p_lo = pm
                else:
                    p_hi = pm
                if p_hi - p_lo < refine_tol:
                    break
            pol_star = 0.5 * (p_lo + p_hi)
            az_star = azc
            d = SphereExitMap.direction(az_star, pol_star)
            found.append(IntersectionState(
                azimuth=az_star, polar=pol_star, direction=d,
                state=np.concatenate([pos, speed * d]),
                nu0=smap.nu0, c_target=smap.c_target))
    # deduplicate near-identical directions from neighboring cells
    unique = []
    for st in found:
        if all(np.linalg.norm(st.direction - u.direction) > 1e-6
               for u in unique):
            unique.append(st)
    return unique


def _code_label(code: int) -> str:
    return (REMAINS, LEFT, RIGHT)[int(code)]


def _rotate_about(d, w, alpha):
    """Rodrigues rotation of unit d about unit axis w (w perpendicular to d)."""
    return d * math.cos(alpha) + np.cross(w, d) * math.sin(alpha)


@dataclass
class CrossingRecord:
    """One surface-of-section crossing with its velocity correction."""

    index: int
    s: float
    state_before: np.ndarray
    state_after: np.ndarray
    dv: np.ndarray
    dv_mag: float
    speed: float
    cross_sign: int
    n_probes: int


@dataclass
class TrackingRun:
    """Full record of one orbit-tracking run."""

    model: ModelKind
    base_point: tuple
    nu0: float
    c_target: float
    section_coord: str
    crossings: list
    total_dv: float
    total_dv_mps: float
    exit_c_min: float
    exit_c_max: float
    status: str
    n_probes: int
    revolutions_as_crossings: int
    revolutions_as_full_revs: float

    def summary(self) -> dict:
        return {
            "model": self.model.name,
            "base_point": list(self.base_point),
            "nu0": self.nu0,
            "c_target": self.c_target,
            "section": self.section_coord,
            "n_crossings": len(self.crossings),
            "revolutions_as_crossings": self.revolutions_as_crossings,
            "revolutions_as_full_revs": self.revolutions_as_full_revs,
            "total_dv": self.total_dv,
            "total_dv_mps": self.total_dv_mps,
            "exit_c_min": self.exit_c_min,
            "exit_c_max": self.exit_c_max,
            "status": self.status,
            "n_probes": self.n_probes,
        }


_SECTION_INDEX = {"y": 1, "z": 2}


def track_orbit(initial_state, s0: float, model: ModelKind,
                params: SystemParams, nspec: NeighborhoodSpec,
                c_target: float, section: str = "y",
                n_crossings: int = 100,
                speed_policy: str | None = None,
                tol_angle: float = 1e-13,
                budget: float = DEFAULT_EXIT_BUDGET,
                section_budget: float = 20.0 * math.pi,
                rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
                base_point=None) -> TrackingRun:
    """Track the periodic/quasiperiodic orbit shadowed by an asymptotic state.

    At every crossing of the section plane the one-parameter velocity family
    is re-bisected to re-acquire the asymptotic set and the resulting
    velocity-only correction is applied; positions are never touched.  The
    speed of the corrected velocity comes from the Jacobi constant in the
    CRTBP (speed_policy="jacobi") and from the incoming crossing speed in
    the ERTBP (speed_policy="preserve"); the default picks by model.
    """
    if section not in _SECTION_INDEX:
        raise ValueError("section must be 'y' or 'z'")
    if speed_policy is None:
        speed_policy = "jacobi" if model is ModelKind.CRTBP else "preserve"
    if speed_policy not in ("jacobi", "preserve"):
        raise ValueError("speed_policy must be 'jacobi' or 'preserve'")
    idx = _SECTION_INDEX[section]
    sec_event = EventSpec.section(idx, 0.0, 0)
    cls = _Classifier(model, params, nspec, budget, rtol, atol)
    mu = params.mu

    y = np.asarray(initial_state, dtype=float).copy()
    s = float(s0)
    crossings = []
    status = "completed"
    planar = section == "y"
    last_width = 1e-4

    for k in range(n_crossings):
        try:
            s_c, y_c = next_section_crossing(model, params, y, s, sec_event,
                                             budget=section_budget,
                                             rtol=rtol, atol=atol)
        except NoCrossingError:
            status = "no_crossing"
            break
        v_in = y_c[3:6].copy()
        speed_in = float(np.linalg.norm(v_in))
        if speed_policy == "jacobi":
            speed_c = speed_from_jacobi(y_c[:3], c_target, mu)
        else:
            speed_c = speed_in

        probes_before = cls.n_probes
        if planar:
            v_new, ok = _correct_planar(cls, y_c, s_c, v_in, speed_c,
                                        last_width, tol_angle)
        else:
            v_new, ok = _correct_spatial(cls, y_c, s_c, v_in, speed_c,
                                         last_width, tol_angle)
        nuse = cls.n_probes - probes_before
        if not ok:
            status = "escaped"
            break
        last_width = max(8.0 * float(np.linalg.norm(
            v_new / max(np.linalg.norm(v_new), 1e-300) - v_in / speed_in)),
            64.0 * tol_angle)
        y_after = y_c.copy()
        y_after[3:6] = v_new
        dv = v_new - v_in
        if idx < 3:
            cross_sign = int(math.copysign(1.0, v_in[idx]))
        else:
            cross_sign = 0
        crossings.append(CrossingRecord(
            index=k, s=s_c, state_before=y_c, state_after=y_after,
            dv=dv, dv_mag=float(np.linalg.norm(dv)), speed=speed_c,
            cross_sign=cross_sign, n_probes=nuse))
        y = y_after
        s = s_c

    total_dv = math.fsum(c.dv_mag for c in crossings)
    return TrackingRun(
        model=model, base_point=tuple(base_point) if base_point is not None
        else tuple(np.asarray(initial_state, dtype=float)[:2]),
        nu0=s0, c_target=c_target, section_coord=section,
        crossings=crossings, total_dv=total_dv,
        total_dv_mps=total_dv * params.vel_unit_mps,
        exit_c_min=cls.exit_c_min, exit_c_max=cls.exit_c_max,
        status=status, n_probes=cls.n_probes,
        revolutions_as_crossings=len(crossings),
        revolutions_as_full_revs=0.5 * len(crossings))


def _correct_planar(cls, y_c, s_c, v_in, speed_c, width0, tol_angle):
    """Bisect the in-plane angle family around the incoming direction."""
    phi_in = math.atan2(v_in[1], v_in[0])

    def classify(phi):
        y = y_c.copy()
        y[3] = speed_c * math.cos(phi)
        y[4] = speed_c * math.sin(phi)
        y[5] = 0.0
        return cls.classify(y, s_c)[0]

    def vec(phi):
        return np.array([speed_c * math.cos(phi), speed_c * math.sin(phi), 0.0])

    delta = max(width0, 64.0 * tol_angle)
    for _ in range(40):
        la = classify(phi_in - delta)
        lb = classify(phi_in + delta)
        if la == REMAINS:
            return vec(phi_in - delta), True
        if lb == REMAINS:
            return vec(phi_in + delta), True
        if la != lb:
            break
        delta *= 8.0
        if delta > 1.5:
            return v_in, False
    else:
        return v_in, False

    lo, hi = phi_in - delta, phi_in + delta
    la_lo = la
    while hi - lo > tol_angle:
        mid = 0.5 * (lo + hi)
        lm = classify(mid)
        if lm == REMAINS:
            return vec(mid), True
        if lm == la_lo:
            lo = mid
        else:
            hi = mid
    return vec(0.5 * (lo + hi)), True


def _correct_spatial(cls, y_c, s_c, v_in, speed_c, width0, tol_angle):
    """Bisect a great-circle family through the incoming direction.

    Two orthogonal probe arcs are tried; the first whose endpoints classify
    to opposite faces is bisected.
    """
    d_in = v_in / np.linalg.norm(v_in)
    w1 = np.cross(d_in, np.array([0.0, 0.0, 1.0]))
    if np.linalg.norm(w1) < 1e-8:
        w1 = np.cross(d_in, np.array([1.0, 0.0, 0.0]))
    w1 /= np.linalg.norm(w1)
    w2 = np.cross(d_in, w1)
    w2 /= np.linalg.norm(w2)

    def classify(d):
        y = y_c.copy()
        y[3:6] = speed_c * d
        return cls.classify(y, s_c)[0]

    delta = max(width0, 64.0 * tol_angle)
    for _ in range(40):
        for w in (w1, w2):
            la = classify(_rotate_about(d_in, w, -delta))
            lb = classify(_rotate_about(d_in, w, delta))
            if la == REMAINS:
                return speed_c * _rotate_about(d_in, w, -delta), True
            if lb == REMAINS:
                return speed_c * _rotate_about(d_in, w, delta), True
            if la != lb:
                lo, hi = -delta, delta
                la_lo = la
                while hi - lo > tol_angle:
                    mid = 0.5 * (lo + hi)
                    lm = classify(_rotate_about(d_in, w, mid))
                    if lm == REMAINS:
                        return speed_c * _rotate_about(d_in, w, mid), True
                    if lm == la_lo:
                        lo = mid
                    else:
                        hi = mid
                d_star = _rotate_about(d_in, w, 0.5 * (lo + hi))
                return speed_c * d_star, True
        delta *= 8.0
        if delta > 1.5:
            return v_in, False
    return v_in, False


def section_points(run: TrackingRun, coords=("x", "vx"),
                   cross_sign: int | None = None,
                   after_correction: bool = True) -> np.ndarray:
    """Section-plane coordinate pairs from a tracking run.

    coords picks two of x, y, z, vx, vy, vz; cross_sign filters on the sign
    of the section coordinate's derivative at the crossing.
    """
    cmap = {"x": 0, "y": 1, "z": 2, "vx": 3, "vy": 4, "vz": 5}
    i, j = cmap[coords[0]], cmap[coords[1]]
    rows = []
    for c in run.crossings:
        if cross_sign is not None and c.cross_sign != cross_sign:
            continue
        st = c.state_after if after_correction else c.state_before
        rows.append((st[i], st[j]))
    return np.array(rows) if rows else np.empty((0, 2))
