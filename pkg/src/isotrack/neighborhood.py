"""Isolating-neighborhood geometry and the boundary-verification sweep.

The neighborhood N around L2 is the region between two cylinders: an inner
one of radius r_inner centered on the barycenter (its crossing is a "Left"
exit, toward the primaries) and an outer one of radius r_outer centered on
the secondary (a "Right" exit, away from the system).  In phase space N is
completed by an energy layer: the instantaneous Jacobi value must lie in
[c_low, c_high].

Verification integrates boundary-tangent states forward and backward; the
neighborhood passes when every tangent state exits through the boundary it
started on, across all requested epochs and energies.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .integrate import (DEFAULT_ATOL, DEFAULT_EXIT_BUDGET, DEFAULT_RTOL,
                        EventSpec, RegionSpec, propagate_until_exit)
from .kepler import SystemParams
from .models import (Frame, ModelKind, PhaseState, _require_frame,
                     effective_potential, instantaneous_jacobi)


class ForbiddenRegionError(ValueError):
    """Position is inside the Hill-region-forbidden zone for the given C."""


@dataclass(frozen=True)
class NeighborhoodSpec:
    """Cylinder pair plus Jacobi layer defining the search region N."""

    r_inner: float = 1.02
    r_outer: float = 0.35
    c_low: float = 3.10
    c_high: float = 3.17
    z_extent: float = 0.30

    def __post_init__(self):
        if self.c_low > self.c_high:
            raise ValueError("c_low must not exceed c_high")

    @classmethod
    def crtbp_default(cls) -> "NeighborhoodSpec":
        """The circular-problem boundaries (inner radius 0.993)."""
        return cls(r_inner=0.993)

    @classmethod
    def ertbp_default(cls) -> "NeighborhoodSpec":
        """The elliptic-problem boundaries (inner radius moved out to 1.02)."""
        return cls(r_inner=1.02)

    def outer_center(self, mu: float):
        return (1.0 - mu, 0.0)

    def region(self, mu: float) -> RegionSpec:
        """The two cylinder events, labeled Left (inner) and Right (outer)."""
        return RegionSpec(
            events=(EventSpec.cylinder((0.0, 0.0), self.r_inner, "outside"),
                    EventSpec.cylinder(self.outer_center(mu), self.r_outer,
                                       "inside")),
            labels=("Left", "Right"))

    def boundary_position(self, boundary: str, theta: float, z: float,
                          mu: float) -> np.ndarray:
        if boundary == "inner":
            cx, cy, r = 0.0, 0.0, self.r_inner
        elif boundary == "outer":
            cx, cy = self.outer_center(mu)
            r = self.r_outer
        else:
            raise ValueError(f"boundary must be 'inner' or 'outer', got {boundary!r}")
        return np.array([cx + r * math.cos(theta), cy + r * math.sin(theta), z])


def speed_from_jacobi(position, C: float, mu: float) -> float:
    """Speed s = sqrt(2 Phi - C) at a rotating/pulsating-frame position."""
    s2 = 2.0 * effective_potential(position, mu) - C
    if s2 < 0.0:
        if s2 > -1e-13:
            return 0.0
        raise ForbiddenRegionError(
            f"position {tuple(np.asarray(position))} lies in the forbidden "
            f"region for C={C} (2*Phi - C = {s2:.3e})")
    return math.sqrt(s2)


@dataclass(frozen=True)
class GridSpec:
    """Tangent-grid resolution.

    n_z = 1 keeps the grid planar (z = 0); n_pitch distributes the spatial
    speed between the in-plane tangential and vertical components.
    """

    n_theta: int = 720
    n_z: int = 1
    n_pitch: int = 1
    both_directions: bool = True

    def __post_init__(self):
        if min(self.n_theta, self.n_z, self.n_pitch) < 1:
            raise ValueError("grid sizes must be >= 1")


@dataclass(frozen=True)
class TangentState:
    """One boundary-tangent initial condition.

    The velocity is speed * (cos(pitch) that + sin(pitch) zhat) with
    that the in-plane tangential direction phi_v = theta +/- pi/2, so it is
    orthogonal to the cylinder's radial normal by construction.
    """

    boundary: str
    r: float
    theta: float
    z: float
    speed: float
    phi_v: float
    pitch: float
    nu0: float
    position: np.ndarray

    def velocity(self) -> np.ndarray:
        cp = math.cos(self.pitch)
        return self.speed * np.array([cp * math.cos(self.phi_v),
                                      cp * math.sin(self.phi_v),
                                      math.sin(self.pitch)])

    def state_vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity()])


def tangent_grid(boundary: str, spec: NeighborhoodSpec, grid: GridSpec,
                 C: float, nu0: float, mu: float,
                 skip_forbidden: bool = True):
    """Tangent states over a (theta, z, pitch, direction) grid on a cylinder.

    Nodes where the requested C leaves no admissible speed (outside the
    instantaneous Hill region) are skipped when skip_forbidden is set and
    counted in the second return value; otherwise they raise.
    """
    states = []
    skipped = 0
    thetas = np.linspace(0.0, 2.0 * math.pi, grid.n_theta, endpoint=False)
    if grid.n_z == 1:
        zs = np.array([0.0])
    else:
        zs = np.linspace(-spec.z_extent, spec.z_extent, grid.n_z)
    # midpoint pitch samples avoid the duplicate pure-vertical directions
    pitches = (-0.5 * math.pi
               + (np.arange(grid.n_pitch) + 0.5) * math.pi / grid.n_pitch)
    signs = (1.0, -1.0) if grid.both_directions else (1.0,)
    for theta in thetas:
        for z in zs:
            pos = spec.boundary_position(boundary, theta, z, mu)
            try:
                speed = speed_from_jacobi(pos, C, mu)
            except ForbiddenRegionError:
                if not skip_forbidden:
                    raise
                skipped += len(pitches) * len(signs)
                continue
            for pitch in pitches:
                for sign in signs:
                    phi_v = theta + sign * 0.5 * math.pi
                    states.append(TangentState(
                        boundary=boundary,
                        r=spec.r_inner if boundary == "inner" else spec.r_outer,
                        theta=float(theta), z=float(z), speed=speed,
                        phi_v=phi_v, pitch=float(pitch), nu0=nu0,
                        position=pos))
    return states, skipped


def admissible_z_cap(boundary: str, theta: float, spec: NeighborhoodSpec,
                     C: float, mu: float, z_hi: float = 2.0) -> float:
    """Largest |z| on the cylinder at angle theta inside the Hill region."""

    def g(z):
        pos = spec.boundary_position(boundary, theta, z, mu)
        return 2.0 * effective_potential(pos, mu) - C

    if g(0.0) <= 0.0:
        return 0.0
    if g(z_hi) > 0.0:
        return z_hi
    return brentq(g, 0.0, z_hi, xtol=1e-12)


def spatial_z_extent(spec: NeighborhoodSpec, C: float, mu: float,
                     n_theta: int = 90, margin: float = 1.05) -> float:
    """z_extent covering the admissible band on both cylinders for this C.

    Also verifies the cylinders pierce the Hill region top and bottom: the
    returned extent strictly exceeds every angular cap.
    """
    cap = 0.0
    for boundary in ("inner", "outer"):
        for theta in np.linspace(0.0, 2.0 * math.pi, n_theta, endpoint=False):
            cap = max(cap, admissible_z_cap(boundary, theta, spec, C, mu))
    return margin * cap


@dataclass
class VerificationRecord:
    """Outcome for one tangent state in one time direction."""

    nu0: float
    C: float
    boundary: str
    theta: float
    z: float
    pitch: float
    phi_v: float
    time_direction: str
    classification: str
    exit_s: float
    exit_c: float
    ok: bool

    def row(self):
        return [self.nu0, self.C, self.boundary, self.theta, self.z,
                self.pitch, self.phi_v, self.time_direction,
                self.classification, self.exit_s, self.exit_c, self.ok]


ROW_FIELDS = ["nu0", "C", "boundary", "theta", "z", "pitch", "phi_v",
              "time_direction", "classification", "exit_s", "exit_c", "ok"]


@dataclass
class VerificationReport:
    """Aggregated result of a boundary sweep."""

    spec: NeighborhoodSpec
    model: ModelKind
    epochs: list
    energies: list
    grid: GridSpec
    verdict: bool
    n_pass: int
    n_fail: int
    n_inconclusive: int
    n_skipped_nodes: int
    exit_c_min: float
    exit_c_max: float
    failures: list
    records: list = field(default_factory=list)

    def to_dict(self, include_records: bool = True) -> dict:
        out = {
            "spec": {
                "r_inner": self.spec.r_inner,
                "r_outer": self.spec.r_outer,
                "c_low": self.spec.c_low,
                "c_high": self.spec.c_high,
                "z_extent": self.spec.z_extent,
            },
            "model": self.model.name,
            "epochs": list(self.epochs),
            "energies": list(self.energies),
            "grid": {
                "n_theta": self.grid.n_theta,
                "n_z": self.grid.n_z,
                "n_pitch": self.grid.n_pitch,
                "both_directions": self.grid.both_directions,
            },
            "verdict": "PASS" if self.verdict else "FAIL",
            "n_pass": self.n_pass,
            "n_fail": self.n_fail,
            "n_inconclusive": self.n_inconclusive,
            "n_skipped_nodes": self.n_skipped_nodes,
            "exit_c_min": self.exit_c_min,
            "exit_c_max": self.exit_c_max,
            "record_fields": ROW_FIELDS,
            "failures": [r.row() for r in self.failures],
        }
        if include_records:
            out["records"] = [r.row() for r in self.records]
        return out


def _expected_face(boundary: str) -> str:
    return "Left" if boundary == "inner" else "Right"


def verify_neighborhood(spec: NeighborhoodSpec, model: ModelKind,
                        epochs, energies, grid: GridSpec,
                        params: SystemParams,
                        budget: float = DEFAULT_EXIT_BUDGET,
                        rtol: float = DEFAULT_RTOL,
                        atol: float = DEFAULT_ATOL,
                        jobs: int = 1,
                        keep_records: bool = True) -> VerificationReport:
    """Run the tangent-trajectory sweep over epochs x energies x grid.

    PASS requires every tangent state to exit through its own boundary in
    both time directions; a Remains verdict (budget exhausted) counts as
    inconclusive and fails the sweep.
    """
    if model not in (ModelKind.CRTBP, ModelKind.ERTBP_PULSATING):
        raise ValueError("verification supports CRTBP and pulsating ERTBP")
    mu = params.mu
    region = spec.region(mu)
    if model is ModelKind.CRTBP:
        epochs = [0.0]

    tasks = []
    n_skipped = 0
    for nu0 in epochs:
        for C in energies:
            for boundary in ("inner", "outer"):
                states, skipped = tangent_grid(boundary, spec, grid, C,
                                               nu0, mu)
                n_skipped += skipped
                tasks.extend((nu0, C, ts) for ts in states)

    def run_one(task):
        nu0, C, ts = task
        out = []
        for sense in ("forward", "backward"):
            rec = propagate_until_exit(model, params, ts.state_vector(),
                                       nu0, region, budget=budget,
                                       direction=sense, rtol=rtol, atol=atol)
            exit_c = _kernels.jacobi_direct(rec.exit_state, mu)
            ok = rec.classification == _expected_face(ts.boundary)
            out.append(VerificationRecord(
                nu0=nu0, C=C, boundary=ts.boundary, theta=ts.theta, z=ts.z,
                pitch=ts.pitch, phi_v=ts.phi_v, time_direction=sense,
                classification=rec.classification, exit_s=rec.exit_s,
                exit_c=exit_c, ok=ok))
        return out

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_one, tasks, chunksize=16))
    else:
        results = [run_one(t) for t in tasks]

    records = [r for pair in results for r in pair]
    n_pass = sum(1 for r in records if r.ok)
    n_inconclusive = sum(1 for r in records if r.classification == "Remains")
    n_fail = len(records) - n_pass
    failures = [r for r in records if not r.ok]
    exits = [r.exit_c for r in records if r.classification != "Remains"]
    return VerificationReport(
        spec=spec, model=model, epochs=list(epochs), energies=list(energies),
        grid=grid, verdict=(n_fail == 0), n_pass=n_pass, n_fail=n_fail,
        n_inconclusive=n_inconclusive, n_skipped_nodes=n_skipped,
        exit_c_min=min(exits) if exits else math.nan,
        exit_c_max=max(exits) if exits else math.nan,
        failures=failures,
        records=records if keep_records else [])


def in_layer(state: PhaseState, nu: float, spec: NeighborhoodSpec,
             params: SystemParams, via: str = "direct") -> bool:
    """Whether the instantaneous Jacobi value sits inside [c_low, c_high]."""
    c = instantaneous_jacobi(state, nu, params, via=via)
    return spec.c_low <= c <= spec.c_high


def hill_boundary_curve(C: float, mu: float, resolution: int = 720,
                        center=None, r_max: float = 1.6,
                        r_min: float = 1e-3):
    """Zero-velocity curve 2 Phi = C traced around a scan center.

    Radial rays from the center are scanned for sign changes of 2 Phi - C
    and each bracketing interval is refined; the resulting points are
    chained into polylines by nearest-neighbor walks.  Returns a list of
    (n, 2) arrays.  Intended for reference plots.
    """
    if center is None:
        center = (1.0 - mu, 0.0)
    cx, cy = center

    def g_at(r, th):
        pos = (cx + r * math.cos(th), cy + r * math.sin(th), 0.0)
        return 2.0 * effective_potential(pos, mu) - C

    points = []
    rs = np.linspace(r_min, r_max, max(resolution, 64))
    for th in np.linspace(0.0, 2.0 * math.pi, resolution, endpoint=False):
        vals = np.array([g_at(r, th) for r in rs])
        sign_change = np.nonzero(np.diff(np.signbit(vals)))[0]
        for i in sign_change:
            r_root = brentq(lambda r: g_at(r, th), rs[i], rs[i + 1],
                            xtol=1e-13)
            points.append((cx + r_root * math.cos(th),
                           cy + r_root * math.sin(th)))
    if not points:
        return []
    pts = np.array(points)

    # chain into polylines: greedy nearest-neighbor with a gap threshold
    gap = 8.0 * 2.0 * math.pi * r_max / resolution
    unused = set(range(len(pts)))
    curves = []
    while unused:
        idx = min(unused)
        unused.discard(idx)
        chain = [idx]
        for endpoint in (True, False):
            while True:
                tail = pts[chain[-1 if endpoint else 0]]
                best, best_d = -1, gap
                for j in unused:
                    d = math.hypot(pts[j][0] - tail[0], pts[j][1] - tail[1])
                    if d < best_d:
                        best, best_d = j, d
                if best < 0:
                    break
                unused.discard(best)
                if endpoint:
                    chain.append(best)
                else:
                    chain.insert(0, best)
        curves.append(pts[chain])
    return curves
