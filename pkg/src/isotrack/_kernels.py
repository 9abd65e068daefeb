"""Numba-compiled numerical core.

Everything on the hot path lives here: the right-hand sides of all dynamical
models, a Dormand-Prince 5(4) integrator with a quartic dense-output
interpolant, and the propagation loops that locate region exits and
surface-of-section crossings.  The public modules wrap these kernels with
friendlier types; nothing outside this file should need numba.

State vectors are ``[x, y, z, vx, vy, vz]`` for the orbital models and
``[x1, x2]`` for the planar toy field.  The independent variable ``s`` is
time for the CRTBP / time-parameterized models and true anomaly for the
pulsating and nu-parameterized models.
"""

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi

# slots of the packed parameter vector
P_MU = 0      # mass ratio
P_E = 1       # eccentricity
P_A = 2       # semi-major axis
P_K = 3       # Gm1 + Gm2
P_SIGMA = 4   # angular momentum of the reference Kepler orbit
P_OMEGA = 5   # rotation rate of the uniformly rotating frame
P_EPS = 6     # toy-field perturbation strength
N_PARAMS = 7

# model ids (must stay in sync with models.ModelKind)
M_CRTBP = 0
M_PULSATING = 1
M_VR_NU = 2       # non-uniformly rotating, true anomaly as independent variable
M_VR_TIME = 3     # non-uniformly rotating, time as independent variable
M_UNIFORM = 4     # uniformly rotating elliptic model
M_INERTIAL = 5
M_TOY = 6
M_HARMONIC = 90   # synthetic: acc = -pos (integrator tests)
M_ZERO = 91       # synthetic: zero field

# propagation status codes
STAT_REMAINS = 0          # budget exhausted inside the region
# face exits are reported as 1 + face index
STAT_ERR_STEP = -1        # step size underflow
STAT_ERR_NONFINITE = -2   # non-finite state encountered
STAT_ERR_COLLISION = -3   # approached a primary closer than COLLISION_RADIUS
STAT_ERR_MAXSTEPS = -4
STAT_ERR_OUTSIDE = -5     # initial state outside the region

COLLISION_RADIUS = 1e-6

# event kinds
EV_PLANE = 1      # (x - b)^T u over the full state
EV_CYLINDER = 2   # sign * (dist((x,y), center) - radius)
EV_SECTION = 3    # y[index] - value

# event values below this are treated as a genuine boundary crossing;
# tangent starts sit at 0 and must not trigger spuriously
_EV_NEG = 1e-13
# interior samples per accepted step when scanning for crossings
_NSAMP = 8

_MAX_STEPS = 20_000_000

# Dormand-Prince 5(4) tableau (checked against scipy's RK45 in the tests)
_RK_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_RK_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
])
_RK_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# b - b_hat, for the embedded error estimate
_RK_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                  -17253 / 339200, 22 / 525, -1 / 40])
# quartic dense-output coefficients (Shampine's interpolant, as used by scipy)
_RK_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


@njit(cache=True, nogil=True, error_model="numpy")
def kepler_E_from_M(M, e):
    """Solve E - e sin E = M by Newton iteration, preserving the branch of M."""
    k = math.floor(M / TWO_PI)
    Mr = M - TWO_PI * k
    E = Mr + e * math.sin(Mr)
    for _ in range(40):
        f = E - e * math.sin(E) - Mr
        if abs(f) < 1e-14:
            break
        E -= f / (1.0 - e * math.cos(E))
    return E + TWO_PI * k


@njit(cache=True, nogil=True, error_model="numpy")
def nu_from_E(E, e):
    """True anomaly from eccentric anomaly via the half-angle atan2 form."""
    k = math.floor(E / TWO_PI)
    Er = E - TWO_PI * k
    nu = 2.0 * math.atan2(math.sqrt(1.0 + e) * math.sin(0.5 * Er),
                          math.sqrt(1.0 - e) * math.cos(0.5 * Er))
    if nu < 0.0:
        nu += TWO_PI
    return nu + TWO_PI * k


@njit(cache=True, nogil=True, error_model="numpy")
def E_from_nu(nu, e):
    """Eccentric anomaly from true anomaly (inverse of :func:`nu_from_E`)."""
    k = math.floor(nu / TWO_PI)
    nur = nu - TWO_PI * k
    E = 2.0 * math.atan2(math.sqrt(1.0 - e) * math.sin(0.5 * nur),
                         math.sqrt(1.0 + e) * math.cos(0.5 * nur))
    if E < 0.0:
        E += TWO_PI
    return E + TWO_PI * k


@njit(cache=True, nogil=True, error_model="numpy")
def jacobi_direct(y, mu):
    """Jacobi-constant expression evaluated on rotating-frame coordinates.

    For CRTBP states this is the conserved constant; for pulsating-frame
    states it is the instantaneous analogue used to parameterize the
    energy layer.
    """
    x = y[0]
    yy = y[1]
    z = y[2]
    r1 = math.sqrt((x + mu) ** 2 + yy * yy + z * z)
    r2 = math.sqrt((x - 1.0 + mu) ** 2 + yy * yy + z * z)
    v2 = y[3] ** 2 + y[4] ** 2 + y[5] ** 2
    return -v2 + x * x + yy * yy + 2.0 * (1.0 - mu) / r1 + 2.0 * mu / r2


@njit(cache=True, nogil=True, error_model="numpy")
def rhs(model, s, y, p, out):
    """State derivative for every supported model, dispatched on ``model``."""
    if model == M_TOY:
        eps = p[P_EPS]
        ct = math.cos(s)
        st = math.sin(s)
        x1 = y[0]
        x2 = y[1]
        out[0] = x1 + eps * (ct * x1 + st * x2)
        out[1] = -x2 + eps * (-st * x1 + ct * x2)
        return
    if model == M_HARMONIC:
        for i in range(3):
            out[i] = y[3 + i]
            out[3 + i] = -y[i]
        return
    if model == M_ZERO:
        for i in range(y.size):
            out[i] = 0.0
        return

    mu = p[P_MU]
    e = p[P_E]
    x = y[0]
    yy = y[1]
    z = y[2]
    vx = y[3]
    vy = y[4]
    vz = y[5]
    out[0] = vx
    out[1] = vy
    out[2] = vz

    if model == M_CRTBP or model == M_PULSATING:
        # primaries fixed at (-mu, 0, 0) and (1 - mu, 0, 0)
        dx1 = x + mu
        dx2 = x - 1.0 + mu
        r1 = math.sqrt(dx1 * dx1 + yy * yy + z * z)
        r2 = math.sqrt(dx2 * dx2 + yy * yy + z * z)
        if r1 < COLLISION_RADIUS or r2 < COLLISION_RADIUS:
            out[3] = math.nan
            out[4] = math.nan
            out[5] = math.nan
            return
        om1 = (1.0 - mu) / (r1 * r1 * r1)
        om2 = mu / (r2 * r2 * r2)
        gx = x - om1 * dx1 - om2 * dx2
        gy = yy * (1.0 - om1 - om2)
        gz = -z * (om1 + om2)
        if model == M_CRTBP:
            out[3] = 2.0 * vy + gx
            out[4] = -2.0 * vx + gy
            out[5] = gz
        else:
            g = 1.0 / (1.0 + e * math.cos(s))
            out[3] = 2.0 * vy + g * gx
            out[4] = -2.0 * vx + g * gy
            out[5] = -z + g * (z + gz)
        return

    if model == M_VR_NU:
        # primaries move along the x axis with the instantaneous separation
        gam = 1.0 + e * math.cos(s)
        phi = -e * math.sin(s) / gam
        r = p[P_A] * (1.0 - e * e) / gam
        x1s = -mu * r
        x2s = (1.0 - mu) * r
        d1x = x - x1s
        d2x = x - x2s
        r1 = math.sqrt(d1x * d1x + yy * yy + z * z)
        r2 = math.sqrt(d2x * d2x + yy * yy + z * z)
        if r1 < COLLISION_RADIUS or r2 < COLLISION_RADIUS:
            out[3] = math.nan
            out[4] = math.nan
            out[5] = math.nan
            return
        fac = r * r * r / gam
        f1 = fac * (1.0 - mu) / (r1 * r1 * r1)
        f2 = fac * mu / (r2 * r2 * r2)
        out[3] = 2.0 * vy + x - 2.0 * phi * (vx - yy) - f1 * d1x - f2 * d2x
        out[4] = -2.0 * vx + yy - 2.0 * phi * (vy + x) - (f1 + f2) * yy
        out[5] = -2.0 * phi * vz - (f1 + f2) * z
        return

    if model == M_VR_TIME:
        # Hiday-Howell style formulation: variable rotation rate n(t)
        a = p[P_A]
        K = p[P_K]
        nbar = math.sqrt(K / (a * a * a))
        E = kepler_E_from_M(nbar * s, e)
        cE = math.cos(E)
        sE = math.sin(E)
        ome = 1.0 - e * cE
        sq = math.sqrt(1.0 - e * e)
        n = nbar * sq / (ome * ome)
        ndot = -2.0 * e * nbar * nbar * sq * sE / (ome * ome * ome * ome)
        r = a * ome
        x1s = -mu * r
        x2s = (1.0 - mu) * r
        d1x = x - x1s
        d2x = x - x2s
        r1 = math.sqrt(d1x * d1x + yy * yy + z * z)
        r2 = math.sqrt(d2x * d2x + yy * yy + z * z)
        if r1 < COLLISION_RADIUS or r2 < COLLISION_RADIUS:
            out[3] = math.nan
            out[4] = math.nan
            out[5] = math.nan
            return
        f1 = K * (1.0 - mu) / (r1 * r1 * r1)
        f2 = K * mu / (r2 * r2 * r2)
        out[3] = 2.0 * n * vy + n * n * x + ndot * yy - f1 * d1x - f2 * d2x
        out[4] = -2.0 * n * vx + n * n * yy - ndot * x - (f1 + f2) * yy
        out[5] = -(f1 + f2) * z
        return

    if model == M_UNIFORM:
        # constant-rate frame; primaries move in x and y
        a = p[P_A]
        K = p[P_K]
        om = p[P_OMEGA]
        nbar = math.sqrt(K / (a * a * a))
        E = kepler_E_from_M(nbar * s, e)
        nu = nu_from_E(E, e)
        r = a * (1.0 - e * math.cos(E))
        d = nu - om * s
        px = r * math.cos(d)
        py = r * math.sin(d)
        d1x = x + mu * px
        d1y = yy + mu * py
        d2x = x - (1.0 - mu) * px
        d2y = yy - (1.0 - mu) * py
        r1 = math.sqrt(d1x * d1x + d1y * d1y + z * z)
        r2 = math.sqrt(d2x * d2x + d2y * d2y + z * z)
        if r1 < COLLISION_RADIUS or r2 < COLLISION_RADIUS:
            out[3] = math.nan
            out[4] = math.nan
            out[5] = math.nan
            return
        f1 = K * (1.0 - mu) / (r1 * r1 * r1)
        f2 = K * mu / (r2 * r2 * r2)
        out[3] = 2.0 * om * vy + om * om * x - f1 * d1x - f2 * d2x
        out[4] = -2.0 * om * vx + om * om * yy - f1 * d1y - f2 * d2y
        out[5] = -(f1 + f2) * z
        return

    # M_INERTIAL: Newtonian pull of the two primaries on their Kepler ellipse
    a = p[P_A]
    K = p[P_K]
    nbar = math.sqrt(K / (a * a * a))
    E = kepler_E_from_M(nbar * s, e)
    nu = nu_from_E(E, e)
    r = a * (1.0 - e * math.cos(E))
    qx = r * math.cos(nu)
    qy = r * math.sin(nu)
    d1x = x + mu * qx
    d1y = yy + mu * qy
    d2x = x - (1.0 - mu) * qx
    d2y = yy - (1.0 - mu) * qy
    r1 = math.sqrt(d1x * d1x + d1y * d1y + z * z)
    r2 = math.sqrt(d2x * d2x + d2y * d2y + z * z)
    if r1 < COLLISION_RADIUS or r2 < COLLISION_RADIUS:
        out[3] = math.nan
        out[4] = math.nan
        out[5] = math.nan
        return
    f1 = K * (1.0 - mu) / (r1 * r1 * r1)
    f2 = K * mu / (r2 * r2 * r2)
    out[3] = -f1 * d1x - f2 * d2x
    out[4] = -f1 * d1y - f2 * d2y
    out[5] = -(f1 + f2) * z


@njit(cache=True, nogil=True, error_model="numpy")
def event_value(kind, pp, y):
    """Signed boundary function; the region interior is where it is >= 0."""
    if kind == EV_CYLINDER:
        dx = y[0] - pp[0]
        dy = y[1] - pp[1]
        return pp[3] * (math.sqrt(dx * dx + dy * dy) - pp[2])
    if kind == EV_SECTION:
        return y[int(pp[0])] - pp[1]
    # EV_PLANE
    acc = 0.0
    for i in range(y.size):
        acc += (y[i] - pp[i]) * pp[6 + i]
    return acc


@njit(cache=True, nogil=True, error_model="numpy")
def _initial_step(model, p, s0, y0, f0, direction, rtol, atol):
    """Hairer's starting-step heuristic, trimmed to what we need."""
    n = y0.size
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y0[i])
        d0 = max(d0, abs(y0[i]) / sc)
        d1 = max(d1, abs(f0[i]) / sc)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    y1 = np.empty(n)
    f1 = np.empty(n)
    for i in range(n):
        y1[i] = y0[i] + h0 * direction * f0[i]
    rhs(model, s0 + h0 * direction, y1, p, f1)
    d2 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y0[i])
        d2 = max(d2, abs(f1[i] - f0[i]) / sc)
    d2 /= h0
    dm = max(d1, d2)
    if dm <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / dm) ** 0.2
    return min(100.0 * h0, h1)


@njit(cache=True, nogil=True, error_model="numpy")
def _rk_step(model, p, s, y, h, k, ynew, rtol, atol):
    """One Dormand-Prince step.  k[0] holds f(s, y) on entry (FSAL).

    Fills k[1..6] and ynew; returns the scaled error norm.
    """
    n = y.size
    for st in range(1, 6):
        for i in range(n):
            acc = 0.0
            for j in range(st):
                acc += _RK_A[st, j] * k[j, i]
            ynew[i] = y[i] + h * acc
        rhs(model, s + _RK_C[st] * h, ynew, p, k[st])
    for i in range(n):
        acc = 0.0
        for j in range(6):
            acc += _RK_B[j] * k[j, i]
        ynew[i] = y[i] + h * acc
    rhs(model, s + h, ynew, p, k[6])
    err = 0.0
    for i in range(n):
        eacc = 0.0
        for j in range(7):
            eacc += _RK_E[j] * k[j, i]
        sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
        q = h * eacc / sc
        err += q * q
    return math.sqrt(err / n)


@njit(cache=True, nogil=True, error_model="numpy")
def _dense_eval(y0, h, k, theta, out):
    """Evaluate the quartic interpolant at fraction theta of the step."""
    t2 = theta * theta
    t3 = t2 * theta
    t4 = t3 * theta
    for i in range(y0.size):
        acc = 0.0
        for j in range(7):
            acc += k[j, i] * (_RK_P[j, 0] * theta + _RK_P[j, 1] * t2
                              + _RK_P[j, 2] * t3 + _RK_P[j, 3] * t4)
        out[i] = y0[i] + h * acc


@njit(cache=True, nogil=True, error_model="numpy")
def _refine_crossing(kind, pp, yprev, h, k, th_lo, th_hi, work):
    """Bisect the dense interpolant for the boundary of {event >= 0}.

    th_lo sits on the non-negative side (possibly exactly 0 for tangent
    starts), th_hi on the negative side.
    """
    a = th_lo
    b = th_hi
    for _ in range(60):
        m = 0.5 * (a + b)
        _dense_eval(yprev, h, k, m, work)
        if event_value(kind, pp, work) < 0.0:
            b = m
        else:
            a = m
        if b - a < 1e-16:
            break
    return 0.5 * (a + b)


@njit(cache=True, nogil=True, error_model="numpy")
def propagate_until_exit(model, p, s0, y0, s_end, rtol, atol,
                         ev_kind, ev_par, track_c, c_lo, c_hi, y_exit):
    """Integrate until the trajectory leaves the region or the budget ends.

    Returns ``(status, s_exit, c_min, c_max, s_layer_violation, n_accepted)``.
    status > 0 encodes 1 + index of the exited face; y_exit receives the
    state at exit (or at the budget end for STAT_REMAINS).  When track_c is
    on, the instantaneous Jacobi value is monitored at every accepted step
    and the first excursion outside [c_lo, c_hi] is recorded.
    """
    n = y0.size
    nev = ev_kind.size
    direction = 1.0 if s_end >= s0 else -1.0

    y = y0.copy()
    f0 = np.empty(n)
    rhs(model, s0, y, p, f0)
    for i in range(n):
        if not math.isfinite(f0[i]):
            for j in range(n):
                y_exit[j] = y[j]
            return STAT_ERR_NONFINITE, s0, 0.0, 0.0, math.nan, 0

    eprev = np.empty(nev)
    for kk in range(nev):
        ev = event_value(ev_kind[kk], ev_par[kk], y)
        if ev < -1e-10:
            for j in range(n):
                y_exit[j] = y[j]
            return STAT_ERR_OUTSIDE, s0, 0.0, 0.0, math.nan, 0
        eprev[kk] = ev

    c_min = math.inf
    c_max = -math.inf
    s_viol = math.nan
    if track_c:
        c0 = jacobi_direct(y, p[P_MU])
        c_min = c0
        c_max = c0
        if c0 < c_lo or c0 > c_hi:
            s_viol = s0

    k = np.empty((7, n))
    ynew = np.empty(n)
    ysamp = np.empty(n)
    eth = np.empty(nev)     # event values at the previous sample of this step
    thprev = np.empty(nev)  # sample position of that value

    h = _initial_step(model, p, s0, y, f0, direction, rtol, atol)
    s = s0
    accepted = 0
    for _ in range(_MAX_STEPS):
        if direction * (s - s_end) >= 0.0:
            for j in range(n):
                y_exit[j] = y[j]
            return STAT_REMAINS, s, c_min, c_max, s_viol, accepted
        hs = h * direction
        if direction * (s + hs - s_end) > 0.0:
            hs = s_end - s
        if abs(hs) < 1e-14 * max(1.0, abs(s)):
            for j in range(n):
                y_exit[j] = y[j]
            return STAT_ERR_STEP, s, c_min, c_max, s_viol, accepted

        for i in range(n):
            k[0, i] = f0[i]
        err = _rk_step(model, p, s, y, hs, k, ynew, rtol, atol)
        if not math.isfinite(err):
            h = abs(hs) * 0.25
            # repeated failure drives h under the floor and exits above
            nearp = min(math.sqrt((y[0] + p[P_MU]) ** 2 + y[1] ** 2 + y[2] ** 2),
                        math.sqrt((y[0] - 1.0 + p[P_MU]) ** 2 + y[1] ** 2 + y[2] ** 2))
            if abs(hs) < 1e-13 * max(1.0, abs(s)):
                for j in range(n):
                    y_exit[j] = y[j]
                st = STAT_ERR_COLLISION if nearp < 1e-4 else STAT_ERR_NONFINITE
                return st, s, c_min, c_max, s_viol, accepted
            continue
        if err > 1.0:
            h = abs(hs) * max(0.2, 0.9 * err ** -0.2)
            continue

        # accepted: scan the step for boundary crossings
        for kk in range(nev):
            eth[kk] = eprev[kk]
            thprev[kk] = 0.0
        hit = -1
        th_hit = 2.0
        for m in range(1, _NSAMP + 1):
            th = m / _NSAMP
            if m == _NSAMP:
                for i in range(n):
                    ysamp[i] = ynew[i]
            else:
                _dense_eval(y, hs, k, th, ysamp)
            for kk in range(nev):
                ev = event_value(ev_kind[kk], ev_par[kk], ysamp)
                if ev < -_EV_NEG and eth[kk] >= -_EV_NEG:
                    th_c = _refine_crossing(ev_kind[kk], ev_par[kk], y, hs, k,
                                            thprev[kk], th, ysamp)
                    if th_c < th_hit:
                        th_hit = th_c
                        hit = kk
                eth[kk] = ev
                thprev[kk] = th
            if hit >= 0:
                break

        if hit >= 0:
            _dense_eval(y, hs, k, th_hit, ysamp)
            if track_c:
                c = jacobi_direct(ysamp, p[P_MU])
                c_min = min(c_min, c)
                c_max = max(c_max, c)
                if math.isnan(s_viol) and (c < c_lo or c > c_hi):
                    s_viol = s + th_hit * hs
            for j in range(n):
                y_exit[j] = ysamp[j]
            return hit + 1, s + th_hit * hs, c_min, c_max, s_viol, accepted

        for kk in range(nev):
            eprev[kk] = eth[kk]
        s += hs
        for i in range(n):
            y[i] = ynew[i]
            f0[i] = k[6, i]
        accepted += 1
        if track_c:
            c = jacobi_direct(y, p[P_MU])
            c_min = min(c_min, c)
            c_max = max(c_max, c)
            if math.isnan(s_viol) and (c < c_lo or c > c_hi):
                s_viol = s
        if err == 0.0:
            fac = 5.0
        else:
            fac = min(5.0, max(0.2, 0.9 * err ** -0.2))
        h = abs(hs) * fac

    for j in range(n):
        y_exit[j] = y[j]
    return STAT_ERR_MAXSTEPS, s, c_min, c_max, s_viol, accepted


@njit(cache=True, nogil=True, error_model="numpy")
def find_section_crossing(model, p, s0, y0, s_max, rtol, atol,
                          index, value, want_dir, y_out):
    """Locate the next transversal crossing of the plane y[index] == value.

    want_dir filters on the sign of the coordinate's derivative at the
    crossing (+1, -1, or 0 for either).  A start on the plane is skipped;
    detection arms once the coordinate has moved at least 1e-9 off it.
    Returns ``(found, s_cross)``.
    """
    n = y0.size
    direction = 1.0 if s_max >= s0 else -1.0
    y = y0.copy()
    f0 = np.empty(n)
    rhs(model, s0, y, p, f0)

    k = np.empty((7, n))
    ynew = np.empty(n)
    ysamp = np.empty(n)
    fscr = np.empty(n)

    armed = abs(y[index] - value) > 1e-9
    gprev = y[index] - value

    h = _initial_step(model, p, s0, y, f0, direction, rtol, atol)
    s = s0
    for _ in range(_MAX_STEPS):
        if direction * (s - s_max) >= 0.0:
            for j in range(n):
                y_out[j] = y[j]
            return 0, s
        hs = h * direction
        if direction * (s + hs - s_max) > 0.0:
            hs = s_max - s
        if abs(hs) < 1e-14 * max(1.0, abs(s)):
            for j in range(n):
                y_out[j] = y[j]
            return STAT_ERR_STEP, s
        for i in range(n):
            k[0, i] = f0[i]
        err = _rk_step(model, p, s, y, hs, k, ynew, rtol, atol)
        if not math.isfinite(err):
            if abs(hs) < 1e-13 * max(1.0, abs(s)):
                for j in range(n):
                    y_out[j] = y[j]
                return STAT_ERR_NONFINITE, s
            h = abs(hs) * 0.25
            continue
        if err > 1.0:
            h = abs(hs) * max(0.2, 0.9 * err ** -0.2)
            continue

        g_a = gprev
        th_a = 0.0
        found_th = -1.0
        for m in range(1, _NSAMP + 1):
            th = m / _NSAMP
            if m == _NSAMP:
                for i in range(n):
                    ysamp[i] = ynew[i]
            else:
                _dense_eval(y, hs, k, th, ysamp)
            g = ysamp[index] - value
            if not armed:
                if abs(g) > 1e-9:
                    armed = True
            elif (g_a < 0.0) != (g < 0.0) or g == 0.0:
                # bisect the interpolant for the sign change
                a = th_a
                b = th
                ga = g_a
                for _ in range(60):
                    mm = 0.5 * (a + b)
                    _dense_eval(y, hs, k, mm, ysamp)
                    gm = ysamp[index] - value
                    if (gm < 0.0) == (ga < 0.0):
                        a = mm
                        ga = gm
                    else:
                        b = mm
                    if b - a < 1e-16:
                        break
                th_c = 0.5 * (a + b)
                _dense_eval(y, hs, k, th_c, ysamp)
                # derivative sign of the section coordinate at the crossing
                if index < 3 and n == 6:
                    dsign = 1.0 if ysamp[3 + index] * hs > 0.0 else -1.0
                else:
                    rhs(model, s + th_c * hs, ysamp, p, fscr)
                    dsign = 1.0 if fscr[index] * hs > 0.0 else -1.0
                if want_dir == 0 or int(dsign) == want_dir:
                    found_th = th_c
                    break
                g_a = g
                th_a = th
                continue
            g_a = g
            th_a = th
        if found_th >= 0.0:
            _dense_eval(y, hs, k, found_th, ysamp)
            for j in range(n):
                y_out[j] = ysamp[j]
            return 1, s + found_th * hs
        gprev = g_a
        s += hs
        for i in range(n):
            y[i] = ynew[i]
            f0[i] = k[6, i]
        h = abs(hs) * (5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2)))

    for j in range(n):
        y_out[j] = y[j]
    return STAT_ERR_MAXSTEPS, s


@njit(cache=True, nogil=True, error_model="numpy")
def propagate_dense(model, p, s0, y0, s_eval, rtol, atol, out):
    """Integrate and fill out[i] with the state at each s_eval[i].

    s_eval must be monotone in the direction of integration, starting at or
    beyond s0.  Returns a status code (STAT_REMAINS on success).
    """
    n = y0.size
    m = s_eval.size
    if m == 0:
        return STAT_REMAINS
    direction = 1.0 if s_eval[m - 1] >= s0 else -1.0

    y = y0.copy()
    f0 = np.empty(n)
    rhs(model, s0, y, p, f0)
    k = np.empty((7, n))
    ynew = np.empty(n)

    idx = 0
    while idx < m and direction * (s_eval[idx] - s0) <= 0.0:
        for j in range(n):
            out[idx, j] = y[j]
        idx += 1

    h = _initial_step(model, p, s0, y, f0, direction, rtol, atol)
    s = s0
    s_last = s_eval[m - 1]
    for _ in range(_MAX_STEPS):
        if idx >= m:
            return STAT_REMAINS
        hs = h * direction
        if direction * (s + hs - s_last) > 0.0:
            hs = s_last - s
        if abs(hs) < 1e-14 * max(1.0, abs(s)):
            return STAT_ERR_STEP
        for i in range(n):
            k[0, i] = f0[i]
        err = _rk_step(model, p, s, y, hs, k, ynew, rtol, atol)
        if not math.isfinite(err):
            if abs(hs) < 1e-13 * max(1.0, abs(s)):
                return STAT_ERR_NONFINITE
            h = abs(hs) * 0.25
            continue
        if err > 1.0:
            h = abs(hs) * max(0.2, 0.9 * err ** -0.2)
            continue
        while idx < m and direction * (s_eval[idx] - (s + hs)) <= 0.0:
            th = (s_eval[idx] - s) / hs
            if th > 1.0:
                th = 1.0
            _dense_eval(y, hs, k, th, out[idx])
            idx += 1
        s += hs
        for i in range(n):
            y[i] = ynew[i]
            f0[i] = k[6, i]
        h = abs(hs) * (5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2)))
    return STAT_ERR_MAXSTEPS
