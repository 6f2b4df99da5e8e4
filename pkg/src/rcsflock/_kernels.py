"""Compiled inner loops shared by the public modules.

Geometry is selected by an integer code so a single pairwise loop serves all
backends: 0 Euclidean, 1 sphere, 2 hyperboloid.  Kernels are selected the
same way: 0 Cucker-Smale (1+r^2)^-beta, 1 constant.

Functions return status codes instead of raising, the Python wrappers turn
them into exceptions.  Status: 0 ok, 1 collision, 2 injectivity, 3 convergence,
4 projection.
"""
import math

import numpy as np
from numba import njit

EUCLIDEAN, SPHERE, HYPERBOLIC = 0, 1, 2
CUCKER_SMALE, CONSTANT = 0, 1

OK, COLLISION, INJECTIVITY, CONVERGENCE, PROJECTION = 0, 1, 2, 3, 4

ANTIPODAL_MARGIN = 1e-8
SERIES_CUTOFF = 1e-6
NEWTON_RTOL = 1e-14
NEWTON_MAXITER = 200


@njit(cache=True)
def solve_speed(y, c):
    """Root of F(s) s = y on [0, c); -1.0 signals failure."""
    if y == 0.0:
        return 0.0
    lo = 0.0
    hi = c * (1.0 - 1e-16)
    # written in sigma = s/c so that no c^2 is formed (finite for any finite c)
    ic2 = (1.0 / c) / c
    s = min(y / (1.0 + ic2), 0.5 * hi)
    for _ in range(NEWTON_MAXITER):
        sig = s / c
        a = (1.0 - sig) * (1.0 + sig)
        gam = 1.0 / math.sqrt(a)
        g = s * gam * (1.0 + gam * ic2)
        if g == y:
            return s
        if g < y:
            lo = s
        else:
            hi = s
        dg = gam * gam * gam * (1.0 + gam * (1.0 + sig * sig) * ic2)
        s_new = s - (g - y) / dg
        if s_new < lo or s_new > hi:
            s_new = 0.5 * (lo + hi)
            if hi - lo <= 4e-16 * hi:
                return s_new
        elif abs(s_new - s) <= NEWTON_RTOL * s_new:
            return s_new
        s = s_new
    return -1.0


@njit(cache=True)
def solve_speeds(y, c):
    out = np.empty_like(y)
    for k in range(y.shape[0]):
        out[k] = solve_speed(y[k], c)
    return out


@njit(cache=True)
def kernel_phi(kkind, kpar, r):
    if kkind == CUCKER_SMALE:
        return (1.0 + r * r) ** (-kpar)
    return kpar


@njit(cache=True)
def inner(kind, a, b):
    s = 0.0
    for k in range(a.shape[0]):
        s += a[k] * b[k]
    if kind == HYPERBOLIC:
        s -= 2.0 * a[0] * b[0]
    return s


@njit(cache=True)
def theta_over_sin(t):
    if t < SERIES_CUTOFF:
        return 1.0 + t * t / 6.0
    return t / math.sin(t)


@njit(cache=True)
def theta_over_sinh(t):
    if t < SERIES_CUTOFF:
        return 1.0 - t * t / 6.0
    return t / math.sinh(t)


@njit(cache=True)
def pair_log(kind, rho, x, y, out):
    """Write log_x y into ``out`` and return d(x, y); -1.0 past the cut locus."""
    m = x.shape[0]
    if kind == EUCLIDEAN:
        s = 0.0
        for k in range(m):
            out[k] = y[k] - x[k]
            s += out[k] * out[k]
        return math.sqrt(s)
    a2 = 0.0
    b2 = 0.0
    for k in range(m):
        dq = (y[k] - x[k]) / rho
        sq = (y[k] + x[k]) / rho
        if kind == HYPERBOLIC and k == 0:
            a2 -= dq * dq
        else:
            a2 += dq * dq
        b2 += sq * sq
    if kind == SPHERE:
        theta = 2.0 * math.atan2(math.sqrt(a2), math.sqrt(b2))
        if theta > math.pi - ANTIPODAL_MARGIN:
            return -1.0
        fac = rho * theta_over_sin(theta)
        half = 0.5 * a2
    else:
        a2 = max(a2, 0.0)
        theta = 2.0 * math.asinh(0.5 * math.sqrt(a2))
        fac = rho * theta_over_sinh(theta)
        half = -0.5 * a2
    for k in range(m):
        out[k] = fac * ((y[k] - x[k]) / rho + half * x[k] / rho)
    return rho * theta


@njit(cache=True)
def pair_dist(kind, rho, x, y):
    m = x.shape[0]
    a2 = 0.0
    b2 = 0.0
    for k in range(m):
        dq = y[k] - x[k]
        sq = y[k] + x[k]
        if kind == HYPERBOLIC and k == 0:
            a2 -= dq * dq
        else:
            a2 += dq * dq
        b2 += sq * sq
    if kind == EUCLIDEAN:
        return math.sqrt(a2)
    if kind == SPHERE:
        theta = 2.0 * math.atan2(math.sqrt(a2), math.sqrt(b2))
        if theta > math.pi - ANTIPODAL_MARGIN:
            return -1.0
        return rho * theta
    return rho * 2.0 * math.asinh(0.5 * math.sqrt(max(a2, 0.0)) / rho)


@njit(cache=True)
def transport(kind, rho, x, y, u, out):
    """Parallel transport of u in T_x along the minimizing geodesic to y."""
    m = x.shape[0]
    if kind == EUCLIDEAN:
        for k in range(m):
            out[k] = u[k]
        return
    qu = inner(kind, y, u) / rho
    if kind == SPHERE:
        b2 = 0.0
        for k in range(m):
            sq = (x[k] + y[k]) / rho
            b2 += sq * sq
        coef = -qu / (0.5 * b2)
    else:
        a2 = 0.0
        for k in range(m):
            dq = (y[k] - x[k]) / rho
            if k == 0:
                a2 -= dq * dq
            else:
                a2 += dq * dq
        coef = qu / (2.0 + 0.5 * max(a2, 0.0))
    for k in range(m):
        out[k] = u[k] + coef * (x[k] + y[k]) / rho


@njit(cache=True)
def velocities(kind, w, c):
    """v = w / F(|w|_g) row by row; status CONVERGENCE on solver failure."""
    n, m = w.shape
    v = np.empty_like(w)
    if math.isinf(c):
        for i in range(n):
            for k in range(m):
                v[i, k] = w[i, k]
        return v, OK
    zero_scale = 1.0 / (1.0 + 1.0 / (c * c))
    for i in range(n):
        wn = math.sqrt(max(inner(kind, w[i], w[i]), 0.0))
        if wn == 0.0:
            scale = zero_scale
        else:
            s = solve_speed(wn, c)
            if s < 0.0 or s >= c:
                return v, CONVERGENCE
            scale = s / wn
        for k in range(m):
            v[i, k] = scale * w[i, k]
    return v, OK


@njit(cache=True)
def forces(kind, rho, x, v, k0, k1, k2, R, kkind, kpar, eps):
    """Alignment, velocity-bonding and spring-bonding terms for every particle.

    Inner sums run over ascending j.  Returns (I, J, K, status, i, j, dist).
    """
    n, m = x.shape
    I = np.zeros((n, m))
    J = np.zeros((n, m))
    K = np.zeros((n, m))
    L = np.empty(m)
    pv = np.empty(m)
    dv = np.empty(m)
    bonding = k1 != 0.0 or k2 != 0.0
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            d = pair_log(kind, rho, x[i], x[j], L)
            if d < 0.0:
                return I, J, K, INJECTIVITY, i, j, d
            if bonding and d <= eps:
                return I, J, K, COLLISION, i, j, d
            transport(kind, rho, x[j], x[i], v[j], pv)
            for k in range(m):
                dv[k] = pv[k] - v[i, k]
            f = kernel_phi(kkind, kpar, d)
            for k in range(m):
                I[i, k] += f * dv[k]
            if bonding and d > 0.0:
                a1 = k1 * inner(kind, dv, L) / d
                a2 = k2 * (d - R[i, j])
                for k in range(m):
                    J[i, k] += a1 * L[k] / d
                    K[i, k] += a2 * L[k] / d
    a = k0 / n
    b = 0.5 / n
    for i in range(n):
        for k in range(m):
            I[i, k] *= a
            J[i, k] *= b
            K[i, k] *= b
    return I, J, K, OK, -1, -1, 0.0


@njit(cache=True)
def rhs(kind, rho, x, w, c, k0, k1, k2, R, kkind, kpar, eps, ambient):
    """Velocity and momentum derivative.

    With ``ambient`` the normal term that keeps w tangent along the moving
    base point is added, giving the time derivative of w in ambient
    coordinates; otherwise the covariant derivative is returned.
    """
    v, st = velocities(kind, w, c)
    if st != OK:
        return v, v, st, -1, -1, 0.0
    I, J, K, st, i, j, d = forces(kind, rho, x, v, k0, k1, k2, R, kkind, kpar, eps)
    n, m = x.shape
    dw = np.empty_like(w)
    for p in range(n):
        for k in range(m):
            dw[p, k] = I[p, k] + J[p, k] + K[p, k]
    if ambient and kind != EUCLIDEAN and st == OK:
        sign = -1.0 if kind == SPHERE else 1.0
        for p in range(n):
            a = sign * inner(kind, v[p], w[p]) / (rho * rho)
            for k in range(m):
                dw[p, k] += a * x[p, k]
    return v, dw, st, i, j, d


@njit(cache=True)
def project_point(kind, rho, x, tube):
    """Radial retraction of each row onto the constraint set.

    Rows whose radius differs from rho by ``tube * rho`` or more are rejected
    (tube <= 0 disables that check); rows with no projection always are.
    """
    n, m = x.shape
    out = x.copy()
    if kind == EUCLIDEAN:
        return out, OK
    for i in range(n):
        q = inner(kind, x[i], x[i])
        if kind == HYPERBOLIC:
            if q >= 0.0 or x[i, 0] <= 0.0:
                return out, PROJECTION
            r = math.sqrt(-q)
        else:
            r = math.sqrt(q)
        if r == 0.0 or (tube > 0.0 and abs(r - rho) >= tube * rho):
            return out, PROJECTION
        for k in range(m):
            out[i, k] = rho * x[i, k] / r
    return out, OK


@njit(cache=True)
def project_tangent(kind, rho, x, u):
    n, m = x.shape
    out = u.copy()
    if kind == EUCLIDEAN:
        return out
    sign = -1.0 if kind == SPHERE else 1.0
    for i in range(n):
        a = sign * inner(kind, x[i], u[i]) / (rho * rho)
        for k in range(m):
            out[i, k] += a * x[i, k]
    return out


@njit(cache=True)
def pair_stats(kind, rho, x, v, k0, k1, k2, R, kkind, kpar):
    """One pass over ordered pairs.

    Returns (production, potential_sum, min_dist, max_dist, max_rel_speed,
    status, i, j).  potential_sum is sum_{i != j} (d_ij - R_ij)^2 without
    the coupling prefactor.
    """
    n, m = x.shape
    L = np.empty(m)
    pv = np.empty(m)
    dv = np.empty(m)
    align = 0.0
    radial = 0.0
    pot = 0.0
    dmin = np.inf
    dmax = 0.0
    vmax = 0.0
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            d = pair_log(kind, rho, x[i], x[j], L)
            if d < 0.0:
                return 0.0, 0.0, 0.0, 0.0, 0.0, INJECTIVITY, i, j
            transport(kind, rho, x[j], x[i], v[j], pv)
            for k in range(m):
                dv[k] = pv[k] - v[i, k]
            dv2 = max(inner(kind, dv, dv), 0.0)
            align += kernel_phi(kkind, kpar, d) * dv2
            if k1 != 0.0:
                if d == 0.0:
                    return 0.0, 0.0, 0.0, 0.0, 0.0, COLLISION, i, j
                proj = inner(kind, dv, L) / d
                radial += proj * proj
            pot += (d - R[i, j]) ** 2
            dmin = min(dmin, d)
            dmax = max(dmax, d)
            vmax = max(vmax, math.sqrt(dv2))
    prod = k0 / (2.0 * n) * align + k1 / (4.0 * n) * radial
    return prod, pot, dmin, dmax, vmax, OK, -1, -1


@njit(cache=True)
def closest_approach(kind, xa, xb, sign=-1.0):
    """Minimum over pairs of the chord-interpolated separation across a step.

    The separation x_j - x_i is interpolated linearly between the two states
    and minimized in closed form, which catches particles passing through
    each other between grid points.  With sign = +1 the sum x_j + x_i is
    used instead, which on the sphere measures the gap to the antipodal
    configuration.  Returns (dist, i, j).
    """
    n, m = xa.shape
    best = np.inf
    bi = -1
    bj = -1
    d0 = np.empty(m)
    dd = np.empty(m)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(m):
                d0[k] = xa[j, k] + sign * xa[i, k]
                dd[k] = (xb[j, k] + sign * xb[i, k]) - d0[k]
            a = max(inner(kind, dd, dd), 0.0)
            b = inner(kind, d0, dd)
            s = 0.0
            if a > 0.0:
                s = min(max(-b / a, 0.0), 1.0)
            q = 0.0
            for k in range(m):
                e = d0[k] + s * dd[k]
                q += e * e
                if kind == HYPERBOLIC and k == 0:
                    q -= 2.0 * e * e
            q = math.sqrt(max(q, 0.0))
            if q < best:
                best = q
                bi = i
                bj = j
    return best, bi, bj
