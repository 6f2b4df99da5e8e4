"""Energies, energy production, admissibility checks and flocking metrics.

Kinetic energy per particle is c^2 (Gamma - 1) + Gamma^2 - log Gamma (>= 1),
potential energy is k2/(8N) sum_{i != j} (d_ij - R_ij)^2, and the production

    P = k0/(2N) sum_{i,j} phi(d_ij) |P_ij v_j - v_i|^2
        + k1/(4N) sum_{i != j} <P_ij v_j - v_i, e_ij>^2

satisfies E(t) + int_0^t P = E(0) along exact solutions.
"""
import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_simpson

from . import _kernels as K
from .dynamics import raise_status, velocities
from .errors import GridMismatch, ParamError
from .geometry import Euclidean
from .relkin import is_classical, kinetic_from_speed


@dataclass(frozen=True)
class EnergyReport:
    kinetic: float
    potential: float
    total: float
    production: float


@dataclass(frozen=True)
class FlockingReport:
    max_rel_speed: float
    min_pair_dist: float
    max_pair_dist: float
    momentum_sum_norm: Optional[float]
    # same scan on momenta; alignment was proved in these variables
    max_rel_momentum: float = 0.0


@dataclass(frozen=True)
class AdmissibilityReport:
    r_lower: Optional[float]
    r_upper: Optional[float]
    collision_avoidance_ok: bool
    flocking_hypotheses_ok: bool
    manifold_wellposed_ok: Optional[bool]  # None: not applicable (flat space)


@dataclass(frozen=True)
class DeviationSeries:
    times: np.ndarray
    D: np.ndarray
    sup_D: float


def _backend(s, b):
    return Euclidean(s.x.shape[1]) if b is None else b


def speeds(s, p, b=None):
    """Metric norm of each particle velocity."""
    b = _backend(s, b)
    v = velocities(s, p, b)
    return np.sqrt(np.maximum([K.inner(b.kind, vi, vi) for vi in v], 0.0))


def kinetic_energy(s, p, b=None):
    return float(np.sum(kinetic_from_speed(speeds(s, p, b), p.c)))


def _pair_stats(s, p, b, vecs, k0=None, k1=None):
    k0 = p.kappa0 if k0 is None else k0
    k1 = p.kappa1 if k1 is None else k1
    out = K.pair_stats(
        b.kind, float(b.radius), s.x, vecs, float(k0), float(k1), float(p.kappa2),
        p.targets, p.kernel.code, p.kernel.param,
    )
    prod, pot, dmin, dmax, vmax, st, i, j = out
    if st != K.OK:
        raise_status(st, i, j, 0.0)
    return prod, pot, dmin, dmax, vmax


def potential_energy(s, p, b=None):
    b = _backend(s, b)
    pot = _pair_stats(s, p, b, s.w, 0.0, 0.0)[1]
    return p.kappa2 / (8.0 * s.n) * pot


def energy_production(s, p, b=None):
    b = _backend(s, b)
    return float(_pair_stats(s, p, b, velocities(s, p, b))[0])


def energy_report(s, p, b=None):
    b = _backend(s, b)
    v = velocities(s, p, b)
    prod, pot, *_ = _pair_stats(s, p, b, v)
    kin = kinetic_energy(s, p, b)
    pot = p.kappa2 / (8.0 * s.n) * pot
    return EnergyReport(kin, pot, kin + pot, prod)


def flocking_metrics(s, p, b=None):
    """Pairwise velocity spread, distance range and momentum sum.

    ``p`` is needed because velocities depend on c.  The momentum sum is a
    flat-space quantity and is None on curved backends.
    """
    b = _backend(s, b)
    v = velocities(s, p, b)
    _, _, dmin, dmax, vmax = _pair_stats(s, p, b, v, 0.0, 0.0)
    wmax = _pair_stats(s, p, b, s.w, 0.0, 0.0)[4]
    msum = float(np.linalg.norm(s.w.sum(axis=0))) if b.kind == K.EUCLIDEAN else None
    if s.n < 2:
        dmin = dmax = 0.0
    return FlockingReport(float(vmax), float(dmin), float(dmax), msum, float(wmax))


def record_row(s, p, b):
    """All per-record scalars in one pass, used by the integrator.

    Returns (kinetic, potential, production, max_rel_speed, min_pair_dist,
    max_pair_dist, momentum_sum_norm, max_speed, max_momentum).
    """
    v = velocities(s, p, b)
    prod, pot, dmin, dmax, vmax = _pair_stats(s, p, b, v)
    sp = np.sqrt(np.maximum(np.einsum("ij,ij->i", v, v) - (2.0 * v[:, 0] ** 2 if b.kind == K.HYPERBOLIC else 0.0), 0.0))
    wn = np.sqrt(np.maximum(np.einsum("ij,ij->i", s.w, s.w) - (2.0 * s.w[:, 0] ** 2 if b.kind == K.HYPERBOLIC else 0.0), 0.0))
    kin = float(np.sum(kinetic_from_speed(sp, p.c)))
    msum = float(np.linalg.norm(s.w.sum(axis=0))) if b.kind == K.EUCLIDEAN else math.nan
    if s.n < 2:
        dmin = dmax = 0.0
    return (kin, p.kappa2 / (8.0 * s.n) * pot, prod, vmax, dmin, dmax, msum, float(sp.max()), float(wn.max()))


def energy_identity_residual(traj):
    """max_t |E(t) + int_0^t P - E(0)| / max(1, E(0)), integral by Simpson on the record grid."""
    t = np.asarray(traj.times, dtype=float)
    E = np.asarray(traj.diagnostics["total"], dtype=float)
    P = np.asarray(traj.diagnostics["production"], dtype=float)
    if t.size < 2:
        return 0.0
    if t.size < 3:
        integral = np.array([0.0, 0.5 * (P[0] + P[1]) * (t[1] - t[0])])
    else:
        integral = cumulative_simpson(P, x=t, initial=0.0)
    return float(np.max(np.abs(E + integral - E[0])) / max(1.0, E[0]))


def _off_diagonal(R):
    n = R.shape[0]
    return R[~np.eye(n, dtype=bool)]


def distance_bounds(p, E0):
    """(r_lower, r_upper) = (min R, max R) -/+ sqrt(4N(E0 - N)/k2)."""
    if p.kappa2 == 0:
        raise ParamError("distance bounds need kappa2 > 0")
    if E0 < p.n:
        raise ParamError(f"energy {E0} is below its minimum N = {p.n}")
    off = _off_diagonal(p.targets)
    spread = math.sqrt(4.0 * p.n * (E0 - p.n) / p.kappa2)
    return float(off.min()) - spread, float(off.max()) + spread


def check_collision_avoidance(p, E0):
    if p.kappa2 == 0:
        raise ParamError("the collision-avoidance condition needs kappa2 > 0")
    rmin = float(_off_diagonal(p.targets).min())
    return bool(E0 < p.n + p.kappa2 / (4.0 * p.n) * rmin**2)


def check_flocking_hypotheses(p, s0, r_upper, tol=1e-12):
    if s0.n < 2:
        return False
    dist = Euclidean(s0.x.shape[1]).pairwise_dist(s0.x)
    min_dist = _off_diagonal(dist).min()
    couplings = p.kappa0 > 0 and p.kappa1 > 0 and p.kappa2 > 0
    phi_ok = r_upper is not None and math.isfinite(r_upper) and p.kernel.min_on(r_upper) > 0
    zero_sum = np.linalg.norm(s0.w.sum(axis=0)) <= tol
    return bool(min_dist > 0 and couplings and phi_ok and zero_sum)


def check_manifold_wellposedness(b, p, E0):
    if p.kappa2 == 0:
        raise ParamError("the well-posedness condition needs kappa2 > 0")
    off = _off_diagonal(p.targets)
    inj = b.injectivity_radius
    if math.isinf(inj):
        return check_collision_avoidance(p, E0)
    if not off.max() < inj:
        return False
    margin = min(off.min(), inj - off.max())
    return bool(E0 < p.n + p.kappa2 / (4.0 * p.n) * margin**2)


def admissibility_report(s0, p, b=None):
    """Evaluate every sufficient condition from the initial state itself."""
    b = _backend(s0, b)
    E0 = energy_report(s0, p, b).total
    flat = b.kind == K.EUCLIDEAN
    if p.kappa2 == 0 or p.n < 2:
        return AdmissibilityReport(None, None, False, False, None if flat else False)
    r_lower, r_upper = distance_bounds(p, E0)
    collision_ok = check_collision_avoidance(p, E0)
    flocking_ok = check_flocking_hypotheses(p, s0, r_upper) if flat else False
    wellposed = None if flat else check_manifold_wellposedness(b, p, E0)
    return AdmissibilityReport(r_lower, r_upper, collision_ok, flocking_ok, wellposed)


def deviation(traj_c, traj_inf):
    """D(t) = sum_i |x_i^c - x_i^inf|^2 + |w_i^c - w_i^inf|^2 on a shared record grid."""
    tc, ti = np.asarray(traj_c.times), np.asarray(traj_inf.times)
    if tc.shape != ti.shape or not np.array_equal(tc, ti):
        raise GridMismatch("trajectories must be recorded on identical time grids")
    if traj_c.x.shape != traj_inf.x.shape:
        raise GridMismatch("trajectories have different particle counts or dimensions")
    D = np.sum((traj_c.x - traj_inf.x) ** 2, axis=(1, 2)) + np.sum((traj_c.w - traj_inf.w) ** 2, axis=(1, 2))
    return DeviationSeries(tc.copy(), D, float(D.max()))


def modified_kinetic_energy(w, c):
    """Kinetic energy with the Lorentz factor written as c / sqrt(c^2 - |w|^2).

    Needs |w_i| < c.  At c = inf this is the classical sum |w|^2/2 + 1.
    """
    w = np.atleast_2d(np.asarray(w, dtype=float))
    wn = np.linalg.norm(w, axis=-1)
    if is_classical(c):
        return float(np.sum(0.5 * wn**2 + 1.0))
    # the same closed form as the velocity-based energy, with |w| in place of |v|
    return float(np.sum(kinetic_from_speed(wn, c)))


def uniform_energy_condition(s0, p):
    """Uniform-in-c energy condition for the limit sweep, evaluated at ``p.c``."""
    lhs = modified_kinetic_energy(s0.w, p.c) + potential_energy(s0, p)
    rhs = p.n + p.kappa2 / (4.0 * p.n) * float(_off_diagonal(p.targets).min()) ** 2
    return bool(lhs <= rhs), lhs, rhs


def to_json(report):
    """JSON text for any report dataclass; field names are kept verbatim."""
    d = asdict(report)
    for k, v in d.items():
        if isinstance(v, np.ndarray):
            d[k] = v.tolist()
        elif isinstance(v, float) and not math.isfinite(v):
            d[k] = None
    return json.dumps(d)
