"""Fixed-step time integration with collision events and trajectory recording.

Euclidean states are advanced with classical RK4 (or explicit Euler).  On
the sphere and the hyperboloid the same scheme runs in ambient coordinates:
every stage state is retracted onto the manifold before the right-hand side
is evaluated, and w picks up the normal term that keeps it tangent along the
moving base point.  After the step x is retracted and w projected.
"""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as K
from .diagnostics import EnergyReport, FlockingReport, record_row
from .dynamics import COLLISION_EPS, SystemState, ambient_rhs
from .errors import CollisionError, InjectivityError, ParamError, ProjectionError
from .geometry import Euclidean

DIAGNOSTIC_FIELDS = (
    "kinetic", "potential", "production", "max_rel_speed", "min_pair_dist",
    "max_pair_dist", "momentum_sum_norm", "max_speed", "max_momentum",
)

BISECTION_STEPS = 10
# stage states further than this (relative to the radius) from the manifold
# mean the step is far too large; fail instead of silently retracting
RETRACTION_TUBE = 0.1


@dataclass(frozen=True)
class StepperConfig:
    dt: float = 1e-3
    t_end: float = 10.0
    scheme: str = "rk4"
    collision_epsilon: float = COLLISION_EPS
    record_stride: int = 1

    def __post_init__(self):
        if self.scheme not in ("rk4", "euler"):
            raise ParamError(f"unknown scheme {self.scheme!r}")
        if not (self.dt > 0) or math.isinf(self.dt):
            raise ParamError("dt must be positive and finite")
        if not (self.t_end >= 0) or math.isinf(self.t_end):
            raise ParamError("t_end must be non-negative and finite")
        if self.t_end > 0 and self.dt > self.t_end:
            raise ParamError("dt must not exceed t_end")
        if not (self.collision_epsilon >= COLLISION_EPS):
            raise ParamError(f"collision_epsilon must be at least {COLLISION_EPS}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ParamError("record_stride must be a positive integer")


@dataclass(frozen=True)
class Completed:
    t: float
    kind = "completed"


@dataclass(frozen=True)
class CollisionDetected:
    t: float
    pair: tuple
    min_distance: float
    kind = "collision"


@dataclass(frozen=True)
class InjectivityViolated:
    t: float
    pair: tuple
    kind = "injectivity"


@dataclass
class Trajectory:
    """Recorded states and per-record diagnostics.

    ``x`` and ``w`` have shape (records, N, m); ``diagnostics`` maps each name
    in DIAGNOSTIC_FIELDS (plus "total") to an array aligned with ``times``.
    """

    times: np.ndarray
    x: np.ndarray
    w: np.ndarray
    diagnostics: dict
    termination: object
    backend: object = None
    params: object = None
    config: Optional[StepperConfig] = None
    steps: int = 0

    @property
    def states(self):
        return [SystemState(x, w, t) for t, x, w in zip(self.times, self.x, self.w)]

    @property
    def final_state(self):
        return SystemState(self.x[-1].copy(), self.w[-1].copy(), float(self.times[-1]))

    def energy_reports(self):
        d = self.diagnostics
        return [EnergyReport(*map(float, r)) for r in zip(d["kinetic"], d["potential"], d["total"], d["production"])]

    def flocking_reports(self):
        d = self.diagnostics
        msum = [None if math.isnan(m) else float(m) for m in d["momentum_sum_norm"]]
        rows = zip(d["max_rel_speed"], d["min_pair_dist"], d["max_pair_dist"], msum)
        return [FlockingReport(float(a), float(b), float(c), m) for a, b, c, m in rows]


def _retract(b, x, w):
    if b.kind == K.EUCLIDEAN:
        return x, w
    x, st = K.project_point(b.kind, float(b.radius), x, RETRACTION_TUBE)
    if st != K.OK:
        raise ProjectionError("stage state left the tubular neighbourhood of the manifold")
    return x, K.project_tangent(b.kind, float(b.radius), x, w)


def _advance(b, x, w, p, h, scheme, eps):
    """One step of size h from an on-manifold state."""
    k1x, k1w = ambient_rhs(b, x, w, p, eps)
    if scheme == "euler":
        return _retract(b, x + h * k1x, w + h * k1w)
    xs, ws = _retract(b, x + 0.5 * h * k1x, w + 0.5 * h * k1w)
    k2x, k2w = ambient_rhs(b, xs, ws, p, eps)
    xs, ws = _retract(b, x + 0.5 * h * k2x, w + 0.5 * h * k2w)
    k3x, k3w = ambient_rhs(b, xs, ws, p, eps)
    xs, ws = _retract(b, x + h * k3x, w + h * k3w)
    k4x, k4w = ambient_rhs(b, xs, ws, p, eps)
    xn = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    wn = w + (h / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
    return _retract(b, xn, wn)


def step_euclidean(s, p, dt, scheme="rk4", eps=COLLISION_EPS):
    if not dt > 0:
        raise ParamError("dt must be positive")
    b = Euclidean(s.x.shape[1])
    x, w = _advance(b, s.x, s.w, p, dt, scheme, eps)
    return SystemState(x, w, s.t + dt)


def step_manifold(b, s, p, dt, scheme="rk4", eps=COLLISION_EPS):
    if not dt > 0:
        raise ParamError("dt must be positive")
    x, w = _advance(b, s.x, s.w, p, dt, scheme, eps)
    return SystemState(x, w, s.t + dt)


def _time_grid(cfg):
    n = int(round(cfg.t_end / cfg.dt))
    if n * cfg.dt < cfg.t_end * (1 - 1e-12):
        n += 1
    grid = cfg.dt * np.arange(n + 1)
    grid[-1] = cfg.t_end
    return grid


def _hit(b, x, w, p, h, cfg):
    """Does a step of size h from (x, w) reach the collision threshold?"""
    try:
        xn, _ = _advance(b, x, w, p, h, cfg.scheme, cfg.collision_epsilon)
    except CollisionError as e:
        return True, e.distance, e.pair
    dmin, i, j = K.closest_approach(b.kind, x, xn)
    return dmin <= cfg.collision_epsilon, dmin, (i, j)


def _crosses_cut_locus(b, x, xn):
    """Pair whose interpolated path passes the antipodal configuration, or None.

    On the sphere x_i + x_j vanishes at the cut locus.  Its chord
    interpolation over a step deviates from the true path by at most about
    |dx|^2 / (4 rho), so a gap below that bound (or below the antipodal
    margin) counts as a crossing.
    """
    if b.kind != K.SPHERE or len(x) < 2:
        return None
    rho = float(b.radius)
    gap, i, j = K.closest_approach(b.kind, x, xn, 1.0)
    step = float(np.max(np.sum((xn - x) ** 2, axis=1)))
    if gap <= rho * K.ANTIPODAL_MARGIN + step / rho:
        return (int(i), int(j))
    return None


def _locate_collision(b, x, w, p, t, h, cfg, first):
    """Bisect the step [t, t+h] down to width h / 2**BISECTION_STEPS."""
    lo, hi = 0.0, h
    found = first
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        hit, dist, pair = _hit(b, x, w, p, mid, cfg)
        if hit:
            hi, found = mid, (dist, pair)
        else:
            lo = mid
    dist, pair = found
    return CollisionDetected(t + hi, tuple(int(k) for k in pair), float(dist))


def simulate(s0, p, cfg, b=None):
    """Integrate from s0 to cfg.t_end, recording every ``record_stride`` steps.

    The final reached state is always recorded.  Collisions and injectivity
    violations end the run and are reported in ``termination``; they are not
    raised.
    """
    b = Euclidean(s0.x.shape[1]) if b is None else b
    if s0.n != p.n:
        raise ParamError(f"state has {s0.n} particles but targets are {p.n} x {p.n}")
    if s0.x.shape[1] != b.ambient_dim:
        raise ParamError(f"state has {s0.x.shape[1]} components, backend expects {b.ambient_dim}")
    grid = s0.t + _time_grid(cfg)
    x, w = s0.x.copy(), s0.w.copy()
    times, xs, ws, rows = [], [], [], []

    def record(t, x, w):
        rows.append(record_row(SystemState(x, w, t), p, b))
        times.append(t)
        xs.append(x.copy())
        ws.append(w.copy())

    record(grid[0], x, w)
    termination = None
    eps = cfg.collision_epsilon
    steps = 0
    for k in range(len(grid) - 1):
        t, h = grid[k], grid[k + 1] - grid[k]
        try:
            xn, wn = _advance(b, x, w, p, h, cfg.scheme, eps)
        except CollisionError as e:
            termination = _locate_collision(b, x, w, p, t, h, cfg, (e.distance, e.pair))
            break
        except InjectivityError as e:
            termination = InjectivityViolated(float(t), e.pair)
            break
        dmin, i, j = K.closest_approach(b.kind, x, xn)
        if dmin <= eps:
            termination = _locate_collision(b, x, w, p, t, h, cfg, (dmin, (i, j)))
            break
        pair = _crosses_cut_locus(b, x, xn)
        if pair is not None:
            termination = InjectivityViolated(float(t), pair)
            break
        x, w = xn, wn
        steps += 1
        if steps % cfg.record_stride == 0 or k == len(grid) - 2:
            try:
                record(grid[k + 1], x, w)
            except InjectivityError as e:
                # the new state is past the cut locus; keep the last good record
                termination = InjectivityViolated(float(grid[k + 1]), e.pair)
                break
    if termination is None:
        termination = Completed(float(times[-1]))
    elif times[-1] != grid[steps] and not isinstance(termination, InjectivityViolated):
        record(grid[steps], x, w)

    diag = {name: np.array(col, dtype=float) for name, col in zip(DIAGNOSTIC_FIELDS, zip(*rows))}
    diag["total"] = diag["kinetic"] + diag["potential"]
    return Trajectory(
        np.array(times), np.array(xs), np.array(ws), diag, termination,
        backend=b, params=p, config=cfg, steps=steps,
    )
