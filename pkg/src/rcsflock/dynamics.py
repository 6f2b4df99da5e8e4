"""Right-hand sides of the flocking model with bonding force.

Three variants share one compiled pairwise loop:

* relativistic, Euclidean:  x_i' = v(w_i),
  w_i' = k0/N sum_j phi(r_ij)(v_j - v_i)
         + 1/(2N) sum_{j != i} [k1 <v_j - v_i, e_ij> + k2 (r_ij - R_ij)] e_ij
* classical: the same with w = v (c = inf)
* manifold: differences of velocities use parallel transport, e_ij becomes
  log_{x_i} x_j / d_ij, and the left side is the covariant derivative.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as K
from .errors import CollisionError, ConvergenceError, InjectivityError, ParamError
from .geometry import Euclidean
from .relkin import check_speed_of_light

COLLISION_EPS = 1e-8


@dataclass(frozen=True)
class CuckerSmaleKernel:
    """phi(r) = (1 + r^2)^(-beta)."""

    beta: float = 0.5
    code = K.CUCKER_SMALE

    def __post_init__(self):
        if not (self.beta >= 0):
            raise ParamError(f"beta must be non-negative, got {self.beta!r}")

    @property
    def param(self):
        return float(self.beta)

    @property
    def phi_max(self):
        return 1.0

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return ((1.0 + r * r) ** (-self.beta))[()]

    def min_on(self, r_max):
        # decreasing in r, so the minimum sits at the right end
        return float(self(max(r_max, 0.0)))


@dataclass(frozen=True)
class ConstantKernel:
    phi0: float = 1.0
    code = K.CONSTANT

    def __post_init__(self):
        if not (self.phi0 >= 0):
            raise ParamError(f"phi0 must be non-negative, got {self.phi0!r}")

    @property
    def param(self):
        return float(self.phi0)

    @property
    def phi_max(self):
        return float(self.phi0)

    def __call__(self, r):
        return (np.zeros_like(np.asarray(r, dtype=float)) + self.phi0)[()]

    def min_on(self, r_max):
        return float(self.phi0)


def kernel_eval(k, r):
    if np.any(np.asarray(r) < 0):
        raise ParamError("kernel argument must be non-negative")
    return k(r)


def kernel_min_on(k, r_max):
    if r_max < 0:
        raise ParamError("r_max must be non-negative")
    return k.min_on(r_max)


def _check_targets(R):
    R = np.array(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ParamError(f"target distances must be a square matrix, got shape {R.shape}")
    if np.any(np.diag(R) != 0):
        raise ParamError("target distances need a zero diagonal")
    if not np.array_equal(R, R.T):
        raise ParamError("target distances must be symmetric")
    if np.any(R < 0) or not np.all(np.isfinite(R)):
        raise ParamError("target distances must be finite and non-negative")
    R.setflags(write=False)
    return R


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Couplings, speed of light and target pattern.

    The particle count is the size of ``targets``.  The spatial dimension is
    not stored here; it comes from the state (and backend, on manifolds).
    """

    c: float
    kappa0: float
    kappa1: float
    kappa2: float
    targets: np.ndarray
    kernel: object = field(default_factory=CuckerSmaleKernel)

    def __post_init__(self):
        check_speed_of_light(self.c)
        for name in ("kappa0", "kappa1", "kappa2"):
            if not (getattr(self, name) >= 0) or math.isinf(getattr(self, name)):
                raise ParamError(f"{name} must be finite and non-negative")
        object.__setattr__(self, "targets", _check_targets(self.targets))

    @property
    def n(self) -> int:
        return self.targets.shape[0]

    def with_c(self, c):
        return replace(self, c=c)

    def __eq__(self, other):
        if not isinstance(other, ModelParams):
            return NotImplemented
        return (
            (self.c, self.kappa0, self.kappa1, self.kappa2, self.kernel)
            == (other.c, other.kappa0, other.kappa1, other.kappa2, other.kernel)
            and np.array_equal(self.targets, other.targets)
        )


@dataclass(eq=False)
class SystemState:
    """Positions (rows are particles) and momenta at time t."""

    x: np.ndarray
    w: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=float)
        self.w = np.ascontiguousarray(self.w, dtype=float)
        if self.x.ndim != 2 or self.x.shape != self.w.shape:
            raise ParamError(f"x and w must be matching (N, m) arrays, got {self.x.shape} and {self.w.shape}")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def copy(self):
        return SystemState(self.x.copy(), self.w.copy(), self.t)


@dataclass(frozen=True)
class ForceDecomposition:
    alignment: np.ndarray
    velocity_bonding: np.ndarray
    spring_bonding: np.ndarray

    @property
    def total(self):
        return self.alignment + self.velocity_bonding + self.spring_bonding


def _check_sizes(s, p, b):
    if s.n != p.n:
        raise ParamError(f"state has {s.n} particles but targets are {p.n} x {p.n}")
    if s.x.shape[1] != b.ambient_dim:
        raise ParamError(f"state has {s.x.shape[1]} components, backend expects {b.ambient_dim}")


def raise_status(status, i, j, d):
    if status == K.COLLISION:
        raise CollisionError(f"particles {i} and {j} collided (distance {d:.3e})", pair=(i, j), distance=d)
    if status == K.INJECTIVITY:
        raise InjectivityError(f"particles {i} and {j} reached the injectivity radius", pair=(i, j))
    if status == K.CONVERGENCE:
        raise ConvergenceError("inverse momentum map did not converge")
    raise RuntimeError(f"unexpected kernel status {status}")


def velocities(s, p, b=None):
    b = Euclidean(s.x.shape[1]) if b is None else b
    v, st = K.velocities(b.kind, s.w, float(p.c))
    if st != K.OK:
        raise_status(st, -1, -1, 0.0)
    return v


def _rhs(b, x, w, p, eps, ambient):
    v, dw, st, i, j, d = K.rhs(
        b.kind, float(b.radius), x, w, float(p.c),
        float(p.kappa0), float(p.kappa1), float(p.kappa2), p.targets,
        p.kernel.code, p.kernel.param, float(eps), ambient,
    )
    if st != K.OK:
        raise_status(st, i, j, d)
    return v, dw


def euclidean_rhs(s, p, eps=COLLISION_EPS):
    """(dx, dw) for the relativistic model in R^d."""
    b = Euclidean(s.x.shape[1])
    _check_sizes(s, p, b)
    return _rhs(b, s.x, s.w, p, eps, False)


def classical_rhs(s, p, eps=COLLISION_EPS):
    """(dx, dw) with momentum equal to velocity, whatever ``p.c`` says."""
    return euclidean_rhs(s, p.with_c(math.inf), eps)


def manifold_rhs(b, s, p, eps=COLLISION_EPS):
    """(dx, Dw): velocity and covariant derivative of the momentum, both tangent at x_i."""
    _check_sizes(s, p, b)
    return _rhs(b, s.x, s.w, p, eps, False)


def ambient_rhs(b, x, w, p, eps=COLLISION_EPS):
    """Time derivative of (x, w) in ambient coordinates.

    Adds to Dw the normal component that keeps w tangent along the moving
    base point; the integrator works with this form.
    """
    return _rhs(b, x, w, p, eps, True)


def force_decomposition(s, p, i, b=None, eps=COLLISION_EPS):
    """Alignment, velocity-bonding and spring-bonding contributions to particle i."""
    b = Euclidean(s.x.shape[1]) if b is None else b
    _check_sizes(s, p, b)
    if not 0 <= i < s.n:
        raise ParamError(f"particle index {i} out of range")
    v = velocities(s, p, b)
    I, J, Kb, st, a, c, d = K.forces(
        b.kind, float(b.radius), s.x, v,
        float(p.kappa0), float(p.kappa1), float(p.kappa2), p.targets,
        p.kernel.code, p.kernel.param, float(eps),
    )
    if st != K.OK:
        raise_status(st, a, c, d)
    return ForceDecomposition(I[i].copy(), J[i].copy(), Kb[i].copy())
