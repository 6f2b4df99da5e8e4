"""Riemannian backends: Euclidean space, the round sphere and the hyperboloid.

Points and tangent vectors are plain float arrays in ambient coordinates
(length d for Euclidean, d+1 for the sphere S^d and hyperbolic space H^d).
The sphere of radius rho is {|x| = rho}; hyperbolic space is the upper sheet
{<x,x>_M = -rho^2, x_0 > 0} with the Minkowski form
<a,b>_M = -a_0 b_0 + a_1 b_1 + ... + a_d b_d.

All maps are closed form.  The compiled pairwise primitives live in
``_kernels`` and are shared with the right-hand side.
"""
import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from . import _kernels as K
from .errors import AntipodalError, BaseMismatch, InjectivityError, ParamError, ProjectionError

TOL = 1e-10


def _vec(a):
    return np.ascontiguousarray(a, dtype=float)


@dataclass(frozen=True)
class Backend:
    d: int
    radius: float = 1.0
    kind: ClassVar[int] = -1
    name: ClassVar[str] = ""

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ParamError(f"dimension must be a positive integer, got {self.d!r}")
        if not (self.radius > 0) or math.isinf(self.radius):
            raise ParamError(f"radius must be positive and finite, got {self.radius!r}")

    @property
    def ambient_dim(self) -> int:
        return self.d

    @property
    def injectivity_radius(self) -> float:
        return math.inf

    # ---- constraint checks -------------------------------------------------
    def point_residual(self, x) -> float:
        return 0.0

    def tangent_residual(self, x, u) -> float:
        return 0.0

    def check_point(self, x, tol=TOL):
        x = _vec(x)
        if x.shape[-1] != self.ambient_dim:
            raise ParamError(f"{self.name} points have {self.ambient_dim} ambient components, got {x.shape[-1]}")
        if self.point_residual(x) > tol:
            raise ParamError(f"point is off the {self.name} (residual {self.point_residual(x):.3e})")
        return x

    def check_tangent(self, x, u, tol=TOL):
        u = _vec(u)
        if u.shape != np.shape(x):
            raise BaseMismatch(f"tangent vector shape {u.shape} does not match base point {np.shape(x)}")
        if self.tangent_residual(x, u) > tol:
            raise BaseMismatch(f"vector is not tangent at the base point (residual {self.tangent_residual(x, u):.3e})")
        return u

    # ---- metric -------------------------------------------------------------
    def inner(self, x, u, v) -> float:
        x = _vec(x)
        u = self.check_tangent(x, u)
        v = self.check_tangent(x, v)
        return float(K.inner(self.kind, u, v))

    def norm(self, x, u) -> float:
        return math.sqrt(max(self.inner(x, u, u), 0.0))

    def dist(self, x, y) -> float:
        x, y = _vec(x), _vec(y)
        d = K.pair_dist(self.kind, self.radius, x, y)
        if d < 0:
            raise AntipodalError("points are antipodal; distance equals the injectivity radius")
        return float(d)

    def log(self, x, y):
        x, y = _vec(x), _vec(y)
        out = np.empty_like(x)
        d = K.pair_log(self.kind, self.radius, x, y, out)
        if d < 0:
            raise AntipodalError("log is undefined at the cut locus")
        return out

    def transport(self, x, y, u):
        """Parallel transport of u in T_x M along the minimizing geodesic to y."""
        x, y = _vec(x), _vec(y)
        u = self.check_tangent(x, u)
        if K.pair_dist(self.kind, self.radius, x, y) < 0:
            raise AntipodalError("transport is undefined between antipodal points")
        out = np.empty_like(x)
        K.transport(self.kind, self.radius, x, y, u, out)
        return out

    def exp(self, x, u):
        x = _vec(x)
        u = self.check_tangent(x, u)
        return x + u

    # ---- batched helpers ------------------------------------------------------
    def pairwise_dist(self, xs):
        """Symmetric N x N matrix of geodesic distances."""
        xs = _vec(xs)
        n = xs.shape[0]
        out = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                d = K.pair_dist(self.kind, self.radius, xs[i], xs[j])
                if d < 0:
                    raise InjectivityError(f"particles {i} and {j} are antipodal", pair=(i, j))
                out[i, j] = out[j, i] = d
        return out

    def project_point(self, p, tube=0.0):
        """Radial projection onto the manifold.

        With ``tube > 0`` points whose constraint residual is at least
        ``tube * radius`` are rejected; points with no projection (the
        centre of the sphere, anything off the upper light cone for the
        hyperboloid) always are.
        """
        p = _vec(p)
        out, st = K.project_point(self.kind, self.radius, np.atleast_2d(p), float(tube))
        if st != K.OK:
            raise ProjectionError(f"point cannot be projected onto the {self.name}")
        return out.reshape(p.shape)

    def project_tangent(self, x, u):
        x, u = _vec(x), _vec(u)
        out = K.project_tangent(self.kind, self.radius, np.atleast_2d(x), np.atleast_2d(u))
        return out.reshape(u.shape)

    # ---- sampling -------------------------------------------------------------
    def random_point(self, rng, scale=1.0):
        return rng.normal(scale=scale, size=self.ambient_dim)

    def random_tangent(self, rng, x, scale=1.0):
        return rng.normal(scale=scale, size=self.ambient_dim)

    def origin(self):
        return np.zeros(self.ambient_dim)


@dataclass(frozen=True)
class Euclidean(Backend):
    kind: ClassVar[int] = K.EUCLIDEAN
    name: ClassVar[str] = "euclidean"


@dataclass(frozen=True)
class Sphere(Backend):
    kind: ClassVar[int] = K.SPHERE
    name: ClassVar[str] = "sphere"

    @property
    def ambient_dim(self) -> int:
        return self.d + 1

    @property
    def injectivity_radius(self) -> float:
        return math.pi * self.radius

    def point_residual(self, x):
        x = np.atleast_2d(x)
        return float(np.max(np.abs(np.linalg.norm(x, axis=-1) - self.radius)) / self.radius)

    def tangent_residual(self, x, u):
        x, u = np.atleast_2d(x), np.atleast_2d(u)
        scale = self.radius * np.maximum(1.0, np.linalg.norm(u, axis=-1))
        return float(np.max(np.abs(np.sum(x * u, axis=-1)) / scale))

    def exp(self, x, u):
        x = _vec(x)
        u = self.check_tangent(x, u)
        n = math.sqrt(K.inner(self.kind, u, u))
        if n == 0.0:
            return x.copy()
        t = n / self.radius
        return x * math.cos(t) + (self.radius * math.sin(t) / n) * u

    def origin(self):
        e = np.zeros(self.ambient_dim)
        e[-1] = self.radius
        return e

    def random_point(self, rng, scale=None):
        g = rng.normal(size=self.ambient_dim)
        return self.radius * g / np.linalg.norm(g)

    def random_tangent(self, rng, x, scale=1.0):
        u = rng.normal(scale=scale, size=self.ambient_dim)
        return self.project_tangent(x, u)


@dataclass(frozen=True)
class Hyperbolic(Backend):
    kind: ClassVar[int] = K.HYPERBOLIC
    name: ClassVar[str] = "hyperbolic"

    @property
    def ambient_dim(self) -> int:
        return self.d + 1

    def minkowski(self, a, b):
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        return np.sum(a * b, axis=-1) - 2.0 * a[..., 0] * b[..., 0]

    def point_residual(self, x):
        x = np.atleast_2d(x)
        q = self.minkowski(x, x)
        scale = np.maximum(self.radius**2, np.sum(x * x, axis=-1))
        res = np.abs(q + self.radius**2) / scale
        res = np.where(x[:, 0] > 0, res, np.inf)
        return float(np.max(res))

    def tangent_residual(self, x, u):
        x, u = np.atleast_2d(x), np.atleast_2d(u)
        scale = np.linalg.norm(x, axis=-1) * np.maximum(1.0, np.linalg.norm(u, axis=-1))
        return float(np.max(np.abs(self.minkowski(x, u)) / scale))

    def exp(self, x, u):
        x = _vec(x)
        u = self.check_tangent(x, u)
        n = math.sqrt(max(K.inner(self.kind, u, u), 0.0))
        if n == 0.0:
            return x.copy()
        t = n / self.radius
        return self.project_point(x * math.cosh(t) + (self.radius * math.sinh(t) / n) * u)

    def origin(self):
        e = np.zeros(self.ambient_dim)
        e[0] = self.radius
        return e

    def random_point(self, rng, scale=0.5):
        """Exponential image of a Gaussian tangent vector at the origin.

        ``scale`` is the per-component standard deviation in units of the
        radius.  Hyperboloid coordinates grow like exp(distance), so keep
        samples at moderate distance unless that growth is the point.
        """
        o = self.origin()
        u = np.concatenate([[0.0], rng.normal(scale=scale * self.radius, size=self.d)])
        return self.exp(o, u)

    def random_tangent(self, rng, x, scale=1.0):
        """Gaussian vector at the origin carried to x, so its metric size is O(scale)."""
        u = np.concatenate([[0.0], rng.normal(scale=scale, size=self.d)])
        return self.transport(self.origin(), x, u)


BACKENDS = {"euclidean": Euclidean, "sphere": Sphere, "hyperbolic": Hyperbolic}


def make_backend(name, d, radius=1.0):
    try:
        cls = BACKENDS[name]
    except KeyError:
        raise ParamError(f"unknown geometry {name!r}; choose from {sorted(BACKENDS)}") from None
    return cls(d, radius)


# Functional aliases mirroring the backend methods.

def metric_inner(b, x, u, v):
    return b.inner(x, u, v)


def geodesic_distance(b, x, y):
    return b.dist(x, y)


def exp_map(b, x, u):
    return b.exp(x, u)


def log_map(b, x, y):
    return b.log(x, y)


def parallel_transport(b, x, y, u):
    return b.transport(x, y, u)


def injectivity_radius(b):
    return b.injectivity_radius


def project_point(b, p):
    return b.project_point(p)


def project_tangent(b, x, u):
    return b.project_tangent(x, u)
