"""Relativistic kinematics: Lorentz factor, velocity <-> momentum maps, kinetic energy.

All quantities are dimensionless.  ``c = math.inf`` selects the classical
model, where momentum and velocity coincide exactly (no large-float
approximation is involved anywhere on that path).
"""
import math

import numpy as np

from . import _kernels
from .errors import ConvergenceError, DomainError

INFINITE = math.inf

def is_classical(c) -> bool:
    return math.isinf(c)


def check_speed_of_light(c):
    if not (c > 0):
        raise DomainError(f"speed of light must be positive, got {c!r}")
    return c


def _check_subluminal(speed, c):
    if np.any(np.asarray(speed) >= c):
        raise DomainError(f"speed {np.max(speed)!r} is not below c={c!r}")


def lorentz_factor(speed, c):
    """Gamma = 1/sqrt(1 - speed^2/c^2); exactly 1 for the classical model."""
    speed = np.asarray(speed, dtype=float)
    if is_classical(c):
        return np.ones_like(speed)[()]
    _check_subluminal(speed, c)
    beta = speed / c
    return (1.0 / np.sqrt((1.0 - beta) * (1.0 + beta)))[()]


def momentum_factor(speed, c):
    """F = Gamma * (1 + Gamma/c^2), the ratio |w|/|v|."""
    speed = np.asarray(speed, dtype=float)
    if is_classical(c):
        return np.ones_like(speed)[()]
    gamma = lorentz_factor(speed, c)
    return gamma * (1.0 + gamma / (c * c))


def to_momentum(v, c):
    """Map velocities (last axis = components) to momenta w = F(|v|) v."""
    v = np.asarray(v, dtype=float)
    if is_classical(c):
        return v.copy()
    speed = np.linalg.norm(v, axis=-1)
    return momentum_factor(speed, c)[..., None] * v


def speed_from_momentum(wnorm, c):
    """Solve F(s) s = |w| for s in [0, c).

    Safeguarded Newton: the Newton iterate is used whenever it stays inside
    the current bracket, otherwise the bracket midpoint.  ``s -> F(s) s`` is
    smooth, convex and strictly increasing, so this converges quadratically
    once the iterate lands right of the root.
    """
    y = np.asarray(wnorm, dtype=float)
    if is_classical(c):
        return y.copy()[()]
    if np.any(~np.isfinite(y)) or np.any(y < 0):
        raise DomainError("momentum norms must be finite and non-negative")
    s = _kernels.solve_speeds(np.ascontiguousarray(y.ravel()), float(c)).reshape(y.shape)
    if np.any(s < 0) or np.any(s >= c):
        raise ConvergenceError("inverse momentum map did not converge")
    return s[()]


def to_velocity(w, c):
    """Inverse of :func:`to_momentum`; result lies strictly inside the ball of radius c."""
    w = np.asarray(w, dtype=float)
    if is_classical(c):
        return w.copy()
    wn = np.linalg.norm(w, axis=-1)
    s = np.asarray(speed_from_momentum(wn, c))
    scale = np.divide(s, wn, out=np.zeros_like(s, dtype=float), where=wn > 0)
    return scale[..., None] * w


def velocity_scale(wnorm, c):
    """Factor 1/F such that v = w / F, given only the momentum norm.

    Used on manifolds, where the norm is the metric norm but the map acts
    radially in each tangent space.
    """
    wnorm = np.asarray(wnorm, dtype=float)
    if is_classical(c):
        return np.ones_like(wnorm)
    s = np.asarray(speed_from_momentum(wnorm, c))
    zero = wnorm == 0
    out = np.divide(s, wnorm, out=np.zeros_like(s, dtype=float), where=~zero)
    if np.any(zero):
        out[zero] = 1.0 / float(momentum_factor(0.0, c))
    return out


def kinetic_from_speed(speed, c):
    """c^2 (Gamma - 1) + Gamma^2 - log Gamma for each speed (>= 1)."""
    speed = np.asarray(speed, dtype=float)
    if is_classical(c):
        return 0.5 * speed**2 + 1.0
    _check_subluminal(speed, c)
    beta = speed / c
    q = np.sqrt((1.0 - beta) * (1.0 + beta))
    # c^2 (Gamma - 1) without cancellation
    rest = speed**2 / (q * (1.0 + q))
    gamma2 = 1.0 / (q * q)
    return rest + gamma2 + 0.5 * (np.log1p(-beta) + np.log1p(beta))


def particle_kinetic_energy(v, c):
    v = np.asarray(v, dtype=float)
    return kinetic_from_speed(np.linalg.norm(v, axis=-1), c)[()]
