import math

import numpy as np
import pytest

from rcsflock import dynamics as D
from rcsflock.dynamics import ConstantKernel, CuckerSmaleKernel, ModelParams, SystemState
from rcsflock.errors import CollisionError, DomainError, ParamError
from rcsflock.geometry import Euclidean, Hyperbolic, Sphere
from rcsflock.relkin import to_momentum

import oracles


def random_targets(rng, n, lo=0.5, hi=2.0):
    R = rng.uniform(lo, hi, size=(n, n))
    R = np.triu(R, 1)
    return R + R.T


def random_state(rng, n, d, c, box=2.0):
    x = rng.uniform(-box, box, size=(n, d))
    v = rng.normal(size=(n, d))
    if not math.isinf(c):
        v *= (rng.uniform(0, 0.9, size=n) * c / np.linalg.norm(v, axis=1))[:, None]
    return SystemState(x, to_momentum(v, c))


def test_kernel_examples():
    assert D.kernel_eval(CuckerSmaleKernel(0.7), 0.0) == 1.0
    assert D.kernel_eval(CuckerSmaleKernel(0.5), math.sqrt(3)) == pytest.approx(0.5, rel=1e-15)
    assert D.kernel_eval(ConstantKernel(0.7), 12.0) == 0.7
    assert D.kernel_min_on(CuckerSmaleKernel(1.0), 1.0) == 0.5
    assert D.kernel_min_on(ConstantKernel(0.7), 5.0) == 0.7
    assert D.kernel_min_on(CuckerSmaleKernel(2.0), 0.0) == 1.0
    with pytest.raises(ParamError):
        D.kernel_eval(CuckerSmaleKernel(), -1.0)
    with pytest.raises(ParamError):
        CuckerSmaleKernel(-0.1)


def test_kernel_bounded_by_phi_max():
    r = np.linspace(0, 100, 1001)
    for k in (CuckerSmaleKernel(0.25), CuckerSmaleKernel(3.0), ConstantKernel(2.5)):
        vals = k(r)
        assert np.all(vals >= 0) and np.all(vals <= k.phi_max)


def test_model_params_validation():
    R = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ParamError):
        ModelParams(1.0, -1.0, 1.0, 1.0, R)
    with pytest.raises(ParamError):
        ModelParams(1.0, 1.0, 1.0, 1.0, np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(ParamError):
        ModelParams(1.0, 1.0, 1.0, 1.0, np.array([[1.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(DomainError):
        ModelParams(0.0, 1.0, 1.0, 1.0, R)
    p = ModelParams(1.0, 1.0, 1.0, 1.0, R)
    assert p.n == 2 and not p.targets.flags.writeable
    assert p.with_c(math.inf).c == math.inf and p == ModelParams(1.0, 1.0, 1.0, 1.0, R.copy())


def test_rhs_vanishes_at_matched_pair():
    R = np.array([[0.0, 1.5], [1.5, 0.0]])
    p = ModelParams(3.0, 1.0, 1.0, 1.0, R)
    s = SystemState([[0.0, 0.0], [1.5, 0.0]], [[0.4, 0.2], [0.4, 0.2]])
    dx, dw = D.euclidean_rhs(s, p)
    assert np.array_equal(dw, np.zeros((2, 2)))
    np.testing.assert_allclose(dx[0], dx[1], rtol=0)


@pytest.mark.parametrize("c", [0.7, 5.0, math.inf])
def test_euclidean_rhs_matches_term_by_term_oracle(c, rng):
    for _ in range(10):
        n, d = 3, int(rng.integers(1, 4))
        s = random_state(rng, n, d, c)
        beta = float(rng.uniform(0, 2))
        p = ModelParams(c, *rng.uniform(0.1, 2.0, size=3), random_targets(rng, n), CuckerSmaleKernel(beta))
        dx, dw = D.euclidean_rhs(s, p)
        v, I, J, Kb = oracles.euclidean_rhs(s.x.tolist(), s.w.tolist(), c, p.kappa0, p.kappa1, p.kappa2,
                                            p.targets.tolist(), oracles.cs_kernel(beta))
        np.testing.assert_allclose(dx, v, rtol=1e-13, atol=1e-15)
        scale = np.abs(I).max() + np.abs(J).max() + np.abs(Kb).max()
        assert np.abs(dw - (I + J + Kb)).max() <= 1e-14 * max(scale, 1.0)


def test_classical_rhs_examples(rng):
    R = np.array([[0.0, 2.0], [2.0, 0.0]])
    p = ModelParams(math.inf, 0.5, 0.3, 0.2, R)
    s = SystemState([[-1.0, 0.0], [1.0, 0.0]], [[0.7, 0.0], [-0.7, 0.0]])
    dx, dw = D.classical_rhs(s, p)
    np.testing.assert_array_equal(dx, s.w)
    np.testing.assert_allclose(dw[0], -dw[1], rtol=1e-15)
    # classical_rhs ignores the stored c
    s3 = random_state(rng, 3, 2, math.inf)
    p3 = ModelParams(2.0, 1.0, 1.0, 1.0, random_targets(rng, 3))
    v, I, J, Kb = oracles.euclidean_rhs(s3.x.tolist(), s3.w.tolist(), math.inf, 1.0, 1.0, 1.0,
                                        p3.targets.tolist(), oracles.cs_kernel(0.5))
    np.testing.assert_allclose(D.classical_rhs(s3, p3)[1], I + J + Kb, rtol=1e-13, atol=1e-14)


@pytest.mark.parametrize("c", [0.5, 5.0, math.inf])
def test_momentum_sum_is_conserved(c, rng):
    for _ in range(20):
        n = int(rng.integers(2, 10))
        s = random_state(rng, n, 3, c)
        p = ModelParams(c, *rng.uniform(0, 3, size=3), random_targets(rng, n))
        dw = D.euclidean_rhs(s, p)[1]
        assert np.abs(dw.sum(axis=0)).max() <= 1e-13 * np.abs(dw).sum()


def test_classical_limit_slope(rng):
    s = random_state(rng, 4, 2, math.inf)
    p = ModelParams(math.inf, 1.0, 1.0, 1.0, random_targets(rng, 4))
    ref = np.concatenate(D.classical_rhs(s, p))
    cs = np.array([10.0, 20.0, 40.0, 80.0])
    gaps = [np.abs(np.concatenate(D.euclidean_rhs(s, p.with_c(c))) - ref).max() for c in cs]
    slope = np.polyfit(np.log(cs), np.log(gaps), 1)[0]
    assert abs(slope + 2) <= 0.1


def test_permutation_equivariance(rng):
    s = random_state(rng, 6, 2, 3.0)
    p = ModelParams(3.0, 1.0, 0.5, 2.0, random_targets(rng, 6))
    perm = rng.permutation(6)
    sp = SystemState(s.x[perm], s.w[perm])
    pp = ModelParams(3.0, 1.0, 0.5, 2.0, p.targets[np.ix_(perm, perm)])
    dx, dw = D.euclidean_rhs(s, p)
    dxp, dwp = D.euclidean_rhs(sp, pp)
    np.testing.assert_allclose(dxp, dx[perm], rtol=1e-15)
    np.testing.assert_allclose(dwp, dw[perm], rtol=1e-12, atol=1e-14)


def test_kappa2_scales_spring_term_only(rng):
    s = random_state(rng, 4, 3, 2.0)
    R = random_targets(rng, 4)
    a = D.force_decomposition(s, ModelParams(2.0, 1.0, 1.0, 1.0, R), 2)
    b = D.force_decomposition(s, ModelParams(2.0, 1.0, 1.0, 3.5, R), 2)
    np.testing.assert_array_equal(a.alignment, b.alignment)
    np.testing.assert_array_equal(a.velocity_bonding, b.velocity_bonding)
    np.testing.assert_allclose(b.spring_bonding, 3.5 * a.spring_bonding, rtol=1e-14)


def test_force_decomposition_examples(rng):
    s = random_state(rng, 5, 2, 4.0)
    R = random_targets(rng, 5)
    f = D.force_decomposition(s, ModelParams(4.0, 1.0, 0.0, 0.0, R), 1)
    assert not np.any(f.velocity_bonding) and not np.any(f.spring_bonding)
    same = SystemState(s.x, np.tile(s.w[0], (5, 1)))
    f = D.force_decomposition(same, ModelParams(4.0, 1.0, 1.0, 1.0, R), 3)
    assert not np.any(f.alignment) and not np.any(f.velocity_bonding)
    p = ModelParams(4.0, 0.8, 1.3, 0.6, R)
    dw = D.euclidean_rhs(s, p)[1]
    for i in range(5):
        np.testing.assert_allclose(D.force_decomposition(s, p, i).total, dw[i], rtol=1e-14, atol=1e-15)
    with pytest.raises(ParamError):
        D.force_decomposition(s, p, 5)


def test_collision_raises():
    p = ModelParams(math.inf, 1.0, 1.0, 1.0, np.array([[0.0, 1.0], [1.0, 0.0]]))
    s = SystemState([[0.0, 0.0], [1e-10, 0.0]], [[0.0, 0.0], [0.0, 0.0]])
    with pytest.raises(CollisionError) as info:
        D.euclidean_rhs(s, p)
    assert info.value.pair == (0, 1)


def test_size_mismatch_is_rejected():
    p = ModelParams(math.inf, 1.0, 1.0, 1.0, np.array([[0.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(ParamError):
        D.euclidean_rhs(SystemState(np.zeros((3, 2)), np.zeros((3, 2))), p)


@pytest.mark.parametrize("c", [2.0, math.inf])
def test_manifold_rhs_flat_reduction(c, rng):
    s = random_state(rng, 5, 3, c)
    p = ModelParams(c, 1.0, 0.7, 1.2, random_targets(rng, 5))
    a = D.euclidean_rhs(s, p)
    b = D.manifold_rhs(Euclidean(3), s, p)
    for u, v in zip(a, b):
        assert np.abs(u - v).max() <= 1e-13 * max(1.0, np.abs(u).max())


def test_manifold_rhs_zero_for_rigidly_moving_pair():
    a, speed = 0.8, 0.3
    x = np.array([[1.0, 0.0, 0.0], [math.cos(a), math.sin(a), 0.0]])
    v = speed * np.array([[0.0, 1.0, 0.0], [-math.sin(a), math.cos(a), 0.0]])
    c = 2.0
    p = ModelParams(c, 1.0, 1.0, 1.0, np.array([[0.0, a], [a, 0.0]]))
    dx, Dw = D.manifold_rhs(Sphere(2), SystemState(x, to_momentum(v, c)), p)
    np.testing.assert_allclose(dx, v, rtol=1e-12)
    assert np.abs(Dw).max() <= 1e-15


@pytest.mark.parametrize("b", [Sphere(2, 1.0), Sphere(2, 1.7), Hyperbolic(2, 1.0)], ids=lambda b: f"{b.name}-{b.radius}")
def test_manifold_rhs_matches_ode_transport_oracle(b, rng):
    geo = oracles.SphereOracle(b.radius) if b.kind == 1 else oracles.HyperboloidOracle(b.radius)
    c = 1.5
    for _ in range(3):
        # points in a cap around the origin, so no pair is near antipodal on the sphere
        o = b.origin()
        x = np.array([b.exp(o, 0.6 * b.radius * b.random_tangent(rng, o)) for _ in range(3)])
        w = np.array([0.8 * b.random_tangent(rng, xi) for xi in x])
        p = ModelParams(c, 0.9, 1.1, 0.7, random_targets(rng, 3), CuckerSmaleKernel(0.5))
        dx, Dw = D.manifold_rhs(b, SystemState(x, w), p)
        v, Dw_ref = oracles.manifold_rhs(geo, x, w, c, 0.9, 1.1, 0.7, p.targets, oracles.cs_kernel(0.5))
        np.testing.assert_allclose(dx, v, rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(Dw, Dw_ref, atol=1e-9)
        for i in range(3):
            assert b.tangent_residual(x[i], Dw[i]) <= 1e-12


def test_manifold_rhs_tangent_and_normal_correction(rng):
    b = Sphere(2, 1.0)
    x = np.array([b.exp(b.origin(), 0.5 * b.random_tangent(rng, b.origin())) for _ in range(4)])
    w = np.array([0.5 * b.random_tangent(rng, xi) for xi in x])
    p = ModelParams(3.0, 1.0, 1.0, 1.0, random_targets(rng, 4, 0.2, 1.0))
    v, Dw = D.manifold_rhs(b, SystemState(x, w), p)
    v2, wdot = D.ambient_rhs(b, x, w, p)
    np.testing.assert_array_equal(v, v2)
    # d/dt <x_i, w_i> = <v_i, w_i> + <x_i, w_i'> must vanish
    res = np.einsum("ij,ij->i", v, w) + np.einsum("ij,ij->i", x, wdot)
    assert np.abs(res).max() <= 1e-14
    np.testing.assert_allclose(wdot - np.einsum("ij,ij->i", x, wdot)[:, None] * x, Dw, atol=1e-15)
