import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from bbmkit import testfunctions as tf
from bbmkit.quadrature import (
    QuadratureConfig,
    graded_rule,
    inner_integral,
    inner_integral_mc,
    map_chunks,
    outer_lp_aggregate,
    radial_rule,
    sphere_rule,
)

QUAD = QuadratureConfig()


def test_sphere_rule_dim1():
    nodes, w = sphere_rule(1, 8)
    assert sorted(nodes[:, 0].tolist()) == [-1.0, 1.0]
    assert w.tolist() == [1.0, 1.0]


@pytest.mark.parametrize("order", [2, 3, 7, 64, 301])
def test_sphere_rule_dim2_mass(order):
    nodes, w = sphere_rule(2, order)
    assert abs(w.sum() - 2 * math.pi) <= 1e-10
    assert np.allclose(np.linalg.norm(nodes, axis=1), 1.0)


def test_sphere_rule_dim2_second_moment():
    nodes, w = sphere_rule(2, 16)
    assert abs((nodes[:, 0] ** 2) @ w - math.pi) <= 1e-10


def test_sphere_rule_dim3():
    nodes, w = sphere_rule(3, 32)
    assert abs(w.sum() - 4 * math.pi) <= 1e-10
    # low-degree polynomial moments are exact
    assert (nodes[:, 2] ** 2) @ w == pytest.approx(4 * math.pi / 3, rel=1e-12)
    assert (nodes[:, 0] ** 2 * nodes[:, 1] ** 2) @ w == pytest.approx(4 * math.pi / 15, rel=1e-12)


@given(beta=st.floats(1e-6, 4.0), k=st.integers(0, 6))
def test_radial_rule_monomials(beta, k):
    xi, w = radial_rule(beta)
    # ∫_0^1 r^k r^(β-1) dr
    assert np.sum(w * xi**k) == pytest.approx(1 / (beta + k), rel=1e-6)


def test_graded_rule_power():
    d, w = graded_rule(1.0, 1e-10)
    for a in (0.0, 0.5, 0.9):
        exact = (1 - 1e-10 ** (1 - a)) / (1 - a)
        assert np.sum(w * d**-a) == pytest.approx(exact, rel=1e-8)


def test_linear_example():
    f = tf.linear((1.0, 0.0))
    val = inner_integral(f, np.zeros(2), 1.0, 0.5, 2.0, QUAD)
    assert val == pytest.approx(math.pi, rel=QUAD.rel_tol)
    assert val == pytest.approx(oracles.linear_inner((1.0, 0.0), 2.0, 0.5, 1.0), rel=1e-12)


def test_constant_is_zero():
    f = tf.constant()
    assert inner_integral(f, np.array([0.2, 0.1]), 0.4, 0.7, 2.0, QUAD) == 0.0
    assert inner_integral_mc(f, np.array([0.2, 0.1]), 0.4, 0.7, 2.0, 1000) == (0.0, 0.0)


@pytest.mark.parametrize("s", [0.5, 0.9, 0.99, 0.999, 1 - 1e-6])
@pytest.mark.parametrize("q", [1.0, 2.0, 3.0])
@pytest.mark.parametrize("dim", [1, 2, 3])
def test_linear_identity_same_nodes(s, q, dim):
    # (1-s) I = |a|^q C_{N,q} δ^{q(1-s)} / q at every s with the default node counts
    a = np.linspace(1.0, 2.0, dim) * (-1) ** np.arange(dim)
    f = tf.linear(tuple(a))
    x = np.full(dim, 0.3)
    delta = 0.37
    got = (1 - s) * inner_integral(f, x, delta, s, q, QUAD)
    want = (1 - s) * oracles.linear_inner(a, q, s, delta)
    assert got == pytest.approx(want, rel=QUAD.rel_tol)


def test_linear_mc_example():
    f = tf.linear((1.0, 0.0))
    est, se = inner_integral_mc(f, np.zeros(2), 1.0, 0.5, 2.0, 1_000_000, seed=1)
    assert abs(est - math.pi) <= 3 * se


@pytest.mark.parametrize("seed", range(6))
def test_mc_agrees_with_independent_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    f = tf.gaussian_bump()
    x = rng.uniform(-0.4, 0.4, 2)
    s = float(rng.uniform(0.5, 0.99))
    q = float(rng.choice([1.0, 2.0, 3.0]))
    a, sa = inner_integral_mc(f, x, 0.3, s, q, 200_000, seed=seed)
    b, sb = oracles.inner_mc(f.func, x, 0.3, s, q, 200_000, seed=seed + 1000, grad=f.grad)
    assert abs(a - b) <= 4 * math.hypot(sa, sb)
    det = inner_integral(f, x, 0.3, s, q, QUAD)
    assert abs(det - b) <= 4 * sb


def test_outer_aggregate_examples():
    w = np.full(7, math.pi / 7)
    for r in (0.5, 1.0, 1.5, 3.0):
        assert outer_lp_aggregate(np.ones(7), w, r) == pytest.approx(math.pi, rel=1e-15)
    assert outer_lp_aggregate([2.0], [0.3], 1.5) == 0.3 * 2.0**1.5


def test_outer_aggregate_matches_pairwise_sum():
    rng = np.random.default_rng(0)
    v, w = rng.random(10_000), rng.random(10_000)
    ref = np.sum(v * w)  # numpy pairwise summation
    assert abs(outer_lp_aggregate(v, w, 1.0) - ref) <= 1e-12 * ref


def test_outer_aggregate_order_independent():
    rng = np.random.default_rng(1)
    v, w = rng.random(5000) * 1e6, rng.random(5000)
    perm = rng.permutation(5000)
    assert outer_lp_aggregate(v, w, 0.7) == outer_lp_aggregate(v[perm], w[perm], 0.7)


def test_outer_aggregate_rejects_negative():
    with pytest.raises(ValueError):
        outer_lp_aggregate([-1.0], [1.0], 1.0)


def test_map_chunks_thread_independent():
    fn = lambda a, b: np.sqrt(np.arange(a, b, dtype=float))
    ref = map_chunks(fn, 1000, 37, 1)
    for t in (2, 3, 8):
        assert np.array_equal(map_chunks(fn, 1000, 37, t), ref)


def test_threads_do_not_change_inner_values():
    f = tf.poly_x1sq_x2()
    X = np.random.default_rng(2).uniform(-0.5, 0.5, (300, 2))
    a = inner_integral(f, X, 0.2, 0.9, 2.0, QuadratureConfig(threads=1, chunk=16))
    b = inner_integral(f, X, 0.2, 0.9, 2.0, QuadratureConfig(threads=4, chunk=16))
    assert np.array_equal(a, b)


@given(c=st.floats(0.1, 10.0), sign=st.sampled_from([-1, 1]), q=st.sampled_from([1.0, 2.0, 3.0]), s=st.floats(0.5, 0.999))
def test_inner_homogeneous(c, sign, q, s):
    f = tf.gaussian_bump()
    x = np.array([0.1, -0.2])
    a = inner_integral(f, x, 0.3, s, q, QUAD)
    b = inner_integral(f.scaled(sign * c), x, 0.3, s, q, QUAD)
    assert b == pytest.approx(c**q * a, rel=1e-10)


@given(lam=st.floats(0.25, 4.0), q=st.sampled_from([1.0, 2.0, 3.0]), s=st.floats(0.5, 0.999))
def test_inner_space_scaling(lam, q, s):
    # value(f(λ.), x/λ, δ/λ) = λ^{sq} value(f, x, δ)
    x = np.array([0.1, -0.2])
    for f in (tf.linear((1.0, 2.0)), tf.gaussian_bump()):
        a = inner_integral(f, x, 0.3, s, q, QUAD)
        b = inner_integral(f.dilated(lam), x / lam, 0.3 / lam, s, q, QUAD)
        assert b == pytest.approx(lam ** (s * q) * a, rel=QUAD.rel_tol)


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(rel_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureConfig(sphere_order=1)
    with pytest.raises(ValueError):
        QuadratureConfig(radial_nodes=3)


def test_inner_rejects_bad_ball():
    from bbmkit.geometry import Ball

    with pytest.raises(ValueError):
        inner_integral(tf.linear(), np.array([0.9, 0.0]), 0.5, 0.5, 2.0, QUAD, domain=Ball())
