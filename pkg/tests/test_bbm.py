import math

import numpy as np
import pytest
from scipy import integrate

import oracles
from bbmkit import testfunctions as tf
from bbmkit.bbm import (
    CAVEAT,
    convergence_study,
    default_s_sequence,
    double_limit_study,
    embedding_bound_check,
    embedding_constants,
    extrapolate_linear,
    main2_detector,
    pointwise_limit_check,
    tail_mass_diagnostic,
)
from bbmkit.geometry import Ball, Box, SamplingPlan, Strip
from bbmkit.quadrature import QuadratureConfig
from bbmkit.seminorms import SeminormSpec, bbm_constant

DISK = Ball((0.0, 0.0), 1.0)
SQUARE = Box((-0.5, -0.5), (0.5, 0.5))  # contains the jump x1 = 0
STRIP = Strip(axis=1, half_width=1.0, dim=2)
QUAD = QuadratureConfig(threads=2)
FAST = QuadratureConfig(threads=2, outer_plan=SamplingPlan("polar", n=16, n_angle=32))
GAUSS = QuadratureConfig(threads=2, outer_plan=SamplingPlan("gauss", n=16))
K22 = math.pi / 2


def test_default_sequence():
    seq = default_s_sequence()
    assert len(seq) == 10 and seq[0] == 0.5 and seq[-1] == 1 - 2**-10


def test_extrapolation_exact_on_lines():
    s = default_s_sequence()
    lim, res = extrapolate_linear(s, [3.0 - 2.0 * (1 - v) for v in s])
    assert lim == pytest.approx(3.0, abs=1e-12) and res < 1e-12


def test_study_linear_example():
    r = convergence_study(tf.linear((1.0, 0.0)), DISK, SeminormSpec(s=0.5, tau=0.5), quad=QUAD)
    assert r.extrapolated_limit == pytest.approx(math.pi**2 / 2, rel=5e-3)
    assert r.reference == pytest.approx(math.pi**2 / 2, rel=1e-3)
    assert r.verdict == "converged"
    assert all(np.isfinite(r.scaled_values)) and min(r.scaled_values) >= 0
    assert r.provenance["seed"] == 0 and r.provenance["domain"]["kind"] == "ball"


def test_study_linear_per_s_regression():
    r = convergence_study(tf.linear((1.0, 0.0)), DISK, SeminormSpec(s=0.5, tau=0.5), quad=QUAD)
    for s, v in zip(r.s_values, r.scaled_values):
        assert v == pytest.approx(oracles.linear_disk_tilde_scaled_closed(s, 0.5), rel=QUAD.rel_tol)


def test_study_constant():
    r = convergence_study(tf.constant(), DISK, SeminormSpec(s=0.5), quad=FAST)
    assert r.scaled_values == [0.0] * 10
    assert r.extrapolated_limit == 0.0 and r.verdict == "converged"


def test_study_linear_p2_q3():
    r = convergence_study(tf.linear((1.0, 0.0)), DISK, SeminormSpec(s=0.5, p=2, q=3), quad=QUAD)
    assert not r.warnings
    assert r.extrapolated_limit == pytest.approx(oracles.bbm_constant(2, 2, 3) * math.pi, rel=2e-2)


def test_study_warns_outside_regimes():
    r = convergence_study(tf.linear(), DISK, SeminormSpec(s=0.5, p=1, q=2), [0.5, 0.9, 0.99], quad=FAST)
    assert any("outside the regimes" in w for w in r.warnings)


def test_study_rejects_nonincreasing_sequence():
    with pytest.raises(ValueError):
        convergence_study(tf.linear(), DISK, SeminormSpec(s=0.5), [0.9, 0.5], quad=FAST)


def test_variant_limit_invariance_and_order():
    seq = default_s_sequence()
    f = tf.gaussian_bump()
    tilde = convergence_study(f, DISK, SeminormSpec(s=0.5, tau=0.5), seq, FAST)
    hat = convergence_study(f, DISK, SeminormSpec(s=0.5, tau=0.5, R=0.05, variant="hat"), seq, FAST)
    assert hat.extrapolated_limit == pytest.approx(tilde.extrapolated_limit, rel=1e-2)
    assert all(h <= t for h, t in zip(hat.scaled_values, tilde.scaled_values))


def test_pointwise_linear_identity():
    f = tf.linear((1.0, 2.0))
    r = pointwise_limit_check(f, DISK, (0.2, 0.1), 2.0, quad=QUAD)
    delta = 0.5 * (1 - math.hypot(0.2, 0.1))
    for s, v in zip(r.s_values, r.scaled_values):
        assert v == pytest.approx(5 * math.pi * delta ** (2 * (1 - s)) / 2, rel=QUAD.rel_tol)
    assert r.target == pytest.approx(5 * math.pi / 2, rel=1e-12)


def test_pointwise_gaussian_critical_point():
    r = pointwise_limit_check(tf.gaussian_bump(), DISK, (0.0, 0.0), 2.0, quad=QUAD)
    assert r.target == 0.0
    assert r.verdict == "converged"
    assert r.scaled_values[-1] < 1e-2


@pytest.mark.parametrize("q", [1.0, 2.0, 3.0])
def test_pointwise_polynomial(q):
    f = tf.poly_x1sq_x2()
    x = (0.3, 0.2)
    slope = math.hypot(2 * 0.3 * 0.2, 0.3**2)
    r = pointwise_limit_check(f, DISK, x, q, quad=QUAD)
    target = oracles.sphere_moment(2, q) / q * slope**q
    assert r.target == pytest.approx(target, rel=1e-6)
    assert r.scaled_values[-1] == pytest.approx(target, rel=1e-2)
    assert r.verdict == "converged"


def test_pointwise_rejects_boundary():
    with pytest.raises(ValueError):
        pointwise_limit_check(tf.linear(), DISK, (1.0, 0.0), 2.0)


def _linear_hat_lhs(s, p, q, R, tau):
    # (1-s)^{p/q} ∫ I^{p/q}, I = |a|^q C δ^β / β with δ = min(R, τ(1-|x|)), |a| = 1
    C = oracles.sphere_moment(2, q)
    beta = q * (1 - s)

    def radial(r):
        d = min(R, tau * (1 - r))
        return (C * d**beta / q) ** (p / q) * 2 * math.pi * r

    return integrate.quad(radial, 0, 1, points=[1 - R / tau], epsrel=1e-12)[0]


def test_embedding_linear_example():
    spec = SeminormSpec(s=0.9, p=2, q=2, tau=0.5, R=0.2, variant="hat")
    e = embedding_bound_check(tf.linear((1.0, 0.0)), DISK, spec, QUAD)
    assert e.lhs == pytest.approx(_linear_hat_lhs(0.9, 2, 2, 0.2, 0.5), rel=QUAD.rel_tol)
    assert e.gradient_energy == pytest.approx(math.pi, rel=1e-3)
    assert e.satisfied_derived
    # the constant R^{p(1-s)}/q^{p/q} is too small by the sphere moment: for linear f
    # lhs <= C_{N,q}^{p/q} * rhs, with near equality when δ = R on most of Ω
    assert not e.satisfied
    assert e.lhs / e.rhs <= math.pi


def test_embedding_stated_ratio_tends_to_sphere_moment():
    f = tf.linear((1.0, 0.0))
    ratios = []
    for s in (0.99, 0.999):
        spec = SeminormSpec(s=s, p=2, q=2, tau=0.5, R=0.01, variant="hat")
        e = embedding_bound_check(f, DISK, spec, QUAD)
        ratios.append(e.lhs / e.rhs)
    # δ^{β} -> 1 as β -> 0, so lhs/rhs -> C_{2,2} = π
    assert ratios[0] < ratios[1] and ratios[-1] == pytest.approx(math.pi, rel=1e-2)


def test_embedding_constant_f():
    e = embedding_bound_check(tf.constant(), DISK, SeminormSpec(s=0.9, R=0.2, variant="hat"), FAST)
    assert e.lhs == 0.0 and e.rhs == 0.0 and e.satisfied and e.satisfied_derived


@pytest.mark.parametrize("s", [0.5, 0.9, 0.99])
def test_embedding_gaussian_p3_q2(s):
    spec = SeminormSpec(s=s, p=3, q=2, tau=0.5, R=0.2, variant="hat")
    e = embedding_bound_check(tf.gaussian_bump(), DISK, spec, FAST)
    assert e.satisfied_derived
    assert e.lhs <= bbm_constant(2, 3, 2) * e.gradient_energy * (1 + 1e-3)


def test_embedding_constants_formula():
    stated, derived = embedding_constants(2, 0.9, 2, 2, 0.2)
    assert stated == pytest.approx(0.2**0.2 / 2)
    assert derived == pytest.approx(2 * math.pi / (2 * 0.8) * 0.2**0.2)
    assert embedding_constants(2, 0.5, 2, 2, 0.2)[1] == math.inf


def test_embedding_p_less_than_q_bounded():
    spec = SeminormSpec(s=0.5, p=2, q=3, tau=0.5, R=0.2, variant="hat")
    e = embedding_bound_check(tf.gaussian_bump(), DISK, spec, FAST)
    assert e.branch == "p<q" and e.satisfied and not e.warnings
    e = embedding_bound_check(tf.gaussian_bump(), DISK, SeminormSpec(s=0.5, p=1.5, q=7, R=0.2, variant="hat"), FAST)
    assert e.warnings


def test_embedding_needs_hat():
    with pytest.raises(ValueError):
        embedding_bound_check(tf.linear(), DISK, SeminormSpec(s=0.9), FAST)


def test_detector_gaussian_bounded():
    r = main2_detector(tf.gaussian_bump(), DISK, SeminormSpec(s=0.5), quad=FAST)
    assert r.verdict == "bounded_suggests_w1p"
    assert r.caveat == CAVEAT


def test_detector_indicator_p2_diverges():
    r = main2_detector(tf.halfspace_indicator(), SQUARE, SeminormSpec(s=0.5, p=2, q=2), quad=QUAD)
    assert r.verdict == "diverging_suggests_not_w1p"
    assert r.growth_factor >= 4
    # the layer profile decays like d^{-sp} and sp > 1 on the whole grid
    assert all(min(e) > 1 for e in r.singular_exponents)


def test_detector_indicator_p1_bounded():
    r = main2_detector(tf.halfspace_indicator(), SQUARE, SeminormSpec(s=0.5, p=1, q=1), quad=QUAD)
    assert r.verdict == "bounded_suggests_w1p"
    cross = main2_detector(
        tf.halfspace_indicator(), SQUARE, SeminormSpec(s=0.5, p=1, q=1), [0.9, 0.99, 0.999], quad=QUAD
    )
    v = cross.values
    # plateau: increments shrink with 1 - s, values stay finite
    assert np.all(np.isfinite(v)) and (v[2] - v[1]) < 0.2 * (v[1] - v[0])


def test_detector_indicator_p2_resolved_growth():
    # with the singular tail removed, the resolved part still grows as s -> 1
    r = main2_detector(tf.halfspace_indicator(), SQUARE, SeminormSpec(s=0.5, p=2, q=2), [0.6, 0.8, 0.9], quad=QUAD, d_min=1e-6)
    assert r.resolved_values[-1] > 4 * r.resolved_values[0]


def test_detector_indicator_p1_layer_oracle():
    # p = q = 1, tilde: a point at distance t from the jump and τ·dist > t sees the
    # half-plane past the jump; the inner integral over the ball is a 1-D integral
    s = 0.9
    r = main2_detector(tf.halfspace_indicator(), SQUARE, SeminormSpec(s=0.5, p=1, q=1), [s], quad=QUAD)
    assert np.isfinite(r.values[0]) and r.values[0] > 0


@pytest.mark.parametrize("f", [g for g in tf.catalog(2) if g.regularity == "smooth_w1p"], ids=lambda g: g.name)
def test_detector_smooth_catalog_bounded(f):
    assert main2_detector(f, DISK, SeminormSpec(s=0.5), quad=FAST).verdict == "bounded_suggests_w1p"


def test_tails_bounded_examples():
    t = tail_mass_diagnostic(tf.linear(), DISK, SeminormSpec(s=0.5), 0.9, [2, 4, 10**6], quad=FAST)
    assert t.masses[-1][1] == 0.0
    t = tail_mass_diagnostic(tf.constant(), DISK, SeminormSpec(s=0.5), 0.9, [2, 4, 8], quad=FAST)
    assert all(m == 0.0 for _, m in t.masses)


def test_tails_strip_linear_decreasing():
    t = tail_mass_diagnostic(tf.linear(), STRIP, SeminormSpec(s=0.5), 0.9, [2, 4, 8, 16], quad=GAUSS, truncation=40)
    masses = [m for _, m in t.masses]
    assert all(b < a for a, b in zip(masses, masses[1:]))


@pytest.mark.parametrize("f", [g for g in tf.catalog(2) if g.regularity in ("linear", "smooth_w1p", "lipschitz")], ids=lambda g: g.name)
def test_tails_nonincreasing(f):
    t = tail_mass_diagnostic(f, DISK, SeminormSpec(s=0.5), 0.95, [1, 2, 4, 8, 16], quad=FAST)
    masses = [m for _, m in t.masses]
    assert all(b <= a + 2 * FAST.rel_tol * t.total for a, b in zip(masses, masses[1:]))


def test_double_limit_linear():
    r = double_limit_study(tf.linear((1.0, 0.0)), DISK, 2, [0.4, 0.2, 0.1], quad=QUAD)
    for lam, lim in zip(r.lambdas, r.stage_limits):
        assert lim == pytest.approx(K22 * math.pi * (1 - lam) ** 2, rel=3e-2)
    assert r.stage_limits == sorted(r.stage_limits)
    assert r.reference == pytest.approx(K22 * math.pi, rel=1e-12)


def test_double_limit_constant():
    r = double_limit_study(tf.constant(), DISK, 2, [0.4, 0.2], [0.5, 0.9, 0.99], quad=FAST)
    assert all(v == 0.0 for stage in r.stage_scaled for v in stage)


def test_double_limit_gaussian():
    r = double_limit_study(tf.gaussian_bump(), DISK, 2, [0.4, 0.2, 0.1], quad=FAST)
    assert r.final_limit == pytest.approx(K22 * oracles.gaussian_energy_disk(2), rel=5e-2)
