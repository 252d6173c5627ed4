"""The three nonlocal seminorms and the asymptotic constant K(N, p, q).

All seminorm functions return the p-th power ``[f]^p``.  No ``(1 - s)``
scaling is applied here; the study layer in :mod:`bbmkit.bbm` does that.

Variants of the inner integration region around x:

* ``full``  -- all of Ω (both integrals over the same set);
* ``tilde`` -- the ball ``B(x, τ dist(x, ∂Ω))``;
* ``hat``   -- the ball ``B(x, min(R, τ dist(x, ∂Ω)))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial.legendre import leggauss

from .geometry import Truncated, sample_domain
from .quadrature import (
    QuadratureConfig,
    S_MAX,
    inner_integral_batch,
    map_chunks,
    outer_lp_aggregate,
    sphere_area,
    sphere_rule,
    _uniform_directions,
)

__all__ = [
    "VARIANTS",
    "SeminormSpec",
    "inner_values",
    "seminorm_p",
    "sphere_moment",
    "sphere_moment_closed_form",
    "sphere_moment_mc",
    "bbm_constant",
    "annulus_tail_seminorm_p",
    "annulus_tail_mc",
    "leoni_spector_truncated_p",
]

VARIANTS = ("full", "tilde", "hat")


@dataclass(frozen=True)
class SeminormSpec:
    s: float
    p: float = 2.0
    q: float = 2.0
    tau: float = 0.5
    R: float = math.inf
    variant: str = "tilde"

    def __post_init__(self):
        if not 0 < self.s < 1:
            raise ValueError("s must lie in (0, 1)")
        if self.s > S_MAX:
            raise ValueError(f"s is capped at {S_MAX} (double precision radial nodes)")
        if self.p < 1 or self.q < 1:
            raise ValueError("p and q must be >= 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.variant != "full" and not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if not self.R > 0:
            raise ValueError("R must be positive")
        if self.variant == "hat" and not math.isfinite(self.R):
            raise ValueError("the hat variant needs a finite R")

    def with_s(self, s):
        return replace(self, s=float(s))

    def regimes(self, dim):
        """Which parameter regime of the limit theorem covers (dim, p, q)."""
        p, q, n = self.p, self.q, dim
        crit = math.inf if p >= n else n * p / (n - p)
        return {
            "regime_A": 1 <= q <= p,
            "regime_B": 1 < p < q and p <= n and q < crit,
            "regime_C": n < p < q,
        }

    def covered(self, dim):
        return any(self.regimes(dim).values())

    def to_dict(self):
        d = dict(self.__dict__)
        if not math.isfinite(d["R"]):
            d["R"] = "infinite"
        return d


def _radius(domain, spec, X):
    d = domain.sdf(X)
    rho = spec.tau * np.maximum(d, 0.0)
    if spec.variant == "hat":
        rho = np.minimum(rho, spec.R)
    return rho


def _full_remainder(f, domain, X, dirs, wdirs, exit_r, s, q, n_nodes):
    # re-entries past the first boundary hit on non-convex sets, by node rejection
    _, r_max = domain.enclosing_ball()
    r_max = 2 * r_max
    t, wt = leggauss(n_nodes)
    t, wt = (t + 1) / 2, wt / 2
    lo = np.maximum(exit_r, 1e-300)
    span = np.log(r_max / lo)
    r = lo[..., None] * np.exp(span[..., None] * t)
    Y = X[:, None, None, :] + r[..., None] * dirs[None, :, None, :]
    inside = domain.contains(Y)
    diff = np.abs(f(Y) - f(X)[:, None, None]) ** q
    integrand = np.where(inside, diff * r ** (-s * q), 0.0)
    ray = span * (integrand @ wt)
    return np.where(exit_r < r_max, ray, 0.0) @ wdirs


def inner_values(f, domain, spec, quad=None, X=None):
    """Inner integral at every outer node (the quantity raised to p/q)."""
    quad = quad or QuadratureConfig()
    if X is None:
        X, _ = sample_domain(domain, quad.outer_plan, quad.seed)
    X = np.asarray(X, dtype=float)
    dirs, wd = sphere_rule(domain.dim, quad.sphere_order)

    def chunk(a, b):
        pts = X[a:b]
        if spec.variant == "full":
            rho = domain.ray_exit(pts, dirs)
            out = inner_integral_batch(f, pts, rho, spec.s, spec.q, dirs, wd, quad)
            if not domain.convex:
                out = out + _full_remainder(
                    f, domain, pts, dirs, wd, rho, spec.s, spec.q, 4 * quad.radial_nodes
                )
            return out
        return inner_integral_batch(f, pts, _radius(domain, spec, pts), spec.s, spec.q, dirs, wd, quad)

    return map_chunks(chunk, len(X), quad.chunk, quad.threads)


def _check_domain(domain, spec, quad, allow_truncated_full):
    if spec.variant == "full" and not domain.bounded and not allow_truncated_full:
        raise ValueError(
            "full variant on an unbounded domain: pass allow_truncated_full=True to integrate "
            "over the truncation named in the sampling plan"
        )


def seminorm_p(f, domain, spec, quad=None, nodes=None, allow_truncated_full=False):
    """``[f]^p``: outer integral of the inner integral raised to ``p/q``.

    ``nodes`` may carry precomputed ``(points, weights)`` so that several calls
    share one outer rule.
    """
    quad = quad or QuadratureConfig()
    if f.dim != domain.dim:
        raise ValueError(f"function dimension {f.dim} != domain dimension {domain.dim}")
    _check_domain(domain, spec, quad, allow_truncated_full)
    region = domain
    if spec.variant == "full" and not domain.bounded:
        if quad.outer_plan.truncation is None:
            raise ValueError("truncated full variant needs a truncation index in the plan")
        region = Truncated.from_index(domain, quad.outer_plan.truncation)
    if nodes is None:
        nodes = sample_domain(region, quad.outer_plan, quad.seed)
    X, W = nodes
    if len(X) == 0:
        return 0.0
    vals = inner_values(f, region, spec, quad, X)
    return outer_lp_aggregate(vals, W, spec.p / spec.q)


# ---------------------------------------------------------------------------
# K(N, p, q)


def sphere_moment(dim, q, order=4096):
    """``C_{N,q} = ∫_{S^{N-1}} |σ_1|^q dσ`` by the sphere rule.

    By rotation invariance the last coordinate is used, which sits on the
    rule's symmetry axis (the equator split for N = 3, a node for N = 2).
    """
    nodes, w = sphere_rule(dim, order)
    return float(np.abs(nodes[:, -1]) ** q @ w)


def sphere_moment_closed_form(dim, q):
    return 2 * math.pi ** ((dim - 1) / 2) * math.gamma((q + 1) / 2) / math.gamma((dim + q) / 2)


def sphere_moment_mc(dim, q, samples=1_000_000, seed=0):
    """Monte Carlo estimate of ``C_{N,q}`` with its standard error."""
    rng = np.random.default_rng(seed)
    sig = _uniform_directions(rng, samples, dim)
    vals = sphere_area(dim) * np.abs(sig[:, 0]) ** q
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def bbm_constant(dim, p, q, order=4096):
    """``K(N, p, q) = (C_{N,q} / q)^(p/q)``.

    This is the value forced by linear functions: for f(y) = a.y,
    ``(1 - s) ∫_{B(x,δ)} |f(x)-f(y)|^q / |x-y|^(N+sq) dy = |a|^q C_{N,q} δ^(q(1-s)) / q``.
    """
    if dim not in (1, 2, 3):
        raise ValueError("K(N, p, q) is provided for N in {1, 2, 3}")
    if p < 1 or q < 1:
        raise ValueError("p and q must be >= 1")
    return (sphere_moment(dim, q, order) / q) ** (p / q)


# ---------------------------------------------------------------------------
# annulus part of the restricted seminorm (|h| between R and τ dist)


def annulus_tail_seminorm_p(f, domain, spec, quad=None, nodes=None, n_radial=24):
    """``∫_Ω ( ∫_{R <= |h| <= τ dist(x)} |f(x+h) - f(x)|^q / |h|^(N+sq) dh )^(p/q) dx``.

    The kernel is bounded on the annulus, so plain Gauss-Legendre in log r is used.
    """
    quad = quad or QuadratureConfig()
    if not math.isfinite(spec.R):
        raise ValueError("the annulus tail needs a finite R")
    if nodes is None:
        nodes = sample_domain(domain, quad.outer_plan, quad.seed)
    X, W = nodes
    if len(X) == 0:
        return 0.0
    dirs, wd = sphere_rule(domain.dim, quad.sphere_order)
    t, wt = leggauss(n_radial)
    t, wt = (t + 1) / 2, wt / 2
    e = spec.s * spec.q

    def chunk(a, b):
        pts = X[a:b]
        outer_r = spec.tau * domain.sdf(pts)
        active = outer_r > spec.R
        out = np.zeros(len(pts))
        if not np.any(active):
            return out
        pts, outer_r = pts[active], outer_r[active]
        if f.piecewise_constant:
            lo, hi = f.jump.mismatch_intervals(pts, dirs, outer_r[:, None])
            lo = np.maximum(lo, spec.R)
            ray = np.where(hi > lo, (lo ** (-e) - hi ** (-e)) / e, 0.0) * f.jump.size**spec.q
        else:
            span = np.log(outer_r / spec.R)
            r = spec.R * np.exp(span[:, None] * t)  # (M, T)
            Y = pts[:, None, None, :] + r[:, None, :, None] * dirs[None, :, None, :]
            diff = np.abs(f(Y) - f(pts)[:, None, None]) ** spec.q
            ray = span[:, None] * ((diff * r[:, None, :] ** (-e)) @ wt)
        out[active] = ray @ wd
        return out

    vals = map_chunks(chunk, len(X), quad.chunk, quad.threads)
    return outer_lp_aggregate(vals, W, spec.p / spec.q)


def annulus_tail_mc(f, domain, spec, samples=400_000, seed=0):
    """Monte Carlo oracle for :func:`annulus_tail_seminorm_p` when p = q (plain double integral)."""
    if spec.p != spec.q:
        raise ValueError("the Monte Carlo annulus oracle is unbiased only for p = q")
    rng = np.random.default_rng(seed)
    lo, hi = domain.bbox()
    dim = domain.dim
    x = lo + (hi - lo) * rng.random((samples, dim))
    sig = _uniform_directions(rng, samples, dim)
    _, rad = domain.enclosing_ball()
    r_max = spec.tau * rad
    r = r_max * (1.0 - rng.random(samples))
    inside = domain.contains(x)
    reach = spec.tau * np.where(inside, domain.sdf(x), 0.0)
    ok = inside & (r >= spec.R) & (r <= reach)
    y = x + r[:, None] * sig
    z = np.zeros(samples)
    z[ok] = (
        np.abs(f(y[ok]) - f(x[ok])) ** spec.q * r[ok] ** (-1 - spec.s * spec.q)
    )
    z *= float(np.prod(hi - lo)) * sphere_area(dim) * r_max
    return float(z.mean()), float(z.std(ddof=1) / math.sqrt(samples))


# ---------------------------------------------------------------------------
# truncated double integral over Ω_λ × Ω_λ


def leoni_spector_truncated_p(f, domain, lam, s, p, quad=None, q=None):
    """``∫_{Ω_λ} ∫_{Ω_λ} |f(x) - f(y)|^p / |x - y|^(N + sp) dy dx``."""
    if q is not None and q != p:
        raise ValueError("the truncated double integral is defined for p = q only")
    quad = quad or QuadratureConfig()
    region = Truncated(domain, lam)
    if region.is_empty():
        return 0.0
    plan = replace(quad.outer_plan, truncation=None)
    X, W = sample_domain(region, plan, quad.seed)
    if len(X) == 0:
        return 0.0
    spec = SeminormSpec(s=s, p=p, q=p, variant="full")
    vals = inner_values(f, region, spec, quad, X)
    return outer_lp_aggregate(vals, W, 1.0)
