"""Quadrature kernels for the singular inner integral and its Monte Carlo oracle.

The inner integral over a ball of radius rho around x is written in polar form

    ∫_S ∫_0^rho (|f(x + r σ) - f(x)| / r)^q  r^(β-1) dr dσ,   β = q (1 - s),

and the radial factor is handled by :func:`radial_rule`: dyadic panels
``[rho 2^-(j+1), rho 2^-j]`` integrated in ``log r`` plus a core panel
``[0, rho 2^-J]`` in the variable ``u = r^β``.  The weight ``r^(β-1) dr`` turns
into ``du / β`` on the core, so the ``1/(1 - s)`` growth is carried exactly by
the weights and the integrand stays bounded for Lipschitz f.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .geometry import SamplingPlan

__all__ = [
    "QuadratureConfig",
    "sphere_area",
    "sphere_rule",
    "radial_rule",
    "graded_rule",
    "inner_integral",
    "inner_integral_batch",
    "inner_integral_mc",
    "outer_lp_aggregate",
    "map_chunks",
    "S_MAX",
]

# beyond this, r = rho * u^(1/β) underflows for most u
S_MAX = 1.0 - 1e-6

# difference quotients below this radius (relative to max(1, |x|)) use the r -> 0 limit
SMALL_R = 1e-7


@dataclass(frozen=True)
class QuadratureConfig:
    sphere_order: int = 64
    radial_nodes: int = 6
    radial_panels: int = 14
    outer_plan: SamplingPlan = field(default_factory=SamplingPlan)
    mc_samples: int = 100_000
    seed: int = 0
    rel_tol: float = 1e-3
    threads: int = 1
    chunk: int = 64

    def __post_init__(self):
        if self.sphere_order < 2:
            raise ValueError("sphere_order must be >= 2")
        if self.radial_nodes < 4:
            raise ValueError("radial_nodes must be >= 4")
        if self.radial_panels < 0:
            raise ValueError("radial_panels must be >= 0")
        if self.mc_samples < 2 or self.chunk < 1 or self.threads < 1:
            raise ValueError("sample, chunk and thread counts must be positive")
        if not 0 < self.rel_tol < 1:
            raise ValueError("rel_tol must lie in (0, 1)")

    def to_dict(self):
        d = dict(self.__dict__)
        d["outer_plan"] = dict(self.outer_plan.__dict__)
        return d


@lru_cache(maxsize=None)
def _gauss01(n):
    t, w = leggauss(n)
    return (t + 1) / 2, w / 2


def sphere_area(dim):
    """Surface measure of the unit sphere in R^dim (2 for dim = 1)."""
    return 2 * math.pi ** (dim / 2) / math.gamma(dim / 2)


@lru_cache(maxsize=None)
def _sphere_rule(dim, order):
    if dim == 1:
        return np.array([[-1.0], [1.0]]), np.array([1.0, 1.0])
    if dim == 2:
        th = 2 * np.pi * np.arange(order) / order
        return np.stack([np.cos(th), np.sin(th)], axis=-1), np.full(order, 2 * np.pi / order)
    if dim == 3:
        # Gauss-Legendre in cos(theta), split at the equator, times trapezoid in phi
        m = max(order // 4, 1)
        t, wt = _gauss01(m)
        ct = np.concatenate([t - 1.0, t])
        wct = np.concatenate([wt, wt])
        ph = 2 * np.pi * np.arange(order) / order
        st = np.sqrt(1 - ct**2)
        nodes = np.stack(
            [np.outer(st, np.cos(ph)), np.outer(st, np.sin(ph)), np.outer(ct, np.ones(order))], axis=-1
        ).reshape(-1, 3)
        return nodes, np.outer(wct, np.full(order, 2 * np.pi / order)).reshape(-1)
    raise ValueError(f"sphere rules are provided for dimensions 1, 2, 3, not {dim}")


def sphere_rule(dim, order):
    """Nodes ``(K, dim)`` and weights ``(K,)`` on the unit sphere S^(dim-1).

    dim 1: the two points ±1.  dim 2: ``order`` equispaced angles, exact for
    trigonometric polynomials of degree < order.  dim 3: ``order // 4``
    Gauss-Legendre nodes in cos(theta) on each hemisphere times ``order``
    equispaced azimuths.
    """
    if order < 2:
        raise ValueError("sphere rule order must be >= 2")
    nodes, weights = _sphere_rule(dim, order)
    return nodes.copy(), weights.copy()


@lru_cache(maxsize=256)
def _radial_rule(beta, m, panels):
    t, wt = _gauss01(m)
    xs, ws = [], []
    ln2 = math.log(2.0)
    for j in range(panels):
        xi = 2.0 ** (t - j - 1)
        xs.append(xi)
        ws.append(ln2 * wt * xi**beta)
    v, wv = _gauss01(m)
    core = 2.0 ** (-panels)
    with np.errstate(under="ignore"):
        xs.append(core * np.exp(np.log(v) / beta))
    ws.append(wv * core**beta / beta)
    return np.concatenate(xs), np.concatenate(ws)


def radial_rule(beta, m=6, panels=14):
    """Relative radii ``xi`` and weights ``w`` with

        ∫_0^rho g(r) r^(β-1) dr ≈ rho^β Σ_k w_k g(rho xi_k).

    The weights sum to ``1/β`` up to Gauss-Legendre error on ``2^(β t)``.
    """
    if not beta > 0:
        raise ValueError("radial exponent must be positive")
    xi, w = _radial_rule(float(beta), int(m), int(panels))
    return xi.copy(), w.copy()


def graded_rule(length, d_min, m=4):
    """Nodes on ``(d_min, length)`` on dyadic panels refining toward 0.

    Used for outer integrals whose integrand blows up like a power of the
    distance to a known interface.
    """
    t, wt = _gauss01(m)
    edges = [length]
    while edges[-1] / 2 > d_min:
        edges.append(edges[-1] / 2)
    edges.append(d_min)
    xs, ws = [], []
    for hi, lo in zip(edges[:-1], edges[1:]):
        # geometric map inside the panel keeps d^-a integrands smooth
        ratio = hi / lo
        d = lo * ratio**t
        xs.append(d)
        ws.append(wt * d * math.log(ratio))
    return np.concatenate(xs), np.concatenate(ws)


def _check_finite(values, points, what):
    bad = ~np.isfinite(values)
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        raise FloatingPointError(f"non-finite {what} at outer node {points[idx[0]].tolist()}")


def inner_integral_batch(f, X, rho, s, q, dirs, wdirs, quad):
    """Inner integrals at points ``X`` (M, N) over balls of radius ``rho``.

    ``rho`` has shape (M,) for balls centred at each point or (M, K) for a
    direction-dependent radius (ray exit distances).  Zero radius contributes 0.
    """
    X = np.asarray(X, dtype=float)
    M = X.shape[0]
    rho = np.asarray(rho, dtype=float)
    rho2 = rho[:, None] if rho.ndim == 1 else rho
    rho2 = np.broadcast_to(rho2, (M, dirs.shape[0]))
    if M == 0:
        return np.zeros(0)
    if f.piecewise_constant:
        a, b = f.jump.mismatch_intervals(X, dirs, rho2)
        e = s * q
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            ray = np.where(b > a, (a ** (-e) - b ** (-e)) / e, 0.0)
        ray = f.jump.size**q * ray
        return ray @ wdirs

    beta = q * (1.0 - s)
    xi, wr = radial_rule(beta, quad.radial_nodes, quad.radial_panels)
    r = rho2[..., None] * xi  # (M, K, R)
    Y = X[:, None, None, :] + r[..., None] * dirs[None, :, None, :]
    f0 = f(X)
    fy = f(Y)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        g = (np.abs(fy - f0[:, None, None]) / r) ** q
    small = r < SMALL_R * np.maximum(1.0, np.abs(X).max(axis=-1))[:, None, None]
    if np.any(small):
        lim = f.directional_slope(X, dirs) ** q
        g = np.where(small, lim[..., None], g)
    g = np.where(rho2[..., None] > 0, g, 0.0)
    ray = rho2**beta * (g @ wr)
    out = ray @ wdirs
    _check_finite(out, X, "inner integral")
    return out


def inner_integral(f, x, delta, s, q, quad=None, domain=None):
    """``∫_{B(x, δ)} |f(x) - f(y)|^q / |x - y|^(N + s q) dy`` at one or many points."""
    quad = quad or QuadratureConfig()
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    if s > S_MAX:
        raise ValueError(f"s > {S_MAX}: radial nodes underflow in double precision")
    if q < 1:
        raise ValueError("q must be >= 1")
    X = np.atleast_2d(np.asarray(x, dtype=float))
    d = np.broadcast_to(np.asarray(delta, dtype=float), X.shape[:1]).copy()
    d[d < 0] = 0.0
    if domain is not None and np.any(d > 0):
        room = domain.sdf(X)
        if np.any(d > room * (1 + 1e-12)):
            raise ValueError("inner ball leaves the domain")
    dirs, wd = sphere_rule(X.shape[1], quad.sphere_order)
    out = inner_integral_batch(f, X, d, s, q, dirs, wd, quad)
    return float(out[0]) if np.ndim(x) == 1 else out


def _uniform_directions(rng, n, dim):
    if dim == 1:
        return rng.choice([-1.0, 1.0], size=(n, 1))
    z = rng.standard_normal((n, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def inner_integral_mc(f, x, delta, s, q, mc_samples=100_000, seed=0, domain=None):
    """Monte Carlo estimate of the inner integral and its standard error.

    Radii are drawn with density ∝ r^(β-1) on (0, δ) by inverse CDF,
    ``r = δ U^(1/β)``, directions uniformly.  Draws with r below the
    round-off threshold use the r -> 0 limit of the difference quotient.
    """
    x = np.asarray(x, dtype=float)
    if domain is not None and delta > float(domain.sdf(x)) * (1 + 1e-12):
        raise ValueError("inner ball leaves the domain")
    if delta <= 0:
        return 0.0, 0.0
    dim = x.shape[0]
    beta = q * (1.0 - s)
    rng = np.random.default_rng(seed)
    sig = _uniform_directions(rng, mc_samples, dim)
    u = 1.0 - rng.random(mc_samples)  # (0, 1]
    with np.errstate(under="ignore"):
        r = delta * np.exp(np.log(u) / beta)
    y = x + r[:, None] * sig
    f0 = float(f(x))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        g = (np.abs(f(y) - f0) / r) ** q
    small = r < SMALL_R * max(1.0, float(np.abs(x).max()))
    if np.any(small) and not f.piecewise_constant:
        lim = np.abs(sig[small] @ f.gradient(x)) ** q
        g[small] = lim
    scale = sphere_area(dim) * delta**beta / beta
    est = scale * float(np.mean(g))
    se = scale * float(np.std(g, ddof=1)) / math.sqrt(mc_samples)
    if not (math.isfinite(est) and math.isfinite(se)):
        raise FloatingPointError(f"non-finite Monte Carlo sample at point {x.tolist()}")
    return est, se


def outer_lp_aggregate(values, weights, p_over_q):
    """``Σ w_i v_i^(p/q)`` with exactly rounded summation (order independent)."""
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if v.shape != w.shape:
        raise ValueError("values and weights must have the same shape")
    if np.any(v < 0) or np.any(w < 0):
        raise ValueError("values and weights must be nonnegative")
    if not p_over_q > 0:
        raise ValueError("p/q must be positive")
    keep = w > 0
    terms = w[keep] * v[keep] ** p_over_q
    return math.fsum(terms.tolist())


def map_chunks(fn, n, chunk, threads=1):
    """Apply ``fn(start, stop)`` over fixed chunks of ``range(n)``; results in chunk order.

    Chunk boundaries do not depend on ``threads``, so the concatenated output
    is identical for any worker count.
    """
    bounds = [(i, min(i + chunk, n)) for i in range(0, n, chunk)]
    if threads <= 1 or len(bounds) <= 1:
        parts = [fn(a, b) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda ab: fn(*ab), bounds))
    return np.concatenate(parts) if parts else np.zeros(0)
