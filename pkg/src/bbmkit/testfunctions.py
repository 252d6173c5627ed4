"""Closed-form test functions with gradients and regularity labels.

Each :class:`TestFunction` evaluates on point arrays of shape ``(..., N)``.
Piecewise-constant members carry a :class:`JumpSet` instead of a gradient;
the inner integral uses it to integrate exactly along rays, and the
regularity detector uses it to grade outer nodes toward the jump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import integrate

from .geometry import Ball, Box, sample_domain

__all__ = [
    "REGULARITIES",
    "JumpSet",
    "TestFunction",
    "linear",
    "constant",
    "gaussian_bump",
    "poly_x1sq_x2",
    "distance_modulated",
    "cone",
    "halfspace_indicator",
    "radial_indicator",
    "lacunary",
    "catalog",
    "by_name",
    "w1p_seminorm",
    "fd_gradient",
]

REGULARITIES = ("linear", "smooth_w1p", "lipschitz", "bv_not_w11", "not_w1p")

FD_STEP = 1e-5


def fd_gradient(func, x, h=FD_STEP):
    """Central-difference gradient of ``func`` at points ``x`` (..., N)."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for k in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[k] = h
        g[..., k] = (func(x + e) - func(x - e)) / (2 * h)
    return g


@dataclass(frozen=True)
class JumpSet:
    """Interface of a piecewise-constant function.

    ``kind='plane'``: the hyperplane ``normal . x = offset``; ``kind='sphere'``:
    the sphere ``|x - center| = radius``.  ``size`` is the jump height.
    """

    kind: str
    normal: tuple = ()
    offset: float = 0.0
    center: tuple = ()
    radius: float = 0.0
    size: float = 1.0

    def signed_distance(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "plane":
            return x @ np.asarray(self.normal) - self.offset
        return np.linalg.norm(x - np.asarray(self.center), axis=-1) - self.radius

    def mismatch_intervals(self, x, dirs, rho):
        """Radii ``(a, b)`` along ``x + r*dir``, ``0 < r <= rho``, where the side differs from x's.

        Shapes: ``x`` (M, N), ``dirs`` (K, N), ``rho`` broadcastable to (M, K).
        Empty intervals come back with ``a == b``.
        """
        x = np.asarray(x, dtype=float)
        rho = np.broadcast_to(np.asarray(rho, dtype=float), (x.shape[0], dirs.shape[0]))
        if self.kind == "plane":
            n = np.asarray(self.normal)
            d = (x @ n - self.offset)[:, None]
            rate = (dirs @ n)[None, :]
            with np.errstate(divide="ignore", invalid="ignore"):
                rc = np.where(d * rate < 0, -d / rate, np.inf)
            rc = np.where(d == 0, np.where(rate > 0, 0.0, np.inf), rc)
            a = np.minimum(rc, rho)
            return a, rho.copy()
        y = x - np.asarray(self.center)
        b = y @ dirs.T
        c = (np.einsum("mn,mn->m", y, y) - self.radius**2)[:, None]
        disc = b * b - c
        root = np.sqrt(np.maximum(disc, 0.0))
        lo, hi = -b - root, -b + root
        inside = np.broadcast_to(c < 0, lo.shape)
        # inside: differs beyond the exit root; outside: between the two roots
        a = np.where(inside, hi, np.where((disc > 0) & (lo > 0), lo, np.inf))
        bb = np.where(inside, np.inf, np.where((disc > 0) & (lo > 0), hi, np.inf))
        a = np.minimum(np.maximum(a, 0.0), rho)
        bb = np.minimum(bb, rho)
        return a, np.maximum(bb, a)

    def measure_in(self, domain):
        """Surface measure of the jump inside ``domain`` when available in closed form."""
        if self.kind == "plane" and isinstance(domain, Box):
            n = np.asarray(self.normal)
            axis = int(np.argmax(np.abs(n)))
            if np.count_nonzero(n) == 1:
                lo, hi = np.asarray(domain.lo), np.asarray(domain.hi)
                level = self.offset / n[axis]
                if lo[axis] < level < hi[axis]:
                    return float(np.prod(np.delete(hi - lo, axis)))
                return 0.0
        if self.kind == "sphere":
            c, r = np.asarray(self.center), self.radius
            dim = len(c)
            if np.all(domain.sdf(c) > r):
                return 2 * math.pi ** (dim / 2) / math.gamma(dim / 2) * r ** (dim - 1)
        return None


@dataclass(frozen=True)
class TestFunction:
    name: str
    dim: int
    func: Callable
    grad: Callable | None = None
    regularity: str = "smooth_w1p"
    params: dict = field(default_factory=dict)
    exact_w1p: Callable | None = None
    jump: JumpSet | None = None

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if self.regularity not in REGULARITIES:
            raise ValueError(f"unknown regularity {self.regularity!r}")

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))

    @property
    def piecewise_constant(self):
        return self.jump is not None

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            return self.grad(x)
        if self.jump is not None:
            raise ValueError(f"{self.name} is piecewise constant and has no gradient")
        return fd_gradient(self.func, x)

    def directional_slope(self, x, dirs):
        """``|grad f(x) . dir|`` for points (M, N) and directions (K, N) -> (M, K)."""
        return np.abs(self.gradient(x) @ np.asarray(dirs).T)

    def exact_w1p_seminorm(self, domain, p):
        if self.exact_w1p is None:
            return None
        return self.exact_w1p(domain, p)

    def scaled(self, c):
        """The function ``c * f``."""
        f, g = self.func, self.grad
        jump = replace(self.jump, size=abs(c) * self.jump.size) if self.jump else None
        ex = self.exact_w1p
        return replace(
            self,
            name=f"{c}*{self.name}",
            func=lambda x: c * f(x),
            grad=None if g is None else (lambda x: c * g(x)),
            exact_w1p=None if ex is None else (lambda dom, p: abs(c) ** p * ex(dom, p)),
            jump=jump,
        )

    def translated(self, shift):
        """The function ``x -> f(x - shift)``."""
        shift = np.asarray(shift, dtype=float)
        f, g = self.func, self.grad
        return replace(
            self,
            name=f"{self.name}@shift",
            func=lambda x: f(x - shift),
            grad=None if g is None else (lambda x: g(x - shift)),
            exact_w1p=None,
            jump=None if self.jump is None else _shift_jump(self.jump, shift),
        )

    def dilated(self, lam):
        """The function ``x -> f(lam * x)``."""
        f, g = self.func, self.grad
        return replace(
            self,
            name=f"{self.name}@dil{lam}",
            func=lambda x: f(lam * x),
            grad=None if g is None else (lambda x: lam * g(lam * x)),
            exact_w1p=None,
            jump=None if self.jump is None else _dilate_jump(self.jump, lam),
        )

    def describe(self):
        return {"name": self.name, "dim": self.dim, "regularity": self.regularity, **self.params}


def _shift_jump(j, shift):
    if j.kind == "plane":
        return replace(j, offset=j.offset + float(np.asarray(j.normal) @ shift))
    return replace(j, center=tuple(np.asarray(j.center) + shift))


def _dilate_jump(j, lam):
    if j.kind == "plane":
        return replace(j, offset=j.offset / lam)
    return replace(j, center=tuple(np.asarray(j.center) / lam), radius=j.radius / lam)


def linear(a=(1.0, 0.0)):
    a = np.asarray(a, dtype=float)
    norm = float(np.linalg.norm(a))

    def exact(domain, p):
        m = domain.measure()
        return None if m is None else norm**p * m

    return TestFunction(
        name="linear",
        dim=len(a),
        func=lambda x: x @ a,
        grad=lambda x: np.broadcast_to(a, x.shape).copy(),
        regularity="linear",
        params={"a": a.tolist()},
        exact_w1p=exact,
    )


def constant(value=1.0, dim=2):
    return TestFunction(
        name="constant",
        dim=dim,
        func=lambda x: np.full(x.shape[:-1], float(value)),
        grad=lambda x: np.zeros_like(x),
        regularity="linear",
        params={"value": float(value)},
        exact_w1p=lambda domain, p: 0.0,
    )


def gaussian_bump(center=(0.0, 0.0), width=0.35, amplitude=1.0):
    """``amplitude * exp(-|x - center|^2 / (2 width^2))``."""
    c = np.asarray(center, dtype=float)
    dim = len(c)

    def func(x):
        return amplitude * np.exp(-np.sum((x - c) ** 2, axis=-1) / (2 * width**2))

    def grad(x):
        return -(x - c) / width**2 * func(x)[..., None]

    def exact(domain, p):
        # radial reduction on balls concentric with the bump
        if not isinstance(domain, Ball) or not np.allclose(domain.center, c):
            return None
        area = 2 * math.pi ** (dim / 2) / math.gamma(dim / 2)

        def radial(r):
            slope = abs(amplitude) * r / width**2 * math.exp(-r * r / (2 * width**2))
            return slope**p * r ** (dim - 1)

        val, _ = integrate.quad(radial, 0.0, domain.radius, epsabs=0, epsrel=1e-13, limit=200)
        return area * val

    return TestFunction(
        name="gaussian_bump",
        dim=dim,
        func=func,
        grad=grad,
        regularity="smooth_w1p",
        params={"center": c.tolist(), "width": width, "amplitude": amplitude},
        exact_w1p=exact,
    )


def poly_x1sq_x2(dim=2):
    """``x1^2 * x2``."""
    if dim < 2:
        raise ValueError("x1^2 x2 needs dim >= 2")

    def func(x):
        return x[..., 0] ** 2 * x[..., 1]

    def grad(x):
        g = np.zeros_like(x)
        g[..., 0] = 2 * x[..., 0] * x[..., 1]
        g[..., 1] = x[..., 0] ** 2
        return g

    return TestFunction(name="poly_x1sq_x2", dim=dim, func=func, grad=grad, regularity="smooth_w1p")


def distance_modulated(center=(0.0, 0.0), radius=1.0):
    """``cos(x1) * (radius^2 - |x - center|^2)``; vanishes on the matching sphere."""
    c = np.asarray(center, dtype=float)

    def func(x):
        return np.cos(x[..., 0]) * (radius**2 - np.sum((x - c) ** 2, axis=-1))

    def grad(x):
        bulk = radius**2 - np.sum((x - c) ** 2, axis=-1)
        g = -2 * (x - c) * np.cos(x[..., 0])[..., None]
        g[..., 0] -= np.sin(x[..., 0]) * bulk
        return g

    return TestFunction(
        name="distance_modulated",
        dim=len(c),
        func=func,
        grad=grad,
        regularity="smooth_w1p",
        params={"center": c.tolist(), "radius": radius},
    )


def cone(center=(0.0, 0.0)):
    """``|x - center|``: Lipschitz, gradient undefined at the apex."""
    c = np.asarray(center, dtype=float)

    def grad(x):
        y = x - c
        n = np.linalg.norm(y, axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(n > 0, y / n, 0.0)

    def exact(domain, p):
        m = domain.measure() if isinstance(domain, Ball) else None
        return m  # |grad| = 1 almost everywhere

    return TestFunction(
        name="cone",
        dim=len(c),
        func=lambda x: np.linalg.norm(x - c, axis=-1),
        grad=grad,
        regularity="lipschitz",
        params={"center": c.tolist()},
        exact_w1p=exact,
    )


def halfspace_indicator(dim=2, axis=0, offset=0.0):
    """Indicator of ``{x[axis] > offset}``: BV on bounded sets, never W^{1,p}."""
    n = np.zeros(dim)
    n[axis] = 1.0
    return TestFunction(
        name="halfspace_indicator",
        dim=dim,
        func=lambda x: (x[..., axis] > offset).astype(float),
        regularity="bv_not_w11",
        params={"axis": axis, "offset": offset},
        jump=JumpSet("plane", normal=tuple(n), offset=float(offset)),
    )


def radial_indicator(center=(0.0, 0.0), radius=0.5):
    """Indicator of the ball ``B(center, radius)``."""
    c = np.asarray(center, dtype=float)
    return TestFunction(
        name="radial_indicator",
        dim=len(c),
        func=lambda x: (np.linalg.norm(x - c, axis=-1) < radius).astype(float),
        regularity="bv_not_w11",
        params={"center": c.tolist(), "radius": radius},
        jump=JumpSet("sphere", center=tuple(c), radius=float(radius)),
    )


def lacunary(dim=2, terms=6, alpha=0.5, freq=2 * math.pi):
    """Finite lacunary sum ``sum_k 2^(-alpha k) cos(2^k freq x1)``, k < terms.

    The infinite series is alpha-Hölder and not W^{1,p}; every truncation is
    smooth, with gradient energy growing geometrically in ``terms``.
    """
    k = np.arange(terms)
    amp, wave = 2.0 ** (-alpha * k), freq * 2.0**k

    def func(x):
        return np.cos(x[..., 0, None] * wave) @ amp

    def grad(x):
        g = np.zeros_like(x)
        g[..., 0] = -(np.sin(x[..., 0, None] * wave) @ (amp * wave))
        return g

    return TestFunction(
        name="lacunary",
        dim=dim,
        func=func,
        grad=grad,
        regularity="not_w1p",
        params={"terms": terms, "alpha": alpha, "freq": freq},
    )


_FACTORIES = {
    "linear": linear,
    "constant": constant,
    "gaussian_bump": gaussian_bump,
    "poly_x1sq_x2": poly_x1sq_x2,
    "distance_modulated": distance_modulated,
    "cone": cone,
    "halfspace_indicator": halfspace_indicator,
    "radial_indicator": radial_indicator,
    "lacunary": lacunary,
}


def by_name(name, **params):
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise ValueError(f"unknown test function {name!r}; known: {sorted(_FACTORIES)}") from None
    return factory(**params)


def catalog(dim=2):
    """Default instances of every catalog member in dimension ``dim``."""
    origin = (0.0,) * dim
    e1 = (1.0,) + (0.0,) * (dim - 1)
    out = [
        linear(e1),
        gaussian_bump(origin),
        distance_modulated(origin),
        cone(origin),
        halfspace_indicator(dim),
        radial_indicator(origin),
        lacunary(dim),
    ]
    if dim >= 2:
        out.insert(2, poly_x1sq_x2(dim))
    return out


def w1p_seminorm(f, domain, p, quad=None, nodes=None):
    """``∫_Ω |∇f|^p dx`` on the outer nodes of ``quad`` (or explicit ``nodes``)."""
    from .quadrature import QuadratureConfig, outer_lp_aggregate

    if p < 1:
        raise ValueError("p must be >= 1")
    if f.grad is None and (f.jump is not None or f.regularity == "not_w1p"):
        raise ValueError(f"{f.name} has no gradient and is not in W^(1,p)")
    quad = quad or QuadratureConfig()
    if nodes is None:
        nodes = sample_domain(domain, quad.outer_plan, quad.seed)
    pts, w = nodes
    if len(pts) == 0:
        return 0.0
    slope = np.linalg.norm(f.gradient(pts), axis=-1)
    return outer_lp_aggregate(slope**p, w, 1.0)
