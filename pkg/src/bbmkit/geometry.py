"""Open sets in R^N described by exact interior distance functions.

Every domain exposes ``sdf(x)``, positive inside and equal to the Euclidean
distance to the boundary there.  Outside the set the value is negative but is
only guaranteed to be a lower bound in magnitude for composite kinds; nothing
in the package relies on exterior values except ``ComplementRestriction``,
which documents the requirement on its ``excluded`` part.

Point arrays have shape ``(..., N)``; scalar results have shape ``(...,)``.

Example
-------
>>> import numpy as np
>>> disk = Ball(center=(0.0, 0.0), radius=1.0)
>>> float(dist_to_boundary(disk, np.array([0.5, 0.0])))
0.5
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = [
    "Domain",
    "Ball",
    "Box",
    "Annulus",
    "HalfSpace",
    "Strip",
    "SlitDisk",
    "LatticeComplement",
    "Polygon2D",
    "Intersection",
    "ComplementRestriction",
    "Truncated",
    "TruncationSet",
    "SamplingPlan",
    "EPS_GEOM",
    "contains",
    "dist_to_boundary",
    "delta",
    "truncation_member",
    "sample_domain",
    "ray_exit",
    "ball_volume",
]

# relative to the domain length scale
EPS_GEOM = 1e-12


def ball_volume(dim, radius=1.0):
    """Lebesgue measure of a ball of the given radius in R^dim."""
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1) * radius**dim


def _as_points(x, dim):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != dim:
        raise ValueError(f"expected points with last axis of size {dim}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("point coordinates must be finite")
    return x


def _vec(v):
    return np.asarray(v, dtype=float).reshape(-1)


class Domain:
    """Base class; subclasses set ``dim``, ``bounded``, ``convex`` and implement ``_sdf``."""

    dim: int
    bounded: bool = True
    convex: bool = False

    def sdf(self, x):
        return self._sdf(_as_points(x, self.dim))

    def contains(self, x):
        return self.sdf(x) > 0.0

    def bbox(self):
        """Axis-aligned box ``(lo, hi)`` enclosing the set; entries may be infinite."""
        c, r = self.enclosing_ball()
        if not math.isfinite(r):
            return np.full(self.dim, -np.inf), np.full(self.dim, np.inf)
        return c - r, c + r

    def enclosing_ball(self):
        return np.zeros(self.dim), math.inf

    def length_scale(self):
        lo, hi = self.bbox()
        ext = hi - lo
        ext = ext[np.isfinite(ext)]
        return float(ext.max()) if ext.size else 1.0

    def measure(self):
        """Closed-form Lebesgue measure, or ``None`` when not available."""
        return None

    def polar_frame(self):
        """``(center, r_lo, r_hi)`` for radially organised sets, else ``None``."""
        return None

    def ray_exit(self, x, dirs):
        return _sphere_trace(self, x, dirs)

    def exterior_distance(self, x):
        raise NotImplementedError(f"{type(self).__name__} has no exact exterior distance")

    def describe(self):
        return {"kind": type(self).__name__}


@dataclass(frozen=True, eq=False)
class Ball(Domain):
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    convex = True

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")

    @property
    def dim(self):
        return len(self.center)

    def _sdf(self, x):
        return self.radius - np.linalg.norm(x - _vec(self.center), axis=-1)

    def exterior_distance(self, x):
        return np.maximum(-self.sdf(x), 0.0)

    def enclosing_ball(self):
        return _vec(self.center), float(self.radius)

    def measure(self):
        return ball_volume(self.dim, self.radius)

    def polar_frame(self):
        return _vec(self.center), 0.0, float(self.radius)

    def ray_exit(self, x, dirs):
        # |x - c + t u|^2 = r^2, positive root
        y = np.asarray(x, dtype=float)[..., None, :] - _vec(self.center)
        b = np.einsum("...kn,kn->...k", y, dirs)
        c = np.einsum("...kn,...kn->...k", y, y) - self.radius**2
        return np.maximum(-b + np.sqrt(np.maximum(b * b - c, 0.0)), 0.0)

    def describe(self):
        return {"kind": "ball", "center": list(map(float, self.center)), "radius": float(self.radius)}


@dataclass(frozen=True, eq=False)
class Box(Domain):
    lo: tuple = (0.0, 0.0)
    hi: tuple = (1.0, 1.0)
    convex = True

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or np.any(_vec(self.hi) <= _vec(self.lo)):
            raise ValueError("box needs lo < hi componentwise")

    @property
    def dim(self):
        return len(self.lo)

    def _sdf(self, x):
        lo, hi = _vec(self.lo), _vec(self.hi)
        c, h = (lo + hi) / 2, (hi - lo) / 2
        qv = np.abs(x - c) - h
        outside = np.linalg.norm(np.maximum(qv, 0.0), axis=-1)
        inside = np.minimum(qv.max(axis=-1), 0.0)
        return -(outside + inside)

    def exterior_distance(self, x):
        return np.maximum(-self.sdf(x), 0.0)

    def bbox(self):
        return _vec(self.lo), _vec(self.hi)

    def enclosing_ball(self):
        lo, hi = _vec(self.lo), _vec(self.hi)
        return (lo + hi) / 2, float(np.linalg.norm(hi - lo) / 2)

    def measure(self):
        return float(np.prod(_vec(self.hi) - _vec(self.lo)))

    def ray_exit(self, x, dirs):
        x = np.asarray(x, dtype=float)[..., None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            t_hi = np.where(dirs > 0, (_vec(self.hi) - x) / dirs, np.inf)
            t_lo = np.where(dirs < 0, (_vec(self.lo) - x) / dirs, np.inf)
        return np.maximum(np.minimum(t_hi, t_lo).min(axis=-1), 0.0)

    def describe(self):
        return {"kind": "axis_box", "lo": list(map(float, self.lo)), "hi": list(map(float, self.hi))}


@dataclass(frozen=True, eq=False)
class Annulus(Domain):
    center: tuple = (0.0, 0.0)
    r_in: float = 0.5
    r_out: float = 1.0

    def __post_init__(self):
        if not 0 <= self.r_in < self.r_out:
            raise ValueError("annulus needs 0 <= r_in < r_out")

    @property
    def dim(self):
        return len(self.center)

    def _sdf(self, x):
        rho = np.linalg.norm(x - _vec(self.center), axis=-1)
        return np.minimum(rho - self.r_in, self.r_out - rho)

    def enclosing_ball(self):
        return _vec(self.center), float(self.r_out)

    def measure(self):
        return ball_volume(self.dim, self.r_out) - ball_volume(self.dim, self.r_in)

    def polar_frame(self):
        return _vec(self.center), float(self.r_in), float(self.r_out)

    def describe(self):
        return {"kind": "annulus", "center": list(map(float, self.center)),
                "r_in": float(self.r_in), "r_out": float(self.r_out)}


@dataclass(frozen=True, eq=False)
class HalfSpace(Domain):
    """``{x : normal . x > offset}`` with ``normal`` normalised on construction."""

    normal: tuple = (1.0, 0.0)
    offset: float = 0.0
    bounded = False
    convex = True

    def __post_init__(self):
        n = _vec(self.normal)
        norm = np.linalg.norm(n)
        if norm == 0:
            raise ValueError("half-space normal must be nonzero")
        object.__setattr__(self, "normal", tuple(n / norm))

    @property
    def dim(self):
        return len(self.normal)

    def _sdf(self, x):
        return x @ _vec(self.normal) - self.offset

    def exterior_distance(self, x):
        return np.maximum(-self.sdf(x), 0.0)

    def describe(self):
        return {"kind": "half_space", "normal": list(self.normal), "offset": float(self.offset)}


@dataclass(frozen=True, eq=False)
class Strip(Domain):
    """``{x : |x[axis]| < half_width}`` in R^dim (axis is zero based)."""

    axis: int = 1
    half_width: float = 1.0
    dim: int = 2
    bounded = False
    convex = True

    def __post_init__(self):
        if not 0 <= self.axis < self.dim or self.half_width <= 0:
            raise ValueError("strip needs 0 <= axis < dim and half_width > 0")

    def _sdf(self, x):
        return self.half_width - np.abs(x[..., self.axis])

    def bbox(self):
        lo, hi = np.full(self.dim, -np.inf), np.full(self.dim, np.inf)
        lo[self.axis], hi[self.axis] = -self.half_width, self.half_width
        return lo, hi

    def describe(self):
        return {"kind": "strip", "axis": self.axis, "half_width": float(self.half_width), "dim": self.dim}


def _segment_distance(x, a, b):
    ab = b - a
    t = np.clip(((x - a) @ ab) / (ab @ ab), 0.0, 1.0)
    return np.linalg.norm(x - (a + t[..., None] * ab), axis=-1)


@dataclass(frozen=True, eq=False)
class SlitDisk(Domain):
    """Disk of given radius centred at 0 with the closed radius at ``slit_angle`` removed."""

    radius: float = 1.0
    slit_angle: float = 0.0
    dim = 2

    def _segment(self):
        a = np.zeros(2)
        b = self.radius * np.array([math.cos(self.slit_angle), math.sin(self.slit_angle)])
        return a, b

    def _sdf(self, x):
        a, b = self._segment()
        return np.minimum(self.radius - np.linalg.norm(x, axis=-1), _segment_distance(x, a, b))

    def enclosing_ball(self):
        return np.zeros(2), float(self.radius)

    def measure(self):
        return math.pi * self.radius**2

    def polar_frame(self):
        return np.zeros(2), 0.0, float(self.radius)

    def describe(self):
        return {"kind": "slit_disk", "radius": float(self.radius), "slit_angle": float(self.slit_angle)}


@dataclass(frozen=True, eq=False)
class LatticeComplement(Domain):
    """``R^dim`` minus the lattice ``spacing * Z^dim``."""

    spacing: float = 1.0
    dim: int = 2
    bounded = False

    def _sdf(self, x):
        y = x / self.spacing
        return self.spacing * np.linalg.norm(y - np.round(y), axis=-1)

    def describe(self):
        return {"kind": "lattice_complement", "spacing": float(self.spacing), "dim": self.dim}


@dataclass(frozen=True, eq=False)
class Polygon2D(Domain):
    """Simple polygon given by its vertices (either orientation)."""

    vertices: tuple = ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0))
    dim = 2

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("polygon needs at least three 2-D vertices")

    def _edges(self):
        v = np.asarray(self.vertices, dtype=float)
        return v, np.roll(v, -1, axis=0)

    def _unsigned(self, x):
        a, b = self._edges()
        return np.min(np.stack([_segment_distance(x, a[k], b[k]) for k in range(len(a))]), axis=0)

    def _inside(self, x):
        a, b = self._edges()
        inside = np.zeros(x.shape[:-1], dtype=bool)
        px, py = x[..., 0], x[..., 1]
        for (ax, ay), (bx, by) in zip(a, b):
            crosses = (ay > py) != (by > py)
            with np.errstate(divide="ignore", invalid="ignore"):
                xi = ax + (py - ay) * (bx - ax) / (by - ay)
            inside ^= crosses & (px < xi)
        return inside

    def _sdf(self, x):
        d = self._unsigned(x)
        return np.where(self._inside(x), d, -d)

    def exterior_distance(self, x):
        x = _as_points(x, 2)
        return np.where(self._inside(x), 0.0, self._unsigned(x))

    def enclosing_ball(self):
        v = np.asarray(self.vertices, dtype=float)
        c = (v.min(axis=0) + v.max(axis=0)) / 2
        return c, float(np.linalg.norm(v - c, axis=1).max())

    def bbox(self):
        v = np.asarray(self.vertices, dtype=float)
        return v.min(axis=0), v.max(axis=0)

    def measure(self):
        v = np.asarray(self.vertices, dtype=float)
        return 0.5 * abs(float(np.dot(v[:, 0], np.roll(v[:, 1], -1)) - np.dot(v[:, 1], np.roll(v[:, 0], -1))))

    def describe(self):
        return {"kind": "polygon2d", "vertices": [list(map(float, p)) for p in self.vertices]}


@dataclass(frozen=True, eq=False)
class Intersection(Domain):
    """Intersection of domains.

    For interior points the distance to the boundary is exactly the minimum of
    the parts' distances, because the complement of an intersection is the
    union of the complements.
    """

    parts: tuple = ()

    def __post_init__(self):
        if not self.parts or len({p.dim for p in self.parts}) != 1:
            raise ValueError("intersection needs parts of one common dimension")
        object.__setattr__(self, "parts", tuple(self.parts))

    @property
    def dim(self):
        return self.parts[0].dim

    @property
    def bounded(self):
        return any(p.bounded for p in self.parts)

    @property
    def convex(self):
        return all(p.convex for p in self.parts)

    def _sdf(self, x):
        return np.min(np.stack([p._sdf(x) for p in self.parts]), axis=0)

    def bbox(self):
        lo = np.max(np.stack([p.bbox()[0] for p in self.parts]), axis=0)
        hi = np.min(np.stack([p.bbox()[1] for p in self.parts]), axis=0)
        return lo, hi

    def enclosing_ball(self):
        balls = [p.enclosing_ball() for p in self.parts]
        return min(balls, key=lambda b: b[1])

    def describe(self):
        return {"kind": "intersection", "parts": [p.describe() for p in self.parts]}


@dataclass(frozen=True, eq=False)
class ComplementRestriction(Domain):
    """``base`` minus the closure of ``excluded``.

    Exact as long as ``excluded.exterior_distance`` is exact, which holds for
    balls, boxes, half-spaces and polygons.
    """

    base: Domain = None
    excluded: Domain = None

    @property
    def dim(self):
        return self.base.dim

    @property
    def bounded(self):
        return self.base.bounded

    def _sdf(self, x):
        ext = self.excluded.exterior_distance(x)
        d = np.minimum(self.base._sdf(x), ext)
        return np.where(ext > 0, d, -1.0)

    def bbox(self):
        return self.base.bbox()

    def enclosing_ball(self):
        return self.base.enclosing_ball()

    def measure(self):
        m_base, m_ex = self.base.measure(), self.excluded.measure()
        if m_base is None or m_ex is None:
            return None
        # closed form only when the excluded part sits inside the base
        c, r = self.excluded.enclosing_ball()
        if np.all(self.base.sdf(c) > r):
            return m_base - m_ex
        return None

    def describe(self):
        return {"kind": "complement_restriction", "base": self.base.describe(),
                "excluded": self.excluded.describe()}


@dataclass(frozen=True, eq=False)
class Truncated(Domain):
    """The set ``{x in parent : dist(x, boundary) > lam} ∩ B(0, 1/lam)``.

    With ``lam = 1/i`` this is the exhaustion set usually written with index i.
    """

    parent: Domain = None
    lam: float = 0.1

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("truncation parameter must be positive")

    @classmethod
    def from_index(cls, parent, i):
        if i <= 0:
            raise ValueError("truncation index must be positive")
        return cls(parent, 1.0 / i)

    @property
    def dim(self):
        return self.parent.dim

    bounded = True

    @property
    def convex(self):
        return self.parent.convex

    def _sdf(self, x):
        return np.minimum(self.parent._sdf(x) - self.lam, 1.0 / self.lam - np.linalg.norm(x, axis=-1))

    def bbox(self):
        plo, phi = self.parent.bbox()
        rad = 1.0 / self.lam
        return np.maximum(plo + self.lam, -rad), np.minimum(phi - self.lam, rad)

    def enclosing_ball(self):
        c, r = self.parent.enclosing_ball()
        if math.isfinite(r) and r - self.lam < 1.0 / self.lam:
            return c, max(r - self.lam, 0.0)
        return np.zeros(self.dim), 1.0 / self.lam

    def measure(self):
        frame = self.parent.polar_frame()
        if isinstance(self.parent, Ball) and frame is not None:
            c, _, r = frame
            r_eff = r - self.lam
            if r_eff <= 0:
                return 0.0
            if np.linalg.norm(c) + r_eff <= 1.0 / self.lam:
                return ball_volume(self.dim, r_eff)
        return None

    def polar_frame(self):
        frame = self.parent.polar_frame()
        if frame is None:
            return None
        c, r_lo, r_hi = frame
        r_lo = r_lo + self.lam if r_lo > 0 else 0.0
        return c, r_lo, max(r_hi - self.lam, r_lo)

    def ray_exit(self, x, dirs):
        if isinstance(self.parent, Ball):
            shrunk = Ball(self.parent.center, self.parent.radius - self.lam)
            far = Ball((0.0,) * self.dim, 1.0 / self.lam)
            return np.minimum(shrunk.ray_exit(x, dirs), far.ray_exit(x, dirs))
        return _sphere_trace(self, x, dirs)

    def is_empty(self):
        lo, hi = self.bbox()
        return bool(np.any(hi <= lo))

    def describe(self):
        return {"kind": "truncated", "parent": self.parent.describe(), "lambda": float(self.lam)}


@dataclass(frozen=True)
class TruncationSet:
    """Membership view of ``Truncated``; ``index`` is set when built from an integer."""

    parent: Domain
    lam: float
    index: int | None = None

    @classmethod
    def from_index(cls, parent, i):
        return cls(parent, 1.0 / i, int(i))

    def as_domain(self):
        return Truncated(self.parent, self.lam)


def contains(domain, x):
    return domain.contains(x)


def dist_to_boundary(domain, x):
    """Distance from interior points to the boundary; raises for points outside."""
    d = domain.sdf(x)
    if np.any(d <= 0):
        raise ValueError("distance to the boundary is undefined for points outside the open set")
    return d


def delta(domain, x, R, tau):
    """``min(R, tau * dist(x, boundary))``; ``R`` may be ``math.inf``."""
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    if not R > 0:
        raise ValueError("R must be positive")
    return np.minimum(R, tau * dist_to_boundary(domain, x))


def truncation_member(tset, x):
    x = _as_points(x, tset.parent.dim)
    inside = tset.parent.contains(x)
    d = np.where(inside, tset.parent.sdf(x), -1.0)
    return inside & (d > tset.lam) & (np.linalg.norm(x, axis=-1) < 1.0 / tset.lam)


def _sphere_trace(domain, x, dirs, max_iter=400):
    # exact interior distances never overshoot the first boundary crossing
    x = np.asarray(x, dtype=float)
    shape = x.shape[:-1] + (dirs.shape[0],)
    t = np.zeros(shape)
    tol = 1e-13 * domain.length_scale()
    active = np.ones(shape, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        pts = x[..., None, :] + t[..., None] * dirs
        d = domain._sdf(pts)
        step = np.where(active, np.maximum(d, 0.0), 0.0)
        t = t + step
        active &= step > tol
        if domain.bounded is False:
            active &= t < 1e6 * domain.length_scale()
    return t


def ray_exit(domain, x, dirs):
    """Distance along each unit direction from interior ``x`` to the first boundary hit."""
    return domain.ray_exit(np.asarray(x, dtype=float), np.asarray(dirs, dtype=float))


# ---------------------------------------------------------------------------
# Outer node generation


@dataclass(frozen=True)
class SamplingPlan:
    """How outer integration nodes are generated.

    kind: ``auto`` (polar when the domain is radially organised, Gauss otherwise),
    ``grid`` (cell midpoints), ``gauss`` (tensor Gauss-Legendre), ``polar``
    (Gauss-Legendre in radius times a sphere rule), ``mc`` (uniform random).
    ``n`` is the per-axis (or radial) resolution, ``n_angle`` the angular count for
    polar plans, ``samples`` the draw count for ``mc``; ``truncation`` is the index
    i of the set the plan integrates over when the domain is unbounded.
    """

    kind: str = "auto"
    n: int = 32
    n_angle: int = 64
    samples: int = 20000
    truncation: int | None = None

    def __post_init__(self):
        if self.kind not in {"auto", "grid", "gauss", "polar", "mc"}:
            raise ValueError(f"unknown sampling plan kind {self.kind!r}")
        if self.n < 1 or self.n_angle < 1 or self.samples < 1:
            raise ValueError("sampling plan counts must be positive")
        if self.truncation is not None and self.truncation < 1:
            raise ValueError("truncation index must be a positive integer")


def _gauss01(n):
    t, w = leggauss(n)
    return (t + 1) / 2, w / 2


def _integration_region(domain, plan):
    if domain.bounded:
        return domain
    if plan.truncation is None:
        raise ValueError("unbounded domain: the sampling plan must name a truncation index")
    return Truncated.from_index(domain, plan.truncation)


def sample_domain(domain, plan=None, seed=0):
    """Outer nodes and weights ``(points (M, N), weights (M,))`` for ``domain``.

    Deterministic in ``(plan, seed)``.  Points closer to the boundary than
    ``EPS_GEOM`` times the length scale are dropped.
    """
    plan = plan or SamplingPlan()
    region = _integration_region(domain, plan)
    kind = plan.kind
    if kind == "auto":
        kind = "polar" if region.polar_frame() is not None else "gauss"
    lo, hi = region.bbox()
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("cannot sample a region with an infinite bounding box")
    dim = region.dim

    if kind == "polar":
        frame = region.polar_frame()
        if frame is None:
            raise ValueError(f"polar plan needs a radially organised domain, got {type(region).__name__}")
        from .quadrature import sphere_rule

        c, r_lo, r_hi = frame
        t, wt = _gauss01(plan.n)
        r = r_lo + (r_hi - r_lo) * t
        wr = (r_hi - r_lo) * wt * r ** (dim - 1)
        dirs, wd = sphere_rule(dim, plan.n_angle)
        pts = c + r[:, None, None] * dirs[None, :, :]
        w = wr[:, None] * wd[None, :]
        pts, w = pts.reshape(-1, dim), w.reshape(-1)
    elif kind in ("grid", "gauss"):
        axes, waxes = [], []
        for k in range(dim):
            if kind == "grid":
                h = (hi[k] - lo[k]) / plan.n
                axes.append(lo[k] + h * (np.arange(plan.n) + 0.5))
                waxes.append(np.full(plan.n, h))
            else:
                t, wt = _gauss01(plan.n)
                axes.append(lo[k] + (hi[k] - lo[k]) * t)
                waxes.append((hi[k] - lo[k]) * wt)
        mesh = np.meshgrid(*axes, indexing="ij")
        wmesh = np.meshgrid(*waxes, indexing="ij")
        pts = np.stack([m.reshape(-1) for m in mesh], axis=-1)
        w = np.prod(np.stack([m.reshape(-1) for m in wmesh], axis=-1), axis=-1)
    elif kind == "mc":
        rng = np.random.default_rng(seed)
        pts = lo + (hi - lo) * rng.random((plan.samples, dim))
        w = np.full(plan.samples, float(np.prod(hi - lo)) / plan.samples)
    else:  # pragma: no cover - guarded in SamplingPlan
        raise ValueError(kind)

    keep = region.sdf(pts) > EPS_GEOM * region.length_scale()
    return pts[keep], w[keep]
