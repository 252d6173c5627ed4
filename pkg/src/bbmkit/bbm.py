"""Convergence studies and verdicts for the s -> 1 limits of the seminorms.

The scaled quantity throughout is

    Q(s) = (1 - s)^(p/q) [f]^p = ∫_Ω ((1 - s) inner(x))^(p/q) dx,

whose limit for f in W^{1,p} is ``K(N, p, q) ∫_Ω |∇f|^p``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .geometry import EPS_GEOM, Ball, Intersection, Truncated, sample_domain
from .quadrature import (
    QuadratureConfig,
    graded_rule,
    inner_integral,
    inner_integral_batch,
    map_chunks,
    outer_lp_aggregate,
    sphere_area,
    sphere_rule,
)
from .seminorms import (
    bbm_constant,
    inner_values,
    leoni_spector_truncated_p,
    sphere_moment,
)
from .testfunctions import w1p_seminorm

__all__ = [
    "CAVEAT",
    "default_s_sequence",
    "detector_s_sequence",
    "extrapolate_linear",
    "StudyReport",
    "convergence_study",
    "PointwiseReport",
    "pointwise_limit_check",
    "EmbeddingCheck",
    "embedding_bound_check",
    "DetectorReport",
    "main2_detector",
    "TailReport",
    "tail_mass_diagnostic",
    "DoubleLimitReport",
    "double_limit_study",
]

CAVEAT = (
    "A numerical verdict is evidence, not proof: a bounded scaled quantity suggests "
    "W^{1,p} (BV when p = 1), and growth along the s-grid suggests the opposite."
)

LOW_ORDER = "low-order convergence expected (function is not W^{1,p})"


def default_s_sequence(first=1, last=10):
    """``s_k = 1 - 2^-k`` for k in ``[first, last]``."""
    return [1.0 - 2.0**-k for k in range(first, last + 1)]


def detector_s_sequence():
    return default_s_sequence(5, 10)


def extrapolate_linear(s_values, values, npts=3):
    """Limit as s -> 1 from a straight-line fit in ``1 - s`` over the last ``npts`` points.

    Returns ``(limit, residual)`` where ``residual`` is the RMS misfit relative to
    the limit (absolute when the limit is 0).
    """
    x = 1.0 - np.asarray(s_values, dtype=float)[-npts:]
    y = np.asarray(values, dtype=float)[-npts:]
    if len(x) < 2:
        return float(y[-1]), math.nan
    if not np.all(np.isfinite(y)):
        return math.inf, math.nan
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (intercept + slope * x)) ** 2)))
    scale = abs(intercept) if intercept != 0 else 1.0
    return float(intercept), resid / scale


def _rel(a, b):
    if b == 0:
        return abs(a)
    return abs(a - b) / abs(b)


def _region(domain, quad):
    if domain.bounded:
        return domain
    if quad.outer_plan.truncation is None:
        raise ValueError("unbounded domain: set a truncation index in the sampling plan")
    return Truncated.from_index(domain, quad.outer_plan.truncation)


def _provenance(f, domain, spec, quad, **extra):
    out = {
        "domain": domain.describe(),
        "function": f.describe(),
        "spec": spec.to_dict() if spec is not None else None,
        "quad": quad.to_dict(),
        "seed": quad.seed,
    }
    out.update(extra)
    return out


def _scaled(vals_inner, weights, s, p, q):
    # ((1-s) inner)^(p/q) integrated; identical to (1-s)^(p/q) [f]^p
    return outer_lp_aggregate((1.0 - s) * vals_inner, weights, p / q)


def _reference(f, domain, p, nodes):
    if f.grad is None or f.regularity in ("bv_not_w11", "not_w1p"):
        return None
    return w1p_seminorm(f, domain, p, nodes=nodes)


@dataclass
class StudyReport:
    s_values: list
    raw_values: list
    scaled_values: list
    extrapolated_limit: float
    fit_residual: float
    reference: float | None
    relative_error: float | None
    verdict: str
    tail_masses: list | None = None
    warnings: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def rows(self):
        ref = self.reference
        for s, raw, sc in zip(self.s_values, self.raw_values, self.scaled_values):
            yield {
                "s": s,
                "one_minus_s": 1.0 - s,
                "raw_p_power": raw,
                "scaled": sc,
                "reference": ref,
                "rel_error": None if ref is None else _rel(sc, ref),
                "verdict": self.verdict,
            }

    def to_dict(self):
        return asdict(self)


def _study_verdict(scaled, tol):
    a, b = scaled[-2], scaled[-1]
    if not (math.isfinite(a) and math.isfinite(b)):
        return "diverging"
    if a == b == 0:
        return "converged"
    if abs(b - a) <= tol * max(abs(a), abs(b)):
        return "converged"
    if scaled[0] > 0 and b / scaled[0] >= 4 and b > a:
        return "diverging"
    return "inconclusive"


def convergence_study(f, domain, spec_template, s_sequence=None, quad=None, tol=1e-2):
    """Scaled seminorm along ``s_sequence``, its extrapolated limit and the reference value.

    All s share one outer rule, and the reference ``K ∫ |∇f|^p`` is computed on
    the same nodes, so outer quadrature error largely cancels in the comparison.
    """
    quad = quad or QuadratureConfig()
    s_seq = list(s_sequence) if s_sequence is not None else default_s_sequence()
    if any(b <= a for a, b in zip(s_seq, s_seq[1:])):
        raise ValueError("s_sequence must be strictly increasing")
    dim = domain.dim
    warnings = []
    if not spec_template.covered(dim):
        warnings.append(f"(N, p, q) = ({dim}, {spec_template.p}, {spec_template.q}) is outside the regimes of the limit theorem")
    if not domain.bounded:
        warnings.append(f"unbounded domain integrated over the truncation with index {quad.outer_plan.truncation}")
    if f.regularity in ("bv_not_w11", "not_w1p"):
        warnings.append(LOW_ORDER)
    region = _region(domain, quad)
    # the full variant on an unbounded domain runs both integrals over the truncation
    target = region if spec_template.variant == "full" else domain
    nodes = sample_domain(region, replace(quad.outer_plan, truncation=None), quad.seed)
    X, W = nodes
    p, q = spec_template.p, spec_template.q
    raw, scaled = [], []
    for s in s_seq:
        spec = spec_template.with_s(s)
        vals = inner_values(f, target, spec, quad, X) if len(X) else np.zeros(0)
        raw.append(outer_lp_aggregate(vals, W, p / q) if len(X) else 0.0)
        scaled.append(_scaled(vals, W, s, p, q) if len(X) else 0.0)
    limit, resid = extrapolate_linear(s_seq, scaled)
    integral = _reference(f, region, p, nodes)
    reference = None if integral is None else bbm_constant(dim, p, q) * integral
    rel = None if reference is None else _rel(limit, reference)
    return StudyReport(
        s_values=s_seq,
        raw_values=raw,
        scaled_values=scaled,
        extrapolated_limit=limit,
        fit_residual=resid,
        reference=reference,
        relative_error=rel,
        verdict=_study_verdict(scaled, tol),
        warnings=warnings,
        provenance=_provenance(f, domain, spec_template, quad, s_sequence=s_seq, tol=tol),
    )


@dataclass
class PointwiseReport:
    x: list
    delta: float
    s_values: list
    scaled_values: list
    target: float
    extrapolated_limit: float
    verdict: str

    def to_dict(self):
        return asdict(self)


def pointwise_limit_check(f, domain, x, q, s_sequence=None, quad=None, tau=0.5, R=math.inf, tol=1e-2):
    """``(1 - s) ∫_{B(x, δ_x)} |f(x) - f(y)|^q / |x - y|^(N+sq) dy`` along s, against ``(C_{N,q}/q) |∇f(x)|^q``."""
    quad = quad or QuadratureConfig()
    x = np.asarray(x, dtype=float)
    d = float(domain.sdf(x))
    delta = min(R, tau * d)
    if d <= 0 or delta <= EPS_GEOM * domain.length_scale():
        raise ValueError(f"point {x.tolist()} is on or too close to the boundary")
    s_seq = list(s_sequence) if s_sequence is not None else default_s_sequence()
    vals = [(1 - s) * inner_integral(f, x, delta, s, q, quad) for s in s_seq]
    slope = float(np.linalg.norm(f.gradient(x)))
    target = sphere_moment(domain.dim, q) / q * slope**q
    limit, _ = extrapolate_linear(s_seq, vals)
    ok = abs(vals[-1] - target) <= tol * max(target, 1.0 if target == 0 else 0.0)
    return PointwiseReport(
        x=x.tolist(),
        delta=delta,
        s_values=s_seq,
        scaled_values=vals,
        target=target,
        extrapolated_limit=limit,
        verdict="converged" if ok else "inconclusive",
    )


@dataclass
class EmbeddingCheck:
    s: float
    branch: str
    lhs: float
    gradient_energy: float
    rhs: float
    satisfied: bool
    rhs_derived: float
    satisfied_derived: bool
    s_values: list | None = None
    ratios: list | None = None
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def embedding_constants(dim, s, p, q, R):
    """Constants multiplying ``∫|∇f|^p`` in the embedding bound for q <= p.

    ``stated``: ``R^(p(1-s)) / q^(p/q)``.
    ``derived``: ``(|S^{N-1}| / (q (sq - q + 1)))^(p/q) R^(p(1-s))``, the value the
    chain of estimates (line integral of the gradient, then Young's inequality
    with the kernel ``|h|^-(N+sq-q)`` on ``B(0, R)``) actually produces; infinite
    when ``sq - q + 1 <= 0``.
    """
    stated = R ** (p * (1 - s)) / q ** (p / q)
    denom = s * q - q + 1
    if denom <= 0:
        return stated, math.inf
    derived = (sphere_area(dim) / (q * denom)) ** (p / q) * R ** (p * (1 - s))
    return stated, derived


def _energy_region(domain, quad, R):
    if domain.bounded:
        return domain, replace(quad.outer_plan, truncation=None)
    T = quad.outer_plan.truncation
    if T is None:
        raise ValueError("unbounded domain: set a truncation index in the sampling plan")
    # every inner ball around a node of Ω_T stays inside Ω ∩ B(0, T + R)
    reach = Intersection((domain, Ball((0.0,) * domain.dim, T + R)))
    kind = "gauss" if quad.outer_plan.kind in ("auto", "polar") else quad.outer_plan.kind
    return reach, replace(quad.outer_plan, truncation=None, kind=kind)


def embedding_bound_check(f, domain, spec, quad=None, s_sequence=None, growth_limit=4.0):
    """Compare ``(1 - s)^(p/q) [f]^p_hat`` with the explicit bound times ``∫|∇f|^p``.

    For q <= p both the stated and the derived constant are evaluated; ``satisfied``
    refers to the stated one.  For p < q no explicit constant is available and the
    check records ``lhs / ∫|∇f|^p`` over ``s_sequence``; it passes when the ratios
    stay finite and within ``growth_limit`` of each other.
    """
    quad = quad or QuadratureConfig()
    if spec.variant != "hat":
        raise ValueError("the embedding bound is stated for the hat variant (finite R)")
    p, q, dim = spec.p, spec.q, domain.dim
    warnings = []
    region = _region(domain, quad)
    nodes = sample_domain(region, replace(quad.outer_plan, truncation=None), quad.seed)
    ereg, eplan = _energy_region(domain, quad, spec.R)
    energy = w1p_seminorm(f, ereg, p, nodes=sample_domain(ereg, eplan, quad.seed))

    def lhs_at(s):
        vals = inner_values(f, domain, spec.with_s(s), quad, nodes[0])
        return _scaled(vals, nodes[1], s, p, q)

    if q <= p:
        lhs = lhs_at(spec.s)
        c_stated, c_derived = embedding_constants(dim, spec.s, p, q, spec.R)
        rhs, rhs_d = c_stated * energy, c_derived * energy
        slack = 1 + quad.rel_tol
        return EmbeddingCheck(
            s=spec.s,
            branch="q<=p",
            lhs=lhs,
            gradient_energy=energy,
            rhs=rhs,
            satisfied=bool(lhs <= rhs * slack),
            rhs_derived=rhs_d,
            satisfied_derived=bool(lhs <= rhs_d * slack),
            warnings=warnings,
        )

    crit = math.inf if p >= dim else dim * p / (dim - p)
    if not (1 < p < q and (q < crit or dim <= p)):
        warnings.append("p < q outside the conditions of the embedding lemma")
    s_seq = list(s_sequence) if s_sequence is not None else [0.9, 0.99, 0.999]
    lhs_vals = [lhs_at(s) for s in s_seq]
    ratios = [v / energy if energy > 0 else (0.0 if v == 0 else math.inf) for v in lhs_vals]
    finite = all(math.isfinite(r) for r in ratios)
    pos = [r for r in ratios if r > 0]
    bounded = finite and (not pos or max(pos) <= growth_limit * min(pos))
    return EmbeddingCheck(
        s=s_seq[-1],
        branch="p<q",
        lhs=lhs_vals[-1],
        gradient_energy=energy,
        rhs=math.nan,
        satisfied=bool(bounded),
        rhs_derived=math.nan,
        satisfied_derived=bool(bounded),
        s_values=s_seq,
        ratios=ratios,
        warnings=warnings,
    )


# ---------------------------------------------------------------------------
# regularity detector


@dataclass
class DetectorReport:
    s_values: list
    values: list
    resolved_values: list
    singular_exponents: list | None
    growth_factor: float
    verdict: str
    caveat: str = CAVEAT
    warnings: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _layer_frames(f, domain, quad, d_min):
    """Per side of the jump: (points (D, T, N), d-weights (D,), t-weights (T,), d-nodes)."""
    jump = f.jump
    lo, hi = domain.bbox()
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("the jump-graded rule needs a bounded integration region")
    n = quad.outer_plan.n
    sides = []
    if jump.kind == "plane":
        normal = np.asarray(jump.normal)
        axis = int(np.argmax(np.abs(normal)))
        if np.count_nonzero(normal) != 1:
            raise ValueError("jump-graded rule supports axis-aligned planes")
        level = jump.offset / normal[axis]
        others = [k for k in range(domain.dim) if k != axis]
        from numpy.polynomial.legendre import leggauss

        t, wt = leggauss(n)
        t, wt = (t + 1) / 2, wt / 2
        grids = [lo[k] + (hi[k] - lo[k]) * t for k in others]
        wgrids = [(hi[k] - lo[k]) * wt for k in others]
        if others:
            tang = np.stack([m.reshape(-1) for m in np.meshgrid(*grids, indexing="ij")], axis=-1)
            wtan = np.prod(np.stack([m.reshape(-1) for m in np.meshgrid(*wgrids, indexing="ij")], axis=-1), axis=-1)
        else:
            tang, wtan = np.zeros((1, 0)), np.ones(1)
        for sign, length in ((1.0, hi[axis] - level), (-1.0, level - lo[axis])):
            if length <= d_min:
                continue
            d, wd = graded_rule(length, d_min)
            pts = np.empty((len(d), len(tang), domain.dim))
            pts[..., axis] = level + sign * d[:, None]
            for j, k in enumerate(others):
                pts[..., k] = tang[None, :, j]
            sides.append((pts, wd, wtan, d))
    else:
        c = np.asarray(jump.center)
        corners = np.stack(np.meshgrid(*zip(lo, hi), indexing="ij"), axis=-1).reshape(-1, domain.dim)
        r_far = float(np.linalg.norm(corners - c, axis=1).max())
        dirs, wdir = sphere_rule(domain.dim, quad.outer_plan.n_angle)
        for sign, length in ((-1.0, jump.radius), (1.0, r_far - jump.radius)):
            if length <= d_min:
                continue
            d, wd = graded_rule(length, d_min)
            r = jump.radius + sign * d
            pts = c + r[:, None, None] * dirs[None, :, :]
            sides.append((pts, wd * r ** (domain.dim - 1), wdir, d))
    return sides


def _jump_layer_value(f, domain, spec, quad, d_min, sides):
    """Scaled quantity for a piecewise-constant f with a power-law tail below ``d_min``."""
    s, p, q = spec.s, spec.p, spec.q
    dirs, wdir = sphere_rule(domain.dim, quad.sphere_order)
    total_resolved, total, exponents = 0.0, 0.0, []
    for pts, wd, wt, d in sides:
        D, T = pts.shape[:2]
        flat = pts.reshape(-1, domain.dim)
        inside = domain.sdf(flat) > EPS_GEOM * domain.length_scale()
        vals = np.zeros(len(flat))
        if np.any(inside):
            sub = flat[inside]
            spec_v = spec
            rho = spec_v.tau * domain.sdf(sub)
            if spec.variant == "hat":
                rho = np.minimum(rho, spec.R)

            def chunk(a, b, sub=sub, rho=rho):
                return inner_integral_batch(f, sub[a:b], rho[a:b], s, q, dirs, wdir, quad)

            vals[inside] = map_chunks(chunk, len(sub), quad.chunk, quad.threads)
        G = ((1.0 - s) * vals) ** (p / q)
        profile = (G.reshape(D, T) * wt[None, :]).sum(axis=1)
        resolved = outer_lp_aggregate(profile, wd, 1.0)
        order = np.argsort(d)
        d0, d1 = d[order[0]], d[order[1]]
        L0, L1 = profile[order[0]], profile[order[1]]
        if L0 > 0 and L1 > 0:
            alpha = -math.log(L0 / L1) / math.log(d0 / d1)
            exponents.append(alpha)
            if alpha >= 1 - 1e-9:
                tail = math.inf
            else:
                tail = L0 * d0**alpha * d_min ** (1 - alpha) / (1 - alpha)
        else:
            exponents.append(0.0)
            tail = 0.0
        total_resolved += resolved
        total += resolved + tail
    return total, total_resolved, exponents


def main2_detector(
    f,
    domain,
    spec_template,
    s_sequence=None,
    quad=None,
    divergence_factor=4.0,
    plateau_ratio=1.25,
    d_min=1e-12,
):
    """Track ``∫_Ω ((1 - s) inner(x))^(p/q) dx`` along s and classify its behaviour.

    Piecewise-constant functions are integrated on outer nodes graded toward
    their jump set down to ``d_min``; below that the layer profile is continued
    as the power law fitted on the two innermost nodes.  An exponent >= 1 makes
    the quantity infinite at that s.
    """
    quad = quad or QuadratureConfig()
    s_seq = list(s_sequence) if s_sequence is not None else detector_s_sequence()
    p, q = spec_template.p, spec_template.q
    warnings = []
    region = _region(domain, quad)
    values, resolved, exps = [], [], []
    if f.piecewise_constant:
        if spec_template.variant == "full":
            raise ValueError("the jump-graded detector supports the tilde and hat variants")
        sides = _layer_frames(f, region, quad, d_min * region.length_scale())
        for s in s_seq:
            v, r, e = _jump_layer_value(f, region, spec_template.with_s(s), quad, d_min * region.length_scale(), sides)
            values.append(v)
            resolved.append(r)
            exps.append(e)
    else:
        X, W = sample_domain(region, replace(quad.outer_plan, truncation=None), quad.seed)
        for s in s_seq:
            vals = inner_values(f, domain, spec_template.with_s(s), quad, X)
            v = _scaled(vals, W, s, p, q)
            values.append(v)
            resolved.append(v)
        exps = None
    first, last = values[0], values[-1]
    if not math.isfinite(last):
        growth = math.inf
    elif first > 0:
        growth = last / first
    else:
        growth = 1.0 if last == 0 else math.inf

    if not math.isfinite(last) or (growth >= divergence_factor and values[-1] > values[-2]):
        verdict = "diverging_suggests_not_w1p"
    else:
        steps = np.abs(np.diff(values))
        flattening = len(steps) < 2 or steps[-1] <= steps[-2] * (1 + 1e-9) or steps[-1] <= 1e-2 * abs(last)
        if growth <= plateau_ratio and flattening:
            verdict = "bounded_suggests_w1p"
        else:
            verdict = "inconclusive"
    if f.regularity == "not_w1p" and not f.piecewise_constant:
        warnings.append("finite truncation of a non-W^{1,p} series: growth shows in the truncation level, not in s")
    return DetectorReport(
        s_values=s_seq,
        values=values,
        resolved_values=resolved,
        singular_exponents=exps,
        growth_factor=growth,
        verdict=verdict,
        warnings=warnings,
        provenance=_provenance(
            f, domain, spec_template, quad,
            divergence_factor=divergence_factor, plateau_ratio=plateau_ratio, d_min=d_min,
        ),
    )


# ---------------------------------------------------------------------------
# tail masses and the truncated double limit


@dataclass
class TailReport:
    s: float
    truncation: int | None
    total: float
    masses: list  # (i, mass of Ω \ Ω_{2i} within the integration region)

    def to_dict(self):
        return asdict(self)


def tail_mass_diagnostic(f, domain, spec_template, s, i_sequence, quad=None, truncation=None):
    """Scaled seminorm mass outside ``Ω_{2i}`` for each i.

    On unbounded domains the outer integral runs over ``Ω_T`` with
    ``T = truncation`` (default: the plan's index, else ``2 max(i)``).
    """
    quad = quad or QuadratureConfig()
    i_seq = [int(i) for i in i_sequence]
    if any(b <= a for a, b in zip(i_seq, i_seq[1:])):
        raise ValueError("i_sequence must be increasing")
    T = None
    if domain.bounded:
        region = domain
    else:
        T = truncation or quad.outer_plan.truncation or 2 * max(i_seq)
        region = Truncated.from_index(domain, T)
    X, W = sample_domain(region, replace(quad.outer_plan, truncation=None), quad.seed)
    spec = spec_template.with_s(s)
    vals = inner_values(f, domain, spec, quad, X)
    G = ((1.0 - s) * vals) ** (spec.p / spec.q)
    total = outer_lp_aggregate(G, W, 1.0)
    masses = []
    for i in i_seq:
        inner_set = Truncated.from_index(domain, 2 * i)
        outside = ~inner_set.contains(X)
        masses.append((i, outer_lp_aggregate(G[outside], W[outside], 1.0)))
    return TailReport(s=s, truncation=T, total=total, masses=masses)


@dataclass
class DoubleLimitReport:
    lambdas: list
    s_values: list
    stage_scaled: list  # per λ, the scaled values along s
    stage_limits: list
    stage_references: list
    stage_errors: list
    final_limit: float
    reference: float | None
    relative_error: float | None

    def to_dict(self):
        return asdict(self)


def double_limit_study(f, domain, p, lambda_sequence, s_sequence=None, quad=None):
    """Inner limit s -> 1 on each ``Ω_λ`` (both integrals over Ω_λ), then the trend as λ -> 0.

    The final value extrapolates the stage limits to λ = 0 with a polynomial
    of degree ``min(2, len(lambdas) - 1)`` in λ.
    """
    quad = quad or QuadratureConfig()
    s_seq = list(s_sequence) if s_sequence is not None else default_s_sequence()
    lams = [float(v) for v in lambda_sequence]
    K = bbm_constant(domain.dim, p, p)
    stage_scaled, limits, refs, errs = [], [], [], []
    plan = replace(quad.outer_plan, truncation=None)
    for lam in lams:
        sub = Truncated(domain, lam)
        scaled = [(1 - s) * leoni_spector_truncated_p(f, domain, lam, s, p, quad) for s in s_seq]
        lim, _ = extrapolate_linear(s_seq, scaled)
        if sub.is_empty():
            energy = 0.0
        else:
            exact = f.exact_w1p_seminorm(sub, p) if isinstance(domain, Ball) else None
            energy = exact if exact is not None else _reference(f, sub, p, sample_domain(sub, plan, quad.seed))
        ref = None if energy is None else K * energy
        stage_scaled.append(scaled)
        limits.append(lim)
        refs.append(ref)
        errs.append(None if ref is None else _rel(lim, ref))
    deg = min(2, len(lams) - 1)
    final = float(np.polyval(np.polyfit(lams, limits, deg), 0.0)) if deg >= 1 else limits[-1]
    if domain.bounded:
        full_exact = f.exact_w1p_seminorm(domain, p)
        energy = full_exact if full_exact is not None else _reference(
            f, domain, p, sample_domain(domain, plan, quad.seed)
        )
    else:
        energy = None
    reference = None if energy is None else K * energy
    return DoubleLimitReport(
        lambdas=lams,
        s_values=s_seq,
        stage_scaled=stage_scaled,
        stage_limits=limits,
        stage_references=refs,
        stage_errors=errs,
        final_limit=final,
        reference=reference,
        relative_error=None if reference is None else _rel(final, reference),
    )
