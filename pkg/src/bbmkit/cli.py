"""Config-driven command line front end.

A run is described by a TOML document with dotted sections, e.g.::

    command = "study"
    domain.kind = "ball"
    domain.radius = 1.0
    function.name = "linear"
    function.a = [1.0, 0.0]
    spec.p = 2
    spec.q = 2
    spec.tau = 0.5
    quad.seed = 0

See README.md for the full grammar.  Every run writes ``report.json`` (the
resolved config, warnings and results) and, for tabular commands, ``results.csv``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import bbm, geometry, testfunctions
from .quadrature import QuadratureConfig
from .seminorms import SeminormSpec, bbm_constant, seminorm_p

COMMANDS = ("seminorm", "study", "pointwise", "embedding", "detect", "tails", "double-limit", "constant")
CSV_COLUMNS = ("s", "one_minus_s", "raw_p_power", "scaled", "reference", "rel_error", "verdict")
SUCCESS = {"converged", "bounded_suggests_w1p", "satisfied", "nonincreasing", "computed"}

DOMAIN_KINDS = {
    "ball": geometry.Ball,
    "box": geometry.Box,
    "annulus": geometry.Annulus,
    "halfspace": geometry.HalfSpace,
    "strip": geometry.Strip,
    "slit_disk": geometry.SlitDisk,
    "lattice_complement": geometry.LatticeComplement,
    "polygon": geometry.Polygon2D,
}

SPEC_DEFAULTS = {"s": None, "s_sequence": None, "p": 2.0, "q": 2.0, "tau": 0.5, "R": math.inf, "variant": "tilde"}
STUDY_DEFAULTS = {
    "tol": 1e-2,
    "divergence_factor": 4.0,
    "plateau_ratio": 1.25,
    "d_min": 1e-12,
    "x": None,
    "i_sequence": None,
    "truncation": None,
    "lambda_sequence": None,
    "growth_limit": 4.0,
}
OUTPUT_DEFAULTS = {"path": ".", "format": "csv", "verbosity": 1}
PLAN_FIELDS = {f.name for f in dataclasses.fields(geometry.SamplingPlan)}
QUAD_FIELDS = {f.name for f in dataclasses.fields(QuadratureConfig)} - {"outer_plan"}


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


@dataclasses.dataclass
class RunConfig:
    command: str
    dim: int | None
    domain: dict
    function: dict
    spec: dict
    quad: dict
    study: dict
    output: dict
    warnings: list = dataclasses.field(default_factory=list)

    def resolved(self):
        """The fully resolved config as plain data (echoed into every report)."""
        out = dataclasses.asdict(self)
        out.pop("warnings")
        return _plain(out)

    def build_domain(self):
        params = dict(self.domain)
        cls = DOMAIN_KINDS[params.pop("kind")]
        return cls(**{k: _tuplify(v) for k, v in params.items()})

    def build_function(self):
        params = {k: _tuplify(v) for k, v in self.function.items() if k != "name"}
        return testfunctions.by_name(self.function["name"], **params)

    def build_quad(self):
        q = dict(self.quad)
        plan = geometry.SamplingPlan(**q.pop("outer"))
        return QuadratureConfig(outer_plan=plan, **q)

    def build_spec(self, s=None):
        sp = self.spec
        s = s if s is not None else (sp["s"] if sp["s"] is not None else sp["s_sequence"][-1])
        return SeminormSpec(s=s, p=sp["p"], q=sp["q"], tau=sp["tau"], R=sp["R"], variant=sp["variant"])


def _tuplify(v):
    if isinstance(v, list):
        return tuple(_tuplify(u) for u in v)
    return v


def _plain(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def _take(section, defaults, where):
    unknown = sorted(set(section) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown key {where}.{unknown[0]}")
    out = dict(defaults)
    out.update(section)
    return out


def _require_table(doc, key):
    val = doc.get(key, {})
    if not isinstance(val, dict):
        raise ConfigError(f"{key} must be a section (use dotted keys like {key}.name)")
    return val


def parse_config(text):
    """Parse and validate a TOML run document, filling defaults."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"syntax error: {exc}") from None
    allowed = {"command", "N", "p", "q", "domain", "function", "spec", "quad", "study", "output"}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]}")
    command = doc.get("command")
    if command is None:
        raise ConfigError("missing required key command")
    if command not in COMMANDS:
        raise ConfigError(f"command = {command!r} is not one of {COMMANDS}")

    spec_in = dict(_require_table(doc, "spec"))
    for key in ("p", "q"):
        if key in doc:
            if key in spec_in:
                raise ConfigError(f"{key} given both at top level and as spec.{key}")
            spec_in[key] = doc[key]
    spec = _take(spec_in, SPEC_DEFAULTS, "spec")
    spec["p"], spec["q"], spec["R"] = float(spec["p"]), float(spec["q"]), float(spec["R"])

    quad_in = dict(_require_table(doc, "quad"))
    outer_in = quad_in.pop("outer", {})
    if not isinstance(outer_in, dict):
        raise ConfigError("quad.outer must be a section")
    unknown = sorted(set(quad_in) - QUAD_FIELDS)
    if unknown:
        raise ConfigError(f"unknown key quad.{unknown[0]}")
    unknown = sorted(set(outer_in) - PLAN_FIELDS)
    if unknown:
        raise ConfigError(f"unknown key quad.outer.{unknown[0]}")
    try:
        plan = geometry.SamplingPlan(**outer_in)
        quadcfg = QuadratureConfig(outer_plan=plan, **quad_in)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"quad: {exc}") from None
    quad = quadcfg.to_dict()
    quad["outer"] = quad.pop("outer_plan")

    study = _take(_require_table(doc, "study"), STUDY_DEFAULTS, "study")
    output = _take(_require_table(doc, "output"), OUTPUT_DEFAULTS, "output")
    if output["format"] not in ("csv", "json"):
        raise ConfigError("output.format must be csv or json")

    domain_in = dict(_require_table(doc, "domain"))
    function_in = dict(_require_table(doc, "function"))
    dim = doc.get("N")
    if command == "constant":
        if dim is None:
            raise ConfigError("missing required key N")
        domain, function = {}, {}
    else:
        domain = _parse_domain(domain_in)
        function = _parse_function(function_in)

    cfg = RunConfig(command, dim, domain, function, spec, quad, study, output)
    _validate(cfg)
    return cfg


def _parse_domain(d):
    if "kind" not in d:
        raise ConfigError("missing required key domain.kind")
    kind = d["kind"]
    if kind not in DOMAIN_KINDS:
        raise ConfigError(f"domain.kind = {kind!r} is not one of {sorted(DOMAIN_KINDS)}")
    cls = DOMAIN_KINDS[kind]
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    unknown = sorted(set(d) - names - {"kind"})
    if unknown:
        raise ConfigError(f"unknown key domain.{unknown[0]} for kind {kind!r}")
    defaults = {f.name: f.default for f in dataclasses.fields(cls) if f.init and f.name in names}
    out = {"kind": kind}
    for k in sorted(names):
        if k in d:
            out[k] = d[k]
        elif defaults.get(k) is not dataclasses.MISSING:
            out[k] = _plain(defaults[k])
    return out


def _parse_function(d):
    if "name" not in d:
        raise ConfigError("missing required key function.name")
    name = d["name"]
    factory = testfunctions._FACTORIES.get(name)
    if factory is None:
        raise ConfigError(f"function.name = {name!r} is not one of {sorted(testfunctions._FACTORIES)}")
    import inspect

    sig = inspect.signature(factory)
    unknown = sorted(set(d) - set(sig.parameters) - {"name"})
    if unknown:
        raise ConfigError(f"unknown key function.{unknown[0]} for {name!r}")
    out = {"name": name}
    for k, par in sig.parameters.items():
        if k in d:
            out[k] = d[k]
        elif par.default is not inspect.Parameter.empty:
            out[k] = _plain(par.default)
    return out


def _validate(cfg):
    sp, st = cfg.spec, cfg.study
    cmd = cfg.command
    if sp["s"] is not None and sp["s_sequence"] is not None:
        raise ConfigError("give either spec.s or spec.s_sequence, not both")
    if sp["s_sequence"] is None and sp["s"] is None:
        if cmd in ("study", "pointwise", "double-limit"):
            sp["s_sequence"] = bbm.default_s_sequence()
        elif cmd == "detect":
            sp["s_sequence"] = bbm.detector_s_sequence()
        elif cmd == "embedding" and sp["p"] < sp["q"]:
            sp["s_sequence"] = [0.9, 0.99, 0.999]
        elif cmd in ("seminorm", "embedding", "tails"):
            raise ConfigError("missing required key spec.s")
    if cmd in ("study", "pointwise", "detect", "double-limit") and sp["s_sequence"] is None:
        sp["s_sequence"], sp["s"] = [sp["s"]], None
    if cmd == "tails" and sp["s"] is None:
        raise ConfigError("tails needs a single spec.s")
    seq = sp["s_sequence"]
    if seq is not None:
        if not isinstance(seq, list) or not seq:
            raise ConfigError("spec.s_sequence must be a non-empty list")
        sp["s_sequence"] = seq = [float(v) for v in seq]
        if any(b <= a for a, b in zip(seq, seq[1:])):
            raise ConfigError("spec.s_sequence must be strictly increasing")
    if cmd == "constant":
        if not (isinstance(cfg.dim, int) and cfg.dim >= 1):
            raise ConfigError("N must be a positive integer")
        if sp["p"] < 1 or sp["q"] < 1:
            raise ConfigError("p and q must be >= 1")
    else:
        try:
            for s in seq or [sp["s"]]:
                cfg.build_spec(s)
        except ValueError as exc:
            raise ConfigError(f"spec: {exc}") from None
    if cmd != "constant":
        try:
            dom = cfg.build_domain()
            cfg.build_function()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"domain/function: {exc}") from None
        if not dom.bounded and cfg.quad["outer"]["truncation"] is None and cmd not in ("tails",):
            raise ConfigError("unbounded domain: quad.outer.truncation is required")
        if not dom.bounded:
            cfg.warnings.append("unbounded domain: outer integral over a truncation")
        spec = cfg.build_spec(seq[0] if seq else sp["s"])
        if not spec.covered(dom.dim):
            cfg.warnings.append(
                f"(N, p, q) = ({dom.dim}, {spec.p:g}, {spec.q:g}) is outside the regimes of the limit theorem"
            )
    if cmd == "pointwise" and st["x"] is None:
        raise ConfigError("missing required key study.x")
    if cmd == "tails" and not st["i_sequence"]:
        raise ConfigError("missing required key study.i_sequence")
    if cmd == "double-limit":
        if not st["lambda_sequence"]:
            raise ConfigError("missing required key study.lambda_sequence")
        if sp["p"] != sp["q"]:
            raise ConfigError("double-limit needs spec.p == spec.q")


# ---------------------------------------------------------------------------
# execution


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def _csv_text(rows, columns=CSV_COLUMNS):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def _row(s, raw, scaled, reference, verdict):
    rel = None
    if reference is not None and scaled is not None and math.isfinite(scaled):
        rel = bbm._rel(scaled, reference)
    return {
        "s": s,
        "one_minus_s": 1.0 - s,
        "raw_p_power": raw,
        "scaled": scaled,
        "reference": reference,
        "rel_error": rel,
        "verdict": verdict,
    }


def execute(cfg):
    """Run the configured command; returns ``(verdict, result dict, csv rows or None, csv columns)``."""
    cmd, sp, st = cfg.command, cfg.spec, cfg.study
    if cmd == "constant":
        K = bbm_constant(cfg.dim, sp["p"], sp["q"])
        return "computed", {"K": K, "N": cfg.dim, "p": sp["p"], "q": sp["q"]}, None, None

    dom, f, quad = cfg.build_domain(), cfg.build_function(), cfg.build_quad()
    template = cfg.build_spec()
    p, q = sp["p"], sp["q"]

    if cmd == "study":
        r = bbm.convergence_study(f, dom, template, sp["s_sequence"], quad, tol=st["tol"])
        result = r.to_dict()
        result.pop("provenance")
        return r.verdict, result, list(r.rows()), CSV_COLUMNS

    if cmd == "seminorm":
        spec = cfg.build_spec(sp["s"])
        raw = seminorm_p(f, dom, spec, quad, allow_truncated_full=not dom.bounded)
        scaled = (1 - spec.s) ** (p / q) * raw
        ref = None
        if f.grad is not None and f.regularity not in ("bv_not_w11", "not_w1p"):
            region = bbm._region(dom, quad)
            ref = bbm_constant(dom.dim, p, q) * testfunctions.w1p_seminorm(f, region, p, quad)
        row = _row(spec.s, raw, scaled, ref, "computed")
        return "computed", {"raw_p_power": raw, "scaled": scaled, "reference": ref}, [row], CSV_COLUMNS

    if cmd == "pointwise":
        r = bbm.pointwise_limit_check(
            f, dom, st["x"], q, sp["s_sequence"], quad, tau=sp["tau"], R=sp["R"], tol=st["tol"]
        )
        rows = [
            _row(s, v / (1 - s), v, r.target, r.verdict) for s, v in zip(r.s_values, r.scaled_values)
        ]
        return r.verdict, r.to_dict(), rows, CSV_COLUMNS

    if cmd == "embedding":
        seq = sp["s_sequence"] or [sp["s"]]
        if q <= p:
            checks = [bbm.embedding_bound_check(f, dom, template.with_s(s), quad) for s in seq]
            ok = all(c.satisfied for c in checks)
            rows = [
                _row(c.s, c.lhs / (1 - c.s) ** (p / q), c.lhs, c.rhs, "satisfied" if c.satisfied else "violated")
                for c in checks
            ]
            result = {"checks": [c.to_dict() for c in checks]}
        else:
            c = bbm.embedding_bound_check(
                f, dom, template, quad, s_sequence=sp["s_sequence"], growth_limit=st["growth_limit"]
            )
            ok = c.satisfied
            rows = [
                _row(s, rat * c.gradient_energy / (1 - s) ** (p / q), rat * c.gradient_energy, None,
                     "satisfied" if ok else "violated")
                for s, rat in zip(c.s_values, c.ratios)
            ]
            result = {"checks": [c.to_dict()]}
        verdict = "satisfied" if ok else "violated"
        return verdict, result, rows, CSV_COLUMNS

    if cmd == "detect":
        r = bbm.main2_detector(
            f, dom, template, sp["s_sequence"], quad,
            divergence_factor=st["divergence_factor"], plateau_ratio=st["plateau_ratio"], d_min=st["d_min"],
        )
        rows = [
            _row(s, v / (1 - s) ** (p / q) if math.isfinite(v) else v, v, None, r.verdict)
            for s, v in zip(r.s_values, r.values)
        ]
        result = r.to_dict()
        result.pop("provenance")
        return r.verdict, result, rows, CSV_COLUMNS

    if cmd == "tails":
        r = bbm.tail_mass_diagnostic(f, dom, template, sp["s"], st["i_sequence"], quad, truncation=st["truncation"])
        masses = [m for _, m in r.masses]
        slack = 2 * quad.rel_tol * max(r.total, 0.0)
        mono = all(b <= a + slack for a, b in zip(masses, masses[1:]))
        verdict = "nonincreasing" if mono else "increasing"
        rows = [
            {"i": i, "tail_mass": m, "fraction": (m / r.total if r.total > 0 else 0.0), "verdict": verdict}
            for i, m in r.masses
        ]
        return verdict, r.to_dict(), rows, ("i", "tail_mass", "fraction", "verdict")

    if cmd == "double-limit":
        r = bbm.double_limit_study(f, dom, p, st["lambda_sequence"], sp["s_sequence"], quad)
        ok = r.relative_error is not None and r.relative_error <= st["tol"]
        verdict = "converged" if ok else "inconclusive"
        rows = []
        for lam, scaled, ref in zip(r.lambdas, r.stage_scaled, r.stage_references):
            for s, v in zip(r.s_values, scaled):
                row = _row(s, v / (1 - s), v, ref, verdict)
                row["lambda"] = lam
                rows.append(row)
        return verdict, r.to_dict(), rows, ("lambda",) + CSV_COLUMNS

    raise ConfigError(f"unhandled command {cmd!r}")  # pragma: no cover


def run(cfg, out_dir=None, stdout=None):
    """Execute and write artifacts; returns the verdict string."""
    stdout = stdout or sys.stdout
    out = Path(out_dir if out_dir is not None else cfg.output["path"])
    out.mkdir(parents=True, exist_ok=True)
    verdict, result, rows, columns = execute(cfg)
    report = {
        "command": cfg.command,
        "config": cfg.resolved(),
        "warnings": list(cfg.warnings) + list(result.pop("warnings", []) if isinstance(result, dict) else []),
        "verdict": verdict,
        "result": result,
    }
    if cfg.command == "detect":
        report["caveat"] = bbm.CAVEAT
    if rows is not None and cfg.output["format"] == "csv":
        (out / "results.csv").write_text(_csv_text(rows, columns))
    elif rows is not None:
        report["rows"] = rows
    text = json.dumps(_plain(report), indent=2, sort_keys=True) + "\n"
    (out / "report.json").write_text(text)
    if cfg.command == "constant":
        print(repr(float(result["K"])), file=stdout)
    elif cfg.output["verbosity"] > 0:
        print(f"{cfg.command}: {verdict}", file=stdout)
        for w in report["warnings"]:
            print(f"warning: {w}", file=stdout)
    return verdict


def build_parser():
    ap = argparse.ArgumentParser(prog="bbmkit", description="Fractional Sobolev seminorm studies from a TOML config.")
    ap.add_argument("--config", required=True, help="path to the TOML run document")
    ap.add_argument("--out", help="output directory (overrides output.path)")
    ap.add_argument("--seed", type=int, help="overrides quad.seed")
    ap.add_argument("--threads", type=int, help="overrides quad.threads")
    ap.add_argument("--assert", dest="assert_", action="store_true", help="exit nonzero unless the verdict is a success")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text)
        if args.seed is not None:
            cfg.quad["seed"] = args.seed
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads must be >= 1")
            cfg.quad["threads"] = args.threads
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        verdict = run(cfg, args.out)
    except (ValueError, FloatingPointError, OSError) as exc:
        print(f"error during {cfg.command}: {exc}", file=sys.stderr)
        return 3
    if args.assert_ and verdict not in SUCCESS:
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
