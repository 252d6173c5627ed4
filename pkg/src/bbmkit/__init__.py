"""Fractional Sobolev seminorms on signed-distance domains and their s -> 1 limits."""

from . import bbm, geometry, quadrature, seminorms, testfunctions
from .bbm import (
    convergence_study,
    double_limit_study,
    embedding_bound_check,
    main2_detector,
    pointwise_limit_check,
    tail_mass_diagnostic,
)
from .geometry import (
    Annulus,
    Ball,
    Box,
    HalfSpace,
    Intersection,
    SamplingPlan,
    Strip,
    Truncated,
    sample_domain,
)
from .quadrature import QuadratureConfig, inner_integral, inner_integral_mc
from .seminorms import SeminormSpec, bbm_constant, seminorm_p, sphere_moment
from .testfunctions import TestFunction, by_name, catalog, w1p_seminorm

__version__ = "0.1.0"

__all__ = [
    "bbm",
    "geometry",
    "quadrature",
    "seminorms",
    "testfunctions",
    "convergence_study",
    "double_limit_study",
    "embedding_bound_check",
    "main2_detector",
    "pointwise_limit_check",
    "tail_mass_diagnostic",
    "Annulus",
    "Ball",
    "Box",
    "HalfSpace",
    "Intersection",
    "SamplingPlan",
    "Strip",
    "Truncated",
    "sample_domain",
    "QuadratureConfig",
    "inner_integral",
    "inner_integral_mc",
    "SeminormSpec",
    "bbm_constant",
    "seminorm_p",
    "sphere_moment",
    "TestFunction",
    "by_name",
    "catalog",
    "w1p_seminorm",
]
