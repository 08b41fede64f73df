"""Tangential approach regions for Poisson extensions of potentials."""
from . import _backend
from .construction import ConstructionConfig, ConstructionTrace, Level, build, disjointness_margins
from .errors import (ConsistencyError, CoverageError, DominationError, GaugeNotTangentialError,
                     InvalidIntervalError, InvalidParameterError, LabError, NumericalFailureError,
                     OutOfRangeError, TableExhaustedError)
from .intervals import IntervalUnion
from .kernels import (GaugeFunction, PoissonParams, RadialKernel, convolve_poisson_kernel,
                      default_gauge, eval_poisson, gauge_from_kernel, smoothed_kernel)
from .maximal import (Field, TestFunction, WeakTypeReport, hl_maximal, k_star, maximal_over_region,
                      poisson_extend, weak_type_report)
from .regions import ApproachRegion, Vertex, check_domination, check_r_condition

BACKEND = _backend.NAME

__all__ = [
    "ApproachRegion", "BACKEND", "ConsistencyError", "ConstructionConfig", "ConstructionTrace",
    "CoverageError", "DominationError", "Field", "GaugeFunction", "GaugeNotTangentialError",
    "IntervalUnion", "InvalidIntervalError", "InvalidParameterError", "LabError", "Level",
    "NumericalFailureError", "OutOfRangeError", "PoissonParams", "RadialKernel",
    "TableExhaustedError", "TestFunction", "Vertex", "WeakTypeReport", "build",
    "check_domination", "check_r_condition", "convolve_poisson_kernel", "default_gauge",
    "disjointness_margins", "eval_poisson", "gauge_from_kernel", "hl_maximal", "k_star",
    "maximal_over_region", "poisson_extend", "smoothed_kernel", "weak_type_report",
]
