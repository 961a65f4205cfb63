"""Finite-space checks of semi-uniform Feller and WTV continuity of stochastic kernels."""

from .analysis import (AnalysisConfig, AnalysisReport, BaseFamily, BoundaryNotNullError, analyze,
                       asskern_gap, closed_gap, contset_gap, full_tv_gap, lsc_gap, marginal_tv_gap,
                       suf_gap, wtv_gap)
from .gaps import GapSeries, Verdict, verdict
from .kernels import (JointMeasure, KernelFamily, MeasureKernel, ParamKernel, family_from_param,
                      hat_family, integrate_kernel, marginal_s1, marginal_s2, push_family)
from .kr import FunctionFamily, KRCertificateError, RealFunction, kr_distance
from .measures import Measure, extreme_over_sets, jordan, tv_distance
from .regularize import ParamFunction, inf_convolve, inf_convolve_param, regularized_family
from .space import (ConvergentSequence, FiniteMetricSpace, InvalidSpaceError, TestSet,
                    product_space, validate_space)

__all__ = [
    "AnalysisConfig", "AnalysisReport", "BaseFamily", "BoundaryNotNullError", "analyze",
    "asskern_gap", "closed_gap", "contset_gap", "full_tv_gap", "lsc_gap", "marginal_tv_gap",
    "suf_gap", "wtv_gap", "GapSeries", "Verdict", "verdict", "JointMeasure", "KernelFamily",
    "MeasureKernel", "ParamKernel", "family_from_param", "hat_family", "integrate_kernel",
    "marginal_s1", "marginal_s2", "push_family", "FunctionFamily", "KRCertificateError",
    "RealFunction", "kr_distance", "Measure", "extreme_over_sets", "jordan", "tv_distance",
    "ParamFunction", "inf_convolve", "inf_convolve_param", "regularized_family",
    "ConvergentSequence", "FiniteMetricSpace", "InvalidSpaceError", "TestSet", "product_space",
    "validate_space",
]

__version__ = "0.1.0"
