"""Generalized affine fractal interpolation functions and their box dimension."""

from __future__ import annotations

__version__ = "0.1.0"

from .config import RunConfig, load_config, parse_config
from .core import (FifGrid, InterpolationProblem, NormalizedSystem, ValidationReport,
                   evaluate_grid, evaluate_point, evaluate_rational, grid_residual,
                   knot_values, normalize, validate)
from .dimension import (BoxCount, Branch, DimensionReport, EmpiricalFit, OscillationProfile,
                        SufficientCondition, Verdict, VerdictOptions, box_count,
                        dimension_verdict, empirical_dimension, growth_margins,
                        oscillation_profile, sufficient_condition)
from .errors import (ConditionNotMet, ContractivityViolation, DegenerateFit, DomainError,
                     FifError, Inconclusive, InsufficientResolution, MalformedInput,
                     NoConvergence, ResourceLimit)
from .scaling import CallableScaling, ScalingFunction
from .spectral import (ExtremaTable, Kind, RhoBracket, SampleRule, ScalingMatrix,
                       SpectralResult, build_extrema_table, build_sampled_matrix,
                       check_monotone, estimate_rho_S, lower_matrix, rho_bracket,
                       spectral_radius, sum_function_report, upper_matrix)

__all__ = [name for name in dir() if not name.startswith("_")]
