"""Oscillation sums, box counts and the box-dimension verdict."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import FifGrid, NormalizedSystem, evaluate_grid, DEFAULT_GRID_TOL
from .errors import DegenerateFit, DomainError, InsufficientResolution
from .spectral import (DEFAULT_SPECTRAL_TOL, RhoBracket, SumFunctionReport,
                       fmt, rho_bracket, sum_function_report)

DEFAULT_MARGIN = 6
DEFAULT_GRID_POINTS = 15_000_000


def cell_extremes(grid: FifGrid, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Sampled (min, max) of f over each closed cell ``I^k_j``."""
    if grid.level < k + 1:
        raise InsufficientResolution(f"grid level {grid.level} < k + 1 = {k + 1}")
    if k < 1:
        raise DomainError("level k must be >= 1")
    per = grid.n ** (grid.level - k)
    v = grid.values
    body = v[:-1].reshape(-1, per)
    right = v[per::per]
    return np.minimum(body.min(axis=1), right), np.maximum(body.max(axis=1), right)


@dataclass(frozen=True, eq=False)
class OscillationProfile:
    """``O(f, I^k_j)`` for every ``j``: sampled value and certified bounds."""

    level: int
    per_interval: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @property
    def total(self) -> float:
        return float(self.per_interval.sum())

    @property
    def total_lower(self) -> float:
        return float(self.lower.sum())

    @property
    def total_upper(self) -> float:
        return float(self.upper.sum())


def oscillation_profile(grid: FifGrid, k: int) -> OscillationProfile:
    mn, mx = cell_extremes(grid, k)
    osc = mx - mn
    e = grid.error_bound
    return OscillationProfile(level=k, per_interval=osc,
                              lower=np.maximum(osc - 2 * e, 0.0),
                              upper=osc + 2 * e + 2 * grid.cell_bound)


@dataclass(frozen=True)
class SufficientCondition:
    applicable: bool
    passed: bool
    threshold: Fraction | float | None
    margin: float | None
    level: int | None
    reason: str = ""

    def to_dict(self) -> dict:
        return {"applicable": self.applicable, "passed": self.passed,
                "threshold": None if self.threshold is None else float(self.threshold),
                "margin": self.margin, "level": self.level, "reason": self.reason}


def sufficient_condition(system: NormalizedSystem, gamma: SumFunctionReport,
                         profiles: Sequence[OscillationProfile]) -> SufficientCondition:
    """Certify ``O_k -> infinity`` from ``O_k0 > lambda' M_f / (gamma_* - 1)``.

    ``lambda'`` is the Lipschitz constant of the sum function, which may
    replace ``lambda_S``; the certified lower bound of each ``O_k0`` is tested.
    """
    if not system.positive:
        return SufficientCondition(False, False, None, None, None,
                                   "S is not positive on [0, 1]")
    g_min = gamma.gamma_star_lower
    if not g_min > 1:
        return SufficientCondition(False, False, None, None, None,
                                   f"gamma_* = {float(g_min):.6g} <= 1")
    threshold = gamma.lambda_prime * system.sup_f_bound / (g_min - 1)
    best, best_level = -math.inf, None
    for p in profiles:
        m = p.total_lower - float(threshold)
        if m > best:
            best, best_level = m, p.level
    if best_level is None:
        return SufficientCondition(True, False, threshold, None, None, "no oscillation data")
    return SufficientCondition(True, best > 0, threshold, best, best_level)


def growth_margins(system: NormalizedSystem, gamma: SumFunctionReport,
                   profiles: Sequence[OscillationProfile]) -> list[float]:
    """``upper(O_{k+1}) - (gamma_* lower(O_k) - lambda' M_f)`` for consecutive levels.

    Each entry must be nonnegative: the true oscillation sums satisfy
    ``O_{k+1} >= gamma_* O_k - lambda' M_f`` for positive S.
    """
    g = float(gamma.gamma_star_lower)
    c = float(gamma.lambda_prime) * float(system.sup_f_bound)
    ps = sorted(profiles, key=lambda p: p.level)
    return [b.total_upper - (g * a.total_lower - c)
            for a, b in zip(ps, ps[1:]) if b.level == a.level + 1]


@dataclass(frozen=True)
class BoxCount:
    level: int
    epsilon: float
    count: int
    count_lower: int
    count_upper: int


def _rows(lo: np.ndarray, hi: np.ndarray, scale: float) -> np.ndarray:
    # number of half-open rows [r eps, (r + 1) eps) met by [lo, hi]
    return np.floor(hi * scale) - np.floor(lo * scale) + 1


def box_count(grid: FifGrid, k: int, margin: int = DEFAULT_MARGIN) -> BoxCount:
    """Column-wise count of ``N^-k`` squares meeting the graph."""
    if grid.level < k + margin:
        raise InsufficientResolution(
            f"grid level {grid.level} < k + margin = {k + margin}")
    mn, mx = cell_extremes(grid, k)
    scale = float(grid.n) ** k
    e, w = grid.error_bound, grid.cell_bound
    count = _rows(mn, mx, scale)
    lo_min, lo_max = mn + e, mx - e
    lower = np.where(lo_max >= lo_min, _rows(lo_min, lo_max, scale), 1.0)
    upper = _rows(mn - e - w, mx + e + w, scale)
    return BoxCount(level=k, epsilon=1.0 / scale, count=int(count.sum()),
                    count_lower=int(lower.sum()), count_upper=int(upper.sum()))


@dataclass(frozen=True)
class EmpiricalFit:
    slope: float
    intercept: float
    levels: tuple
    step_slopes: tuple

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept,
                "levels": list(self.levels), "step_slopes": list(self.step_slopes)}


def empirical_dimension(counts: Sequence[BoxCount],
                        window: tuple[int, int] | None = None) -> EmpiricalFit:
    """Least-squares slope of ``log count`` against ``k log N``."""
    cs = sorted(counts, key=lambda c: c.level)
    if window is not None:
        cs = [c for c in cs if window[0] <= c.level <= window[1]]
    if len(cs) < 3:
        raise DegenerateFit(f"need at least 3 levels, got {len(cs)}")
    x = np.array([-math.log(c.epsilon) for c in cs])
    y = np.array([math.log(c.count) for c in cs])
    if np.all(y == y[0]):
        raise DegenerateFit("all box counts are equal")
    slope, intercept = np.polyfit(x, y, 1)
    steps = tuple(float((y[t + 1] - y[t]) / (x[t + 1] - x[t])) for t in range(len(cs) - 1))
    return EmpiricalFit(float(slope), float(intercept), tuple(c.level for c in cs), steps)


def boxcount_csv(profiles: Sequence[OscillationProfile], counts: Sequence[BoxCount]) -> str:
    by_level = {p.level: p for p in profiles}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "epsilon", "O_k", "O_k_lower", "O_k_upper",
                "count", "count_lower", "count_upper", "step_slope"])
    prev = None
    for c in sorted(counts, key=lambda c: c.level):
        p = by_level.get(c.level)
        step = ""
        if prev is not None and prev.level == c.level - 1:
            step = fmt((math.log(c.count) - math.log(prev.count)) /
                       (math.log(prev.epsilon) - math.log(c.epsilon)))
        w.writerow([c.level, fmt(c.epsilon),
                    fmt(p.total) if p else "", fmt(p.total_lower) if p else "",
                    fmt(p.total_upper) if p else "",
                    c.count, c.count_lower, c.count_upper, step])
        prev = c
    return buf.getvalue()


# ----------------------------------------------------------------------
# verdict
# ----------------------------------------------------------------------

class Verdict(str, enum.Enum):
    FORMULA = "formula"
    TRIVIAL = "trivial"
    INCONCLUSIVE = "inconclusive"


class Branch(str, enum.Enum):
    MAIN = "main-theorem"
    COROLLARY = "constant-gamma-corollary"
    SUFFICIENT = "sufficient-condition"


@dataclass
class VerdictOptions:
    k_max: int = 8
    tol_spectral: float = DEFAULT_SPECTRAL_TOL
    bracket_width: float = 1e-4
    grid_level: int | None = None
    grid_tol: float = DEFAULT_GRID_TOL
    slope_window: tuple | None = None
    margin: int = DEFAULT_MARGIN
    empirical: bool = True


def default_grid_level(n: int, max_points: int = DEFAULT_GRID_POINTS) -> int:
    return max(2, int(math.floor(math.log(max_points - 1) / math.log(n) + 1e-12)))


@dataclass
class DimensionReport:
    verdict: Verdict
    branch: Branch | None
    dimension: float | None
    dimension_bounds: tuple | None
    rho_bracket: RhoBracket | None
    rho_history: list
    gamma: SumFunctionReport
    sufficient: SufficientCondition | None
    oscillation: list = field(default_factory=list)
    box_counts: list = field(default_factory=list)
    empirical: EmpiricalFit | None = None
    reason: str = ""
    n: int = 0

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "branch": None if self.branch is None else self.branch.value,
            "dimension": self.dimension,
            "dimension_bounds": None if self.dimension_bounds is None
            else list(self.dimension_bounds),
            "n": self.n,
            "rho_S": None if self.rho_bracket is None else self.rho_bracket.midpoint,
            "rho_bracket": None if self.rho_bracket is None else self.rho_bracket.to_dict(),
            "rho_history": [b.to_dict() for b in self.rho_history],
            "reason": self.reason,
            "empirical": None if self.empirical is None else self.empirical.to_dict(),
            "diagnostics": {
                "gamma": self.gamma.to_dict(),
                "sufficient_condition": None if self.sufficient is None
                else self.sufficient.to_dict(),
                "oscillation": [{"k": p.level, "O_k": p.total, "lower": p.total_lower,
                                 "upper": p.total_upper} for p in self.oscillation],
                "box_counts": [{"k": c.level, "epsilon": c.epsilon, "count": c.count,
                                "count_lower": c.count_lower, "count_upper": c.count_upper}
                               for c in self.box_counts],
            },
        }


def _dim(rho: float, n: int) -> float:
    return 1.0 + math.log(rho) / math.log(n)


def dimension_verdict(system: NormalizedSystem, options: VerdictOptions | None = None,
                      grid: FifGrid | None = None) -> DimensionReport:
    """Decide ``dim_B`` of the graph and attach the empirical cross-check.

    Only certified evidence produces a verdict: the constant-sum corollary,
    collinear data or ``rho(M_k) < 1`` (dimension 1), or the sufficient
    condition together with ``rho(M'_k) > 1`` (the spectral formula).
    Anything else is reported as inconclusive.
    """
    opt = options or VerdictOptions()
    n = system.n
    gamma = sum_function_report(system, 1)
    level = opt.grid_level or default_grid_level(n)
    if grid is None:
        grid = evaluate_grid(system, level, opt.grid_tol)
    osc_top = max(1, grid.level - opt.margin)
    profiles = [oscillation_profile(grid, k) for k in range(1, osc_top + 1)]
    suff = sufficient_condition(system, gamma, profiles)

    history: list[RhoBracket] = []
    verdict, branch, dim, bounds, reason = Verdict.INCONCLUSIVE, None, None, None, ""

    if gamma.is_constant and system.positive and float(gamma.gamma_star_lower) > 0:
        g0 = float(gamma.gamma_star_lower)
        history.append(rho_bracket(system, 1, opt.tol_spectral))
        branch = Branch.COROLLARY
        if g0 > 1 and not system.collinear:
            verdict, dim = Verdict.FORMULA, _dim(g0, n)
            bounds = (dim, dim)
            reason = f"sum function constant = {g0:.12g} > 1, data not collinear"
        else:
            verdict, dim, bounds = Verdict.TRIVIAL, 1.0, (1.0, 1.0)
            reason = "collinear data" if system.collinear else \
                f"sum function constant = {g0:.12g} <= 1"
    else:
        for k in range(1, opt.k_max + 1):
            b = rho_bracket(system, k, opt.tol_spectral)
            history.append(b)
            if b.width <= opt.bracket_width or b.upper < 1 - opt.tol_spectral:
                break
        final = history[-1]
        if system.collinear:
            verdict, branch, dim, bounds = Verdict.TRIVIAL, Branch.MAIN, 1.0, (1.0, 1.0)
            reason = "collinear data: f is the baseline, oscillations vanish"
        elif final.upper < 1 - opt.tol_spectral:
            verdict, branch, dim, bounds = Verdict.TRIVIAL, Branch.MAIN, 1.0, (1.0, 1.0)
            reason = f"rho(M_{final.level}) = {final.upper:.6g} < 1"
        elif not system.positive:
            reason = "S is not positive; only the upper bound is available"
        elif final.lower is not None and final.lower > 1 + opt.tol_spectral and suff.passed:
            verdict, branch = Verdict.FORMULA, Branch.SUFFICIENT
            dim = _dim(final.midpoint, n)
            bounds = (_dim(final.lower - opt.tol_spectral, n),
                      _dim(final.upper + opt.tol_spectral, n))
            reason = (f"O_{suff.level} lower bound exceeds threshold "
                      f"{float(suff.threshold):.6g} by {suff.margin:.6g}")
        else:
            reason = "divergence of O_k not certified" if not suff.passed else \
                "rho bracket does not exclude 1"

    counts, fit = [], None
    if opt.empirical:
        lo, hi = opt.slope_window or (3, grid.level - opt.margin)
        hi = min(hi, grid.level - opt.margin)
        counts = [box_count(grid, k, opt.margin) for k in range(max(lo, 1), hi + 1)]
        try:
            fit = empirical_dimension(counts)
        except DegenerateFit:
            fit = None
    return DimensionReport(verdict=verdict, branch=branch, dimension=dim,
                           dimension_bounds=bounds,
                           rho_bracket=history[-1] if history else None,
                           rho_history=history, gamma=gamma, sufficient=suff,
                           oscillation=profiles, box_counts=counts, empirical=fit,
                           reason=reason, n=n)
