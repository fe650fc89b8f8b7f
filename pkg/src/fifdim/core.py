"""Interpolation problems, their normalization, and evaluation of the FIF.

After normalization the FIF ``f`` lives on [0, 1] with ``f(0) = f(1) = 0`` and
satisfies, for ``x`` in ``I_i = [(i-1)/N, i/N]``,

    f(x) = S(x) * f(N x - (i - 1)) + h(x)

with ``h`` the piecewise linear interpolant of the normalized data.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (ConditionNotMet, ContractivityViolation, DomainError,
                     MalformedInput, ResourceLimit)
from .scaling import CallableScaling, ScalingFunction, to_fraction

SPACING_RTOL = 1e-12
DEFAULT_GRID_TOL = 1e-12
MAX_GRID_POINTS = 60_000_000


@dataclass(frozen=True)
class InterpolationProblem:
    """Data ``(x_i, y_i)``, ``i = 0..N``, and the vertical scaling function."""

    knots: tuple
    values: tuple
    scaling: ScalingFunction | CallableScaling

    @classmethod
    def create(cls, knots, values, scaling) -> "InterpolationProblem":
        return cls(tuple(to_fraction(x) for x in knots),
                   tuple(to_fraction(y) for y in values), scaling)

    @property
    def n(self) -> int:
        return len(self.knots) - 1


@dataclass(frozen=True)
class ValidationReport:
    n: int
    uniform_spacing: bool     # (A4)
    lipschitz: float          # (A5): certified constant on the original domain
    positive: bool            # (A6): min S > 0
    nonvanishing: bool        # (A6'): S not identically zero on any piece
    contractive: bool         # sup |S| < 1
    sup_abs_s: float
    min_s: float
    collinear: bool
    messages: tuple = ()

    def holds(self, condition: str) -> bool:
        return {
            "A1": True, "A2": True, "A3": True,
            "A4": self.uniform_spacing,
            "A5": math.isfinite(self.lipschitz),
            "A6": self.positive,
            "A6'": self.nonvanishing,
            "contractive": self.contractive,
        }[condition]

    def require(self, *conditions: str) -> None:
        missing = [c for c in conditions if not self.holds(c)]
        if missing:
            raise ConditionNotMet(f"required condition(s) not satisfied: {', '.join(missing)}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["messages"] = list(self.messages)
        d["conditions"] = {c: self.holds(c)
                           for c in ("A1", "A2", "A3", "A4", "A5", "A6", "A6'", "contractive")}
        return d


def validate(problem: InterpolationProblem) -> ValidationReport:
    """Check the standing hypotheses on ``problem``.

    Raises :class:`MalformedInput` for structurally broken input; every other
    failed condition is recorded in the report instead.
    """
    xs, ys = problem.knots, problem.values
    if len(xs) != len(ys):
        raise MalformedInput(f"{len(xs)} knots but {len(ys)} values")
    if len(xs) < 3:
        raise MalformedInput("need N >= 2, i.e. at least three data points")
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise MalformedInput("knots must be strictly increasing")
    n = len(xs) - 1
    x0, xn = xs[0], xs[-1]
    sf = problem.scaling
    lo, hi = sf.domain
    if isinstance(sf, CallableScaling):
        if (x0, xn) != (0, 1):
            raise MalformedInput("callable scaling functions require data on [0, 1]")
    elif abs(float(lo - x0)) > SPACING_RTOL * float(xn - x0) or \
            abs(float(hi - xn)) > SPACING_RTOL * float(xn - x0):
        raise MalformedInput(
            f"scaling function domain [{float(lo)}, {float(hi)}] differs from "
            f"data range [{float(x0)}, {float(xn)}]")

    msgs = []
    step = (xn - x0) / n
    uniform = all(abs(float((b - a) - step)) <= SPACING_RTOL * float(xn - x0)
                  for a, b in zip(xs, xs[1:]))
    if not uniform:
        msgs.append("(A4) knots are not uniformly spaced")
    smin, smax = sf.signed_extrema()
    sup_abs = max(abs(smin), abs(smax))
    contractive = sup_abs < 1
    if not contractive:
        msgs.append(f"sup|S| = {float(sup_abs)} >= 1")
    positive = smin > 0
    nonvanishing = not sf.has_zero_piece()
    if not positive:
        msgs.append("(A6) S is not strictly positive" +
                    ("" if nonvanishing else "; (A6') fails as well"))
    # collinear iff every data point lies on the line through the endpoints
    collinear = all((y - ys[0]) * (xn - x0) == (ys[-1] - ys[0]) * (x - x0)
                    for x, y in zip(xs, ys))
    return ValidationReport(n=n, uniform_spacing=uniform,
                            lipschitz=float(sf.lipschitz), positive=bool(positive),
                            nonvanishing=nonvanishing, contractive=bool(contractive),
                            sup_abs_s=float(sup_abs), min_s=float(smin),
                            collinear=collinear, messages=tuple(msgs))


@dataclass(frozen=True)
class NormalizedSystem:
    """The problem rescaled to [0, 1] with zero endpoint values.

    ``beta`` is ``sup |S|`` and ``sup_f_bound`` the bound
    ``max|h| / (1 - beta)`` on ``max |f|``.
    """

    n: int
    h_values: tuple
    scaling: ScalingFunction | CallableScaling
    beta: Fraction
    sup_f_bound: Fraction
    min_s: Fraction
    positive: bool
    nonvanishing: bool

    @property
    def lipschitz(self):
        return self.scaling.lipschitz

    @property
    def collinear(self) -> bool:
        return all(v == 0 for v in self.h_values)

    @property
    def h_slope_bound(self) -> Fraction:
        """Lipschitz constant of h: ``N * max |y_i - y_{i-1}|``."""
        return self.n * max(abs(b - a) for a, b in zip(self.h_values, self.h_values[1:]))

    def h(self, x):
        x = np.asarray(x, dtype=float)
        return np.interp(x, np.arange(self.n + 1) / self.n,
                         [float(v) for v in self.h_values])

    def h_exact(self, x: Fraction) -> Fraction:
        i = branch_index(x, self.n)
        t = self.n * x - (i - 1)
        return self.h_values[i - 1] + t * (self.h_values[i] - self.h_values[i - 1])


def normalize(problem: InterpolationProblem,
              report: ValidationReport | None = None) -> NormalizedSystem:
    """Map the domain to [0, 1] and subtract the baseline through the endpoints."""
    report = report or validate(problem)
    report.require("A4", "A5")
    if not report.contractive:
        raise ContractivityViolation(f"sup|S| = {report.sup_abs_s} >= 1")
    xs, ys = problem.knots, problem.values
    n = problem.n
    x0, xn = xs[0], xs[-1]
    # baseline b is constant when y_0 == y_N
    h_values = tuple(y - (ys[0] + (ys[-1] - ys[0]) * Fraction(i, n)) for i, y in enumerate(ys))
    sf = problem.scaling.reparametrize(x0, xn)
    smin, smax = sf.signed_extrema()
    beta = to_fraction(max(abs(smin), abs(smax)))
    hmax = max(abs(v) for v in h_values)
    return NormalizedSystem(n=n, h_values=h_values, scaling=sf, beta=beta,
                            sup_f_bound=hmax / (1 - beta), min_s=to_fraction(smin),
                            positive=report.positive, nonvanishing=report.nonvanishing)


def branch_index(x: Fraction, n: int) -> int:
    """1-based branch ``i`` with ``x`` in ``I_i``; N-adic points go to the
    branch they start (``i = floor(N x) + 1``), except ``x = 1`` -> ``N``."""
    return min(math.floor(n * x) + 1, n)


@dataclass(frozen=True, eq=False)
class FifGrid:
    """Values of the normalized FIF on ``{j / N^level}``."""

    n: int
    level: int
    values: np.ndarray
    error_bound: float
    sweeps: int = 0
    changes: tuple = field(default=())
    cell_bound: float = math.inf  # certified max oscillation of f on one grid cell

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.values.size) / (self.values.size - 1)

    @property
    def size(self) -> int:
        return self.values.size


def _check_grid_size(n: int, level: int) -> int:
    if level < 1:
        raise DomainError("grid level must be >= 1")
    points = n ** level + 1
    if points > MAX_GRID_POINTS:
        raise ResourceLimit(f"grid with {points} points exceeds cap {MAX_GRID_POINTS}")
    return points


def _grid_h(system: NormalizedSystem, level: int) -> np.ndarray:
    n = system.n
    sub = n ** (level - 1)
    t = np.arange(sub + 1) / sub
    out = np.empty(n ** level + 1)
    for i in range(1, n + 1):
        a, b = float(system.h_values[i - 1]), float(system.h_values[i])
        out[(i - 1) * sub:i * sub + 1] = a + t * (b - a)
    return out


def evaluate_grid(system: NormalizedSystem, level: int,
                  tol: float = DEFAULT_GRID_TOL, max_sweeps: int = 10_000) -> FifGrid:
    """Fixed-point iteration ``g <- S * g(L_i^{-1} x) + h`` on the N-adic grid.

    The grid is closed under every ``L_i^{-1}``, so the preimages of branch
    ``i`` are simply every N-th grid value. Starting from ``g = h`` the
    iteration is exact (up to rounding) after ``level + 1`` sweeps.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    beta = float(system.beta)
    if not beta < 1:
        raise ContractivityViolation(f"sup|S| = {beta} >= 1")
    n = system.n
    _check_grid_size(n, level)
    sub = n ** (level - 1)
    s = system.scaling.grid_values(n ** level)
    h = _grid_h(system, level)
    g = h.copy()
    new = np.empty_like(g)
    changes = []
    stop = tol * (1 - beta)
    for sweep in range(1, max_sweeps + 1):
        pre = g[::n]
        for i in range(n):
            sl = slice(i * sub, (i + 1) * sub + 1)
            np.multiply(s[sl], pre, out=new[sl])
            new[sl] += h[sl]
        change = float(np.max(np.abs(new - g)))
        changes.append(change)
        g, new = new, g
        if change <= stop:
            break
    else:
        raise ContractivityViolation("grid iteration did not settle")
    # contraction tail plus a rounding allowance per point update
    rounding = 8 * np.finfo(float).eps * float(system.sup_f_bound) / (1 - beta)
    err = beta * changes[-1] / (1 - beta) + rounding
    g.flags.writeable = False
    return FifGrid(n=n, level=level, values=g, error_bound=err,
                   sweeps=len(changes), changes=tuple(changes),
                   cell_bound=cell_oscillation_bound(system, g, err, level))


def cell_oscillation_bound(system: NormalizedSystem, values: np.ndarray,
                           error: float, level: int) -> float:
    """Certified bound ``W`` on the oscillation of f over any level-``m`` cell.

    For a cell ``J`` of level ``r`` in ``I_i`` the functional equation gives
    ``O(f, J) <= beta * O(f, L_i^{-1} J) + c * N^-r`` with
    ``c = 2 M_f lambda_S + Lip(h)``. Applying it ``q`` times and bounding a
    level ``m - q`` cell by its sampled range plus ``2 W`` yields

        W <= (beta^q (R_q + 2 error) + E_q) / (1 - 2 beta^q)

    whenever ``2 beta^q < 1``; the best ``q`` is taken, capped by ``2 M_f``.
    """
    n = system.n
    beta = float(system.beta)
    mf = float(system.sup_f_bound)
    c = (2 * mf * float(system.lipschitz) + float(system.h_slope_bound)) * (1 + 1e-12)
    best = 2 * mf
    mx = np.maximum(values[:-1], values[1:])
    mn = np.minimum(values[:-1], values[1:])
    for q in range(1, level + 1):
        mx = mx.reshape(-1, n).max(axis=1)
        mn = mn.reshape(-1, n).min(axis=1)
        bq = beta ** q
        if 2 * bq >= 1:
            continue
        r_q = float(np.max(mx - mn))
        e_q = c * sum(beta ** r * float(n) ** (r - level) for r in range(q))
        best = min(best, (bq * (r_q + 2 * error) + e_q) / (1 - 2 * bq))
    return best


def grid_residual(system: NormalizedSystem, grid: FifGrid) -> float:
    """Largest violation of the functional equation over the grid points."""
    n, level = grid.n, grid.level
    sub = n ** (level - 1)
    s = system.scaling.grid_values(n ** level)
    h = _grid_h(system, level)
    v = grid.values
    pre = v[::n]
    worst = 0.0
    for i in range(n):
        sl = slice(i * sub, (i + 1) * sub + 1)
        worst = max(worst, float(np.max(np.abs(v[sl] - s[sl] * pre - h[sl]))))
    return worst


def evaluate_point(system: NormalizedSystem, x, depth: int) -> tuple[float, float]:
    """Truncated address expansion of ``f(x)`` after ``depth`` digits.

    Returns ``(value, error_bound)`` with ``error_bound = beta**depth * M_f``.
    The orbit ``x -> N x - (i - 1)`` is tracked in exact rational arithmetic.
    """
    if depth < 1:
        raise DomainError("depth must be >= 1")
    x = to_fraction(x)
    if x < 0 or x > 1:
        raise DomainError(f"x = {x} outside [0, 1]")
    n = system.n
    err = float(system.beta) ** depth * float(system.sup_f_bound)
    total = 0.0
    weight = 1.0
    for _ in range(depth):
        if x == 0 or x == 1:
            break  # f vanishes at both endpoints, remaining terms are zero
        i = branch_index(x, n)
        total += weight * float(system.h_exact(x))
        weight *= float(_scale_at(system.scaling, x))
        if weight == 0.0:
            break
        x = n * x - (i - 1)
    else:
        return total, err
    return total, 0.0


def _scale_at(sf, x: Fraction) -> float:
    if isinstance(sf, ScalingFunction):
        return float(sf.exact(x))
    return float(sf(float(x)))


def knot_values(grid: FifGrid) -> np.ndarray:
    """Grid values at ``i / N``, ``i = 0..N``."""
    return grid.values[::grid.n ** (grid.level - 1)]


def evaluate_rational(system: NormalizedSystem, x, max_orbit: int = 100_000) -> Fraction:
    """Exact ``f(x)`` for rational ``x`` and a polynomial scaling function.

    The orbit of ``x`` under ``x -> N x - (i - 1)`` stays in ``{m / q}`` and is
    therefore eventually periodic (or reaches an endpoint, where ``f = 0``).
    Along the cycle the functional equation closes into one linear equation.
    """
    sf = system.scaling
    if not isinstance(sf, ScalingFunction):
        raise DomainError("exact evaluation needs a piecewise polynomial scaling function")
    x = to_fraction(x)
    if x < 0 or x > 1:
        raise DomainError(f"x = {x} outside [0, 1]")
    n = system.n
    seen: dict[Fraction, int] = {}
    orbit: list[Fraction] = []
    while x not in seen and x not in (0, 1):
        if len(orbit) >= max_orbit:
            raise ResourceLimit(f"orbit longer than {max_orbit}")
        seen[x] = len(orbit)
        orbit.append(x)
        x = n * x - (branch_index(x, n) - 1)
    # f at the orbit's landing point
    if x in (0, 1):
        tail = Fraction(0)
        start = len(orbit)
    else:
        start = seen[x]
        acc, weight = Fraction(0), Fraction(1)
        for z in orbit[start:]:
            acc += weight * system.h_exact(z)
            weight *= sf.exact(z)
        tail = acc / (1 - weight)
    value = tail
    for z in reversed(orbit[:start]):
        value = sf.exact(z) * value + system.h_exact(z)
    return value
