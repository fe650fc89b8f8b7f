"""Vertical scaling matrices and their Perron roots.

Level-``k`` matrices are ``N^k x N^k`` but have only ``N^(k+1)`` nonzeros:
row ``(i-1) N^(k-1) + l`` holds ``entries[i, j]`` in the columns
``(l-1) N < j <= l N``. Only the ``N x N^k`` entries table is stored; with
``E = entries.reshape(N, N^(k-1), N)`` the product is

    (M v)[i, l] = sum_m E[i, l, m] * v[l, m]

which is what :func:`matvec` computes.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .core import NormalizedSystem
from .errors import ConditionNotMet, DomainError, NoConvergence, ResourceLimit
from .scaling import (ScalingFunction, poly_add, poly_compose_affine, poly_deriv,
                      poly_eval, poly_scale, real_roots, _sup_abs_on)

MAX_TABLE_ENTRIES = 10 ** 8
DEFAULT_SPECTRAL_TOL = 1e-10
DEFAULT_MAX_ITER = 10 ** 6
MONOTONE_SLACK = 1e-8
CONSTANT_TOL = 1e-10


class Kind(str, enum.Enum):
    UPPER = "upper"
    LOWER = "lower"
    SAMPLED = "sampled"


class SampleRule(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    MIDPOINT = "midpoint"


@dataclass(frozen=True, eq=False)
class ExtremaTable:
    """``upper[i-1, j-1]`` / ``lower[i-1, j-1]`` = max / min of ``|S|`` on ``I^k_{i,j}``."""

    n: int
    level: int
    upper: np.ndarray
    lower: np.ndarray
    lipschitz: float

    @property
    def certified_gap(self) -> float:
        return self.lipschitz * float(self.n) ** (-self.level - 1)

    @property
    def max_gap(self) -> float:
        return float(np.max(self.upper - self.lower))


@dataclass(frozen=True, eq=False)
class ScalingMatrix:
    n: int
    level: int
    kind: Kind
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.n ** self.level

    def matvec(self, v) -> np.ndarray:
        return matvec(self, v)

    def to_dense(self, max_dim: int = 729) -> np.ndarray:
        """Materialize the full matrix (test oracle; small levels only)."""
        d = self.dim
        if d > max_dim:
            raise ResourceLimit(f"dense materialization of a {d}x{d} matrix refused")
        n, blocks = self.n, self.n ** (self.level - 1)
        out = np.zeros((d, d))
        for i in range(n):
            for l in range(blocks):
                out[i * blocks + l, l * n:(l + 1) * n] = self.entries[i, l * n:(l + 1) * n]
        return out


def build_extrema_table(system: NormalizedSystem, k: int,
                        cap: int = MAX_TABLE_ENTRIES) -> ExtremaTable:
    if k < 1:
        raise DomainError("level k must be >= 1")
    n = system.n
    if n ** (k + 1) > cap:
        raise ResourceLimit(f"extrema table with {n ** (k + 1)} entries exceeds cap {cap}")
    lower, upper = system.scaling.cell_abs_extrema(n ** (k + 1))
    # cell t = (i-1) N^k + (j-1) is exactly I^k_{i,j}
    return ExtremaTable(n=n, level=k, upper=upper.reshape(n, n ** k),
                        lower=lower.reshape(n, n ** k),
                        lipschitz=float(system.lipschitz))


def upper_matrix(table: ExtremaTable) -> ScalingMatrix:
    return ScalingMatrix(table.n, table.level, Kind.UPPER, table.upper)


def lower_matrix(table: ExtremaTable) -> ScalingMatrix:
    return ScalingMatrix(table.n, table.level, Kind.LOWER, table.lower)


def build_sampled_matrix(system: NormalizedSystem, k: int,
                         rule: SampleRule | str = SampleRule.LEFT,
                         cap: int = MAX_TABLE_ENTRIES) -> ScalingMatrix:
    """Matrix with ``|S|`` sampled at one point of each ``I^k_{i,j}``."""
    rule = SampleRule(rule)
    if k < 1:
        raise DomainError("level k must be >= 1")
    n = system.n
    denom = n ** (k + 1)
    if denom > cap:
        raise ResourceLimit(f"sampled matrix with {denom} entries exceeds cap {cap}")
    if rule is SampleRule.MIDPOINT:
        v = np.abs(system.scaling.grid_values(2 * denom)[1::2])
    else:
        g = np.abs(system.scaling.grid_values(denom))
        v = g[:-1] if rule is SampleRule.LEFT else g[1:]
    return ScalingMatrix(n, k, Kind.SAMPLED, np.ascontiguousarray(v).reshape(n, n ** k))


def matvec(matrix: ScalingMatrix, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n, blocks = matrix.n, matrix.n ** (matrix.level - 1)
    if v.shape != (matrix.dim,):
        raise ValueError(f"vector of length {v.size} for a {matrix.dim}x{matrix.dim} matrix")
    e = matrix.entries.reshape(n, blocks, n)
    return (e * v.reshape(blocks, n)).sum(axis=2).reshape(-1)


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """Perron root estimate; ``lower``/``upper`` are Collatz-Wielandt bounds
    (certified when the final iterate is strictly positive)."""

    radius: float
    eigenvector: np.ndarray
    iterations: int
    residual: float
    lower: float
    upper: float


def spectral_radius(matrix: ScalingMatrix, tol: float = DEFAULT_SPECTRAL_TOL,
                    max_iter: int = DEFAULT_MAX_ITER) -> SpectralResult:
    """Power iteration from the all-ones vector with 1-norm normalization.

    For a positive iterate ``v`` the ratios ``(M v)_r / v_r`` enclose the
    Perron root; iteration stops once that enclosure is narrower than ``tol``.
    If the iterate has zero components the stop rule falls back to the change
    of the Rayleigh quotient together with the residual.
    """
    if not np.any(matrix.entries):
        raise NoConvergence("zero matrix has no Perron eigenvector")
    d = matrix.dim
    v = np.full(d, 1.0 / d)
    prev_rq = math.inf
    for it in range(1, max_iter + 1):
        w = matvec(matrix, v)
        if np.all(v > 0):
            ratios = w / v
            lo, hi = float(ratios.min()), float(ratios.max())
            radius = 0.5 * (lo + hi)
            done = hi - lo <= tol
        else:
            radius = float(v @ w) / float(v @ v)
            lo = hi = radius
            done = abs(radius - prev_rq) <= tol and \
                float(np.max(np.abs(w - radius * v))) <= tol
            prev_rq = radius
        total = w.sum()
        if total == 0:
            raise NoConvergence("iterate collapsed to zero (nilpotent pattern)")
        if done:
            residual = float(np.max(np.abs(w - radius * v)))
            return SpectralResult(radius, v, it, residual, lo, hi)
        v = w / total
    raise NoConvergence(f"power iteration did not converge in {max_iter} steps")


@dataclass(frozen=True)
class RhoBracket:
    """``[rho(M'_k), rho(M_k)]``; ``lower`` is None when only (A6') holds and
    the lower matrix did not yield a Perron root."""

    level: int
    lower: float | None
    upper: float
    width_bound: float | None
    c: float | None
    certified: bool
    iterations: tuple = ()

    @property
    def width(self) -> float:
        return math.inf if self.lower is None else self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return self.upper if self.lower is None else 0.5 * (self.lower + self.upper)

    def to_dict(self) -> dict:
        return {"level": self.level, "lower": self.lower, "upper": self.upper,
                "width": None if self.lower is None else self.width,
                "width_bound": self.width_bound, "C": self.c,
                "certified": self.certified}


def rho_bracket(system: NormalizedSystem, k: int, tol: float = DEFAULT_SPECTRAL_TOL,
                table: ExtremaTable | None = None) -> RhoBracket:
    table = table or build_extrema_table(system, k)
    up = spectral_radius(upper_matrix(table), tol)
    if system.positive:
        lo = spectral_radius(lower_matrix(table), tol)
        c = 1.0 / float(system.min_s)
        width = c * float(system.lipschitz) * float(system.n) ** (-k - 1) * lo.radius
        return RhoBracket(k, lo.radius, up.radius, width, c, True,
                          (lo.iterations, up.iterations))
    try:
        lo = spectral_radius(lower_matrix(table), tol, max_iter=100_000)
        lower = lo.radius
    except NoConvergence:
        lower = None
    return RhoBracket(k, lower, up.radius, None, None, False, (up.iterations,))


def estimate_rho_S(system: NormalizedSystem, target_width: float = 1e-4, k_max: int = 8,
                   tol: float = DEFAULT_SPECTRAL_TOL) -> tuple[float, list[RhoBracket]]:
    """Refine the bracket level by level until its width is below ``target_width``.

    Raises :class:`ResourceLimit` (carrying the history) if ``k_max`` is reached first.
    """
    if not system.positive:
        raise ConditionNotMet("estimating rho_S needs a positive scaling function (A6)")
    history: list[RhoBracket] = []
    for k in range(1, k_max + 1):
        b = rho_bracket(system, k, tol)
        history.append(b)
        if b.width <= target_width:
            return b.midpoint, history
    raise ResourceLimit(f"bracket width {history[-1].width:.3g} > {target_width:.3g} "
                        f"at k_max = {k_max}", achieved_width=history[-1].width,
                        history=history)


def check_monotone(history: Iterable[RhoBracket], slack: float = MONOTONE_SLACK) -> bool:
    h = list(history)
    ups = all(b.upper <= a.upper + slack for a, b in zip(h, h[1:]))
    los = all(a.lower is None or b.lower is None or a.lower <= b.lower + slack
              for a, b in zip(h, h[1:]))
    return ups and los


# ----------------------------------------------------------------------
# sum function gamma(x) = sum_i |S(L_i(x))|
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SumFunctionReport:
    gamma_star_upper: Fraction | float   # max of gamma
    gamma_star_lower: Fraction | float   # min of gamma
    lambda_prime: Fraction | float       # Lipschitz constant of gamma
    level: int
    gamma_bar: tuple                     # per level 1..k: max_j sum_i upper
    gamma_under: tuple                   # per level 1..k: min_j sum_i lower
    exact: bool
    breaks: tuple = field(default=())
    pieces: tuple = field(default=())

    @property
    def is_constant(self) -> bool:
        return float(self.gamma_star_upper) - float(self.gamma_star_lower) <= CONSTANT_TOL

    def to_dict(self) -> dict:
        return {"gamma_star_upper": float(self.gamma_star_upper),
                "gamma_star_lower": float(self.gamma_star_lower),
                "lambda_prime": float(self.lambda_prime),
                "is_constant": self.is_constant, "exact": self.exact,
                "gamma_bar": [float(x) for x in self.gamma_bar],
                "gamma_under": [float(x) for x in self.gamma_under],
                "pieces": [{"from": str(a), "to": str(b), "coeffs": [str(c) for c in p]}
                           for a, b, p in zip(self.breaks, self.breaks[1:], self.pieces)]}


def sum_function(system: NormalizedSystem) -> tuple[tuple, tuple]:
    """Exact piecewise polynomial ``gamma`` on [0, 1] as ``(breaks, pieces)``."""
    sf = system.scaling
    if not isinstance(sf, ScalingFunction):
        raise DomainError("exact sum function needs a piecewise polynomial S")
    n = system.n
    cuts = {Fraction(0), Fraction(1)}
    for x, _ in sf.special_points():
        i = min(math.floor(n * x) + 1, n)
        cuts.add(n * x - (i - 1))
    cuts = sorted(c for c in cuts if 0 <= c <= 1)
    pieces = []
    for u, v in zip(cuts, cuts[1:]):
        mid = (u + v) / 2
        acc: tuple = (Fraction(0),)
        for i in range(1, n + 1):
            z = (i - 1 + mid) / n
            p = sf.coeffs[sf.piece_index(z)]
            sign = 1 if poly_eval(p, z) >= 0 else -1
            acc = poly_add(acc, poly_scale(poly_compose_affine(p, Fraction(i - 1, n),
                                                               Fraction(1, n)), sign))
        pieces.append(acc)
    return tuple(cuts), tuple(pieces)


def sum_function_report(system: NormalizedSystem, k: int = 1) -> SumFunctionReport:
    if k < 1:
        raise DomainError("level k must be >= 1")
    bars, unders = [], []
    for level in range(1, k + 1):
        t = build_extrema_table(system, level)
        bars.append(float(t.upper.sum(axis=0).max()))
        unders.append(float(t.lower.sum(axis=0).min()))
    if isinstance(system.scaling, ScalingFunction):
        breaks, pieces = sum_function(system)
        vals, slopes = [], []
        for p, a, b in zip(pieces, breaks, breaks[1:]):
            for x in [a, b] + real_roots(poly_deriv(p), a, b):
                vals.append(poly_eval(p, x))
            slopes.append(_sup_abs_on(poly_deriv(p), a, b))
        return SumFunctionReport(max(vals), min(vals), max(slopes), k,
                                 tuple(bars), tuple(unders), True, breaks, pieces)
    # black-box S: conservative enclosure from the finest table
    lam = float(system.lipschitz)
    return SumFunctionReport(bars[-1], unders[-1], lam, k, tuple(bars), tuple(unders), False)


# ----------------------------------------------------------------------
# CSV export
# ----------------------------------------------------------------------

def fmt(x: float) -> str:
    return format(float(x), ".17g")


def entries_csv(matrices: Iterable[ScalingMatrix]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "level", "i", "j", "value"])
    for m in matrices:
        for i in range(m.n):
            for j in range(m.entries.shape[1]):
                w.writerow([m.kind.value, m.level, i + 1, j + 1, fmt(m.entries[i, j])])
    return buf.getvalue()


def dense_csv(matrix: ScalingMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    dense = matrix.to_dense()
    w.writerow([f"c{j + 1}" for j in range(dense.shape[1])])
    for row in dense:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()
