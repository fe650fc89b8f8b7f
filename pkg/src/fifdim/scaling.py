"""Vertical scaling functions and exact extrema of their absolute value.

A scaling function is stored as a continuous piecewise polynomial of degree
at most 3 with rational coefficients. Extrema of ``|S|`` over an interval are
found among a finite candidate set: interval endpoints, breakpoints, critical
points of each piece and real roots of each piece. Roots of a derivative of
degree <= 1 are rational, so for pieces of degree <= 2 every candidate is an
exact rational and every extremum is the correctly rounded float of the exact
value.

:class:`CallableScaling` is the escape hatch for black-box functions: the user
supplies a Lipschitz constant and extrema are obtained by a certified grid scan.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, MalformedInput

MAX_DEGREE = 3
CONTINUITY_TOL = 1e-12
# Above this many grid points, grid values of S are computed in float64.
EXACT_GRID_LIMIT = 1 << 18


def to_fraction(value) -> Fraction:
    """Parse ints, floats, Fractions, decimal strings and ``"p/q"`` strings exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise MalformedInput(f"not a number: {value!r}")
    if isinstance(value, (int, float)):
        if isinstance(value, float) and not math.isfinite(value):
            raise MalformedInput(f"non-finite number: {value!r}")
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise MalformedInput(f"cannot parse number {value!r}") from exc
    raise MalformedInput(f"not a number: {value!r}")


# ----------------------------------------------------------------------
# polynomial helpers (ascending-power coefficient tuples)
# ----------------------------------------------------------------------

def poly_trim(coeffs: Sequence) -> tuple:
    c = list(coeffs)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return tuple(c) if c else (Fraction(0),)


def poly_eval(coeffs: Sequence, x):
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * x + c
    return acc


def poly_deriv(coeffs: Sequence) -> tuple:
    if len(coeffs) <= 1:
        return (Fraction(0),)
    return poly_trim(tuple(r * coeffs[r] for r in range(1, len(coeffs))))


def poly_add(p: Sequence, q: Sequence) -> tuple:
    n = max(len(p), len(q))
    out = [Fraction(0)] * n
    for r, c in enumerate(p):
        out[r] += c
    for r, c in enumerate(q):
        out[r] += c
    return poly_trim(out)


def poly_scale(p: Sequence, s) -> tuple:
    return poly_trim(tuple(s * c for c in p))


def poly_compose_affine(coeffs: Sequence, a, b) -> tuple:
    """Coefficients of ``t -> p(a + b t)``."""
    out = [Fraction(0)] * len(coeffs)
    for r, c in enumerate(coeffs):
        if c == 0:
            continue
        for s in range(r + 1):
            out[s] += c * math.comb(r, s) * a ** (r - s) * b ** s
    return poly_trim(out)


def _exact_sqrt(q: Fraction):
    """Square root of a nonnegative rational if it is rational, else None."""
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def real_roots(coeffs: Sequence, lo: Fraction, hi: Fraction) -> list[Fraction]:
    """Real roots strictly inside ``(lo, hi)``; exact whenever they are rational
    and the degree is at most 2, float-accurate otherwise. Zero polynomial -> []."""
    p = poly_trim(coeffs)
    deg = len(p) - 1
    if deg <= 0:
        return []
    roots: list[Fraction] = []
    if deg == 1:
        roots = [-p[0] / p[1]]
    elif deg == 2:
        c0, c1, c2 = p
        disc = c1 * c1 - 4 * c2 * c0
        if disc < 0:
            return []
        sq = _exact_sqrt(disc)
        if sq is None:
            sq = Fraction(math.sqrt(disc))
        roots = [(-c1 - sq) / (2 * c2), (-c1 + sq) / (2 * c2)]
    else:
        fl = np.array([float(c) for c in reversed(p)])
        for z in np.roots(fl):
            if abs(z.imag) <= 1e-12 * max(1.0, abs(z.real)):
                x = float(z.real)
                # two Newton polishing steps in float
                dp = poly_deriv(p)
                for _ in range(2):
                    d = float(poly_eval(dp, Fraction(x)))
                    if d == 0:
                        break
                    x -= float(poly_eval(p, Fraction(x))) / d
                roots.append(Fraction(x))
    return sorted({r for r in roots if lo < r < hi})


def _sup_abs_on(coeffs: Sequence, a: Fraction, b: Fraction) -> Fraction:
    cands = [a, b] + real_roots(poly_deriv(coeffs), a, b)
    return max(abs(poly_eval(coeffs, x)) for x in cands)


# ----------------------------------------------------------------------
# piecewise polynomial scaling function
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingFunction:
    """Continuous piecewise polynomial ``S`` with a certified Lipschitz constant.

    Use :meth:`from_pieces` or :meth:`constant` rather than the raw constructor.
    ``coeffs[p]`` lists ascending-power coefficients of the piece on
    ``[breaks[p], breaks[p + 1]]``.
    """

    breaks: tuple
    coeffs: tuple
    lipschitz: Fraction

    @classmethod
    def from_pieces(cls, breaks, coeffs, lipschitz=None) -> "ScalingFunction":
        br = tuple(to_fraction(b) for b in breaks)
        if len(br) < 2:
            raise MalformedInput("scaling function needs at least two breakpoints")
        if any(b1 <= b0 for b0, b1 in zip(br, br[1:])):
            raise MalformedInput("scaling breakpoints must be strictly increasing")
        if len(coeffs) != len(br) - 1:
            raise MalformedInput(
                f"{len(br) - 1} intervals but {len(coeffs)} coefficient lists")
        cs = []
        for piece in coeffs:
            if len(piece) == 0:
                raise MalformedInput("empty coefficient list")
            p = poly_trim(tuple(to_fraction(c) for c in piece))
            if len(p) - 1 > MAX_DEGREE:
                raise MalformedInput(f"piece degree {len(p) - 1} exceeds {MAX_DEGREE}")
            cs.append(p)
        for q in range(1, len(br) - 1):
            left = poly_eval(cs[q - 1], br[q])
            right = poly_eval(cs[q], br[q])
            if abs(float(left - right)) > CONTINUITY_TOL:
                raise MalformedInput(
                    f"scaling function discontinuous at {br[q]}: {float(left)} != {float(right)}")
        slope = max(_sup_abs_on(poly_deriv(p), a, b)
                    for p, a, b in zip(cs, br, br[1:]))
        if lipschitz is None:
            lam = slope
        else:
            lam = to_fraction(lipschitz)
            if lam < slope:
                raise MalformedInput(
                    f"lipschitz override {float(lam)} below sup|S'| = {float(slope)}")
        return cls(br, tuple(cs), lam)

    @classmethod
    def constant(cls, c, domain=(0, 1)) -> "ScalingFunction":
        return cls.from_pieces(domain, [[c]])

    @property
    def domain(self) -> tuple:
        return self.breaks[0], self.breaks[-1]

    @property
    def degree(self) -> int:
        return max(len(p) - 1 for p in self.coeffs)

    @property
    def is_polynomial(self) -> bool:
        return True

    def piece_index(self, x: Fraction) -> int:
        p = bisect_right(self.breaks, x) - 1
        return min(max(p, 0), len(self.coeffs) - 1)

    def exact(self, x) -> Fraction:
        x = to_fraction(x)
        return poly_eval(self.coeffs[self.piece_index(x)], x)

    def __call__(self, x):
        """Float evaluation, vectorized over ``x``."""
        x = np.asarray(x, dtype=float)
        edges = np.array([float(b) for b in self.breaks[1:-1]])
        idx = np.searchsorted(edges, x, side="right")
        out = np.zeros_like(x)
        for p, c in enumerate(self.coeffs):
            mask = idx == p
            if np.any(mask):
                out[mask] = _horner_float(c, x[mask])
        return out

    def has_zero_piece(self) -> bool:
        """True if S vanishes identically on some piece, i.e. (A6') fails."""
        return any(all(c == 0 for c in p) for p in self.coeffs)

    def reparametrize(self, x0, x1) -> "ScalingFunction":
        """Express ``t -> S(x0 + t (x1 - x0))`` on [0, 1]."""
        x0, x1 = to_fraction(x0), to_fraction(x1)
        length = x1 - x0
        br = tuple((b - x0) / length for b in self.breaks)
        cs = tuple(poly_compose_affine(p, x0, length) for p in self.coeffs)
        return ScalingFunction(br, cs, self.lipschitz * length)

    # -- extrema ------------------------------------------------------

    def special_points(self) -> tuple:
        """Points where |S| may attain an interior extremum: ``(x, |S(x)|)``."""
        return _special_points(self)

    def signed_extrema(self, a=None, b=None) -> tuple[Fraction, Fraction]:
        """Exact (min S, max S) over ``[a, b]`` (default: whole domain)."""
        a, b = self._interval(a, b)
        cands = [a, b] + [x for x in self.breaks if a < x < b]
        for p, lo, hi in zip(self.coeffs, self.breaks, self.breaks[1:]):
            lo, hi = max(lo, a), min(hi, b)
            if lo < hi:
                cands += real_roots(poly_deriv(p), lo, hi)
        vals = [self.exact(x) for x in cands]
        return min(vals), max(vals)

    def abs_extrema(self, a=None, b=None) -> tuple[Fraction, Fraction]:
        """Exact (min |S|, max |S|) over ``[a, b]``."""
        a, b = self._interval(a, b)
        vals = [abs(self.exact(a)), abs(self.exact(b))]
        vals += [v for x, v in self.special_points() if a < x < b]
        return min(vals), max(vals)

    def _interval(self, a, b):
        lo, hi = self.domain
        a = lo if a is None else to_fraction(a)
        b = hi if b is None else to_fraction(b)
        if not a < b:
            raise DomainError(f"empty or inverted interval [{a}, {b}]")
        if a < lo or b > hi:
            raise DomainError(f"interval [{a}, {b}] outside domain [{lo}, {hi}]")
        return a, b

    def grid_values(self, denom: int) -> np.ndarray:
        """Signed ``S(t / denom)`` for ``t = 0..denom`` as float64."""
        return _grid_values(self, denom)

    def cell_abs_extrema(self, denom: int) -> tuple[np.ndarray, np.ndarray]:
        """(min |S|, max |S|) on every cell ``[t/denom, (t+1)/denom]``."""
        if self.domain != (0, 1):
            raise DomainError("cell extrema require a scaling function on [0, 1]")
        v = np.abs(self.grid_values(denom))
        lower = np.minimum(v[:-1], v[1:])
        upper = np.maximum(v[:-1], v[1:])
        for x, val in self.special_points():
            if 0 < x < 1:
                scaled = x * denom
                if scaled.denominator == 1:
                    continue  # grid point, already an endpoint value
                cell = math.floor(scaled)
                fv = float(val)
                upper[cell] = max(upper[cell], fv)
                lower[cell] = min(lower[cell], fv)
        return lower, upper


def _horner_float(coeffs, x: np.ndarray) -> np.ndarray:
    acc = np.full_like(x, float(coeffs[-1]))
    for c in reversed(coeffs[:-1]):
        acc = acc * x + float(c)
    return acc


@lru_cache(maxsize=64)
def _special_points(sf: ScalingFunction) -> tuple:
    pts: dict[Fraction, Fraction] = {}
    for x in sf.breaks:
        pts[x] = abs(sf.exact(x))
    for p, a, b in zip(sf.coeffs, sf.breaks, sf.breaks[1:]):
        for x in real_roots(poly_deriv(p), a, b):
            pts[x] = abs(poly_eval(p, x))
        for x in real_roots(p, a, b):
            pts[x] = Fraction(0)
    return tuple(sorted(pts.items()))


@lru_cache(maxsize=16)
def _grid_values(sf: ScalingFunction, denom: int) -> np.ndarray:
    if sf.domain != (0, 1):
        raise DomainError("grid values require a scaling function on [0, 1]")
    if denom + 1 > EXACT_GRID_LIMIT:
        out = sf(np.arange(denom + 1) / denom)
        out.flags.writeable = False
        return out
    out = np.empty(denom + 1)
    for p, a, b in zip(sf.coeffs, sf.breaks, sf.breaks[1:]):
        t0 = math.ceil(a * denom)
        t1 = math.floor(b * denom)
        # integer evaluation: S(t/D) = sum_r q_r t^r D^(d-r) / (Q D^d)
        lcm = 1
        for c in p:
            lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
        ints = [int(c * lcm) for c in p]
        d = len(p) - 1
        dpow = [denom ** (d - r) for r in range(d + 1)]
        scale = lcm * denom ** d
        for t in range(t0, t1 + 1):
            num = 0
            tp = 1
            for r in range(d + 1):
                num += ints[r] * tp * dpow[r]
                tp *= t
            out[t] = num / scale  # int / int is correctly rounded
    out.flags.writeable = False
    return out


# ----------------------------------------------------------------------
# black-box scaling function
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CallableScaling:
    """Black-box S on [0, 1] with a user-certified Lipschitz constant.

    Extrema come from a uniform scan; a scan with spacing ``s`` pins each
    extremum to within ``lipschitz * s / 2``. The scan density is chosen so
    that this radius is at most ``delta``, capped by ``max_points`` per cell,
    and the cap is reported through :meth:`certified_radius`.
    """

    func: Callable = field(compare=False)
    lipschitz: float = 1.0
    delta: float = 1e-10
    max_points: int = 4097
    name: str = "callable"

    breaks = (Fraction(0), Fraction(1))

    @property
    def domain(self) -> tuple:
        return Fraction(0), Fraction(1)

    @property
    def is_polynomial(self) -> bool:
        return False

    def __call__(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    def has_zero_piece(self) -> bool:
        return False

    def _points(self, width: float) -> int:
        need = math.ceil(self.lipschitz * width / (2 * self.delta)) + 1
        return int(min(max(need, 2), self.max_points))

    def certified_radius(self, width: float) -> float:
        return self.lipschitz * width / (2 * (self._points(width) - 1))

    def abs_extrema(self, a=0.0, b=1.0) -> tuple[float, float]:
        a, b = float(a), float(b)
        if not a < b:
            raise DomainError(f"empty or inverted interval [{a}, {b}]")
        if a < 0 or b > 1:
            raise DomainError(f"interval [{a}, {b}] outside [0, 1]")
        v = np.abs(self(np.linspace(a, b, self._points(b - a))))
        return float(v.min()), float(v.max())

    def signed_extrema(self, a=0.0, b=1.0) -> tuple[float, float]:
        v = self(np.linspace(float(a), float(b), self._points(float(b) - float(a))))
        r = self.certified_radius(float(b) - float(a))
        return float(v.min()) - r, float(v.max()) + r

    def grid_values(self, denom: int) -> np.ndarray:
        return self(np.arange(denom + 1) / denom)

    def cell_abs_extrema(self, denom: int) -> tuple[np.ndarray, np.ndarray]:
        """Scanned extrema widened by the certified radius (outer enclosure)."""
        n = self._points(1.0 / denom)
        t = (np.arange(denom)[:, None] + np.linspace(0.0, 1.0, n)[None, :]) / denom
        v = np.abs(self(t))
        r = self.certified_radius(1.0 / denom)
        return np.maximum(v.min(axis=1) - r, 0.0), v.max(axis=1) + r

    def reparametrize(self, x0, x1) -> "CallableScaling":
        if (to_fraction(x0), to_fraction(x1)) != (0, 1):
            raise DomainError("callable scaling functions must already live on [0, 1]")
        return self
