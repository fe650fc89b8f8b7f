from __future__ import annotations

import random
from fractions import Fraction

import pytest

from fifdim import InterpolationProblem, ScalingFunction, normalize, validate

THIRDS = ["0", "1/3", "2/3", "1"]
EXAMPLE_COEFFS = [["4/9"], ["1/3", "0", "1"], ["13/9", "-1"]]


def example_problem(values=("0", "1", "1", "0")) -> InterpolationProblem:
    sf = ScalingFunction.from_pieces(THIRDS, EXAMPLE_COEFFS)
    return InterpolationProblem.create(THIRDS, list(values), sf)


def constant_problem(c="1/2", values=("0", "1", "1", "0")) -> InterpolationProblem:
    return InterpolationProblem.create(THIRDS, list(values), ScalingFunction.constant(c))


def quadratic_through(a, b, ya, ym, yb) -> tuple:
    """Ascending coefficients of the quadratic through (a, ya), (m, ym), (b, yb)."""
    m = (a + b) / 2
    # Newton form: ya + d1 (x - a) + d2 (x - a)(x - m)
    d1 = (ym - ya) / (m - a)
    d2 = ((yb - ym) / (b - m) - d1) / (b - a)
    c0 = ya - d1 * a + d2 * a * m
    c1 = d1 - d2 * (a + m)
    return (c0, c1, d2)


def random_positive_problem(seed: int, n_choices=(2, 3, 4)) -> InterpolationProblem:
    """Uniform knots on [0, 1], continuous positive piecewise-quadratic S with sup < 1."""
    rng = random.Random(seed)
    while True:
        n = rng.choice(n_choices)
        pieces = rng.randint(1, 3)
        inner = sorted(rng.sample(range(1, 16), pieces - 1))
        breaks = [Fraction(0)] + [Fraction(t, 16) for t in inner] + [Fraction(1)]
        node = [Fraction(rng.randint(13, 45), 64) for _ in breaks]
        coeffs = []
        for p in range(pieces):
            mid = Fraction(rng.randint(13, 45), 64)
            coeffs.append(quadratic_through(breaks[p], breaks[p + 1], node[p], mid, node[p + 1]))
        sf = ScalingFunction.from_pieces(breaks, coeffs)
        knots = [Fraction(i, n) for i in range(n + 1)]
        values = [Fraction(rng.randint(-8, 8), 4) for _ in knots]
        problem = InterpolationProblem.create(knots, values, sf)
        rep = validate(problem)
        if rep.positive and rep.contractive and not rep.collinear:
            return problem


@pytest.fixture(scope="session")
def example_system():
    return normalize(example_problem())


@pytest.fixture(scope="session")
def constant_system():
    return normalize(constant_problem())


@pytest.fixture(scope="session")
def collinear_system():
    return normalize(example_problem(("0", "1", "2", "3")))
