"""A constant scaling function: the dimension has a closed form.

With S = c and N maps the sum function is the constant N c, so the box dimension is
1 + log(N c) / log N whenever N c > 1 and the data are not collinear. This script
compares that value with the verdict and with box counting for several c.
"""

from __future__ import annotations

import math
from fractions import Fraction

from fifdim import (InterpolationProblem, ScalingFunction, VerdictOptions,
                    dimension_verdict, normalize)

knots = ["0", "1/3", "2/3", "1"]
values = ["0", "1", "1", "0"]
opts = VerdictOptions(grid_level=14, slope_window=(4, 8))

print("   c   closed form   verdict      slope")
for c in ("1/5", "2/5", "1/2", "3/5", "4/5"):
    system = normalize(InterpolationProblem.create(knots, values, ScalingFunction.constant(c)))
    rep = dimension_verdict(system, opts)
    nc = 3 * float(Fraction(c))
    closed = 1 + math.log(nc) / math.log(3) if nc > 1 else 1.0
    slope = rep.empirical.slope if rep.empirical else float("nan")
    print(f"{c:>4}   {closed:.6f}     {rep.verdict.value:<9} {slope:.4f}")

# Below N c = 1 the verdict is dimension 1;
# above it the slope tracks the closed form, approaching it from below as k grows.
