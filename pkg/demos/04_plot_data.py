"""Export graph samples for plotting, without depending on a plotting library.

Writes ``fif_graph.csv`` (x, f, error_bound) next to this script; any plotting tool
can draw it. The same data is what ``fifdim sample`` emits.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from fifdim import evaluate_grid, load_config, normalize

cfg = load_config("example5_1")
system = normalize(cfg.problem)
grid = evaluate_grid(system, 8)

# The example has y_0 = y_N = 0, so the normalized values are already f itself.
out = Path(__file__).with_name("fif_graph.csv")
np.savetxt(out, np.column_stack([grid.x, grid.values, np.full(grid.size, grid.error_bound)]),
           delimiter=",", header="x,f,error_bound", comments="", fmt="%.17g")
print(f"wrote {grid.size} points to {out}")
print(f"max f = {grid.values.max():.6f} at x = {grid.x[grid.values.argmax()]:.6f}")
print(f"every value is within {grid.error_bound:.1e} of the true function")

# A coarse text rendering: the column maxima over 60 bins.
bins = np.array_split(grid.values, 60)
top = max(b.max() for b in bins)
for level in np.linspace(top, 0, 12):
    print("".join("#" if b.max() >= level else " " for b in bins))
