"""Cheap estimates of rho_S from sampled matrices.

Sampling |S| at one point per cell gives a matrix T_k whose spectral radius lies
between rho(M'_k) and rho(M_k); the three sampling rules differ by O(N^-k).
"""

from __future__ import annotations

from fifdim import (SampleRule, build_sampled_matrix, load_config, normalize, rho_bracket,
                    spectral_radius)

system = normalize(load_config("example5_1").problem)

print("  k   lower      left       mid        right      upper")
for k in range(1, 8):
    b = rho_bracket(system, k)
    sampled = [spectral_radius(build_sampled_matrix(system, k, rule)).radius
               for rule in (SampleRule.LEFT, SampleRule.MIDPOINT, SampleRule.RIGHT)]
    print(f"{k:3d}  {b.lower:.6f}  " + "  ".join(f"{r:.6f}" for r in sampled)
          + f"  {b.upper:.6f}")

# The certified width bound C lambda_S N^(-k-1) rho(M'_k) shrinks by a factor N per level.
for k in (1, 4, 7):
    b = rho_bracket(system, k)
    print(f"k = {k}: width {b.width:.3e} <= bound {b.width_bound:.3e}")
