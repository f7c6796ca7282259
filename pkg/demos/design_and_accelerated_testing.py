"""Space-filling designs and accelerated-life-test arithmetic.

Searches maximin Latin hypercube designs at a few sizes, shows the
annealing trace shrinking the distance-reciprocal criterion, and works
through the acceleration-factor identities, including mapping a stressed
lifetime distribution back to use conditions.

    python3 demos/design_and_accelerated_testing.py
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from scipy.stats import weibull_min

from aireliab import design

print("=== maximin Latin hypercube search ===")
for n, p in ((6, 2), (10, 3), (20, 5)):
    result = design.search_mmlhd(n, p, seed=7, budget=5000)
    start, end = result.trace[0], result.trace[-1]
    print(f"  n={n:>2} p={p}: criterion {start:.4f} -> {end:.4f} "
          f"({result.accepted} accepted moves)")

result = design.search_mmlhd(8, 2, seed=1, budget=8000)
print("\nbest 8x2 design (levels are cell midpoints):")
for row in result.design.matrix:
    print("   " + "  ".join(f"{v:.4f}" for v in row))
min_dist = min(
    np.linalg.norm(a - b)
    for i, a in enumerate(result.design.matrix)
    for b in result.design.matrix[i + 1:]
)
print(f"criterion {result.criterion:.4f}; minimum pairwise distance {min_dist:.4f}")

print("\n=== acceleration factors ===")
af_life = design.acceleration_factor(life_normal=1000.0, life_accelerated=20.0)
print(f"lifetime ratio 1000/20 -> factor {af_life:g}")
af_arr = design.acceleration_factor(activation_energy=0.7, temp_use=300.0,
                                    temp_stress=350.0)
print(f"Arrhenius (0.7 eV, 300 K use, 350 K stress) -> factor {af_arr:.2f}")
print(f"reciprocal check: forward * backward = "
      f"{af_life * design.acceleration_factor(life_normal=20.0, life_accelerated=1000.0):.12f}")

print("\n=== stretching a stressed CDF back to use conditions ===")
stressed = lambda t: weibull_min.cdf(t, 2.0, scale=50.0)
grid = np.array([25.0, 50.0, 100.0, 200.0, 400.0])
use = design.transform_cdf(stressed, af_arr, grid)
print("hours   F_stress   F_use")
for t, f_use in zip(grid, use):
    print(f"{t:6.0f}   {stressed(t):8.4f}   {f_use:7.5f}")
print(f"\nat factor {af_arr:.1f}, failures that take 50 stressed hours "
      f"correspond to {50 * af_arr:.0f} hours in the field")
