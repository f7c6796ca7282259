"""Fit the mixture model to the robustness experiments and map the surface.

Per scenario, fit both responses (mean AUC and log SD of AUC), report
the coefficient sets, and evaluate the fitted surface on a barycentric
lattice for each algorithm/source flag combination; the grid rows are
what a contour plot of the simplex would consume.

    python3 demos/mixture_robustness_surface.py
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from aireliab import datasets, regression

DATA = Path(__file__).resolve().parents[1] / "data"

records = datasets.load(DATA / "mixture-robustness" / "mixture.csv", "mixture")
print(f"{len(records)} experimental runs loaded\n")

for scenario in regression.SCENARIOS:
    fit_mean = regression.fit_mixture(records, "y1", scenario=scenario)
    fit_sd = regression.fit_mixture(records, "y2", scenario=scenario)
    print(f"=== scenario {scenario} ({fit_mean.n} runs) ===")
    print(f"  residual SD: y1 {fit_mean.resid_sd:.4f}, y2 {fit_sd.resid_sd:.4f}")
    main = {t: c for t, c in fit_mean.coef_dict().items() if ":" not in t}
    print(f"  y1 vertex responses: " +
          ", ".join(f"{t}={v:.3f}" for t, v in main.items()))

    for z1 in (0, 1):
        for z2 in (0, 1):
            table = regression.predict_simplex_grid(fit_mean, [z1, z2], 24)
            peak = table[np.argmax(table[:, 3])]
            print(f"  z1={z1} z2={z2}: predicted mean AUC peaks at "
                  f"x=({peak[0]:.2f}, {peak[1]:.2f}, {peak[2]:.2f}) "
                  f"with {peak[3]:.3f}")
    print()

fit = regression.fit_mixture(records, "y1", scenario="c1")
grid = regression.predict_simplex_grid(fit, [1, 0], 6)
print("sample contour-grid rows (x1, x2, x3, yhat) at z=(1,0), scenario c1:")
for row in grid[:6]:
    print("  " + ", ".join(f"{v:.4f}" for v in row))
print(f"  ... {len(grid)} lattice points in total")
