"""Space-filling design generation and accelerated-life-test transforms.

Latin hypercube designs place each factor's n levels at the cell
midpoints (2i - 1) / (2n) and are scored by the distance-reciprocal
criterion

    phi(D) = ( sum_{i<j} d(x_i, x_j)^(-k) )^(1/k)

with d the Minkowski m-norm over the factor coordinates; smaller is
better and the minimizer approaches the maximin-distance design as k
grows.  The search anneals over within-column swaps, which preserve the
Latin hypercube marginals by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from ._rng import make_rng

# Boltzmann constant in eV per Kelvin, as conventionally used in the
# Arrhenius rate model.
BOLTZMANN_EV = 8.617385e-5


@dataclass(frozen=True)
class LatinHypercube:
    """n points in [0, 1]^p whose columns are permutations of level midpoints."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] < 2 or m.shape[1] < 1:
            raise ValueError("design must be an n x p matrix with n >= 2")
        levels = lh_levels(m.shape[0])
        for j in range(m.shape[1]):
            if not np.allclose(np.sort(m[:, j]), levels, atol=1e-12, rtol=0):
                raise ValueError(f"column {j} is not a permutation of the level midpoints")
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def p(self) -> int:
        return self.matrix.shape[1]


def lh_levels(n: int) -> np.ndarray:
    """Cell midpoints (2i - 1) / (2n) for i = 1..n."""
    return (2.0 * np.arange(1, n + 1) - 1.0) / (2.0 * n)


def phi_criterion(design, k: int = 15, m: float = 2.0) -> float:
    """Distance-reciprocal space-filling criterion; smaller is better."""
    pts = design.matrix if isinstance(design, LatinHypercube) else np.asarray(design, float)
    if pts.shape[0] < 2:
        raise ValueError("need at least two design points")
    if k < 1 or m < 1:
        raise ValueError("criterion power k and distance power m must be >= 1")
    d = pdist(pts, "minkowski", p=m)
    if np.any(d == 0):
        raise ValueError("duplicate design rows: criterion is infinite")
    return float(np.sum(d ** (-float(k))) ** (1.0 / k))


@dataclass(frozen=True)
class SearchResult:
    design: LatinHypercube
    criterion: float
    trace: np.ndarray
    seed: int
    budget: int
    accepted: int


def random_latin_hypercube(n: int, p: int, rng) -> np.ndarray:
    levels = lh_levels(n)
    return np.column_stack([rng.permutation(levels) for _ in range(p)])


def search_mmlhd(n: int, p: int, *, k: int = 15, m: float = 2.0, seed: int = 0,
                 budget: int = 10_000) -> SearchResult:
    """Simulated-annealing search for a small-phi Latin hypercube design.

    Moves swap two entries within one column.  The initial temperature is
    calibrated on probe moves so roughly 40% of early uphill moves are
    accepted, then cools geometrically to a fraction 1e-6 of itself over
    the budget.  Deterministic for a given seed.

    Returns the best design visited together with the non-increasing
    best-so-far criterion trace (one entry per proposal, plus the start).
    """
    if n < 2 or p < 1:
        raise ValueError("need n >= 2 runs and p >= 1 factors")
    if budget <= 0:
        raise ValueError("search budget must be positive")
    rng = make_rng(seed)
    current = random_latin_hypercube(n, p, rng)
    phi_cur = phi_criterion(current, k, m)

    def propose():
        col = int(rng.integers(p))
        i, j = rng.choice(n, size=2, replace=False)
        return col, int(i), int(j)

    # probe uphill move sizes from the start point to set the temperature
    uphill = []
    for _ in range(min(200, max(20, budget // 20))):
        col, i, j = propose()
        current[[i, j], col] = current[[j, i], col]
        delta = phi_criterion(current, k, m) - phi_cur
        current[[i, j], col] = current[[j, i], col]
        if delta > 0:
            uphill.append(delta)
    t0 = float(np.median(uphill)) / np.log(1.0 / 0.4) if uphill else 1e-3 * max(phi_cur, 1.0)
    cool = (1e-6) ** (1.0 / budget)

    best = current.copy()
    phi_best = phi_cur
    trace = np.empty(budget + 1)
    trace[0] = phi_best
    temperature = t0
    accepted = 0
    for step in range(budget):
        col, i, j = propose()
        current[[i, j], col] = current[[j, i], col]
        phi_new = phi_criterion(current, k, m)
        delta = phi_new - phi_cur
        if delta <= 0 or rng.random() < np.exp(-delta / max(temperature, 1e-300)):
            phi_cur = phi_new
            accepted += 1
            if phi_cur < phi_best:
                phi_best = phi_cur
                best = current.copy()
        else:
            current[[i, j], col] = current[[j, i], col]  # undo
        temperature *= cool
        trace[step + 1] = phi_best
    design = LatinHypercube(best)  # validates the marginal invariant
    return SearchResult(design, phi_best, trace, int(seed), int(budget), accepted)


def acceleration_factor(*, life_normal: float | None = None,
                        life_accelerated: float | None = None,
                        activation_energy: float | None = None,
                        temp_use: float | None = None,
                        temp_stress: float | None = None) -> float:
    """Acceleration factor from lifetimes or from the Arrhenius model.

    Either give both lifetimes (factor = life_normal / life_accelerated)
    or the Arrhenius inputs: activation energy in eV and use/stress
    temperatures in Kelvin, giving
    exp[(E_a / k_B)(1 / T_use - 1 / T_stress)]; the rate prefactor
    cancels in the ratio.
    """
    life_args = (life_normal, life_accelerated)
    arrh_args = (activation_energy, temp_use, temp_stress)
    if all(v is not None for v in life_args) and all(v is None for v in arrh_args):
        if life_normal <= 0 or life_accelerated <= 0:
            raise ValueError("lifetimes must be positive")
        return float(life_normal) / float(life_accelerated)
    if all(v is not None for v in arrh_args) and all(v is None for v in life_args):
        if activation_energy <= 0 or temp_use <= 0 or temp_stress <= 0:
            raise ValueError("activation energy and temperatures must be positive")
        return float(np.exp(activation_energy / BOLTZMANN_EV * (1.0 / temp_use - 1.0 / temp_stress)))
    raise ValueError(
        "give either (life_normal, life_accelerated) or "
        "(activation_energy, temp_use, temp_stress)"
    )


def transform_cdf(stress_cdf, factor: float, grid) -> np.ndarray:
    """Normal-condition CDF values F0(t) = Fs(t / factor) on a time grid."""
    grid = np.asarray(grid, dtype=float)
    if factor <= 0:
        raise ValueError("acceleration factor must be positive")
    if grid.ndim != 1 or np.any(np.diff(grid) < 0):
        raise ValueError("grid must be an ascending 1-D array")
    scaled = grid / factor
    try:
        values = np.asarray(stress_cdf(scaled), dtype=float)
        if values.shape != scaled.shape:
            raise TypeError
    except TypeError:
        values = np.array([float(stress_cdf(t)) for t in scaled])
    return values
