"""Covariate software-reliability-growth models over interval failure counts.

The expected cumulative failure count after interval t is

    m(t) = omega * sum_{l<=t} (1 - (1-h(l))^g_l) * prod_{s<l} (1-h(s))^g_s

with ``h`` a discrete hazard from a small family catalog and
``g_l = exp(x_l' beta)`` the covariate link.  Interval counts are modeled
as independent Poisson draws of the increments m(t) - m(t-1); fits use a
chronological 90/10 split and report the held-out mean absolute error of
predicted cumulative counts.

Only the geometric hazard has a canonical form; the remaining families
(nb2, dw2, dw3, s, tl) follow common conventions from the covariate SRGM
literature and are implementation choices:

=======  ==================  =============================================
family   parameters          hazard h(l), l = 1, 2, ...
=======  ==================  =============================================
gm       b in (0,1)          b
nb2      b in (0,1)          l b^2 / (1 + b (l-1))
dw2      b in (0,1)          1 - b^(2l-1)
dw3      b > 0, c > 0        1 - exp(-c l^b)
s        p, b in (0,1)       p (1 - b^l)
tl       c > 0, d > 0        (1 - e^(-1/c)) / (1 + e^(-(l-d)/c))
=======  ==================  =============================================
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .recurrent import _maximize

# parameter names and constraint type per family ("unit" = (0,1), "pos" = > 0)
HAZARD_FAMILIES = {
    "gm": (("b", "unit"),),
    "nb2": (("b", "unit"),),
    "dw2": (("b", "unit"),),
    "dw3": (("b", "pos"), ("c", "pos")),
    "s": (("p", "unit"), ("b", "unit")),
    "tl": (("c", "pos"), ("d", "pos")),
}


@dataclass(frozen=True)
class DiscreteHazard:
    """Discrete hazard h(l) in (0, 1) for integer intervals l >= 1."""

    family: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.family not in HAZARD_FAMILIES:
            raise ValueError(f"unknown hazard family {self.family!r}")
        spec = HAZARD_FAMILIES[self.family]
        params = tuple(float(v) for v in self.params)
        if len(params) != len(spec):
            raise ValueError(f"{self.family} takes {len(spec)} parameters, got {len(params)}")
        for value, (name, kind) in zip(params, spec):
            if kind == "unit" and not 0 < value < 1:
                raise ValueError(f"{self.family}: {name} must lie in (0, 1)")
            if kind == "pos" and value <= 0:
                raise ValueError(f"{self.family}: {name} must be positive")
        object.__setattr__(self, "params", params)

    def __call__(self, steps):
        l = np.asarray(steps, dtype=float)
        if np.any(l < 1):
            raise ValueError("hazard is defined for intervals l >= 1")
        p = self.params
        if self.family == "gm":
            out = np.full_like(l, p[0])
        elif self.family == "nb2":
            b = p[0]
            out = l * b * b / (1.0 + b * (l - 1.0))
        elif self.family == "dw2":
            out = 1.0 - p[0] ** (2.0 * l - 1.0)
        elif self.family == "dw3":
            b, c = p
            out = 1.0 - np.exp(-c * l**b)
        elif self.family == "s":
            out = p[0] * (1.0 - p[1] ** l)
        else:  # tl
            c, d = p
            out = (1.0 - np.exp(-1.0 / c)) / (1.0 + np.exp(-(l - d) / c))
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class IntervalCountSeries:
    """Failure counts per testing interval with a named covariate matrix."""

    counts: np.ndarray
    covariates: np.ndarray
    covariate_names: tuple[str, ...]
    performance: np.ndarray | None = None

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=float)
        if counts.ndim != 1 or len(counts) < 2:
            raise ValueError("need at least two intervals of counts")
        if np.any(counts < 0) or np.any(counts != np.round(counts)):
            raise ValueError("counts must be non-negative integers")
        X = np.asarray(self.covariates, dtype=float)
        if X.size == 0:
            X = np.zeros((len(counts), 0))
        if X.ndim != 2 or X.shape[0] != len(counts):
            raise ValueError("covariate matrix must have one row per interval")
        names = tuple(self.covariate_names)
        if len(names) != X.shape[1]:
            raise ValueError("one name per covariate column is required")
        if len(set(names)) != len(names):
            raise ValueError("covariate names must be unique")
        if self.performance is not None:
            r = np.asarray(self.performance, dtype=float)
            if r.shape != counts.shape:
                raise ValueError("performance series must align with counts")
            object.__setattr__(self, "performance", r)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "covariates", X)
        object.__setattr__(self, "covariate_names", names)

    @property
    def n_steps(self) -> int:
        return len(self.counts)


def covariate_link(x, beta):
    """exp(x' beta); the covariate multiplier applied to the hazard exponent."""
    x = np.asarray(x, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if x.ndim == 1 and len(x) != len(beta):
        raise ValueError(f"covariate row has {len(x)} entries but beta has {len(beta)}")
    if x.ndim == 2 and x.shape[1] != len(beta):
        raise ValueError(f"covariate matrix has {x.shape[1]} columns but beta has {len(beta)}")
    out = np.exp(x @ beta)
    return out if np.ndim(out) else float(out)


def mean_value_increments(omega, hazard: DiscreteHazard, beta, covariates, t: int):
    """Per-interval increments of the mean value function for l = 1..t."""
    if t < 1:
        raise ValueError("t must be at least 1")
    beta = np.asarray(beta, dtype=float)
    if beta.size:
        X = np.asarray(covariates, dtype=float)
        if X.shape[0] < t:
            raise ValueError("covariates must cover intervals 1..t")
        g = np.exp(X[:t] @ beta)
    else:
        g = np.ones(t)
    h = hazard(np.arange(1, t + 1))
    h = np.atleast_1d(h)
    # saturating families can round h onto 1.0 at late intervals; that is
    # the valid limit where the remaining mass collapses into one step
    if np.any(h <= 0) or np.any(h > 1):
        raise ValueError("hazard must lie strictly in (0, 1) over 1..t")
    q = (1.0 - h) ** g
    prior = np.concatenate([[1.0], np.cumprod(q)[:-1]])
    return omega * (1.0 - q) * prior


def mean_value(omega, hazard: DiscreteHazard, beta, covariates, t: int) -> float:
    """Expected cumulative failures through interval t."""
    return float(np.sum(mean_value_increments(omega, hazard, beta, covariates, t)))


@dataclass(frozen=True)
class SRGMFit:
    """Fitted reliability-growth model with holdout diagnostics."""

    omega: float
    hazard: DiscreteHazard
    beta: dict[str, float]
    log_lik: float
    aic: float
    converged: bool
    iterations: int
    n_fit: int
    holdout_mae: float
    fitted: np.ndarray
    trace: tuple[tuple[str, float], ...] = ()

    def selected(self) -> tuple[str, ...]:
        return tuple(self.beta)


def _transforms(family):
    kinds = [kind for _, kind in HAZARD_FAMILIES[family]]

    def pack(params):
        out = []
        for value, kind in zip(params, kinds):
            out.append(np.log(value / (1.0 - value)) if kind == "unit" else np.log(value))
        return np.asarray(out)

    def unpack(z):
        out = []
        for value, kind in zip(z, kinds):
            out.append(1.0 / (1.0 + np.exp(-value)) if kind == "unit" else np.exp(value))
        return tuple(out)

    return pack, unpack, len(kinds)


_HAZARD_SEEDS = {
    "gm": (0.1,),
    "nb2": (0.1,),
    "dw2": (0.95,),
    "dw3": (1.0, 0.05),
    "s": (0.3, 0.8),
    "tl": (2.0, 3.0),
}


def fit_srgm(series: IntervalCountSeries, hazard_family: str, *, covariates=None,
             split: float = 0.9, multistarts: int = 3, tolerance: float = 1e-9,
             max_iter: int = 4000) -> SRGMFit:
    """Fit by grouped-count Poisson likelihood on the first ``split`` of steps.

    The scale ``omega`` is profiled out (its conditional MLE is total
    observed failures over the unit-scale mean mass), and the remaining
    hazard and covariate parameters are optimized on transformed scales.
    Cumulative counts are predicted on the remaining steps and summarized
    as ``holdout_mae``.

    Raises
    ------
    ValueError
        If fewer than five steps are available, the fitting window has no
        failures, or a requested covariate column is constant (its effect
        is confounded with the scale and not identifiable).
    """
    T = series.n_steps
    if T < 5:
        raise ValueError("need at least five intervals to fit and hold out")
    if hazard_family not in HAZARD_FAMILIES:
        raise ValueError(f"unknown hazard family {hazard_family!r}")
    if covariates is None:
        covariates = series.covariate_names
    covariates = tuple(covariates)
    missing = [c for c in covariates if c not in series.covariate_names]
    if missing:
        raise ValueError(f"unknown covariates: {missing}")
    cols = [series.covariate_names.index(c) for c in covariates]
    X = series.covariates[:, cols]
    n_fit = int(np.floor(split * T))
    n_fit = max(2, min(T - 1 if split < 1 else T, n_fit))
    constant = [c for j, c in enumerate(covariates) if np.ptp(X[:n_fit, j]) == 0]
    if constant:
        raise ValueError(
            f"non-identifiable covariate column(s) {constant}: constant over the "
            "fitting window, confounded with the scale"
        )
    counts_fit = series.counts[:n_fit]
    n_total = float(counts_fit.sum())
    if n_total == 0:
        raise ValueError("no failures in the fitting window")
    pack, unpack, k_h = _transforms(hazard_family)
    q = X.shape[1]
    lgam = float(np.sum(gammaln(counts_fit + 1.0)))

    def negloglik(z):
        # beyond +-30 the logit transform rounds onto the (0, 1) boundary
        if np.any(np.abs(z) > 30):
            return np.inf
        beta = z[k_h:]
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            try:
                hazard = DiscreteHazard(hazard_family, unpack(z[:k_h]))
                s = mean_value_increments(1.0, hazard, beta, X, n_fit)
            except ValueError:
                return np.inf
            if np.any(~np.isfinite(s)) or np.any(s < 0):
                return np.inf
            # an underflowed increment only rules the model out where a
            # failure was actually observed in that interval
            if np.any((s == 0) & (counts_fit > 0)):
                return np.inf
            mass = float(np.sum(s))
            if mass <= 0:
                return np.inf
            omega = n_total / mass
            pos = s > 0
            ll = float(np.dot(counts_fit[pos], np.log(s[pos]))) \
                + n_total * np.log(omega) - n_total - lgam
        return -ll if np.isfinite(ll) else np.inf

    seed = np.concatenate([pack(_HAZARD_SEEDS[hazard_family]), np.zeros(q)])
    starts = [seed]
    jitter = np.random.default_rng(777)
    for _ in range(max(0, multistarts - 1)):
        starts.append(seed + jitter.normal(0.0, 0.4, size=len(seed)))
    fun, z_hat, ok, iters = _maximize(negloglik, starts, tolerance, max_iter)
    hazard = DiscreteHazard(hazard_family, unpack(z_hat[:k_h]))
    beta_vec = z_hat[k_h:]
    s = mean_value_increments(1.0, hazard, beta_vec, X, n_fit)
    omega = n_total / float(np.sum(s))
    log_lik = -fun
    k = 1 + k_h + q
    fitted = np.cumsum(mean_value_increments(omega, hazard, beta_vec, X, T))
    observed_cum = np.cumsum(series.counts)
    if n_fit < T:
        holdout_mae = float(np.mean(np.abs(fitted[n_fit:] - observed_cum[n_fit:])))
    else:
        holdout_mae = float("nan")
    return SRGMFit(
        omega=float(omega),
        hazard=hazard,
        beta=dict(zip(covariates, beta_vec)),
        log_lik=log_lik,
        aic=2 * k - 2 * log_lik,
        converged=ok,
        iterations=iters,
        n_fit=n_fit,
        holdout_mae=holdout_mae,
        fitted=fitted,
    )


def forward_stepwise(series: IntervalCountSeries, hazard_family: str,
                     candidates=None, **options) -> SRGMFit:
    """Greedy covariate selection by AIC on the fitting window.

    Starting from the covariate-free fit, the candidate whose addition
    most improves AIC is accepted, until no addition improves.  The trace
    records ("", base AIC) followed by one (name, AIC) entry per accepted
    covariate; holdout MAE is reported for the final model but never used
    for selection.
    """
    if candidates is None:
        candidates = series.covariate_names
    candidates = list(candidates)
    best = fit_srgm(series, hazard_family, covariates=(), **options)
    trace = [("", best.aic)]
    selected: list[str] = []
    remaining = list(candidates)
    while remaining:
        round_best = None
        for cand in remaining:
            try:
                fit = fit_srgm(series, hazard_family, covariates=(*selected, cand), **options)
            except (ValueError, RuntimeError):
                continue
            if round_best is None or fit.aic < round_best[1].aic:
                round_best = (cand, fit)
        if round_best is None or round_best[1].aic >= best.aic - 1e-9:
            break
        selected.append(round_best[0])
        remaining.remove(round_best[0])
        best = round_best[1]
        trace.append((round_best[0], best.aic))
    return SRGMFit(
        omega=best.omega, hazard=best.hazard, beta=best.beta, log_lik=best.log_lik,
        aic=best.aic, converged=best.converged, iterations=best.iterations,
        n_fit=best.n_fit, holdout_mae=best.holdout_mae, fitted=best.fitted,
        trace=tuple(trace),
    )


@dataclass(frozen=True)
class ResilienceFit:
    """Least-squares model of per-interval performance changes."""

    form: str
    intercept: float
    coef: dict[str, float]
    trace: tuple[tuple[str, float], ...]
    reconstructed: np.ndarray
    holdout_mae: float
    baseline_mae: float
    n_fit: int

    def selected(self) -> tuple[str, ...]:
        return tuple(self.coef)


def _expand_features(X, names, form: str, degree: int):
    cols = [X[:, j] for j in range(X.shape[1])]
    out_cols = list(cols)
    out_names = list(names)
    if form == "interactions":
        for i in range(len(cols)):
            for j in range(i + 1, len(cols)):
                out_cols.append(cols[i] * cols[j])
                out_names.append(f"{names[i]}:{names[j]}")
    elif form == "poly":
        for power in range(2, degree + 1):
            for j, name in enumerate(names):
                out_cols.append(cols[j] ** power)
                out_names.append(f"{name}^{power}")
    elif form != "linear":
        raise ValueError(f"unknown model form {form!r}")
    matrix = np.column_stack(out_cols) if out_cols else np.zeros((X.shape[0], 0))
    return matrix, out_names


def _ols_aic(X, y):
    n = len(y)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    rss = float(resid @ resid)
    sigma2 = max(rss / n, 1e-300)
    return coef, n * np.log(sigma2) + 2 * X.shape[1]


def fit_resilience(series: IntervalCountSeries, form: str = "linear",
                   candidates=None, *, degree: int = 2, split: float = 0.9) -> ResilienceFit:
    """Regress performance changes on covariates and rebuild the trajectory.

    The response is ``delta_r(t) = r(t) - r(t-1)`` for t = 2..T; features
    are the chosen form's expansion of the covariates at step t, selected
    forward by AIC on the chronological fitting window (an intercept is
    always included).  The trajectory estimate anchors at r(1) and sums
    fitted changes, so the reconstruction identity holds exactly.
    """
    if series.performance is None:
        raise ValueError("series has no performance column")
    r = series.performance
    T = series.n_steps
    if candidates is None:
        candidates = series.covariate_names
    cols = [series.covariate_names.index(c) for c in candidates]
    X_raw = series.covariates[:, cols]
    features, feature_names = _expand_features(X_raw[1:], list(candidates), form, degree)
    dr = np.diff(r)
    n_rows = len(dr)
    n_fit = max(1, min(n_rows, int(np.floor(split * T)) - 1))
    if n_fit < 1:
        raise ValueError("fitting window is empty")

    def design(selected_idx, rows):
        parts = [np.ones(len(rows))]
        for j in selected_idx:
            parts.append(features[rows, j])
        return np.column_stack(parts)

    fit_rows = np.arange(n_fit)
    coef, aic = _ols_aic(design([], fit_rows), dr[fit_rows])
    selected: list[int] = []
    trace = [("", aic)]
    remaining = list(range(features.shape[1]))
    while remaining:
        round_best = None
        for j in remaining:
            cand_design = design(selected + [j], fit_rows)
            if cand_design.shape[0] <= cand_design.shape[1]:
                continue
            if np.linalg.matrix_rank(cand_design) < cand_design.shape[1]:
                continue
            c, a = _ols_aic(cand_design, dr[fit_rows])
            if round_best is None or a < round_best[2]:
                round_best = (j, c, a)
        if round_best is None or round_best[2] >= aic - 1e-9:
            break
        selected.append(round_best[0])
        remaining.remove(round_best[0])
        coef, aic = round_best[1], round_best[2]
        trace.append((feature_names[round_best[0]], aic))

    all_rows = np.arange(n_rows)
    dr_hat = design(selected, all_rows) @ coef
    reconstructed = np.concatenate([[r[0]], r[0] + np.cumsum(dr_hat)])
    # intercept-only reference reconstruction for the same split
    base_coef, _ = _ols_aic(design([], fit_rows), dr[fit_rows])
    base_rec = np.concatenate([[r[0]], r[0] + np.cumsum(np.full(n_rows, base_coef[0]))])
    if n_fit < n_rows:
        hold = np.arange(n_fit + 1, T)
        holdout_mae = float(np.mean(np.abs(reconstructed[hold] - r[hold])))
        baseline_mae = float(np.mean(np.abs(base_rec[hold] - r[hold])))
    else:
        holdout_mae = baseline_mae = float("nan")
    return ResilienceFit(
        form=form,
        intercept=float(coef[0]),
        coef={feature_names[j]: float(v) for j, v in zip(selected, coef[1:])},
        trace=tuple(trace),
        reconstructed=reconstructed,
        holdout_mae=holdout_mae,
        baseline_mae=baseline_mae,
        n_fit=n_fit,
    )
