"""Recurrent-event models with exposure adjustment.

Events for unit i follow a Poisson process with intensity
``lambda_i(t) = lambda0(t; theta) * x_i(t)``, where ``lambda0`` is a
parametric baseline intensity shared by all units and ``x_i`` is the
unit's piecewise-constant daily exposure.  Supported baseline families:

==================  ==========================  =====================================
family              parameters (all > 0)        cumulative baseline
==================  ==========================  =====================================
hpp                 (rate,)                     rate * t
power_law           (shape, scale)              (t / scale) ** shape
weibull_growth      (t1, t2, t3)                t1 * (1 - exp(-t2 * t**t3))
gompertz            (t1, t2, t3)                t1 * (exp(-t2 e^{-t3 t}) - exp(-t2))
musa_okumoto        (t1, t2)                    t1 * log(1 + t2 * t)
==================  ==========================  =====================================

The gompertz and musa_okumoto forms are the conventional software
reliability growth shapes, rescaled so the cumulative baseline starts at
zero.  Log-likelihoods use the fact that exposure is piecewise constant,
so each unit's compensator reduces to rate-weighted differences of the
cumulative baseline at segment boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .datasets.exposure import ExposureSchedule, sum_schedules

FAMILY_PARAMS = {
    "hpp": ("rate",),
    "power_law": ("shape", "scale"),
    "weibull_growth": ("theta1", "theta2", "theta3"),
    "gompertz": ("theta1", "theta2", "theta3"),
    "musa_okumoto": ("theta1", "theta2"),
}

FAMILIES = tuple(FAMILY_PARAMS)


class DataInconsistencyError(ValueError):
    """An observed event is impossible under the data (zero exposure)."""


@dataclass(frozen=True)
class BaselineIntensityModel:
    """Tagged parametric baseline intensity with positive parameters."""

    family: str
    theta: tuple[float, ...]

    def __post_init__(self):
        if self.family not in FAMILY_PARAMS:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        theta = tuple(float(v) for v in self.theta)
        if len(theta) != len(FAMILY_PARAMS[self.family]):
            raise ValueError(
                f"{self.family} takes {len(FAMILY_PARAMS[self.family])} parameters, got {len(theta)}"
            )
        if not all(np.isfinite(v) and v > 0 for v in theta):
            raise ValueError(f"{self.family} parameters must be positive and finite: {theta}")
        object.__setattr__(self, "theta", theta)


def baseline_intensity(model: BaselineIntensityModel, t):
    """Baseline intensity lambda0(t) for t > 0 (scalar or array)."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("baseline intensity requires t > 0")
    th = model.theta
    if model.family == "hpp":
        out = np.full_like(t, th[0])
    elif model.family == "power_law":
        shape, scale = th
        out = (shape / scale) * (t / scale) ** (shape - 1.0)
    elif model.family == "weibull_growth":
        t1, t2, t3 = th
        out = t1 * t2 * t3 * t ** (t3 - 1.0) * np.exp(-t2 * t**t3)
    elif model.family == "gompertz":
        t1, t2, t3 = th
        u = t2 * np.exp(-t3 * t)
        out = t1 * t3 * u * np.exp(-u)
    else:  # musa_okumoto
        t1, t2 = th
        out = t1 * t2 / (1.0 + t2 * t)
    return out if out.ndim else float(out)


def cumulative_baseline(model: BaselineIntensityModel, t):
    """Cumulative baseline intensity Lambda0(t) for t >= 0 (closed form)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("cumulative baseline requires t >= 0")
    th = model.theta
    if model.family == "hpp":
        out = th[0] * t
    elif model.family == "power_law":
        shape, scale = th
        out = (t / scale) ** shape
    elif model.family == "weibull_growth":
        t1, t2, t3 = th
        out = t1 * -np.expm1(-t2 * t**t3)
    elif model.family == "gompertz":
        # exp(-t2 u) - exp(-t2) with u = exp(-t3 t), written to stay
        # accurate when t2 is small
        t1, t2, t3 = th
        u = np.exp(-t3 * t)
        out = t1 * np.exp(-t2) * np.expm1(t2 * (1.0 - u))
    else:  # musa_okumoto
        t1, t2 = th
        out = t1 * np.log1p(t2 * t)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class EventSeries:
    """Event times for one unit over (0, tau] with its exposure schedule."""

    unit_id: str
    event_times: np.ndarray
    tau: float
    exposure: ExposureSchedule

    def __post_init__(self):
        times = np.asarray(self.event_times, dtype=float)
        if times.ndim != 1:
            raise ValueError("event_times must be one-dimensional")
        if np.any(np.diff(times) < 0):
            raise ValueError("event_times must be ascending (ties allowed)")
        if times.size and (times[0] <= 0 or times[-1] > self.tau + 1e-9):
            raise ValueError("event_times must lie in (0, tau]")
        if abs(self.exposure.tau - self.tau) > 1e-9:
            raise ValueError("exposure horizon does not match tau")
        object.__setattr__(self, "event_times", times)
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def n_events(self) -> int:
        return len(self.event_times)


@dataclass(frozen=True)
class RecurrentFit:
    """Fitted baseline model with likelihood diagnostics."""

    model: BaselineIntensityModel
    log_lik: float
    aic: float
    converged: bool
    iterations: int
    stderr: tuple[float, ...] | None = None
    beta: tuple[float, ...] | None = None
    covariate_names: tuple[str, ...] | None = None


class _Packed:
    """Flattened view of a unit list for fast repeated likelihood evaluation."""

    def __init__(self, units):
        units = list(units)
        if not units:
            raise ValueError("no units supplied")
        tau = units[0].tau
        if any(abs(u.tau - tau) > 1e-9 for u in units):
            raise ValueError("all units must share the same tau")
        self.tau = tau
        self.n_units = len(units)
        self.times = np.concatenate([u.event_times for u in units]) if units else np.array([])
        self.n_events = len(self.times)
        # exposure value at each event, and its fixed log-contribution
        xs = np.concatenate([np.atleast_1d(u.exposure.rate_at(u.event_times)) for u in units])
        if np.any(xs <= 0):
            bad = int(np.nonzero(xs <= 0)[0][0])
            raise DataInconsistencyError(
                f"event at t={self.times[bad]:g} has zero exposure (intensity would be zero)"
            )
        self.log_exposure_sum = float(np.sum(np.log(xs)))
        # segment table: compensator = sum rate_j * (L0(hi_j) - L0(lo_j))
        lo, hi, rate, unit_idx = [], [], [], []
        for k, u in enumerate(units):
            keep = u.exposure.daily_rate > 0
            lo.append(u.exposure.breakpoints[:-1][keep])
            hi.append(u.exposure.breakpoints[1:][keep])
            rate.append(u.exposure.daily_rate[keep])
            unit_idx.append(np.full(int(keep.sum()), k))
        self.seg_lo = np.concatenate(lo) if lo else np.array([])
        self.seg_hi = np.concatenate(hi) if hi else np.array([])
        self.seg_rate = np.concatenate(rate) if rate else np.array([])
        self.seg_unit = np.concatenate(unit_idx) if unit_idx else np.array([], dtype=int)
        self.total_exposure = float(np.dot(self.seg_rate, self.seg_hi - self.seg_lo))
        self.events_per_unit = np.array([u.n_events for u in units])

    def log_lik(self, model: BaselineIntensityModel, unit_scale=None) -> float:
        """Log-likelihood; ``unit_scale`` multiplies each unit's intensity."""
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            lam0 = baseline_intensity(model, self.times) if self.n_events else np.array([])
            if np.any(lam0 <= 0):
                return -np.inf
            event_term = float(np.sum(np.log(lam0))) + self.log_exposure_sum
            comp = self.seg_rate * (
                cumulative_baseline(model, self.seg_hi) - cumulative_baseline(model, self.seg_lo)
            )
            if unit_scale is not None:
                event_term += float(np.dot(self.events_per_unit, np.log(unit_scale)))
                comp = comp * unit_scale[self.seg_unit]
            total = event_term - float(np.sum(comp))
        return total if np.isfinite(total) else -np.inf


def log_likelihood(units, model: BaselineIntensityModel) -> float:
    """Exposure-adjusted Poisson-process log-likelihood over all units.

    Equals ``sum_i [ sum_j log(lambda0(t_ij) x_i(t_ij)) - integral_0^tau
    lambda0(s) x_i(s) ds ]``, with the integral computed exactly from the
    piecewise-constant exposure and the closed-form cumulative baseline.
    """
    return _Packed(units).log_lik(model)


def _moment_seed(family: str, packed: _Packed) -> np.ndarray:
    """Method-of-moments-flavored starting parameters."""
    tau = packed.tau
    rate = max(packed.n_events, 1) / max(packed.total_exposure, 1e-12)
    if family == "hpp":
        return np.array([rate])
    if family == "power_law":
        return np.array([1.0, 1.0 / rate])
    if family == "weibull_growth":
        # theta3 = 1, theta2 = 1/tau: average intensity over (0, tau] matches
        return np.array([rate * tau / (1.0 - np.exp(-1.0)), 1.0 / tau, 1.0])
    if family == "gompertz":
        mass = np.exp(-np.exp(-1.0)) - np.exp(-1.0)
        return np.array([rate * tau / mass, 1.0, 1.0 / tau])
    # musa_okumoto
    return np.array([rate * tau / np.log(2.0), 1.0 / tau])


def _numeric_stderr(negloglik, theta) -> tuple[float, ...] | None:
    """Standard errors from a central-difference Hessian, when it is PD."""
    k = len(theta)
    h = 1e-5 * (np.abs(theta) + 1e-8)
    hess = np.empty((k, k))
    f0 = negloglik(theta)
    if not np.isfinite(f0):
        return None
    for i in range(k):
        for j in range(i, k):
            ei = np.zeros(k)
            ej = np.zeros(k)
            ei[i] = h[i]
            ej[j] = h[j]
            if i == j:
                val = (negloglik(theta + ei) - 2 * f0 + negloglik(theta - ei)) / h[i] ** 2
            else:
                val = (
                    negloglik(theta + ei + ej)
                    - negloglik(theta + ei - ej)
                    - negloglik(theta - ei + ej)
                    + negloglik(theta - ei - ej)
                ) / (4 * h[i] * h[j])
            hess[i, j] = hess[j, i] = val
    if not np.all(np.isfinite(hess)):
        return None
    try:
        cov = np.linalg.inv(hess)
    except np.linalg.LinAlgError:
        return None
    diag = np.diag(cov)
    if np.any(diag <= 0):
        return None
    return tuple(np.sqrt(diag))


def _maximize(negloglik_z, z0_list, tol, max_iter):
    """Simplex descent per start, then quasi-Newton polish; best kept.

    The simplex stage works to ``tol`` relative in the objective; the
    L-BFGS-B polish (finite-difference gradients) sharpens the optimum.
    """
    best = None
    iterations = 0
    for z0 in z0_list:
        f0 = negloglik_z(np.asarray(z0, dtype=float))
        fatol = tol * (1.0 + (abs(f0) if np.isfinite(f0) else 1.0))
        nm_iter = min(max_iter, 250 * len(z0))
        # infinite objective values off the feasible region trip benign
        # invalid-subtract warnings inside the optimizers
        with np.errstate(invalid="ignore", over="ignore"):
            res = minimize(
                negloglik_z,
                z0,
                method="Nelder-Mead",
                options={"xatol": 1e-6, "fatol": fatol, "maxiter": nm_iter, "maxfev": 2 * nm_iter},
            )
            iterations += res.nit
            polish = minimize(
                negloglik_z,
                res.x,
                method="L-BFGS-B",
                options={"maxiter": max_iter, "ftol": tol, "gtol": 1e-10},
            )
        iterations += polish.nit
        cand = polish if polish.fun <= res.fun else res
        ok = bool(res.success or polish.success)
        if np.isfinite(cand.fun) and (best is None or cand.fun < best[0]):
            best = (cand.fun, cand.x, ok)
    if best is None:
        raise RuntimeError("likelihood evaluation failed for every start")
    return best[0], best[1], best[2], iterations


def _starts(seed_params: np.ndarray, multistarts: int) -> list[np.ndarray]:
    # fixed-seed jitter keeps fits pure functions of their inputs
    z0 = np.log(seed_params)
    starts = [z0]
    jitter = np.random.default_rng(12345)
    for _ in range(max(0, multistarts - 1)):
        starts.append(z0 + jitter.normal(0.0, 0.5, size=len(z0)))
    return starts


def fit_mle(units, family: str, *, multistarts: int = 5, tolerance: float = 1e-8,
            max_iter: int = 2000) -> RecurrentFit:
    """Maximum-likelihood fit of a baseline family to exposure-adjusted units.

    Parameters are log-reparameterized to enforce positivity; the search
    runs ``multistarts`` times from jittered moment-based seeds.  The HPP
    rate has the closed form (total events / total exposure) and is
    returned exactly.

    Parameters
    ----------
    units : sequence of EventSeries
        All units must share the same ``tau``.
    family : str
        One of ``FAMILIES``.
    multistarts, tolerance, max_iter :
        Search controls.

    Returns
    -------
    RecurrentFit
        ``converged`` reflects the optimizer's own criteria; ``aic`` is
        ``2 * n_params - 2 * log_lik``.
    """
    if family not in FAMILY_PARAMS:
        raise ValueError(f"unknown family {family!r}")
    packed = _Packed(units)
    k = len(FAMILY_PARAMS[family])

    if family == "hpp":
        if packed.total_exposure <= 0:
            raise ValueError("total exposure is zero; HPP rate undefined")
        rate = packed.n_events / packed.total_exposure
        if rate <= 0:
            raise ValueError("no events observed; HPP rate estimate is zero")
        model = BaselineIntensityModel("hpp", (rate,))
        ll = packed.log_lik(model)
        stderr = (rate / np.sqrt(packed.n_events),) if packed.n_events else None
        return RecurrentFit(model, ll, 2 * k - 2 * ll, True, 0, stderr)

    if packed.n_events == 0:
        raise ValueError(f"no events across units; cannot fit the {family} family")

    def negloglik_z(z):
        if np.any(np.abs(z) > 300):
            return np.inf
        model = BaselineIntensityModel(family, tuple(np.exp(z)))
        return -packed.log_lik(model)

    fun, z_hat, ok, iters = _maximize(
        negloglik_z, _starts(_moment_seed(family, packed), multistarts), tolerance, max_iter
    )
    theta = tuple(np.exp(z_hat))
    model = BaselineIntensityModel(family, theta)
    ll = -fun

    def negloglik_theta(th):
        if np.any(th <= 0):
            return np.inf
        return -packed.log_lik(BaselineIntensityModel(family, tuple(th)))

    stderr = _numeric_stderr(negloglik_theta, np.array(theta))
    return RecurrentFit(model, ll, 2 * k - 2 * ll, ok, iters, stderr)


def fit_manufacturer_level(event_times, fleet_exposure, family: str, **options) -> RecurrentFit:
    """Fit to manufacturer-level event times against summed fleet exposure.

    The fleet of per-vehicle processes sharing one baseline superposes to a
    single process with intensity ``lambda0(t) * X(t)`` where ``X`` is the
    summed exposure, so the fit reduces to a one-unit ``fit_mle``.
    """
    fleet = sum_schedules(fleet_exposure)
    series = EventSeries("fleet", np.asarray(event_times, dtype=float), fleet.tau, fleet)
    return fit_mle([series], family, **options)


def proportional_log_likelihood(units, covariates, model: BaselineIntensityModel,
                                beta) -> float:
    """Log-likelihood of lambda_i(t) = lambda0(t) exp(x_i' beta) x_i(t)."""
    packed = _Packed(units)
    covariates = np.atleast_2d(np.asarray(covariates, dtype=float))
    if covariates.shape[0] != packed.n_units:
        raise ValueError("one covariate row per unit is required")
    scale = np.exp(covariates @ np.asarray(beta, dtype=float))
    return packed.log_lik(model, unit_scale=scale)


def fit_proportional(units, covariates, family: str, *, names=None,
                     multistarts: int = 5, tolerance: float = 1e-8,
                     max_iter: int = 4000) -> RecurrentFit:
    """Joint fit of baseline parameters and proportional-intensity effects.

    Covariates are fixed per-unit vectors entering as ``exp(x_i' beta)``.
    A covariate that is constant across units (or any collinear set, once
    an implicit intercept column is included) is confounded with the
    baseline scale and is rejected as singular.
    """
    packed = _Packed(units)
    X = np.atleast_2d(np.asarray(covariates, dtype=float))
    if X.shape[0] != packed.n_units:
        raise ValueError("one covariate row per unit is required")
    q = X.shape[1]
    if names is None:
        names = tuple(f"x{j + 1}" for j in range(q))
    # all-zero columns contribute exp(0) = 1 regardless of beta: pin them at 0.
    # any other collinearity (with the implicit baseline-scale intercept) is a
    # genuine identifiability failure and is rejected.
    active = [j for j in range(q) if np.any(X[:, j] != 0)]
    X_act = X[:, active]
    with_intercept = np.column_stack([np.ones(X.shape[0]), X_act])
    if np.linalg.matrix_rank(with_intercept) < len(active) + 1:
        raise ValueError(
            "collinear covariates (singular information): effects are not "
            "identifiable jointly with the baseline scale"
        )
    if family not in FAMILY_PARAMS:
        raise ValueError(f"unknown family {family!r}")
    if packed.n_events == 0:
        raise ValueError("no events across units; nothing to fit")
    k_theta = len(FAMILY_PARAMS[family])

    q_act = len(active)

    def negloglik_z(z):
        if np.any(np.abs(z) > 300):
            return np.inf
        model = BaselineIntensityModel(family, tuple(np.exp(z[:k_theta])))
        scale = np.exp(X_act @ z[k_theta:]) if q_act else np.ones(packed.n_units)
        val = packed.log_lik(model, unit_scale=scale)
        return -val

    seed = np.concatenate([np.log(_moment_seed(family, packed)), np.zeros(q_act)])
    starts = [seed]
    jitter = np.random.default_rng(12345)
    for _ in range(max(0, multistarts - 1)):
        s = seed.copy()
        s[:k_theta] += jitter.normal(0.0, 0.5, size=k_theta)
        s[k_theta:] += jitter.normal(0.0, 0.25, size=q_act)
        starts.append(s)
    fun, z_hat, ok, iters = _maximize(negloglik_z, starts, tolerance, max_iter)
    theta = tuple(np.exp(z_hat[:k_theta]))
    beta = np.zeros(q)
    beta[active] = z_hat[k_theta:]
    model = BaselineIntensityModel(family, theta)
    ll = -fun
    k = k_theta + q_act
    return RecurrentFit(model, ll, 2 * k - 2 * ll, ok, iters, None, tuple(beta), tuple(names))


def curve_table(model: BaselineIntensityModel, t_grid):
    """Baseline and cumulative baseline evaluated on a positive time grid."""
    t_grid = np.asarray(t_grid, dtype=float)
    return t_grid, baseline_intensity(model, t_grid), cumulative_baseline(model, t_grid)
