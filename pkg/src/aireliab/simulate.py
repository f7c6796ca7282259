"""Seeded generators: event streams, error cascades, count series, and
mixture responses.

These double as brute-force oracles for the fitters and as fixture
factories, so every generator can emit records in the dataset schemas.
Streams come from the counter-based Philox generator (see ``_rng``);
replicates derive child seeds through SeedSequence mixing, so results do
not depend on evaluation order or thread count.

Baselines that are singular at the origin (power_law with shape < 1,
weibull_growth with shape parameter theta3 < 1) are truncated below
``T_MIN`` = 1e-6 so the thinning envelope is finite; the probability
mass below the cutoff is negligible for any usable parameterization.
"""

from __future__ import annotations

import datetime as dt

import numpy as np

from ._rng import derive_seed, make_rng
from .datasets.exposure import ExposureSchedule, MonthTable
from .datasets.schemas import (
    AdversarialCountRecord,
    CollisionRecord,
    DisengagementRecord,
    MixtureRecord,
    ModuleErrorRecord,
)
from .propagation import DEFAULT_SOURCES, EPModel, InjectionWindow, ModuleEventLog, _toposort
from .recurrent import BaselineIntensityModel, EventSeries, baseline_intensity
from .regression import mixture_design
from .srgm import DiscreteHazard, IntervalCountSeries, mean_value_increments

T_MIN = 1e-6


def _left_cutoff(model: BaselineIntensityModel) -> float:
    if model.family == "power_law" and model.theta[0] <= 1.0:
        return T_MIN
    if model.family == "weibull_growth" and model.theta[2] < 1.0:
        return T_MIN
    return 0.0


def intensity_supremum(model: BaselineIntensityModel, lo: float, hi: float) -> float:
    """Exact supremum of the baseline intensity over [lo, hi], lo > 0."""
    if lo <= 0 or hi < lo:
        raise ValueError("need 0 < lo <= hi")
    candidates = [lo, hi]
    th = model.theta
    if model.family == "weibull_growth" and th[2] > 1.0:
        mode = ((th[2] - 1.0) / (th[1] * th[2])) ** (1.0 / th[2])
        if lo < mode < hi:
            candidates.append(mode)
    elif model.family == "gompertz" and th[1] > 1.0:
        mode = np.log(th[1]) / th[2]
        if lo < mode < hi:
            candidates.append(mode)
    return float(max(baseline_intensity(model, t) for t in candidates))


def simulate_nhpp(model: BaselineIntensityModel, exposure: ExposureSchedule,
                  tau: float, seed: int) -> EventSeries:
    """Thinning draw of an exposure-adjusted event stream over (0, tau].

    Candidates come from a constant-rate envelope at least as large as
    sup lambda0(t) x(t); each is kept with probability lambda(t) / envelope.
    """
    if abs(exposure.tau - tau) > 1e-9:
        raise ValueError("exposure horizon does not match tau")
    lo = _left_cutoff(model)
    envelope = 0.0
    for a, b, rate in zip(exposure.breakpoints[:-1], exposure.breakpoints[1:],
                          exposure.daily_rate):
        if rate <= 0 or b <= lo:
            continue
        envelope = max(envelope, rate * intensity_supremum(model, max(a, lo, T_MIN), b))
    rng = make_rng(seed)
    if envelope <= 0:
        return EventSeries(exposure.unit_id, np.array([]), tau, exposure)
    if not np.isfinite(envelope):
        raise ValueError("intensity is unbounded on the window; cannot build an envelope")
    n_cand = rng.poisson(envelope * (tau - lo))
    u = lo + (tau - lo) * rng.random(n_cand)
    accept = rng.random(n_cand) * envelope < baseline_intensity(model, np.maximum(u, T_MIN)) \
        * np.atleast_1d(exposure.rate_at(u))
    times = np.sort(u[accept])
    return EventSeries(exposure.unit_id, times, tau, exposure)


def simulate_fleet(model: BaselineIntensityModel, exposures, tau: float,
                   seed: int) -> list[EventSeries]:
    """One stream per exposure schedule, each on its own derived seed."""
    return [
        simulate_nhpp(model, exp, tau, derive_seed(seed, i))
        for i, exp in enumerate(exposures)
    ]


def _baseline_bound(model, inj: InjectionWindow, a: float, b: float) -> float:
    """Upper bound for the injected baseline intensity on [a, b)."""
    lo = max(a, inj.start, T_MIN)
    hi = min(b, inj.end)
    if hi <= lo or inj.prob <= 0:
        return 0.0
    return inj.prob * intensity_supremum(model, lo, hi)


def simulate_ep_cascade(model: EPModel, sources: dict, window: float,
                        injection: dict | None = None, seed: int = 0,
                        scenario_id: int | None = None,
                        weather: str | None = None) -> ModuleEventLog:
    """Draw a multi-module error cascade over [0, window].

    Modules generate in dependency order: source modules are plain
    thinning draws of their baseline restricted to the injection window
    (the injection probability scales the intensity), and downstream
    modules are thinned against an envelope that adds the decaying
    triggering sum of already-drawn upstream events.  Module substreams
    are keyed by the module's rank in sorted name order, so adding
    modules never perturbs existing streams.
    """
    modules = sorted(model.baseline)
    stream = {m: i for i, m in enumerate(modules)}
    order = _toposort(set(modules), {m: tuple(sources.get(m, ())) for m in modules})
    injection = dict(injection or {})
    events: dict[str, np.ndarray] = {}
    for module in order:
        rng = make_rng(seed, stream[module])
        base = model.module_baseline(module)
        inj = injection.get(module, InjectionWindow(0.0, window, 1.0))
        in_edges = [
            (src, model.edges[(module, src)])
            for src in sources.get(module, ())
            if (module, src) in model.edges
        ]
        if not in_edges:
            bound = _baseline_bound(base, inj, 0.0, window)
            if bound <= 0:
                events[module] = np.array([])
                continue
            lo, hi = max(inj.start, _left_cutoff(base)), inj.end
            n_cand = rng.poisson(bound * (hi - lo))
            u = lo + (hi - lo) * rng.random(n_cand)
            lam = inj.prob * baseline_intensity(base, np.maximum(u, T_MIN))
            events[module] = np.sort(u[rng.random(n_cand) * bound < lam])
            continue
        # downstream module: piecewise envelope between upstream event times
        src_times = np.sort(np.concatenate([events[s] for s, _ in in_edges])) \
            if in_edges else np.array([])
        boundaries = np.unique(np.concatenate([[0.0], src_times, [window]]))

        def trig(t: float) -> float:
            total = 0.0
            for src, (jump, decay) in in_edges:
                ts = events[src]
                past = ts[ts < t] if t > 0 else ts[:0]
                if past.size:
                    total += float(jump * np.sum(np.exp(-decay * (t - past))))
            return total

        def trig_ceiling(a: float) -> float:
            # includes events exactly at a, whose kernel is at full height
            total = 0.0
            for src, (jump, decay) in in_edges:
                ts = events[src]
                past = ts[ts <= a]
                if past.size:
                    total += float(jump * np.sum(np.exp(-decay * (a - past))))
            return total

        drawn = []
        for a, b in zip(boundaries[:-1], boundaries[1:]):
            bound = _baseline_bound(base, inj, a, b) + trig_ceiling(a)
            t = a
            while bound > 0:
                t = t + rng.exponential(1.0 / bound)
                if t >= b:
                    break
                lam = trig(t)
                if inj.start <= t < inj.end:
                    lam += inj.prob * baseline_intensity(base, max(t, T_MIN))
                if rng.random() * bound < lam:
                    drawn.append(t)
        events[module] = np.asarray(sorted(drawn))
    return ModuleEventLog(
        events=events,
        window=window,
        sources={m: tuple(s) for m, s in sources.items()},
        weather=weather,
        injection=injection or None,
        scenario_id=scenario_id,
    )


def simulate_srgm_counts(omega: float, hazard: DiscreteHazard, beta, covariates,
                         T: int, seed: int, *, covariate_names=None,
                         performance=None) -> IntervalCountSeries:
    """Interval counts drawn as independent Poissons of the mean increments."""
    beta = np.asarray(beta, dtype=float)
    if covariates is None:
        covariates = np.zeros((T, 0))
        covariate_names = ()
    covariates = np.asarray(covariates, dtype=float)
    if covariate_names is None:
        covariate_names = tuple(f"x{j + 1}" for j in range(covariates.shape[1]))
    increments = mean_value_increments(omega, hazard, beta, covariates, T)
    rng = make_rng(seed)
    counts = rng.poisson(increments)
    return IntervalCountSeries(counts, covariates[:T], tuple(covariate_names),
                               performance=performance)


# ---------------------------------------------------------------------------
# mixture experiment layout and responses


def simplex_centroid() -> np.ndarray:
    """Three vertices, three edge midpoints, and the centroid."""
    return np.array([
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.5, 0.5, 0.0],
        [0.5, 0.0, 0.5],
        [0.0, 0.5, 0.5],
        [1 / 3, 1 / 3, 1 / 3],
    ])


def mixture_layout(replicates: int = 3):
    """Full crossed layout: 7 simplex points x 2 x 2 algorithm/source flags
    x 3 scenarios x ``replicates``; 252 rows at the default replication."""
    points = simplex_centroid()
    x_rows, z_rows, c_rows = [], [], []
    for scenario in range(3):
        c = np.zeros(3)
        c[scenario] = 1.0
        for z1 in (0, 1):
            for z2 in (0, 1):
                for point in points:
                    for _ in range(replicates):
                        x_rows.append(point)
                        z_rows.append((z1, z2))
                        c_rows.append(c)
    return np.asarray(x_rows), np.asarray(z_rows, dtype=float), np.asarray(c_rows)


def _coef_for(coef, scenario_idx: int) -> np.ndarray:
    if isinstance(coef, dict):
        return np.asarray(coef[("c1", "c2", "c3")[scenario_idx]], dtype=float)
    return np.asarray(coef, dtype=float)


def simulate_mixture_records(coef_y1, coef_y2, *, noise_sd_y1: float = 0.0,
                             noise_sd_y2: float = 0.0, seed: int = 0,
                             replicates: int = 3) -> list[MixtureRecord]:
    """Mixture records over the crossed layout from known coefficients.

    Coefficients are 13-vectors in ``regression.mixture_terms`` order, or
    dicts keyed by scenario flag ("c1".."c3") for scenario-specific
    surfaces.  Mean responses follow the mixture design exactly; optional
    Gaussian noise is added per response.
    """
    x, z, c = mixture_layout(replicates)
    rng = make_rng(seed)
    records = []
    design, _ = mixture_design(x, z)
    scen_idx = np.argmax(c, axis=1)
    y1 = np.empty(len(x))
    y2 = np.empty(len(x))
    for s in range(3):
        rows = scen_idx == s
        y1[rows] = design[rows] @ _coef_for(coef_y1, s)
        y2[rows] = design[rows] @ _coef_for(coef_y2, s)
    y1 = y1 + rng.normal(0.0, noise_sd_y1, len(x))
    y2 = y2 + rng.normal(0.0, noise_sd_y2, len(x))
    for i in range(len(x)):
        records.append(MixtureRecord(
            x1=float(x[i, 0]), x2=float(x[i, 1]), x3=float(x[i, 2]),
            z1=int(z[i, 0]), z2=int(z[i, 1]),
            c1=int(c[i, 0]), c2=int(c[i, 1]), c3=int(c[i, 2]),
            y1=float(y1[i]), y2=float(y2[i]),
        ))
    return records


# ---------------------------------------------------------------------------
# fixture emitters: model-world objects -> dataset-schema records


def disengagement_records(series_list, months: MonthTable,
                          manufacture: str) -> list[DisengagementRecord]:
    """Event streams rendered as dated disengagement rows.

    Event times are day offsets; an event at time t falls on calendar day
    ceil(t) of the period.
    """
    records = []
    for series in series_list:
        vin = series.unit_id.split(":")[-1]
        for t in series.event_times:
            day = int(np.ceil(t))
            date = months.date_of_day(day)
            month_row = months.month_of_date(date)
            records.append(DisengagementRecord(
                manufacture=manufacture,
                vin=vin,
                date=date,
                month=f"{date:%Y-%m}",
                month_id=month_row.month_id,
            ))
    records.sort(key=lambda r: (r.date, r.vin))
    return records


def collision_records(event_times, months: MonthTable,
                      manufacture: str) -> list[CollisionRecord]:
    """Manufacturer-level collision rows; event ids number distinct dates."""
    dates = sorted(months.date_of_day(int(np.ceil(t))) for t in np.asarray(event_times))
    date_ids: dict = {}
    records = []
    for date in dates:
        date_ids.setdefault(date, len(date_ids) + 1)
        month_row = months.month_of_date(date)
        records.append(CollisionRecord(
            manufacture=manufacture,
            vin=None,
            date=date,
            month=f"{date:%Y-%m}",
            month_id=month_row.month_id,
            event_id=date_ids[date],
        ))
    return records


_MODULE_FLAGS = {"2d": (1, 0, 0), "3d": (0, 1, 0), "localization": (0, 0, 1)}


def module_error_records(log: ModuleEventLog) -> list[ModuleErrorRecord]:
    """One row per module event, carrying the scenario's injection setup."""
    def inj(module):
        if log.injection and module in log.injection:
            w = log.injection[module]
            return (w.start, w.end), w.prob
        return (0.0, log.window), 1.0

    ei_2d, prob_2d = inj("2d")
    ei_3d, prob_3d = inj("3d")
    rows = []
    for module, times in log.events.items():
        flags = _MODULE_FLAGS.get(module)
        if flags is None:
            raise ValueError(f"no schema columns for module {module!r}")
        for t in times:
            rows.append(ModuleErrorRecord(
                scenario_id=log.scenario_id or 0,
                weather=log.weather or "",
                window=(0.0, log.window),
                ei_time_2d=ei_2d,
                ei_prob_2d=prob_2d,
                ei_time_3d=ei_3d,
                ei_prob_3d=prob_3d,
                timestamp=float(t),
                err_2d=flags[0],
                err_3d=flags[1],
                err_loc=flags[2],
            ))
    rows.sort(key=lambda r: r.timestamp)
    return rows


def module_event_log(records, sources=None) -> dict[int, ModuleEventLog]:
    """Group module-error rows by scenario into event logs."""
    sources = dict(DEFAULT_SOURCES if sources is None else sources)
    by_scenario: dict[int, list[ModuleErrorRecord]] = {}
    for rec in records:
        by_scenario.setdefault(rec.scenario_id, []).append(rec)
    logs = {}
    for scenario, rows in sorted(by_scenario.items()):
        window = rows[0].window[1] - rows[0].window[0]
        start = rows[0].window[0]
        events = {m: [] for m in ("2d", "3d", "localization")}
        for rec in rows:
            t = rec.timestamp - start
            if rec.err_2d:
                events["2d"].append(t)
            if rec.err_3d:
                events["3d"].append(t)
            if rec.err_loc:
                events["localization"].append(t)
        injection = {
            "2d": InjectionWindow(rows[0].ei_time_2d[0] - start,
                                  rows[0].ei_time_2d[1] - start, rows[0].ei_prob_2d),
            "3d": InjectionWindow(rows[0].ei_time_3d[0] - start,
                                  rows[0].ei_time_3d[1] - start, rows[0].ei_prob_3d),
        }
        logs[scenario] = ModuleEventLog(
            events={m: np.sort(ts) for m, ts in events.items()},
            window=window,
            sources=sources,
            weather=rows[0].weather,
            injection=injection,
            scenario_id=scenario,
        )
    return logs


def adversarial_records(series: IntervalCountSeries, *, scenario: int = 1,
                        epsilon_range=(0.0, 1.0)) -> list[AdversarialCountRecord]:
    """Count series rendered as adversarial-experiment rows.

    Covariate columns whose names match the schema columns (Alpha, F1,
    Epsilon, FGSM, TrainingAccuracy, ...) populate those fields; FGSM and
    PGD stay complementary, TestAccuracy falls back to the performance
    series, and anything else gets a bland constant.
    """
    names = series.covariate_names

    def col(name, default):
        if name in names:
            return series.covariates[:, names.index(name)]
        return np.full(series.n_steps, default)

    fgsm = col("FGSM", 50.0)
    alpha = col("Alpha", 1e-3)
    f1 = col("F1", 0.5)
    eps_mid = 0.5 * (epsilon_range[0] + epsilon_range[1])
    epsilon = col("Epsilon", eps_mid)
    train_acc = col("TrainingAccuracy", 0.8)
    train_loss = col("TrainingLoss", 0.5)
    val_acc = col("ValidationAccuracy", 0.75)
    val_loss = col("ValidationLoss", 0.6)
    if series.performance is not None:
        test_acc = series.performance
    else:
        test_acc = col("TestAccuracy", 0.7)
    test_loss = col("TestLoss", 0.7)
    memory = col("Memory", 512.0)
    records = []
    for t in range(series.n_steps):
        records.append(AdversarialCountRecord(
            scenario=scenario,
            epsilon_range=(float(epsilon_range[0]), float(epsilon_range[1])),
            t=t + 1,
            fc=int(series.counts[t]),
            alpha=float(alpha[t]),
            f1=float(f1[t]),
            epsilon=float(epsilon[t]),
            fgsm_pct=float(fgsm[t]),
            pgd_pct=float(100.0 - fgsm[t]),
            train_acc=float(train_acc[t]),
            train_loss=float(train_loss[t]),
            val_acc=float(val_acc[t]),
            val_loss=float(val_loss[t]),
            test_acc=float(test_acc[t]),
            test_loss=float(test_loss[t]),
            memory=float(memory[t]),
        ))
    return records


def interval_series_from_adversarial(records, scenario: int,
                                     covariates=("Alpha", "F1", "Epsilon", "FGSM"),
                                     performance_column: str = "TestAccuracy"
                                     ) -> IntervalCountSeries:
    """Count series for one scenario of an adversarial dataset."""
    rows = sorted((r for r in records if r.scenario == scenario), key=lambda r: r.t)
    if not rows:
        raise ValueError(f"no rows for scenario {scenario}")
    attr = {
        "Alpha": "alpha", "F1": "f1", "Epsilon": "epsilon", "FGSM": "fgsm_pct",
        "PGD": "pgd_pct", "TrainingAccuracy": "train_acc", "TrainingLoss": "train_loss",
        "ValidationAccuracy": "val_acc", "ValidationLoss": "val_loss",
        "TestAccuracy": "test_acc", "TestLoss": "test_loss", "Memory": "memory",
    }
    counts = np.array([r.fc for r in rows], dtype=float)
    X = np.column_stack([[getattr(r, attr[c]) for r in rows] for c in covariates]) \
        if covariates else np.zeros((len(rows), 0))
    perf = np.array([getattr(r, attr[performance_column]) for r in rows]) \
        if performance_column else None
    return IntervalCountSeries(counts, X, tuple(covariates), performance=perf)


def event_series_from_disengagements(records, mileage_rows, months: MonthTable,
                                     manufacture: str) -> list[EventSeries]:
    """Per-vehicle event series for one manufacturer.

    Every vehicle with a mileage row contributes a series (possibly with
    zero events); dated events convert to whole-day offsets, preserving
    same-day ties.
    """
    from .datasets.exposure import derive_exposure

    fleet_rows = [r for r in mileage_rows if r.manufacture == manufacture]
    if not fleet_rows:
        raise ValueError(f"no mileage rows for manufacturer {manufacture!r}")
    schedules = derive_exposure(fleet_rows, months)
    by_vin: dict[str, list[float]] = {r.vin: [] for r in fleet_rows}
    for rec in records:
        if rec.manufacture != manufacture:
            continue
        if rec.vin not in by_vin:
            raise ValueError(f"event for unknown vehicle {rec.vin!r}")
        by_vin[rec.vin].append(float(months.day_index(rec.date)))
    series = []
    for row, schedule in zip(fleet_rows, schedules):
        times = np.sort(np.asarray(by_vin[row.vin]))
        series.append(EventSeries(schedule.unit_id, times, schedule.tau, schedule))
    return series


def collision_times(records, months: MonthTable, manufacture: str) -> np.ndarray:
    """Manufacturer-level collision day offsets, ties preserved."""
    times = [
        float(months.day_index(r.date))
        for r in records
        if r.manufacture == manufacture
    ]
    return np.sort(np.asarray(times))
