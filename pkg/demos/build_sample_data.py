"""Build the bundled sample data tree under ./data.

Walks through every generator in the toolkit and writes one dataset per
schema, organized the way a data repository is laid out: a DataList.csv
index plus one subdirectory per dataset holding a DataDescription.txt
and its CSV files.  All randomness is seeded, so the output is
reproducible byte for byte.

Run from the repository root:

    python3 demos/build_sample_data.py
"""

from __future__ import annotations

import csv
import datetime as dt
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from aireliab import datasets, propagation, recurrent, regression, simulate
from aireliab._rng import derive_seed, make_rng

ROOT = Path(__file__).resolve().parents[1] / "data"


# ---------------------------------------------------------------------------
# months: the 24 calendar months from 2017-12 through 2019-11 (730 days)


def build_months() -> list[datasets.MonthRow]:
    rows = []
    year, month = 2017, 12
    for month_id in range(1, 25):
        start = dt.date(year, month, 1)
        if month == 12:
            year, month = year + 1, 1
        else:
            month += 1
        end = dt.date(year, month, 1) - dt.timedelta(days=1)
        rows.append(datasets.MonthRow(month_id, start, end, (end - start).days + 1))
    return rows


# ---------------------------------------------------------------------------
# vehicle fleets: monthly mileage per VIN, then simulated disengagements


FLEETS = {"Waymo": 12, "Cruise": 8, "Pony AI": 6, "Zoox": 4}

# baseline intensities are per thousand miles of driving; decreasing
# shapes for Waymo and Cruise (reliability improving), flatter ones for
# the smaller fleets
DISENGAGEMENT_MODELS = {
    "Waymo": recurrent.BaselineIntensityModel("weibull_growth", (360.0, 0.004, 0.8)),
    "Cruise": recurrent.BaselineIntensityModel("weibull_growth", (300.0, 0.003, 0.85)),
    "Pony AI": recurrent.BaselineIntensityModel("hpp", (0.15,)),
    "Zoox": recurrent.BaselineIntensityModel("musa_okumoto", (52.0, 0.01)),
}


def build_mileage(months) -> list[datasets.MileageRow]:
    rng = make_rng(20171201)
    rows = []
    for maker, n in FLEETS.items():
        tag = maker.replace(" ", "").upper()[:4]
        for i in range(1, n + 1):
            miles = np.round(rng.uniform(0.3, 2.5, 24), 3)
            # a few idle months for realism
            idle = rng.random(24) < 0.05
            miles[idle] = 0.0
            rows.append(datasets.MileageRow(maker, f"{tag}{i:03d}", tuple(miles)))
    return rows


def build_disengagements(mileage, table):
    records = []
    for idx, maker in enumerate(FLEETS):
        model = DISENGAGEMENT_MODELS[maker]
        fleet = [r for r in mileage if r.manufacture == maker]
        exposures = datasets.derive_exposure(fleet, table)
        series = simulate.simulate_fleet(model, exposures, table.tau, derive_seed(41, idx))
        records.extend(simulate.disengagement_records(series, table, maker))
    return records


COLLISION_MODELS = {
    "Waymo": recurrent.BaselineIntensityModel("weibull_growth", (107.0, 0.002, 1.0)),
    "Cruise": recurrent.BaselineIntensityModel("weibull_growth", (97.0, 0.0025, 1.0)),
}


def build_collisions(mileage, table):
    records = []
    for idx, (maker, model) in enumerate(COLLISION_MODELS.items()):
        fleet = datasets.derive_exposure(
            [r for r in mileage if r.manufacture == maker], table
        )
        summed = datasets.sum_schedules(fleet, unit_id=maker)
        series = simulate.simulate_nhpp(model, summed, table.tau, derive_seed(43, idx))
        records.extend(simulate.collision_records(series.event_times, table, maker))
    return records


# ---------------------------------------------------------------------------
# module-level error cascades: seven scenarios, two injection timings


EP_TRUTH = propagation.EPModel(
    {"2d": (1.1, 0.9), "3d": (1.0, 1.0), "localization": (1.0, 2.5)},
    {("localization", "2d"): (1.5, 1.2), ("localization", "3d"): (1.5, 1.2)},
)

WEATHER = ["clear", "snowy", "rainy", "foggy",
           "intermittent snowy", "intermittent rainy", "intermittent foggy"]


def build_module_errors():
    rows = []
    for idx, weather in enumerate(WEATHER, start=1):
        window = (0.0, 20.0) if idx <= 4 else (10.0, 20.0)
        injection = {
            "2d": propagation.InjectionWindow(window[0], window[1], 0.8),
            "3d": propagation.InjectionWindow(window[0], window[1], 0.8),
        }
        log = simulate.simulate_ep_cascade(
            EP_TRUTH, propagation.DEFAULT_SOURCES, 20.0, injection,
            seed=derive_seed(47, idx), scenario_id=idx, weather=weather,
        )
        rows.extend(simulate.module_error_records(log))
    return rows


# ---------------------------------------------------------------------------
# adversarial retraining experiments: three epsilon ranges, 30 steps each


def build_adversarial():
    records = []
    hazard = simulate.DiscreteHazard("gm", (0.08,))
    ranges = [(0.0, 0.3), (0.3, 0.6), (0.6, 1.0)]
    for scenario, (lo, hi) in enumerate(ranges, start=1):
        rng = make_rng(53, scenario)
        T = 30
        alpha = 0.002 * 0.93 ** np.arange(T)
        # attacks hit hardest during the first eight retraining steps
        eps_norm = np.concatenate([rng.uniform(0.65, 0.95, 8),
                                   rng.uniform(0.05, 0.35, T - 8)])
        epsilon = np.round(lo + (hi - lo) * eps_norm, 4)
        fgsm = np.round(rng.uniform(20.0, 80.0, T), 2)
        f1 = np.round(0.55 + 0.3 * (1 - np.exp(-np.arange(T) / 12.0))
                      + rng.normal(0, 0.01, T), 4)
        train_acc = np.clip(0.70 + 0.008 * np.arange(T) + rng.normal(0, 0.005, T), 0, 1)
        val_acc = np.clip(train_acc - rng.uniform(0.01, 0.05, T), 0, 1)
        # test accuracy responds to the attack magnitude step by step:
        # heavy perturbations drag it down, lighter ones let retraining
        # pull it back up
        delta = 0.02 - 0.055 * eps_norm + rng.normal(0.0, 0.003, T)
        test_acc = np.clip(0.80 + np.concatenate([[0.0], np.cumsum(delta[1:])]), 0, 1)
        covariates = np.column_stack([alpha, f1, epsilon, fgsm, train_acc,
                                      0.9 * (1 - train_acc), val_acc,
                                      1.0 - val_acc, 1.1 * (1 - test_acc),
                                      rng.uniform(480, 560, T)])
        names = ("Alpha", "F1", "Epsilon", "FGSM", "TrainingAccuracy",
                 "TrainingLoss", "ValidationAccuracy", "ValidationLoss",
                 "TestLoss", "Memory")
        beta = np.array([0.0, 0.0, 0.9, 0.002])
        series = simulate.simulate_srgm_counts(
            260.0 + 40 * scenario, hazard, beta,
            covariates[:, :4], T, derive_seed(59, scenario),
            covariate_names=names[:4],
        )
        full = simulate.IntervalCountSeries(series.counts, covariates, names,
                                            performance=np.round(test_acc, 4))
        records.extend(simulate.adversarial_records(full, scenario=scenario,
                                                    epsilon_range=(lo, hi)))
    return records


# ---------------------------------------------------------------------------
# mixture robustness experiments: 252 runs over the crossed layout


def mixture_coefficients():
    terms = regression.mixture_terms()
    base_y1 = {
        "c1": [0.90, 0.82, 0.86, 0.08, 0.05, 0.06, 0.04, 0.02, 0.03, 0.01, 0.02, 0.02, -0.02],
        "c2": [0.86, 0.80, 0.84, 0.06, 0.05, 0.05, 0.05, 0.03, 0.02, 0.02, 0.02, 0.01, -0.02],
        "c3": [0.78, 0.74, 0.80, 0.05, 0.04, 0.06, 0.05, 0.04, 0.03, 0.02, 0.01, 0.02, -0.01],
    }
    base_y2 = {
        "c1": [-3.2, -2.9, -3.0, -0.3, -0.2, -0.2, -0.15, -0.1, -0.1, -0.05, -0.05, -0.05, 0.1],
        "c2": [-3.0, -2.8, -2.9, -0.2, -0.2, -0.2, -0.1, -0.1, -0.1, -0.05, -0.05, -0.05, 0.1],
        "c3": [-2.7, -2.5, -2.6, -0.2, -0.1, -0.2, -0.1, -0.1, -0.05, -0.05, -0.05, -0.05, 0.1],
    }
    assert all(len(v) == len(terms) for v in base_y1.values())
    return (
        {k: np.asarray(v) for k, v in base_y1.items()},
        {k: np.asarray(v) for k, v in base_y2.items()},
    )


def build_mixture():
    coef_y1, coef_y2 = mixture_coefficients()
    records = simulate.simulate_mixture_records(
        coef_y1, coef_y2, noise_sd_y1=0.006, noise_sd_y2=0.04, seed=61,
    )
    assert all(0.0 <= r.y1 <= 1.0 for r in records), "y1 left [0, 1]; retune coefficients"
    return records


# ---------------------------------------------------------------------------
# reliability-related AI incidents: 72 curated entries


COMPANIES = [
    ("RoboRide", "Transportation", "self-driving taxi", "self-driving system"),
    ("AutoMotion", "Automotive", "driver assistance", "self-driving system"),
    ("FaceGate", "Security", "access control", "facial recognition"),
    ("MediScan", "Healthcare", "diagnostic imaging", "pattern recognition"),
    ("ChatAssist", "Software", "customer support bot", "natural language processing"),
    ("HireSense", "Human resources", "resume screening", "pattern recognition"),
    ("TradeMind", "Finance", "automated trading", "prediction model"),
    ("WatchTower", "Security", "surveillance analytics", "object detection"),
    ("ShopRank", "Retail", "recommendation engine", "recommendation system"),
    ("SkyCourier", "Logistics", "delivery drone", "self-driving system"),
    ("VoiceDesk", "Software", "virtual assistant", "natural language processing"),
    ("CityEye", "Public sector", "traffic monitoring", "object detection"),
]

CAUSES = [
    "prediction error", "bias in training data", "adversarial attack",
    "sensor failure", "inaccuracy under distribution shift", "software defect",
    "prediction error", "inaccuracy under rare conditions", "bias in training data",
    "adversarial attack", "prediction error", "software defect",
]

DESCRIPTIONS = [
    "System misidentified an object and acted on the wrong prediction.",
    "Model output degraded sharply outside its training distribution.",
    "A crafted input forced the classifier into a wrong label.",
    "Component outage propagated into the decision pipeline.",
    "Users in a subgroup received systematically wrong outcomes.",
    "An update regression caused repeated wrong responses.",
]


def build_incidents():
    rng = make_rng(67)
    records = []
    harmful = set(rng.choice(np.arange(1, 73), size=29, replace=False).tolist())
    for no in range(1, 73):
        company, sector, system, algorithm = COMPANIES[(no - 1) % len(COMPANIES)]
        cause = CAUSES[(no - 1) % len(CAUSES)]
        description = DESCRIPTIONS[(no - 1) % len(DESCRIPTIONS)]
        injured = casuality = 0
        if no in harmful:
            injured = int(rng.random() < 0.8)
            casuality = 1 if not injured else int(rng.random() < 0.3)
        records.append(datasets.IncidentRecord(
            incident_no=no,
            company=company,
            sector=sector,
            system=system,
            algorithm=algorithm,
            cause=cause,
            description=description,
            casuality=casuality,
            injured=injured,
            comment="reliability-related",
        ))
    return records


# ---------------------------------------------------------------------------
# assembly


DATASETS = [
    ("ai-incidents", "incident", "incidents.csv",
     "Reliability-related AI incidents curated from public reports.\n"
     "One row per incident with company, sector, system, algorithm,\n"
     "cause, narrative description, and harm indicators."),
    ("mixture-robustness", "mixture", "mixture.csv",
     "Classification robustness under class imbalance: mixture\n"
     "proportions x1..x3, algorithm and source flags z1/z2, scenario\n"
     "flags c1..c3, and AUC summaries y1 (mean) and y2 (log SD).\n"
     "252 runs: 7 simplex points x 4 flag settings x 3 scenarios x 3 reps."),
    ("adversarial-attacks", "adversarial", "adversarial.csv",
     "Iterative adversarial retraining of an image classifier: interval\n"
     "failure counts with learning-rate, F1, noise-magnitude, attack-mix\n"
     "and accuracy/loss covariates. Three epsilon-range scenarios, 30\n"
     "retraining steps each."),
    ("module-errors", "module_error", "module_errors.csv",
     "Module-level error events from a simulated perception stack (2-D\n"
     "detection, 3-D detection, localization) under targeted error\n"
     "injection. Seven scenarios over 20-second windows; two injection\n"
     "timing settings."),
    ("disengagements", "disengagement", "disengagements.csv",
     "Autonomous-vehicle disengagement events for four manufacturers\n"
     "over the 24 months starting 2017-12-01, with per-vehicle monthly\n"
     "mileage (thousands of miles) and the month table (mileage.csv,\n"
     "months.csv)."),
    ("collisions", "collision", "collisions.csv",
     "Manufacturer-level collision events over the same 24-month window,\n"
     "with the shared mileage and month tables."),
]


def main() -> None:
    months = build_months()
    table = datasets.MonthTable(months)
    mileage = build_mileage(table)

    payloads = {
        "ai-incidents": [("incidents.csv", "incident", build_incidents())],
        "mixture-robustness": [("mixture.csv", "mixture", build_mixture())],
        "adversarial-attacks": [("adversarial.csv", "adversarial", build_adversarial())],
        "module-errors": [("module_errors.csv", "module_error", build_module_errors())],
        "disengagements": [
            ("disengagements.csv", "disengagement", build_disengagements(mileage, table)),
            ("mileage.csv", "mileage", mileage),
            ("months.csv", "month", months),
        ],
        "collisions": [
            ("collisions.csv", "collision", build_collisions(mileage, table)),
            ("mileage.csv", "mileage", mileage),
            ("months.csv", "month", months),
        ],
    }

    ROOT.mkdir(parents=True, exist_ok=True)
    with open(ROOT / "DataList.csv", "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["name", "path", "description"])
        for name, _schema, _csv_name, description in DATASETS:
            writer.writerow([name, name, description.splitlines()[0]])

    for name, _schema, _csv_name, description in DATASETS:
        directory = ROOT / name
        directory.mkdir(exist_ok=True)
        (directory / "DataDescription.txt").write_text(description + "\n", encoding="utf-8")
        for csv_name, schema, records in payloads[name]:
            datasets.dump(records, schema, directory / csv_name)
            report = datasets.validate(directory / csv_name, schema)
            status = "ok" if report.ok else f"{len(report.violations)} VIOLATIONS"
            print(f"{name}/{csv_name}: {report.rows} rows [{status}]")
            if not report.ok:
                for v in report.violations[:5]:
                    print("   ", v)
                raise SystemExit(1)

    print(f"\nsample data written under {ROOT}")


if __name__ == "__main__":
    main()
