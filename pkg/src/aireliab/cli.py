"""The ``air`` command line: ingestion, fitting, design, and simulation.

Every subcommand writes its results plus a ``manifest.json`` (command,
flags, input digests, seed, version, timestamps) to an output directory,
``./air-out/<timestamp>`` unless ``--out`` says otherwise.  Exit codes:
0 on success, 2 when validation finds violations (the report is still
written), 1 on other errors.
"""

from __future__ import annotations

import argparse
import datetime as dt
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, datasets, design, propagation, recurrent, regression, simulate, srgm
from .datasets.repository import DATA_ROOT_ENV

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATIONS = 2


def _fmt17(value) -> str:
    return f"{float(value):.17g}"


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class Run:
    """Output directory plus the manifest that describes the run."""

    def __init__(self, args):
        self.started = dt.datetime.now(dt.timezone.utc)
        out = getattr(args, "out", None)
        if out is None:
            stamp = self.started.strftime("%Y%m%d-%H%M%S-%f")
            out = Path("air-out") / stamp
        self.dir = Path(out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.args = args
        self.inputs: dict[str, str] = {}

    def track_input(self, path) -> Path:
        path = Path(path)
        self.inputs[str(path)] = _sha256(path)
        return path

    def write_json(self, name: str, payload) -> Path:
        target = self.dir / name
        with open(target, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2)
            handle.write("\n")
        return target

    def write_text(self, name: str, text: str) -> Path:
        target = self.dir / name
        target.write_text(text, encoding="utf-8")
        return target

    def finish(self) -> None:
        flags = {
            k: (str(v) if isinstance(v, Path) else v)
            for k, v in vars(self.args).items()
            if k != "func" and not k.startswith("_")
        }
        manifest = {
            "command": self.args.command,
            "flags": flags,
            "inputs": self.inputs,
            "seed": getattr(self.args, "seed", None),
            "version": __version__,
            "started": self.started.isoformat(),
            "finished": dt.datetime.now(dt.timezone.utc).isoformat(),
        }
        self.write_json("manifest.json", manifest)


def _pmap(fn, items, threads):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _detect_schema(path) -> str:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        header = handle.readline().strip().split(",")
    header_set = set(h.strip() for h in header)
    matches = [
        name for name, schema in datasets.SCHEMAS.items()
        if set(schema.columns) <= header_set
    ]
    # prefer the most specific match (largest required column set)
    if matches:
        return max(matches, key=lambda n: len(datasets.SCHEMAS[n].columns))
    raise datasets.SchemaError(f"could not match {path} to any registered schema")


def _resolve_dataset(args) -> tuple[Path, str]:
    """A CSV path (with schema) from a file path or an index name."""
    candidate = Path(args.dataset)
    if candidate.is_file():
        schema = args.schema or _detect_schema(candidate)
        return candidate, schema
    root = datasets.resolve_data_root(getattr(args, "data_root", None))
    index = datasets.load_index(root)
    directory = index.directory(args.dataset)
    csvs = sorted(directory.glob("*.csv"))
    for path in csvs:
        try:
            schema = args.schema or _detect_schema(path)
        except datasets.SchemaError:
            continue
        if args.schema is None or schema == args.schema:
            return path, schema
    raise FileNotFoundError(f"no schema-matching CSV under {directory}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args, run: Run) -> int:
    path = run.track_input(args.file)
    options = {}
    if args.schema == "adversarial":
        options["accuracy_scale"] = args.accuracy_scale
    report = datasets.validate(path, args.schema, **options)
    run.write_text("report.json", report.to_json() + "\n")
    print(report.to_json())
    return EXIT_OK if report.ok else EXIT_VIOLATIONS


def cmd_summarize(args, run: Run) -> int:
    path, schema = _resolve_dataset(args)
    run.track_input(path)
    records = datasets.load(path, schema)
    summary = datasets.summarize(records, schema)
    run.write_json("summary.json", summary)
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _curve_payload(model, tau, grid_points):
    grid = np.linspace(tau / grid_points, tau, grid_points)
    t, bif, cbif = recurrent.curve_table(model, grid)
    return [
        {"t": float(a), "bif": float(b), "cbif": float(c)}
        for a, b, c in zip(t, bif, cbif)
    ]


def _fit_payload(fit, tau, grid_points):
    payload = {
        "family": fit.model.family,
        "theta": list(fit.model.theta),
        "log_lik": fit.log_lik,
        "aic": fit.aic,
        "converged": fit.converged,
        "curve": _curve_payload(fit.model, tau, grid_points),
    }
    if fit.stderr is not None:
        payload["stderr"] = list(fit.stderr)
    if fit.beta is not None:
        payload["beta"] = dict(zip(fit.covariate_names, fit.beta))
    return payload


def cmd_fit_recurrent(args, run: Run) -> int:
    months = datasets.MonthTable(datasets.load(run.track_input(args.months), "month"))
    mileage = datasets.load(run.track_input(args.mileage), "mileage")
    schema = "disengagement" if args.level == "vehicle" else "collision"
    events = datasets.load(run.track_input(args.events), schema)
    manufacturers = sorted({r.manufacture for r in events})
    if args.manufacturer:
        if args.manufacturer not in manufacturers:
            raise ValueError(f"no events for manufacturer {args.manufacturer!r}")
        manufacturers = [args.manufacturer]

    def fit_one(name):
        if args.level == "vehicle":
            units = simulate.event_series_from_disengagements(events, mileage, months, name)
            fit = recurrent.fit_mle(units, args.family)
        else:
            times = simulate.collision_times(events, months, name)
            fleet = datasets.derive_exposure(
                [r for r in mileage if r.manufacture == name], months
            )
            fit = recurrent.fit_manufacturer_level(times, fleet, args.family)
        return name, fit

    results = _pmap(fit_one, manufacturers, args.threads)
    for name, fit in results:
        payload = _fit_payload(fit, months.tau, args.grid_points)
        payload["manufacturer"] = name
        run.write_json(f"fit-{name.lower().replace(' ', '-')}.json", payload)
        print(f"{name}: family={args.family} theta={fit.model.theta} "
              f"log_lik={fit.log_lik:.4f} aic={fit.aic:.4f} converged={fit.converged}")
    return EXIT_OK


def cmd_fit_ep(args, run: Run) -> int:
    records = datasets.load(run.track_input(args.log), "module_error")
    logs = list(simulate.module_event_log(records).values())
    fit = propagation.fit_ep(logs)
    payload = {
        "modules": list(fit.model.baseline),
        "baseline": {m: list(v) for m, v in fit.model.baseline.items()},
        "edges": {f"{src}->{tgt}": list(v) for (tgt, src), v in fit.model.edges.items()},
        "log_lik": fit.log_lik,
        "aic": fit.aic,
        "converged": fit.converged,
    }
    run.write_json("ep_model.json", payload)
    print(json.dumps({k: payload[k] for k in ("log_lik", "aic", "converged")}, indent=2))
    if args.mae_grid:
        if args.holdout:
            held_records = datasets.load(run.track_input(args.holdout), "module_error")
            held = list(simulate.module_event_log(held_records).values())
        else:
            held = logs
        window = held[0].window
        grid = np.linspace(window / args.mae_grid, window, args.mae_grid)
        competitors = {
            "hpp": propagation.fit_independent_hpp(logs).model,
            "nhpp": propagation.fit_independent_nhpp(logs).model,
            "ep": fit.model,
        }
        lines = ["model," + ",".join(_fmt17(g) for g in grid) + ",overall"]
        for name, model in competitors.items():
            per_point = [
                propagation.evaluate_mae(model, held, [g]) for g in grid
            ]
            overall = propagation.evaluate_mae(model, held, grid)
            lines.append(name + "," + ",".join(_fmt17(v) for v in per_point)
                         + "," + _fmt17(overall))
            print(f"MAE[{name}] = {overall:.6g}")
        run.write_text("mae.csv", "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_fit_srgm(args, run: Run) -> int:
    records = datasets.load(run.track_input(args.input), "adversarial")
    covariates = tuple(args.covariates.split(",")) if args.covariates else \
        ("Alpha", "F1", "Epsilon", "FGSM")
    series = simulate.interval_series_from_adversarial(records, args.scenario, covariates)
    if args.stepwise:
        fit = srgm.forward_stepwise(series, args.hazard, covariates, split=args.split)
    else:
        fit = srgm.fit_srgm(series, args.hazard, covariates=covariates, split=args.split)
    payload = {
        "omega": fit.omega,
        "hazard": {"family": fit.hazard.family, "params": list(fit.hazard.params)},
        "beta": fit.beta,
        "trace": [[name, aic] for name, aic in fit.trace],
        "holdout_mae": fit.holdout_mae,
        "log_lik": fit.log_lik,
        "aic": fit.aic,
        "converged": fit.converged,
        "n_fit": fit.n_fit,
    }
    run.write_json("srgm.json", payload)
    observed = np.cumsum(series.counts)
    lines = ["t,observed_cumulative,fitted_cumulative"]
    for t in range(series.n_steps):
        lines.append(f"{t + 1},{_fmt17(observed[t])},{_fmt17(fit.fitted[t])}")
    run.write_text("cumulative.csv", "\n".join(lines) + "\n")
    print(json.dumps({k: payload[k] for k in ("omega", "hazard", "beta", "holdout_mae")},
                     indent=2))
    return EXIT_OK


def cmd_fit_resilience(args, run: Run) -> int:
    records = datasets.load(run.track_input(args.input), "adversarial")
    covariates = tuple(args.covariates.split(",")) if args.covariates else \
        ("Alpha", "Epsilon", "FGSM")
    series = simulate.interval_series_from_adversarial(
        records, args.scenario, covariates, performance_column=args.response
    )
    form, degree = args.form, 2
    if form.startswith("poly:"):
        form, degree = "poly", int(args.form.split(":", 1)[1])
    fit = srgm.fit_resilience(series, form, covariates, degree=degree, split=args.split)
    payload = {
        "form": args.form,
        "intercept": fit.intercept,
        "coef": fit.coef,
        "trace": [[name, aic] for name, aic in fit.trace],
        "holdout_mae": fit.holdout_mae,
        "baseline_mae": fit.baseline_mae,
        "n_fit": fit.n_fit,
    }
    run.write_json("resilience.json", payload)
    lines = ["t,observed,fitted"]
    for t in range(series.n_steps):
        lines.append(f"{t + 1},{_fmt17(series.performance[t])},{_fmt17(fit.reconstructed[t])}")
    run.write_text("reconstruction.csv", "\n".join(lines) + "\n")
    print(json.dumps({k: payload[k] for k in ("form", "intercept", "coef", "holdout_mae")},
                     indent=2))
    return EXIT_OK


def cmd_fit_mixture(args, run: Run) -> int:
    records = datasets.load(run.track_input(args.input), "mixture")
    fit = regression.fit_mixture(records, args.response,
                                 scenario=None if args.pooled else args.scenario,
                                 pooled=args.pooled)
    payload = {
        "response": args.response,
        "scenario": fit.scenario,
        "pooled": args.pooled,
        "coef": fit.coef_dict(),
        "stderr": dict(zip(fit.terms, (float(s) for s in fit.stderr))),
        "resid_sd": fit.resid_sd,
        "n": fit.n,
    }
    run.write_json("mixture.json", payload)
    z = [args.z1, args.z2] + ([0, 0] if args.pooled else [])
    table = regression.predict_simplex_grid(fit, z, args.grid)
    lines = ["x1,x2,x3,yhat"]
    for row in table:
        lines.append(",".join(_fmt17(v) for v in row))
    run.write_text("contour_grid.csv", "\n".join(lines) + "\n")
    print(json.dumps({"coef": payload["coef"], "resid_sd": fit.resid_sd}, indent=2))
    return EXIT_OK


def cmd_design_lhd(args, run: Run) -> int:
    result = design.search_mmlhd(args.n, args.p, k=args.k, m=args.m,
                                 seed=args.seed, budget=args.budget)
    lines = [",".join(_fmt17(v) for v in row) for row in result.design.matrix]
    run.write_text("design.csv", "\n".join(lines) + "\n")
    run.write_json("design.json", {
        "n": args.n, "p": args.p, "k": args.k, "m": args.m,
        "criterion": result.criterion, "seed": args.seed,
    })
    print(f"criterion = {result.criterion:.12g} (n={args.n}, p={args.p}, "
          f"k={args.k}, m={args.m}, seed={args.seed})")
    return EXIT_OK


def cmd_alt_af(args, run: Run) -> int:
    if args.ln is not None or args.la is not None:
        factor = design.acceleration_factor(life_normal=args.ln, life_accelerated=args.la)
        inputs = {"life_normal": args.ln, "life_accelerated": args.la}
    else:
        factor = design.acceleration_factor(
            activation_energy=args.ea, temp_use=args.tuse, temp_stress=args.tstress
        )
        inputs = {"activation_energy": args.ea, "temp_use": args.tuse,
                  "temp_stress": args.tstress}
    run.write_json("alt.json", {"acceleration_factor": factor, **inputs})
    print(f"{factor:g}")
    return EXIT_OK


DEFAULT_EP_SPEC = {
    "baseline": {"2d": [1.0, 0.8], "3d": [1.0, 0.9], "localization": [1.0, 2.0]},
    "edges": {"localization<-2d": [2.0, 1.0], "localization<-3d": [2.0, 1.0]},
    "sources": {"localization": ["2d", "3d"]},
    "window": 20.0,
    "scenarios": [
        {"weather": "clear", "injection": {"2d": [0.0, 20.0, 0.8], "3d": [0.0, 20.0, 0.8]}},
        {"weather": "snowy", "injection": {"2d": [10.0, 20.0, 0.8], "3d": [10.0, 20.0, 0.8]}},
    ],
}


def cmd_simulate(args, run: Run) -> int:
    if args.generator == "nhpp":
        months = datasets.MonthTable(datasets.load(run.track_input(args.months), "month"))
        mileage = [r for r in datasets.load(run.track_input(args.mileage), "mileage")
                   if r.manufacture == args.manufacture]
        if not mileage:
            raise ValueError(f"no mileage rows for {args.manufacture!r}")
        theta = tuple(float(v) for v in args.theta.split(","))
        model = recurrent.BaselineIntensityModel(args.family, theta)
        exposures = datasets.derive_exposure(mileage, months)
        series = simulate.simulate_fleet(model, exposures, months.tau, args.seed)
        records = simulate.disengagement_records(series, months, args.manufacture)
        datasets.dump(records, "disengagement", run.dir / "disengagements.csv")
        print(f"wrote {len(records)} events for {len(series)} vehicles")
    elif args.generator == "ep-cascade":
        spec = DEFAULT_EP_SPEC
        if args.spec:
            spec = json.loads(Path(run.track_input(args.spec)).read_text(encoding="utf-8"))
        model = propagation.EPModel(
            {m: tuple(v) for m, v in spec["baseline"].items()},
            {
                (key.split("<-")[0], key.split("<-")[1]): tuple(v)
                for key, v in spec.get("edges", {}).items()
            },
        )
        sources = {m: tuple(v) for m, v in spec.get("sources", {}).items()}
        rows = []
        for idx, scenario in enumerate(spec["scenarios"], start=1):
            injection = {
                m: propagation.InjectionWindow(*v)
                for m, v in scenario.get("injection", {}).items()
            }
            log = simulate.simulate_ep_cascade(
                model, sources, float(spec["window"]), injection,
                seed=simulate.derive_seed(args.seed, idx), scenario_id=idx,
                weather=scenario.get("weather"),
            )
            rows.extend(simulate.module_error_records(log))
        datasets.dump(rows, "module_error", run.dir / "module_errors.csv")
        print(f"wrote {len(rows)} module error rows over {len(spec['scenarios'])} scenarios")
    elif args.generator == "srgm-counts":
        hazard = srgm.DiscreteHazard(args.hazard, tuple(float(v) for v in args.params.split(",")))
        series = simulate.simulate_srgm_counts(args.omega, hazard, [], None, args.steps, args.seed)
        records = simulate.adversarial_records(series, scenario=args.scenario)
        datasets.dump(records, "adversarial", run.dir / "adversarial.csv")
        print(f"wrote {len(records)} interval rows, total failures {int(series.counts.sum())}")
    elif args.generator == "mixture":
        terms = regression.mixture_terms()
        base = np.array([0.85, 0.75, 0.8, 0.1, 0.05, 0.08, 0.04, 0.03, 0.05,
                         0.02, 0.03, 0.04, 0.01])
        coef_y2 = np.full(len(terms), -1.0)
        records = simulate.simulate_mixture_records(
            base, coef_y2, noise_sd_y1=args.noise_y1, noise_sd_y2=args.noise_y2,
            seed=args.seed,
        )
        datasets.dump(records, "mixture", run.dir / "mixture.csv")
        print(f"wrote {len(records)} mixture rows")
    else:
        raise ValueError(f"unknown generator {args.generator!r}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="air",
        description="AI reliability toolkit: validate data, fit models, design tests",
    )
    parser.add_argument("--version", action="version", version=f"air {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=False):
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--data-root", dest="data_root", default=None,
                       help=f"dataset root (default: ${DATA_ROOT_ENV})")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        if seed:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("validate", help="validate a CSV against a schema")
    p.add_argument("file", type=Path)
    p.add_argument("--schema", required=True, choices=sorted(datasets.SCHEMAS))
    p.add_argument("--accuracy-scale", dest="accuracy_scale", default="auto",
                   choices=("auto", "proportion", "percent"))
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("summarize", help="tabulate a dataset")
    p.add_argument("dataset", help="CSV path or dataset name from DataList.csv")
    p.add_argument("--schema", default=None, choices=sorted(datasets.SCHEMAS))
    common(p)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("fit-recurrent", help="fit exposure-adjusted event models")
    p.add_argument("--family", required=True, choices=recurrent.FAMILIES)
    p.add_argument("--level", default="vehicle", choices=("vehicle", "manufacturer"))
    p.add_argument("--events", type=Path, required=True)
    p.add_argument("--mileage", type=Path, required=True)
    p.add_argument("--months", type=Path, required=True)
    p.add_argument("--manufacturer", default=None)
    p.add_argument("--grid-points", dest="grid_points", type=int, default=200)
    common(p)
    p.set_defaults(func=cmd_fit_recurrent)

    p = sub.add_parser("fit-ep", help="fit the error-propagation process")
    p.add_argument("--log", type=Path, required=True, help="module_error CSV")
    p.add_argument("--holdout", type=Path, default=None)
    p.add_argument("--mae-grid", dest="mae_grid", type=int, default=0,
                   help="grid points for the MAE comparison table")
    common(p)
    p.set_defaults(func=cmd_fit_ep)

    p = sub.add_parser("fit-srgm", help="fit a covariate reliability-growth model")
    p.add_argument("--input", type=Path, required=True, help="adversarial CSV")
    p.add_argument("--hazard", required=True, choices=sorted(srgm.HAZARD_FAMILIES))
    p.add_argument("--scenario", type=int, default=1)
    p.add_argument("--covariates", default=None, help="comma-separated column names")
    p.add_argument("--stepwise", action="store_true")
    p.add_argument("--split", type=float, default=0.9)
    common(p)
    p.set_defaults(func=cmd_fit_srgm)

    p = sub.add_parser("fit-resilience", help="fit a performance-change regression")
    p.add_argument("--input", type=Path, required=True, help="adversarial CSV")
    p.add_argument("--form", default="linear",
                   help="linear, interactions, or poly:<degree>")
    p.add_argument("--scenario", type=int, default=1)
    p.add_argument("--response", default="TestAccuracy")
    p.add_argument("--covariates", default=None)
    p.add_argument("--split", type=float, default=0.9)
    common(p)
    p.set_defaults(func=cmd_fit_resilience)

    p = sub.add_parser("fit-mixture", help="fit the simplex mixture model")
    p.add_argument("--input", type=Path, required=True, help="mixture CSV")
    p.add_argument("--response", required=True, choices=("y1", "y2"))
    p.add_argument("--scenario", default=None, choices=regression.SCENARIOS)
    p.add_argument("--pooled", action="store_true")
    p.add_argument("--z1", type=int, default=0, choices=(0, 1))
    p.add_argument("--z2", type=int, default=0, choices=(0, 1))
    p.add_argument("--grid", type=int, default=40)
    common(p)
    p.set_defaults(func=cmd_fit_mixture)

    p = sub.add_parser("design-lhd", help="search a maximin Latin hypercube design")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--k", type=int, default=15)
    p.add_argument("--m", type=float, default=2.0)
    p.add_argument("--budget", type=int, default=10_000)
    common(p, seed=True)
    p.set_defaults(func=cmd_design_lhd)

    p = sub.add_parser("alt-af", help="acceleration factor from lifetimes or Arrhenius")
    p.add_argument("--ln", type=float, default=None, help="life under normal conditions")
    p.add_argument("--la", type=float, default=None, help="life under accelerated stress")
    p.add_argument("--ea", type=float, default=None, help="activation energy (eV)")
    p.add_argument("--tuse", type=float, default=None, help="use temperature (K)")
    p.add_argument("--tstress", type=float, default=None, help="stress temperature (K)")
    common(p)
    p.set_defaults(func=cmd_alt_af)

    p = sub.add_parser("simulate", help="generate fixture data in the dataset schemas")
    p.add_argument("generator", choices=("nhpp", "ep-cascade", "srgm-counts", "mixture"))
    p.add_argument("--family", default="weibull_growth", choices=recurrent.FAMILIES)
    p.add_argument("--theta", default="1.0,0.01,1.0", help="comma-separated parameters")
    p.add_argument("--mileage", type=Path, default=None)
    p.add_argument("--months", type=Path, default=None)
    p.add_argument("--manufacture", default="Acme")
    p.add_argument("--spec", type=Path, default=None, help="cascade spec JSON")
    p.add_argument("--omega", type=float, default=300.0)
    p.add_argument("--hazard", default="gm", choices=sorted(srgm.HAZARD_FAMILIES))
    p.add_argument("--params", default="0.1")
    p.add_argument("--steps", type=int, default=30)
    p.add_argument("--scenario", type=int, default=1)
    p.add_argument("--noise-y1", dest="noise_y1", type=float, default=0.01)
    p.add_argument("--noise-y2", dest="noise_y2", type=float, default=0.05)
    common(p, seed=True)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    run = Run(args)
    try:
        code = args.func(args, run)
    except datasets.SchemaViolationError as exc:
        run.write_text("report.json", exc.report.to_json() + "\n")
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_VIOLATIONS
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_ERROR
    finally:
        run.finish()
    return code


if __name__ == "__main__":
    sys.exit(main())
