"""Command-line front door: simulate, analyze, fit, sensitivity, bistability.

Every subcommand is deterministic given its inputs and seed. Exit codes:
0 success, 2 config/IO problems, 3 numerical failures, 4 data-quality
failures. The output directory comes from ``--out``, falling back to the
``VAXDYN_OUT`` environment variable, then the working directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import fitting
from .bifurcation import (
    bifurcation_coefficients,
    bistability_demo,
    critical_beta,
    witness_initial_states,
)
from .equilibria import classify, build_polynomial, endemic_equilibria, equilibria_to_csv
from .errors import (
    DegeneratePopulationError,
    DegenerateRatesError,
    DegenerateSpectrumError,
    DerivativeInstabilityError,
    EmptyWindowError,
    FitFailureError,
    IngestionError,
    IntegrationError,
    InvalidRegimeError,
    NoThresholdError,
    ParamsError,
    UndefinedIndexError,
)
from .integrate import IntegratorConfig, integrate, trajectory_to_csv
from .model import COMPARTMENTS, State
from .params import load_params, save_params
from .sensitivity import chart_data_to_csv, sensitivity_table, table_to_csv
from .threshold import dfe_local_stability, disease_free_equilibrium, r0

_CONFIG_ERRORS = (ParamsError, FileNotFoundError, NotADirectoryError, IsADirectoryError, PermissionError)
_NUMERICAL_ERRORS = (
    IntegrationError,
    NoThresholdError,
    DegenerateSpectrumError,
    DegenerateRatesError,
    DegeneratePopulationError,
    InvalidRegimeError,
    FitFailureError,
    DerivativeInstabilityError,
    UndefinedIndexError,
)
_DATA_ERRORS = (IngestionError, EmptyWindowError)


def _load_state(path) -> State:
    values: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in COMPARTMENTS and key != "t":
                raise ParamsError(f"{path} line {lineno}: unknown state key {key!r}")
            values[key] = float(val.strip())
    missing = [c for c in COMPARTMENTS if c not in values]
    if missing:
        raise ParamsError(f"{path}: missing state keys: {', '.join(missing)}")
    return State(**values)


def _integrator_config(args) -> IntegratorConfig:
    kwargs = {}
    if args.rel_tol is not None:
        kwargs["rel_tol"] = args.rel_tol
    if getattr(args, "stride", None) is not None:
        kwargs["output_stride"] = args.stride
    return IntegratorConfig(**kwargs)


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("VAXDYN_OUT") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_simulate(args) -> int:
    params = load_params(args.params)
    initial = _load_state(args.initial) if args.initial else disease_free_equilibrium(params)
    out = _out_dir(args)
    traj = integrate(initial, params, args.t_end, _integrator_config(args))
    trajectory_to_csv(traj, out / "trajectory.csv")

    active = traj.total_infected()
    peak = int(np.argmax(active))
    lines = [r0(params).as_text().rstrip()]
    lines.append(f"peak_active = {active[peak]!r}")
    lines.append(f"peak_active_time = {traj.times[peak]!r}")
    for name in COMPARTMENTS:
        lines.append(f"final_{name} = {traj.compartment(name)[-1]!r}")
    lines.append(f"final_N = {traj.total_population()[-1]!r}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out / 'trajectory.csv'} and {out / 'summary.txt'}")
    return 0


def cmd_analyze(args) -> int:
    params = load_params(args.params)
    out = _out_dir(args)

    breakdown = r0(params)
    dfe = disease_free_equilibrium(params)
    stability = dfe_local_stability(params)
    poly = build_polynomial(params)
    case = classify(poly)
    eqs = endemic_equilibria(params, include_infeasible=True)
    equilibria_to_csv(eqs, out / "equilibria.csv")

    lines = ["[reproduction-number]", breakdown.as_text().rstrip()]
    lines += [
        "",
        "[disease-free-equilibrium]",
        f"S = {dfe.S!r}",
        f"V = {dfe.V!r}",
        f"max_real_eigenvalue = {stability.max_real_part!r}",
    ]
    lines += [
        "",
        "[endemic-polynomial]",
        f"Q3 = {poly.Q3!r}",
        f"Q2 = {poly.Q2!r}",
        f"Q1 = {poly.Q1!r}",
        f"Q0 = {poly.Q0!r}",
        f"sign_case = {case.case_id}",
        f"r0_regime = {case.r0_regime}",
        f"possible_positive_roots = {sorted(case.possible_root_counts)}",
        f"n_feasible_equilibria = {sum(1 for e in eqs if e.feasible)}",
    ]
    bstar = critical_beta(params)
    report = bifurcation_coefficients(params.replace(beta=bstar))
    lines += ["", "[bifurcation]", report.as_text().rstrip()]
    (out / "analysis.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out / 'analysis.txt'} and {out / 'equilibria.csv'}")
    return 0


def cmd_fit(args) -> int:
    data_dir = Path(args.data_dir)
    paths = {key: data_dir / name for key, name in fitting.DATA_FILENAMES.items()}
    for p in paths.values():
        if not p.exists():
            raise FileNotFoundError(f"missing data file: {p}")
    out = _out_dir(args)

    series = fitting.load_series(
        paths["confirmed"], paths["deaths"], paths["recovered"], paths["vaccinations"],
        country=args.country,
    )
    active = fitting.derive_active(series)
    window = active.window(fitting.VACCINATION_START, fitting.ACTIVE_CUTOFF)
    if len(window.dates) == 0:
        raise EmptyWindowError("no active-case data in the calibration window")
    primaries = fitting.estimate_primaries(series, population=args.population)

    spec = fitting.load_fit_spec(args.fit_spec) if args.fit_spec else fitting.default_fit_spec()
    initial_state = fitting.initial_state_from_active(float(window.values[0]), args.population)
    result = fitting.fit(
        spec, window, initial_state,
        seed=args.seed, n_starts=args.starts, max_nfev=args.max_nfev,
    )

    save_params(result.params, out / "params_fitted.txt")
    horizon = float(window.day_offsets()[-1])
    fitted_traj = integrate(initial_state, result.params, horizon, IntegratorConfig(rel_tol=1e-9))
    trajectory_to_csv(fitted_traj, out / "fitted_trajectory.csv")
    model = fitted_traj.total_infected()
    with open(out / "residuals.csv", "w", encoding="utf-8") as fh:
        fh.write("date,data_active,model_active,residual\n")
        for d, obs, sim in zip(window.dates, window.values, model):
            fh.write(f"{d.isoformat()},{obs!r},{sim!r},{(sim - obs)!r}\n")
    summary = [
        f"loss = {result.loss!r}",
        f"loss_initial = {result.loss_initial!r}",
        f"n_evaluations = {result.n_evaluations}",
        f"best_start = {result.best_start}",
        f"at_bound = {','.join(sorted(n for n, b in result.at_bound.items() if b)) or 'none'}",
        f"estimated_Lambda = {primaries.Lambda!r}",
        f"estimated_mu = {primaries.mu!r}",
        f"estimated_sigma = {primaries.sigma!r}",
    ]
    (out / "fit_summary.txt").write_text("\n".join(summary) + "\n", encoding="utf-8")
    print(
        f"wrote {out / 'params_fitted.txt'}, {out / 'fitted_trajectory.csv'}, "
        f"{out / 'residuals.csv'}, {out / 'fit_summary.txt'}"
    )
    return 0


def cmd_sensitivity(args) -> int:
    params = load_params(args.params)
    out = _out_dir(args)
    rows = sensitivity_table(params)
    table_to_csv(rows, out / "sensitivity.csv")
    chart_data_to_csv(rows, out / "sensitivity_chart.csv")
    print(f"wrote {out / 'sensitivity.csv'} and {out / 'sensitivity_chart.csv'}")
    return 0


def cmd_bistability(args) -> int:
    params = load_params(args.params)
    out = _out_dir(args)
    if args.initial_low and args.initial_high:
        low, high = _load_state(args.initial_low), _load_state(args.initial_high)
    else:
        eqs = endemic_equilibria(params)
        if not eqs:
            raise InvalidRegimeError(
                "no feasible endemic equilibrium to seed initial states; "
                "pass --initial-low/--initial-high explicitly"
            )
        low, high = witness_initial_states(params, eqs)
    result = bistability_demo(params, low, high, t_end=args.t_end)
    trajectory_to_csv(result.trajectory_low, out / "trajectory_low.csv")
    trajectory_to_csv(result.trajectory_high, out / "trajectory_high.csv")
    summary = [
        f"attractor_low = {result.attractor_low}",
        f"attractor_high = {result.attractor_high}",
        f"final_infected_low = {result.final_infected_low!r}",
        f"final_infected_high = {result.final_infected_high!r}",
        f"bistable = {str(result.bistable).lower()}",
    ]
    (out / "attractors.txt").write_text("\n".join(summary) + "\n", encoding="utf-8")
    print(f"wrote {out / 'trajectory_low.csv'}, {out / 'trajectory_high.csv'}, {out / 'attractors.txt'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vaxdyn",
        description="Vaccination epidemic model: simulation, analysis, calibration.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, params_required=True):
        if params_required:
            p.add_argument("--params", required=True, help="flat key=value parameter file")
        p.add_argument("--out", default=None, help="output directory (default: $VAXDYN_OUT or .)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--rel-tol", type=float, default=None, dest="rel_tol")

    p_sim = sub.add_parser("simulate", help="integrate a trajectory and summarize it")
    common(p_sim)
    p_sim.add_argument("--initial", default=None, help="initial-state file (default: disease-free equilibrium)")
    p_sim.add_argument("--t-end", type=float, default=365.0, dest="t_end")
    p_sim.add_argument("--stride", type=float, default=None, help="output sampling stride (days)")
    p_sim.set_defaults(func=cmd_simulate)

    p_ana = sub.add_parser("analyze", help="thresholds, equilibria, bifurcation report")
    common(p_ana)
    p_ana.set_defaults(func=cmd_analyze)

    p_fit = sub.add_parser("fit", help="calibrate to case data in a directory")
    common(p_fit, params_required=False)
    p_fit.add_argument("--data-dir", required=True, dest="data_dir")
    p_fit.add_argument("--country", default="South Africa")
    p_fit.add_argument("--population", type=float, default=60.2e6)
    p_fit.add_argument("--starts", type=int, default=8)
    p_fit.add_argument("--max-nfev", type=int, default=4000, dest="max_nfev",
                       help="solver iteration cap per start")
    p_fit.add_argument("--fit-spec", default=None, dest="fit_spec",
                       help="fit-spec CSV (param,initial,lower,upper,free); default: built-in")
    p_fit.set_defaults(func=cmd_fit)

    p_sen = sub.add_parser("sensitivity", help="reproduction-number sensitivity table")
    common(p_sen)
    p_sen.set_defaults(func=cmd_sensitivity)

    p_bis = sub.add_parser("bistability", help="two-trajectory attractor comparison")
    common(p_bis)
    p_bis.add_argument("--initial-low", default=None, dest="initial_low")
    p_bis.add_argument("--initial-high", default=None, dest="initial_high")
    p_bis.add_argument("--t-end", type=float, default=5000.0, dest="t_end")
    p_bis.set_defaults(func=cmd_bistability)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as exc:
        print(f"vaxdyn: config error: {exc}", file=sys.stderr)
        return 2
    except _DATA_ERRORS as exc:
        print(f"vaxdyn: data error: {exc}", file=sys.stderr)
        return 4
    except _NUMERICAL_ERRORS as exc:
        print(f"vaxdyn: numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
