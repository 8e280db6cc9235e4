"""Case-data ingestion, primary-parameter estimation, and least-squares calibration.

Input files follow the wide time-series layout (columns ``Province/State``,
``Country/Region``, ``Lat``, ``Long``, then one column per date formatted
``M/D/YY``), one row per region; country rows are summed. Cumulative
confirmed/recovered/death counts combine into active cases, the calibration
target. The model counterpart of "active" is A + I + A1 + I1 + Q: reported
actives are confirmed minus closed outcomes, which includes isolated cases.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np
import pandas as pd
from scipy.optimize import least_squares

from .errors import (
    CountryNotFoundError,
    DataQualityWarning,
    EmptyWindowError,
    FitFailureError,
    IntegrationError,
    MalformedHeaderError,
    ParamsError,
)
from .integrate import IntegratorConfig, integrate
from .model import State
from .params import PARAM_NAMES, Params, initial_estimates

__all__ = [
    "SERIES_START",
    "ACTIVE_CUTOFF",
    "VACCINATION_START",
    "DATA_FILENAMES",
    "CaseSeries",
    "ActiveSeries",
    "load_series",
    "derive_active",
    "PrimaryEstimates",
    "estimate_primaries",
    "initial_state_from_active",
    "ParamSpec",
    "FitSpec",
    "default_fit_spec",
    "parse_fit_spec",
    "format_fit_spec",
    "load_fit_spec",
    "FitResult",
    "model_active",
    "fit",
]

#: First column of the canonical global time-series files.
SERIES_START = date(2020, 1, 22)
#: Recovery reporting stops 561 days in (2021-08-05); actives derived past
#: this date carry an artificial ramp and are discarded.
ACTIVE_CUTOFF = SERIES_START + timedelta(days=561)
#: First vaccination doses administered (window start for calibration).
VACCINATION_START = date(2021, 2, 17)

DATA_FILENAMES = {
    "confirmed": "time_series_covid19_confirmed_global.csv",
    "deaths": "time_series_covid19_deaths_global.csv",
    "recovered": "time_series_covid19_recovered_global.csv",
    "vaccinations": "time_series_covid19_vaccinations_global.csv",
}

_META_COLUMNS = ["Province/State", "Country/Region", "Lat", "Long"]


@dataclass(frozen=True)
class CaseSeries:
    """Date-aligned cumulative counts plus daily vaccination doses."""

    dates: tuple[date, ...]
    confirmed_cum: np.ndarray
    deaths_cum: np.ndarray
    recovered_cum: np.ndarray
    vaccinations_daily: np.ndarray

    def __post_init__(self):
        n = len(self.dates)
        for name in ("confirmed_cum", "deaths_cum", "recovered_cum", "vaccinations_daily"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} is not aligned with dates")

    def day_index(self, d: date) -> int:
        """Index of calendar date ``d`` in the series."""
        return (d - self.dates[0]).days


@dataclass(frozen=True)
class ActiveSeries:
    dates: tuple[date, ...]
    values: np.ndarray

    def window(self, start: date, end: date) -> "ActiveSeries":
        keep = [i for i, d in enumerate(self.dates) if start <= d <= end]
        return ActiveSeries(
            dates=tuple(self.dates[i] for i in keep),
            values=self.values[keep],
        )

    def day_offsets(self) -> np.ndarray:
        return np.array([(d - self.dates[0]).days for d in self.dates], dtype=float)


def _read_wide(path, country: str, value_label: str) -> tuple[list[date], np.ndarray]:
    df = pd.read_csv(path)
    if list(df.columns[:4]) != _META_COLUMNS:
        raise MalformedHeaderError(
            f"{path}: expected leading columns {_META_COLUMNS}, got {list(df.columns[:4])}"
        )
    try:
        dates = [pd.to_datetime(c, format="%m/%d/%y").date() for c in df.columns[4:]]
    except (ValueError, TypeError) as exc:
        raise MalformedHeaderError(f"{path}: date columns must be M/D/YY: {exc}") from exc
    if any(b <= a for a, b in zip(dates, dates[1:])):
        raise MalformedHeaderError(f"{path}: date columns are not strictly increasing")
    rows = df[df["Country/Region"] == country]
    if rows.empty:
        raise CountryNotFoundError(f"{path}: no rows for country {country!r}")
    values = rows.iloc[:, 4:].to_numpy(dtype=float).sum(axis=0)
    if not np.all(np.isfinite(values)):
        raise MalformedHeaderError(f"{path}: non-numeric {value_label} values for {country!r}")
    return dates, values


def _clamp_monotone(values: np.ndarray, label: str, path) -> np.ndarray:
    drops = np.diff(values) < 0
    if drops.any():
        warnings.warn(
            f"{path}: cumulative {label} series decreases at {int(drops.sum())} point(s); "
            "clamping to the running maximum (revisions in the source data)",
            DataQualityWarning,
            stacklevel=3,
        )
        return np.maximum.accumulate(values)
    return values


def load_series(
    confirmed_path,
    deaths_path,
    recovered_path,
    vaccination_path,
    country: str = "South Africa",
) -> CaseSeries:
    """Extract one country from the four wide-format files and join on date.

    Cumulative series are clamped monotone with a :class:`DataQualityWarning`
    when the source contains downward revisions. Vaccination doses may start
    later than the case series; missing dates count as zero doses.
    """
    conf_dates, conf = _read_wide(confirmed_path, country, "confirmed")
    death_dates, deaths = _read_wide(deaths_path, country, "deaths")
    rec_dates, rec = _read_wide(recovered_path, country, "recovered")
    vax_dates, vax = _read_wide(vaccination_path, country, "vaccination")

    common = sorted(set(conf_dates) & set(death_dates) & set(rec_dates))
    if not common:
        raise MalformedHeaderError("case files share no dates")

    def pick(dates_list, values):
        idx = {d: i for i, d in enumerate(dates_list)}
        return np.array([values[idx[d]] for d in common])

    conf = _clamp_monotone(pick(conf_dates, conf), "confirmed", confirmed_path)
    deaths = _clamp_monotone(pick(death_dates, deaths), "deaths", deaths_path)
    rec = _clamp_monotone(pick(rec_dates, rec), "recovered", recovered_path)
    vax_idx = {d: i for i, d in enumerate(vax_dates)}
    vax_joined = np.array([vax[vax_idx[d]] if d in vax_idx else 0.0 for d in common])
    return CaseSeries(
        dates=tuple(common),
        confirmed_cum=conf,
        deaths_cum=deaths,
        recovered_cum=rec,
        vaccinations_daily=vax_joined,
    )


def derive_active(series: CaseSeries, cutoff: date = ACTIVE_CUTOFF) -> ActiveSeries:
    """active = confirmed - recovered - deaths, truncated at the cutoff date."""
    active = series.confirmed_cum - series.recovered_cum - series.deaths_cum
    keep = [i for i, d in enumerate(series.dates) if d <= cutoff]
    return ActiveSeries(dates=tuple(series.dates[i] for i in keep), values=active[keep])


@dataclass(frozen=True)
class PrimaryEstimates:
    """Demographics- and dose-derived recruitment, death, and vaccination rates."""

    Lambda: float
    mu: float
    sigma: float
    doses_total: float
    window_days: int


def estimate_primaries(
    series: CaseSeries,
    population: float,
    growth_rate: float = 0.012,
    death_rate: float = 9.468e-3,
    window: tuple[date, date] = (VACCINATION_START, ACTIVE_CUTOFF),
    window_days: int = 172,
) -> PrimaryEstimates:
    """Estimate recruitment, natural death, and vaccination rates.

    Lambda = population * (growth_rate + death_rate) / 365 (daily inflow
    balancing growth and deaths), mu = death_rate / 365, sigma = total doses
    over the window divided by window_days * population. ``window_days``
    defaults to the reference 172-day count for the canonical window even
    though the calendar span is 170 days; pass the exact span to override.
    """
    start, end = window
    in_window = [(d, v) for d, v in zip(series.dates, series.vaccinations_daily) if start <= d <= end]
    if not in_window:
        raise EmptyWindowError(f"series has no dates between {start} and {end}")
    doses = float(sum(v for _, v in in_window))
    return PrimaryEstimates(
        Lambda=population * (growth_rate + death_rate) / 365.0,
        mu=death_rate / 365.0,
        sigma=doses / (window_days * population),
        doses_total=doses,
        window_days=window_days,
    )


def initial_state_from_active(
    active0: float,
    population: float,
    eta_split: float = 0.45,
    q_fraction: float = 0.5,
    vaccinated0: float = 0.0,
) -> State:
    """Seed a full state from one observed active-case count.

    A fraction ``q_fraction`` of actives sits in isolation; the remainder
    splits asymptomatic/symptomatic by ``eta_split``. Vaccinated and
    breakthrough compartments start empty (vaccination has just begun), as
    does R; susceptibles absorb the rest of the population.
    """
    q = q_fraction * active0
    rest = active0 - q
    return State(
        S=population - active0 - vaccinated0,
        V=vaccinated0,
        A=eta_split * rest,
        I=(1.0 - eta_split) * rest,
        A1=0.0,
        I1=0.0,
        Q=q,
        R=0.0,
    )


@dataclass(frozen=True)
class ParamSpec:
    """Per-parameter calibration entry: start value, box, free/fixed flag."""

    initial: float
    lower: float
    upper: float
    free: bool = True

    def __post_init__(self):
        if self.free and not (self.lower <= self.initial <= self.upper):
            raise ValueError(
                f"initial {self.initial!r} outside bounds [{self.lower!r}, {self.upper!r}]"
            )


@dataclass(frozen=True)
class FitSpec:
    entries: dict[str, ParamSpec]

    def __post_init__(self):
        missing = [n for n in PARAM_NAMES if n not in self.entries]
        unknown = [n for n in self.entries if n not in PARAM_NAMES]
        if missing or unknown:
            raise ValueError(f"fit spec mismatch; missing={missing}, unknown={unknown}")

    @property
    def free_names(self) -> tuple[str, ...]:
        return tuple(n for n in PARAM_NAMES if self.entries[n].free)

    def initial_vector(self) -> np.ndarray:
        return np.array([self.entries[n].initial for n in self.free_names])

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([self.entries[n].lower for n in self.free_names])
        hi = np.array([self.entries[n].upper for n in self.free_names])
        return lo, hi

    def build_params(self, theta: np.ndarray) -> Params:
        values = {n: self.entries[n].initial for n in PARAM_NAMES}
        for name, val in zip(self.free_names, theta):
            values[name] = float(val)
        return Params(**values)


def parse_fit_spec(text: str) -> FitSpec:
    """Parse a fit-spec CSV with columns ``param,initial,lower,upper,free``.

    ``free`` is ``true``/``false``; fixed rows may leave lower/upper empty,
    in which case they collapse to the initial value.
    """
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].replace(" ", "") != "param,initial,lower,upper,free":
        raise ParamsError("fit spec must start with header 'param,initial,lower,upper,free'")
    entries: dict[str, ParamSpec] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 5:
            raise ParamsError(f"fit spec line {lineno}: expected 5 columns, got {len(cells)}")
        name, initial, lower, upper, free = cells
        if name in entries:
            raise ParamsError(f"fit spec line {lineno}: duplicate parameter {name!r}")
        if free.lower() not in ("true", "false"):
            raise ParamsError(f"fit spec line {lineno}: free must be true/false, got {free!r}")
        try:
            init_v = float(initial)
            lo_v = float(lower) if lower else init_v
            hi_v = float(upper) if upper else init_v
            entries[name] = ParamSpec(initial=init_v, lower=lo_v, upper=hi_v, free=free.lower() == "true")
        except ValueError as exc:
            raise ParamsError(f"fit spec line {lineno}: {exc}") from exc
    try:
        return FitSpec(entries=entries)
    except ValueError as exc:
        raise ParamsError(str(exc)) from exc


def format_fit_spec(spec: FitSpec) -> str:
    lines = ["param,initial,lower,upper,free"]
    for name in PARAM_NAMES:
        e = spec.entries[name]
        lines.append(f"{name},{e.initial!r},{e.lower!r},{e.upper!r},{str(e.free).lower()}")
    return "\n".join(lines) + "\n"


def load_fit_spec(path) -> FitSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_fit_spec(fh.read())


def default_fit_spec(overrides: dict[str, ParamSpec] | None = None) -> FitSpec:
    """Calibration spec: reference initial estimates, boxes, and fixed rows.

    Lambda, sigma, mu, and omega are held fixed. Three boxes are tabulated
    against a companion parameter (theta1 < theta, phi > eta, delta1 < delta);
    a box-constrained optimizer needs constants, so each uses the companion's
    own range endpoint, which keeps the box inside the tabulated interval for
    every admissible companion value.
    """
    init = initial_estimates()
    omega = init.omega

    def fixed(v):
        return ParamSpec(initial=v, lower=v, upper=v, free=False)

    entries = {
        "Lambda": fixed(init.Lambda),
        "sigma": fixed(init.sigma),
        "mu": fixed(init.mu),
        "omega": fixed(omega),
        "theta": ParamSpec(init.theta, 0.01, 0.03),
        "theta1": ParamSpec(init.theta1, 0.01, 0.03),
        "gamma1": ParamSpec(init.gamma1, 0.0544, 0.1167),
        "gamma2": ParamSpec(init.gamma2, 0.0066, 0.0313),
        "gamma3": ParamSpec(init.gamma3, 0.0694, 0.0974),
        "gamma4": ParamSpec(init.gamma4, 0.0544, 0.1167),
        "gamma5": ParamSpec(init.gamma5, 0.0066, 0.0313),
        "varphi": ParamSpec(init.varphi, 0.0011, omega),
        "phi": ParamSpec(init.phi, 0.3, 1.0),
        "rho": ParamSpec(init.rho, 0.3, 1.0),
        "eta": ParamSpec(init.eta, 0.3, 0.6),
        "epsilon": ParamSpec(init.epsilon, 0.1057, 0.1472),
        "epsilon1": ParamSpec(init.epsilon1, 0.1057, 0.1472),
        "delta": ParamSpec(init.delta, 0.0012, 0.0016),
        "delta1": ParamSpec(init.delta1, 0.0, 0.0012),
        "beta": ParamSpec(init.beta, 0.0, 3.0),
        "nu": ParamSpec(init.nu, 0.0, 6.0),
        "nu1": ParamSpec(init.nu1, 0.0, 6.0),
        "kappa": ParamSpec(init.kappa, 1.0, 6.0),
    }
    if overrides:
        entries.update(overrides)
    return FitSpec(entries=entries)


@dataclass(frozen=True)
class FitResult:
    params: Params
    loss: float
    loss_initial: float
    at_bound: dict[str, bool]
    n_evaluations: int
    best_start: int
    n_starts: int


_FAILED_RESIDUAL = 1e8


def model_active(
    params: Params,
    initial_state: State,
    t_offsets: np.ndarray,
    config: IntegratorConfig | None = None,
) -> np.ndarray:
    """A + I + A1 + I1 + Q sampled at uniformly spaced day offsets."""
    t_offsets = np.asarray(t_offsets, dtype=float)
    steps = np.diff(t_offsets)
    if t_offsets[0] != 0.0 or steps.size == 0 or not np.allclose(steps, steps[0]):
        raise ValueError("t_offsets must be uniformly spaced and start at 0")
    cfg = config or IntegratorConfig(rel_tol=1e-7, output_stride=float(steps[0]))
    traj = integrate(initial_state, params, float(t_offsets[-1]), cfg)
    if traj.times.size != t_offsets.size or not np.allclose(traj.times, initial_state.t + t_offsets):
        raise RuntimeError("integrator samples do not line up with the requested offsets")
    return traj.total_infected()


def fit(
    spec: FitSpec,
    active: ActiveSeries,
    initial_state: State,
    seed: int = 0,
    n_starts: int = 8,
    config: IntegratorConfig | None = None,
    max_nfev: int | None = 4000,
) -> FitResult:
    """Bound-constrained least squares on active cases with multi-start.

    Minimizes sum_t (model_active(t) - data(t))^2 with a trust-region
    reflective solver (monotone acceptance). Start 1 uses the spec's initial
    estimates; the remaining ``n_starts - 1`` starts are drawn uniformly
    inside the bounds from a seeded generator, so results are reproducible
    bit-for-bit. Candidates whose integration fails score an effectively
    infinite loss; if every start ends there, raises
    :class:`FitFailureError`.

    ``max_nfev`` caps solver iterations per start. The default is generous
    because the identifiable optimum sits at the end of a shallow valley
    that a trust-region method traverses slowly.
    """
    if len(active.dates) == 0:
        raise FitFailureError("empty active-case series")
    data = np.asarray(active.values, dtype=float)
    offsets = active.day_offsets()
    # The loss surface has long, shallow compensation valleys; resolving
    # their gradient needs trajectories well below the finite-difference
    # step's effect, hence the tight integration tolerance.
    cfg = config or IntegratorConfig(rel_tol=1e-9, output_stride=float(np.diff(offsets)[0]))
    lo, hi = spec.bounds()
    n_evals = 0

    def residuals(theta):
        nonlocal n_evals
        n_evals += 1
        params = spec.build_params(theta)
        try:
            model = model_active(params, initial_state, offsets, cfg)
        except (IntegrationError, FloatingPointError):
            return np.full(data.size, _FAILED_RESIDUAL)
        return model - data

    x0 = spec.initial_vector()
    loss_initial = float(np.sum(residuals(x0) ** 2))

    rng = np.random.default_rng(seed)
    starts = [x0] + [rng.uniform(lo, hi) for _ in range(max(0, n_starts - 1))]
    # Free parameters span four orders of magnitude; scale steps by the box
    # width so the trust region treats them comparably.
    x_scale = np.maximum(hi - lo, 1e-8)
    best = None
    best_idx = -1
    for idx, start in enumerate(starts):
        sol = least_squares(
            residuals, start, bounds=(lo, hi), method="trf",
            x_scale=x_scale, diff_step=1e-6,
            ftol=1e-12, xtol=1e-12, gtol=1e-12, max_nfev=max_nfev,
        )
        if best is None or sol.cost < best.cost:
            best, best_idx = sol, idx

    loss = float(2.0 * best.cost)  # least_squares cost is half the SSE
    if loss >= 0.1 * data.size * _FAILED_RESIDUAL**2:
        raise FitFailureError("every candidate evaluation failed during integration")

    span = np.maximum(hi - lo, 1e-300)
    at_bound = {
        name: bool(
            (best.x[i] - lo[i]) <= 1e-9 * span[i] or (hi[i] - best.x[i]) <= 1e-9 * span[i]
        )
        for i, name in enumerate(spec.free_names)
    }
    return FitResult(
        params=spec.build_params(best.x),
        loss=loss,
        loss_initial=loss_initial,
        at_bound=at_bound,
        n_evaluations=n_evals,
        best_start=best_idx,
        n_starts=len(starts),
    )
