"""Model parameters: validation, canonical values, file I/O, random sampling.

All rates are per day; fractions are dimensionless. ``Params`` is a frozen
dataclass, safe to share across threads; use :func:`dataclasses.replace` to
derive modified copies.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import ParamsError

__all__ = [
    "PARAM_NAMES",
    "Params",
    "fitted_params",
    "initial_estimates",
    "parse_params",
    "format_params",
    "load_params",
    "save_params",
    "params_vector",
    "sample_params",
]

#: Canonical ordering of the 23 model parameters (ASCII names).
PARAM_NAMES = (
    "Lambda", "sigma", "mu",
    "theta", "theta1",
    "gamma1", "gamma2", "gamma3", "gamma4", "gamma5",
    "omega", "varphi",
    "rho", "eta", "phi",
    "epsilon", "epsilon1",
    "delta", "delta1",
    "beta",
    "nu", "nu1", "kappa",
)

_FRACTIONS = ("rho", "eta", "phi")


@dataclass(frozen=True)
class Params:
    """The 23 model parameters.

    Attributes
    ----------
    Lambda : recruitment into the unvaccinated susceptible class (people/day)
    sigma : vaccination rate (1/day)
    mu : natural death rate (1/day)
    theta, theta1 : isolation rates from the asymptomatic classes A, A1
    gamma1..gamma5 : recovery rates from A, I, Q, A1, I1 respectively
    omega : immunity-waning rate out of R
    varphi : share of the waning outflow returning unvaccinated (rate, <= omega)
    rho : vaccine effectiveness against infection (fraction)
    eta, phi : asymptomatic fractions among unvaccinated / vaccinated infections
    epsilon, epsilon1 : isolation rates from the symptomatic classes I, I1
    delta, delta1 : disease-induced death rates (unvaccinated / vaccinated)
    beta : effective contact rate (1/day)
    nu, nu1, kappa : relative infectiousness of A, A1, I1 versus I
    """

    Lambda: float
    sigma: float
    mu: float
    theta: float
    theta1: float
    gamma1: float
    gamma2: float
    gamma3: float
    gamma4: float
    gamma5: float
    omega: float
    varphi: float
    rho: float
    eta: float
    phi: float
    epsilon: float
    epsilon1: float
    delta: float
    delta1: float
    beta: float
    nu: float
    nu1: float
    kappa: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v):
                raise ParamsError(f"parameter {f.name} must be finite, got {v!r}")
            if v < 0:
                raise ParamsError(f"parameter {f.name} must be >= 0, got {v!r}")
        if self.Lambda <= 0:
            raise ParamsError(f"Lambda must be > 0, got {self.Lambda!r}")
        if self.mu <= 0:
            raise ParamsError(f"mu must be > 0, got {self.mu!r}")
        for name in _FRACTIONS:
            v = getattr(self, name)
            if v > 1:
                raise ParamsError(f"{name} is a fraction, must lie in [0, 1], got {v!r}")
        # The recovered class splits its waning outflow into varphi*R (to S)
        # and (omega - varphi)*R (to V); both must be non-negative.
        if self.varphi > self.omega:
            raise ParamsError(
                f"varphi must not exceed omega (got varphi={self.varphi!r}, omega={self.omega!r})"
            )

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def replace(self, **changes) -> "Params":
        return replace(self, **changes)


def fitted_params() -> Params:
    """Canonical fitted parameter vector (calibration optimum)."""
    return Params(
        Lambda=3538.3,
        sigma=7.9e-4,
        mu=2.6433e-5,
        theta=0.03,
        theta1=0.01,
        gamma1=0.1167,
        gamma2=0.0066,
        gamma3=0.0974,
        gamma4=0.1141,
        gamma5=0.0233,
        omega=1.0 / 120.0,
        varphi=0.0011,
        rho=0.300,
        eta=0.30,
        phi=0.468,
        epsilon=0.1057,
        epsilon1=0.1057,
        delta=0.0012,
        delta1=0.0,
        beta=0.1878,
        nu=1.0,
        nu1=6.0,
        kappa=6.0,
    )


def initial_estimates() -> Params:
    """Literature-based initial estimates used to seed the calibration."""
    return Params(
        Lambda=3538.3,
        sigma=7.9e-4,
        mu=2.6433e-5,
        theta=0.0267,
        theta1=0.0267,
        gamma1=0.0904,
        gamma2=0.0175,
        gamma3=0.09,
        gamma4=0.095,
        gamma5=0.0275,
        omega=1.0 / 120.0,
        varphi=0.0022,
        rho=0.75,
        eta=0.45,
        phi=0.5,
        epsilon=0.1252,
        epsilon1=0.1252,
        delta=0.0015,
        delta1=0.0011,
        beta=0.9,
        nu=3.5,
        nu1=3.5,
        kappa=1.25,
    )


def parse_params(text: str) -> Params:
    """Parse a flat ``name = value`` parameter file.

    One line per parameter, ``#`` starts a comment. Unknown keys and missing
    keys are rejected with the offending names in the message.
    """
    values: dict[str, float] = {}
    unknown: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParamsError(f"line {lineno}: expected 'name = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in PARAM_NAMES:
            unknown.append(key)
            continue
        if key in values:
            raise ParamsError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = float(val.strip())
        except ValueError as exc:
            raise ParamsError(f"line {lineno}: bad value for {key!r}: {val.strip()!r}") from exc
    if unknown:
        raise ParamsError(f"unknown parameter keys: {', '.join(sorted(unknown))}")
    missing = [name for name in PARAM_NAMES if name not in values]
    if missing:
        raise ParamsError(f"missing parameter keys: {', '.join(missing)}")
    return Params(**values)


def format_params(params: Params) -> str:
    lines = [f"{name} = {getattr(params, name)!r}" for name in PARAM_NAMES]
    return "\n".join(lines) + "\n"


def load_params(path) -> Params:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_params(fh.read())


def save_params(params: Params, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_params(params))


def params_vector(params: Params) -> np.ndarray:
    """Pack the 23 parameters into a float vector in canonical order."""
    return np.array([getattr(params, name) for name in PARAM_NAMES])


def sample_params(rng: np.random.Generator) -> Params:
    """Draw a random valid parameter set.

    Ranges are broad but bounded away from degenerate corners (zero exit
    rates, zero infectiousness of every class) so that derived quantities
    stay well-conditioned.
    """
    omega = rng.uniform(0.0, 0.1)
    return Params(
        Lambda=rng.uniform(100.0, 5000.0),
        sigma=rng.uniform(1e-5, 0.05),
        mu=rng.uniform(1e-5, 1e-3),
        theta=rng.uniform(0.001, 0.5),
        theta1=rng.uniform(0.001, 0.5),
        gamma1=rng.uniform(0.001, 0.5),
        gamma2=rng.uniform(0.001, 0.5),
        gamma3=rng.uniform(0.001, 0.5),
        gamma4=rng.uniform(0.001, 0.5),
        gamma5=rng.uniform(0.001, 0.5),
        omega=omega,
        varphi=rng.uniform(0.0, omega),
        rho=rng.uniform(0.0, 0.95),
        eta=rng.uniform(0.05, 0.95),
        phi=rng.uniform(0.05, 0.95),
        epsilon=rng.uniform(0.001, 0.5),
        epsilon1=rng.uniform(0.001, 0.5),
        delta=rng.uniform(0.0, 0.1),
        delta1=rng.uniform(0.0, 0.1),
        beta=rng.uniform(0.01, 3.0),
        nu=rng.uniform(0.1, 6.0),
        nu1=rng.uniform(0.1, 6.0),
        kappa=rng.uniform(0.1, 6.0),
    )
