"""Core model: state, aggregate rates, force of infection, right-hand side.

Compartments (people): S unvaccinated susceptible, V vaccinated, A/I
asymptomatic/symptomatic unvaccinated infectious, A1/I1 their vaccinated
counterparts, Q isolated, R recovered. All operations here are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePopulationError
from .params import Params, params_vector

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap

__all__ = [
    "COMPARTMENTS",
    "State",
    "DerivedRates",
    "derived_rates",
    "force_of_infection",
    "rhs",
    "rhs_array",
    "rhs_core",
    "params_vector",
    "total_population_derivative",
]

#: Compartment names in state-vector order.
COMPARTMENTS = ("S", "V", "A", "I", "A1", "I1", "Q", "R")


@dataclass(frozen=True)
class State:
    """One point of the system: compartment counts plus the time stamp."""

    S: float
    V: float
    A: float
    I: float
    A1: float
    I1: float
    Q: float
    R: float
    t: float = 0.0

    def __post_init__(self):
        for name in COMPARTMENTS:
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"compartment {name} must be finite, got {v!r}")
            if v < 0:
                raise ValueError(f"compartment {name} must be >= 0, got {v!r}")

    @property
    def n(self) -> float:
        """Total population."""
        return self.S + self.V + self.A + self.I + self.A1 + self.I1 + self.Q + self.R

    @property
    def total_infected(self) -> float:
        """All infected compartments, isolated included (A+I+A1+I1+Q)."""
        return self.A + self.I + self.A1 + self.I1 + self.Q

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.S, self.V, self.A, self.I, self.A1, self.I1, self.Q, self.R],
            dtype=float,
        )

    @classmethod
    def from_array(cls, y, t: float = 0.0) -> "State":
        y = np.asarray(y, dtype=float)
        if y.shape != (8,):
            raise ValueError(f"expected 8 compartments, got shape {y.shape}")
        return cls(*y, t=t)


@dataclass(frozen=True)
class DerivedRates:
    """Aggregate exit rates k0..k6 and transmission blocks B1..B4.

    k0 = sigma+mu, k1 = theta+gamma1+mu, k2 = epsilon+gamma2+delta+mu,
    k3 = theta1+gamma4+mu, k4 = epsilon1+gamma5+delta1+mu,
    k5 = gamma3+delta+mu, k6 = omega+mu. The blocks scale beta by the
    susceptible/vaccinated shares at the disease-free equilibrium.
    """

    k0: float
    k1: float
    k2: float
    k3: float
    k4: float
    k5: float
    k6: float
    B1: float
    B2: float
    B3: float
    B4: float


def derived_rates(p: Params) -> DerivedRates:
    k0 = p.sigma + p.mu
    return DerivedRates(
        k0=k0,
        k1=p.theta + p.gamma1 + p.mu,
        k2=p.epsilon + p.gamma2 + p.delta + p.mu,
        k3=p.theta1 + p.gamma4 + p.mu,
        k4=p.epsilon1 + p.gamma5 + p.delta1 + p.mu,
        k5=p.gamma3 + p.delta + p.mu,
        k6=p.omega + p.mu,
        B1=p.eta * p.beta * p.mu / k0,
        B2=(1.0 - p.eta) * p.beta * p.mu / k0,
        B3=p.phi * (1.0 - p.rho) * p.beta * p.sigma / k0,
        B4=(1.0 - p.phi) * (1.0 - p.rho) * p.beta * p.sigma / k0,
    )


def force_of_infection(state: State, params: Params) -> float:
    """Per-susceptible infection rate beta*(I + nu*A + nu1*A1 + kappa*I1)/N.

    Q and R contribute nothing. Raises :class:`DegeneratePopulationError`
    when N = 0.
    """
    n = state.n
    if n <= 0.0:
        raise DegeneratePopulationError("total population is zero; force of infection undefined")
    p = params
    return p.beta * (state.I + p.nu * state.A + p.nu1 * state.A1 + p.kappa * state.I1) / n


def _rhs_body(y, p):
    # p is the packed parameter vector in canonical order; see PARAM_NAMES.
    n = y[0] + y[1] + y[2] + y[3] + y[4] + y[5] + y[6] + y[7]
    lam = p[19] * (y[3] + p[20] * y[2] + p[21] * y[4] + p[22] * y[5]) / n
    lam_v = (1.0 - p[12]) * lam
    out = np.empty(8)
    out[0] = p[0] - (lam + p[1] + p[2]) * y[0] + p[11] * y[7]
    out[1] = p[1] * y[0] - (lam_v + p[2]) * y[1] + (p[10] - p[11]) * y[7]
    out[2] = p[13] * lam * y[0] - (p[3] + p[5] + p[2]) * y[2]
    out[3] = (1.0 - p[13]) * lam * y[0] - (p[15] + p[17] + p[6] + p[2]) * y[3]
    out[4] = p[14] * lam_v * y[1] - (p[4] + p[8] + p[2]) * y[4]
    out[5] = (1.0 - p[14]) * lam_v * y[1] - (p[16] + p[9] + p[18] + p[2]) * y[5]
    out[6] = p[3] * y[2] + p[4] * y[4] + p[15] * y[3] + p[16] * y[5] - (p[7] + p[17] + p[2]) * y[6]
    out[7] = (
        p[5] * y[2] + p[6] * y[3] + p[7] * y[6] + p[8] * y[4] + p[9] * y[5]
        - (p[10] + p[2]) * y[7]
    )
    return out


#: Derivative of the packed state given the packed parameter vector; the
#: single source of the system's equations, shared with the compiled stepper.
rhs_core = njit(cache=True)(_rhs_body)


def rhs_array(y: np.ndarray, p: Params) -> np.ndarray:
    """Time derivative of the raw state vector."""
    y = np.asarray(y, dtype=float)
    if y.sum() <= 0.0:
        raise DegeneratePopulationError("total population is zero; force of infection undefined")
    return rhs_core(y, params_vector(p))


def rhs(state: State, params: Params) -> np.ndarray:
    """Eight-component derivative of the system at ``state``.

    The components sum to Lambda - mu*N - delta*(I+Q) - delta1*I1 (net
    recruitment minus deaths), which tests exploit as a conservation check.
    """
    return rhs_array(state.as_array(), params)


def total_population_derivative(state: State, params: Params) -> float:
    """Closed form for N'(t): Lambda - mu*N - delta*(I+Q) - delta1*I1."""
    return (
        params.Lambda
        - params.mu * state.n
        - params.delta * (state.I + state.Q)
        - params.delta1 * state.I1
    )
