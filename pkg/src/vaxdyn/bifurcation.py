"""Bifurcation direction at the R0 = 1 threshold.

At the critical contact rate the Jacobian at the disease-free equilibrium
has a simple zero eigenvalue. Contracting the second derivatives of the
vector field with the corresponding left/right null vectors yields two
scalars a and b; a > 0 with b > 0 means a backward bifurcation (a stable
endemic branch protrudes into R0 < 1), a < 0 with b > 0 means the usual
forward exchange of stability.

The null vectors come from an SVD rather than the closed-form component
expressions, which keeps them unambiguous. The second derivatives are
analytic: the only nonlinearity is the force-of-infection coupling
beta * x_target * (I + nu*A + nu1*A1 + kappa*I1) / N, whose Hessian at the
disease-free point carries both the numerator terms and the 1/N variation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSpectrumError,
    IntegrationError,
    InvalidRegimeError,
    NoThresholdError,
)
from .integrate import IntegratorConfig, Trajectory, integrate
from .model import State, derived_rates
from .params import Params
from .threshold import dfe_jacobian, disease_free_equilibrium, r0

__all__ = [
    "critical_beta",
    "null_eigenvectors",
    "rhs_hessian_at_dfe",
    "rhs_beta_cross_at_dfe",
    "BifurcationReport",
    "bifurcation_coefficients",
    "BistabilityResult",
    "bistability_demo",
    "BackwardWitness",
    "find_backward_witness",
    "witness_initial_states",
]


def critical_beta(params: Params) -> float:
    """Contact rate beta* at which R0 equals one.

    beta* = k0*k1*k2*k3*k4 / (nu*eta*mu*k2*k3*k4 + (1-eta)*mu*k1*k3*k4
            + nu1*phi*(1-rho)*sigma*k1*k2*k4 + kappa*(1-phi)*(1-rho)*sigma*k1*k2*k3).
    """
    p = params
    d = derived_rates(p)
    vr = 1.0 - p.rho
    denom = (
        p.nu * p.eta * p.mu * d.k2 * d.k3 * d.k4
        + (1.0 - p.eta) * p.mu * d.k1 * d.k3 * d.k4
        + p.nu1 * p.phi * vr * p.sigma * d.k1 * d.k2 * d.k4
        + p.kappa * (1.0 - p.phi) * vr * p.sigma * d.k1 * d.k2 * d.k3
    )
    if denom <= 0.0:
        raise NoThresholdError("no contact rate yields R0 = 1 (zero transmission pathway)")
    return d.k0 * d.k1 * d.k2 * d.k3 * d.k4 / denom


def null_eigenvectors(params: Params) -> tuple[np.ndarray, np.ndarray]:
    """Left and right null vectors (w, v) of the Jacobian at the DFE.

    Requires the contact rate to sit at the threshold (R0 = 1 within 1e-6).
    Normalization: w has unit norm, non-negative infectious components, and
    v is scaled so v . w = 1. The left vector vanishes on the S, V, Q, R
    coordinates.
    """
    r = r0(params).r0
    if abs(r - 1.0) > 1e-6:
        raise InvalidRegimeError(f"null vectors require beta at the threshold; R0 = {r!r}")
    j = dfe_jacobian(params)
    u_mat, svals, vt_mat = np.linalg.svd(j)
    norm = svals[0]
    if svals[-1] > 1e-8 * norm:
        raise DegenerateSpectrumError(f"smallest singular value {svals[-1]!r} not negligible")
    if svals[-2] <= 1e-8 * norm:
        raise DegenerateSpectrumError("null space is not one-dimensional")

    w = u_mat[:, -1]
    v = vt_mat[-1, :]
    # Orient along the infection direction (positive third component).
    i_w = 2 + int(np.argmax(np.abs(w[2:6])))
    if w[i_w] < 0:
        w = -w
    i_v = 2 + int(np.argmax(np.abs(v[2:6])))
    if v[i_v] < 0:
        v = -v
    dot = float(v @ w)
    if dot <= 0.0:
        raise DegenerateSpectrumError("left/right null vectors are orthogonal")
    v = v / dot
    return w, v


def rhs_hessian_at_dfe(params: Params) -> np.ndarray:
    """H[k, i, j] = d^2 f_k / dx_i dx_j at the disease-free equilibrium.

    With g = x_s * u(x) / N(x), u = I + nu*A + nu1*A1 + kappa*I1, the
    Hessian at a point where u = 0 is
    (delta_{i,s} u_j + delta_{j,s} u_i)/N - x_s (u_i + u_j)/N^2.
    """
    p = params
    e0 = disease_free_equilibrium(p)
    n0 = e0.n
    u = np.zeros(8)
    u[2], u[3], u[4], u[5] = p.nu, 1.0, p.nu1, p.kappa

    def core(source_idx: int, source_val: float) -> np.ndarray:
        e = np.zeros(8)
        e[source_idx] = 1.0
        sym = np.outer(e, u) + np.outer(u, e)
        bulk = source_val * (u[:, None] + u[None, :]) / n0
        return (sym - bulk) / n0

    c_s = core(0, e0.S)
    c_v = core(1, e0.V)
    vr = 1.0 - p.rho
    h = np.zeros((8, 8, 8))
    h[0] = -p.beta * c_s
    h[1] = -vr * p.beta * c_v
    h[2] = p.eta * p.beta * c_s
    h[3] = (1.0 - p.eta) * p.beta * c_s
    h[4] = p.phi * vr * p.beta * c_v
    h[5] = (1.0 - p.phi) * vr * p.beta * c_v
    return h


def rhs_beta_cross_at_dfe(params: Params) -> np.ndarray:
    """M[k, i] = d^2 f_k / dx_i dbeta at the disease-free equilibrium."""
    p = params
    e0 = disease_free_equilibrium(p)
    u = np.zeros(8)
    u[2], u[3], u[4], u[5] = p.nu, 1.0, p.nu1, p.kappa
    share_s = e0.S / e0.n
    share_v = e0.V / e0.n
    vr = 1.0 - p.rho
    m = np.zeros((8, 8))
    m[0] = -share_s * u
    m[1] = -vr * share_v * u
    m[2] = p.eta * share_s * u
    m[3] = (1.0 - p.eta) * share_s * u
    m[4] = p.phi * vr * share_v * u
    m[5] = (1.0 - p.phi) * vr * share_v * u
    return m


@dataclass(frozen=True)
class BifurcationReport:
    beta_star: float
    a_coeff: float
    b_coeff: float
    direction: str  # "backward", "forward", or "indeterminate"
    eigen_residual_left: float
    eigen_residual_right: float
    matrix_norm: float
    b_positive: bool

    def as_text(self) -> str:
        return (
            f"beta_star = {self.beta_star!r}\n"
            f"a = {self.a_coeff!r}\n"
            f"b = {self.b_coeff!r}\n"
            f"direction = {self.direction}\n"
            f"eigen_residual_left = {self.eigen_residual_left!r}\n"
            f"eigen_residual_right = {self.eigen_residual_right!r}\n"
        )


def bifurcation_coefficients(params: Params) -> BifurcationReport:
    """Center-manifold coefficients a and b at the threshold.

    ``params.beta`` must already be the critical rate (use
    :func:`critical_beta` and replace beta first).
    """
    w, v = null_eigenvectors(params)
    h = rhs_hessian_at_dfe(params)
    m = rhs_beta_cross_at_dfe(params)
    a = float(np.einsum("k,kij,i,j->", w, h, v, v))
    b = float(np.einsum("k,ki,i->", w, m, v))
    if b > 0:
        direction = "backward" if a > 0 else "forward"
    else:
        direction = "indeterminate"
    j = dfe_jacobian(params)
    jnorm = float(np.linalg.norm(j, 2))
    return BifurcationReport(
        beta_star=params.beta,
        a_coeff=a,
        b_coeff=b,
        direction=direction,
        eigen_residual_left=float(np.linalg.norm(w @ j)),
        eigen_residual_right=float(np.linalg.norm(j @ v)),
        matrix_norm=jnorm,
        b_positive=b > 0.0,
    )


@dataclass(frozen=True)
class BistabilityResult:
    trajectory_low: Trajectory
    trajectory_high: Trajectory
    attractor_low: str
    attractor_high: str
    final_infected_low: float
    final_infected_high: float
    bistable: bool


def bistability_demo(
    params: Params,
    initial_low: State,
    initial_high: State,
    t_end: float = 5000.0,
    config: IntegratorConfig | None = None,
) -> BistabilityResult:
    """Integrate two initial conditions and classify the attractor of each.

    Only meaningful in the subcritical regime (R0 < 1), where a surviving
    endemic attractor demonstrates bistability. A trajectory counts as
    having reached the disease-free state when its final total infected
    mass falls below one individual.
    """
    if r0(params).r0 >= 1.0:
        raise InvalidRegimeError("bistability demo requires R0 < 1")
    # abs_tol must resolve individual-scale infected mass: the default
    # population-proportional tolerance would leave the sub-individual decay
    # tail beneath the controller's resolution and stall it.
    cfg = config or IntegratorConfig(rel_tol=1e-8, abs_tol=1e-4, output_stride=10.0)
    lo = integrate(initial_low, params, t_end, cfg)
    hi = integrate(initial_high, params, t_end, cfg)
    inf_lo = float(lo.total_infected()[-1])
    inf_hi = float(hi.total_infected()[-1])
    attr_lo = "dfe" if inf_lo < 1.0 else "endemic"
    attr_hi = "dfe" if inf_hi < 1.0 else "endemic"
    return BistabilityResult(
        trajectory_low=lo,
        trajectory_high=hi,
        attractor_low=attr_lo,
        attractor_high=attr_hi,
        final_infected_low=inf_lo,
        final_infected_high=inf_hi,
        bistable=attr_lo != attr_hi,
    )


@dataclass(frozen=True)
class BackwardWitness:
    """A parameter set exhibiting the backward regime just below threshold."""

    params: Params  # beta backed off below the critical rate, R0 < 1
    params_critical: Params
    report: BifurcationReport
    equilibria: list
    demo: BistabilityResult | None = None


def _witness_candidate(rng: np.random.Generator) -> Params:
    # Backward bifurcation needs substantial disease-induced mortality
    # relative to natural turnover, an imperfect vaccine, and waning
    # immunity; the ranges below target that corner.
    omega = rng.uniform(0.02, 0.3)
    return Params(
        Lambda=rng.uniform(50.0, 500.0),
        sigma=rng.uniform(0.01, 0.3),
        mu=10.0 ** rng.uniform(-5.0, -3.5),
        theta=rng.uniform(0.001, 0.1),
        theta1=rng.uniform(0.001, 0.1),
        gamma1=rng.uniform(0.01, 0.2),
        gamma2=rng.uniform(0.01, 0.2),
        gamma3=rng.uniform(0.01, 0.2),
        gamma4=rng.uniform(0.01, 0.2),
        gamma5=rng.uniform(0.01, 0.2),
        omega=omega,
        varphi=rng.uniform(0.0, omega),
        rho=rng.uniform(0.3, 0.9),
        eta=rng.uniform(0.2, 0.8),
        phi=rng.uniform(0.2, 0.8),
        epsilon=rng.uniform(0.001, 0.1),
        epsilon1=rng.uniform(0.001, 0.1),
        delta=rng.uniform(0.05, 0.5),
        delta1=rng.uniform(0.05, 0.5),
        beta=1.0,  # placeholder; the search pins beta to the threshold
        nu=rng.uniform(0.5, 3.0),
        nu1=rng.uniform(0.5, 3.0),
        kappa=rng.uniform(0.5, 3.0),
    )


def witness_initial_states(
    subcritical_params: Params, equilibria: list
) -> tuple[State, State]:
    """Initial conditions straddling the basin boundary.

    The low state starts at the disease-free composition with a small
    infection seed shaped like the smallest-root (separatrix) equilibrium;
    the high state perturbs the largest-root equilibrium, the endemic
    attractor, by 5 percent.
    """
    dfe = disease_free_equilibrium(subcritical_params)
    low_eq = equilibria[0].compartments
    infected = low_eq[2:7]
    seed_mass = min(10.0, 0.2 * float(infected.sum()))
    low = dfe.as_array()
    low[2:7] = seed_mass * infected / infected.sum()
    low[0] = max(low[0] - seed_mass, 0.0)
    high = equilibria[-1].compartments.copy()
    high[2:7] *= 1.05
    return (
        State.from_array(np.maximum(low, 0.0)),
        State.from_array(np.maximum(high, 0.0)),
    )


def find_backward_witness(
    seed: int = 0,
    max_candidates: int = 2000,
    r0_target: float = 0.98,
    validate_demo: bool = True,
    demo_t_end: float = 5000.0,
) -> BackwardWitness:
    """Search parameter space for a demonstrable backward bifurcation.

    Returns the first sampled parameter set with a > 0 and b > 0 at the
    critical contact rate that retains a feasible endemic equilibrium once
    beta is backed off so that R0 = ``r0_target`` < 1 and (when
    ``validate_demo``) whose two-trajectory demo actually splits between
    the disease-free and endemic attractors. Deterministic for a fixed seed.
    """
    from .equilibria import endemic_equilibria

    rng = np.random.default_rng(seed)
    for _ in range(max_candidates):
        cand = _witness_candidate(rng)
        try:
            bstar = critical_beta(cand)
            crit = cand.replace(beta=bstar)
            report = bifurcation_coefficients(crit)
        except (NoThresholdError, DegenerateSpectrumError, InvalidRegimeError):
            continue
        if not (report.a_coeff > 0.0 and report.b_positive):
            continue
        sub = cand.replace(beta=bstar * r0_target)
        eqs = endemic_equilibria(sub)
        if not eqs:
            continue
        demo = None
        if validate_demo:
            low, high = witness_initial_states(sub, eqs)
            try:
                demo = bistability_demo(sub, low, high, t_end=demo_t_end)
            except IntegrationError:
                continue
            if not (demo.bistable and demo.attractor_low == "dfe"):
                continue
        return BackwardWitness(
            params=sub, params_critical=crit, report=report, equilibria=eqs, demo=demo
        )
    raise RuntimeError(f"no backward-bifurcation witness found in {max_candidates} candidates")
