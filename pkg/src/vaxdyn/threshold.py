"""Disease-free equilibrium, reproduction number, and local stability.

The reproduction number is available two independent ways: the closed form
(sum of four per-compartment contributions) and the spectral radius of the
next-generation matrix built from the new-infection and transfer Jacobians
at the disease-free equilibrium. The two must agree to rounding, which the
test suite exploits as an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRatesError
from .model import State, derived_rates
from .params import Params

__all__ = [
    "R0Breakdown",
    "disease_free_equilibrium",
    "r0",
    "ngm_matrices",
    "r0_ngm_oracle",
    "dfe_jacobian",
    "StabilityReport",
    "dfe_local_stability",
    "beta_for_target_r0",
]


@dataclass(frozen=True)
class R0Breakdown:
    """R0 and the contributions of the four infectious compartments."""

    r_A: float
    r_I: float
    r_A1: float
    r_I1: float
    r0: float

    def as_text(self) -> str:
        return (
            f"r_A = {self.r_A!r}\n"
            f"r_I = {self.r_I!r}\n"
            f"r_A1 = {self.r_A1!r}\n"
            f"r_I1 = {self.r_I1!r}\n"
            f"r0 = {self.r0!r}\n"
        )


def disease_free_equilibrium(params: Params) -> State:
    """S = Lambda/(sigma+mu), V = sigma*Lambda/(mu*(sigma+mu)), rest zero."""
    k0 = params.sigma + params.mu
    s0 = params.Lambda / k0
    return State(S=s0, V=params.sigma * s0 / params.mu, A=0, I=0, A1=0, I1=0, Q=0, R=0)


def r0(params: Params) -> R0Breakdown:
    """Closed-form reproduction number R0 = R_A + R_I + R_A1 + R_I1."""
    d = derived_rates(params)
    r_a = params.nu * d.B1 / d.k1
    r_i = d.B2 / d.k2
    r_a1 = params.nu1 * d.B3 / d.k3
    r_i1 = params.kappa * d.B4 / d.k4
    return R0Breakdown(r_A=r_a, r_I=r_i, r_A1=r_a1, r_I1=r_i1, r0=r_a + r_i + r_a1 + r_i1)


def ngm_matrices(params: Params) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """New-infection Jacobian J_F, transfer Jacobian J_U, and J_U^-1.

    Infected-class ordering (A, I, A1, I1, Q). J_U is lower triangular, so
    its inverse is written in closed form rather than factorized.
    """
    p = params
    d = derived_rates(p)
    ks = (d.k1, d.k2, d.k3, d.k4, d.k5)
    if any(k == 0.0 for k in ks):
        raise DegenerateRatesError(f"zero aggregate exit rate among k1..k5: {ks}")
    weights = np.array([p.nu, 1.0, p.nu1, p.kappa, 0.0])
    blocks = np.array([d.B1, d.B2, d.B3, d.B4, 0.0])
    j_f = np.outer(blocks, weights)
    j_u = np.diag(ks)
    j_u[4, :4] = [-p.theta, -p.theta1, -p.epsilon, -p.epsilon1]
    j_u_inv = np.diag([1.0 / k for k in ks])
    j_u_inv[4, :4] = [
        p.theta / (d.k1 * d.k5),
        p.theta1 / (d.k2 * d.k5),
        p.epsilon / (d.k3 * d.k5),
        p.epsilon1 / (d.k4 * d.k5),
    ]
    return j_f, j_u, j_u_inv


def r0_ngm_oracle(params: Params) -> float:
    """Spectral radius of K = J_F @ J_U^-1 via a dense eigenvalue solve."""
    j_f, _, j_u_inv = ngm_matrices(params)
    eigs = np.linalg.eigvals(j_f @ j_u_inv)
    return float(np.max(np.abs(eigs)))


def dfe_jacobian(params: Params) -> np.ndarray:
    """8x8 Jacobian of the full system at the disease-free equilibrium.

    Entries are closed-form (m1 = mu*beta/(sigma+mu) and
    m2 = sigma*beta/(sigma+mu) are beta scaled by the S and V population
    shares at the equilibrium), not finite-differenced, so threshold
    eigenvalue tests are sharp.
    """
    p = params
    d = derived_rates(p)
    m1 = p.mu * p.beta / d.k0
    m2 = p.sigma * p.beta / d.k0
    vr = 1.0 - p.rho
    j = np.zeros((8, 8))
    # S row: losses to infection (via lambda), vaccination, death; gain from R.
    j[0, 0] = -d.k0
    j[0, 2:6] = [-p.nu * m1, -m1, -p.nu1 * m1, -p.kappa * m1]
    j[0, 7] = p.varphi
    # V row.
    j[1, 0] = p.sigma
    j[1, 1] = -p.mu
    j[1, 2:6] = [-vr * p.nu * m2, -vr * m2, -vr * p.nu1 * m2, -vr * p.kappa * m2]
    j[1, 7] = p.omega - p.varphi
    # Infectious rows.
    j[2, 2:6] = [p.eta * p.nu * m1 - d.k1, p.eta * m1, p.eta * p.nu1 * m1, p.eta * p.kappa * m1]
    et = 1.0 - p.eta
    j[3, 2:6] = [et * p.nu * m1, et * m1 - d.k2, et * p.nu1 * m1, et * p.kappa * m1]
    pv = p.phi * vr
    j[4, 2:6] = [pv * p.nu * m2, pv * m2, pv * p.nu1 * m2 - d.k3, pv * p.kappa * m2]
    qv = (1.0 - p.phi) * vr
    j[5, 2:6] = [qv * p.nu * m2, qv * m2, qv * p.nu1 * m2, qv * p.kappa * m2 - d.k4]
    # Isolation and recovery rows.
    j[6, 2:7] = [p.theta, p.epsilon, p.theta1, p.epsilon1, -d.k5]
    j[7, 2:8] = [p.gamma1, p.gamma2, p.gamma4, p.gamma5, p.gamma3, -d.k6]
    return j


@dataclass(frozen=True)
class StabilityReport:
    max_real_part: float
    r0: float


def dfe_local_stability(params: Params) -> StabilityReport:
    """Maximum real part of the spectrum of the Jacobian at the DFE.

    Negative iff R0 < 1 (away from the threshold), per the standard
    linearized stability criterion.
    """
    eigs = np.linalg.eigvals(dfe_jacobian(params))
    return StabilityReport(max_real_part=float(eigs.real.max()), r0=r0(params).r0)


def beta_for_target_r0(params: Params, target: float) -> float:
    """Contact rate giving the requested R0 (R0 is linear in beta)."""
    current = r0(params).r0
    if current == 0.0:
        raise DegenerateRatesError("R0 is identically zero; cannot rescale beta")
    return params.beta * target / current
