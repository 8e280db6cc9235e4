"""Endemic equilibria: cubic construction, sign classification, root solving.

Setting the force of infection at equilibrium to lam > 0 reduces the eight
steady-state equations to a cubic P(lam) = Q3*lam^3 + Q2*lam^2 + Q1*lam + Q0.
Every positive real root expands back to a full equilibrium state. The
constant coefficient satisfies Q0 = (omega+mu)*(sigma+mu)^2*(1 - R0), which
ties the root structure to the reproduction number.

Derivation notes kept for maintainers:

* The cubic factors exactly as (F3*lam^2 + F2*lam + F1) * d(lam) with
  d(lam) = (omega+mu)*(lam+sigma+mu) - varphi*lam*t3, the positive
  denominator shared by the S*, V* closed forms. Genuine equilibria are
  roots of the quadratic factor; d's root is negative for valid parameters
  (t3 < 1 and varphi <= omega), so it never contributes.
* The S* = t5*V* + t6 elimination requires t5 = varphi*lam*t4/d(lam); a
  lam factor is easy to drop here, and dropping it breaks the fixed-point
  residual, so the reconstruction below carries it explicitly.
* t3's middle term is gamma2*(1-eta)/k2: it is the recovery flow I* -> R*
  and must mirror the gamma-weighted terms of t4.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRatesError, InvalidRegimeError
from .model import State, derived_rates, rhs_array
from .params import Params

__all__ = [
    "EndemicPolynomial",
    "SignCase",
    "EndemicEquilibrium",
    "build_polynomial",
    "classify",
    "endemic_equilibria",
    "SuppressionReport",
    "vaccination_suppression_check",
    "equilibria_to_csv",
]

#: Coefficient magnitudes below this times the largest are boundary cases.
_SIGN_TOL = 1e-12

#: An eigenvalue of the companion matrix counts as real when
#: |Im| <= _REAL_TOL * (1 + |Re|).
_REAL_TOL = 1e-9


@dataclass(frozen=True)
class EndemicPolynomial:
    """Cubic coefficients with the intermediates they are assembled from.

    t5 and t6 depend on the equilibrium force of infection and are exposed
    as methods; everything else is a plain number.
    """

    Q3: float
    Q2: float
    Q1: float
    Q0: float
    t1: float
    t2: float
    t3: float
    t4: float
    x: float
    D1: float
    D2: float
    D3: float
    D4: float
    F1: float
    F2: float
    F3: float
    r0_at_build: float
    q3_positive: bool
    params: Params

    def coefficients(self) -> np.ndarray:
        return np.array([self.Q3, self.Q2, self.Q1, self.Q0])

    def evaluate(self, lam: float) -> float:
        return float(np.polyval(self.coefficients(), lam))

    def denominator(self, lam: float) -> float:
        """Shared denominator d(lam) of the S*, V* closed forms."""
        p = self.params
        k6 = p.omega + p.mu
        return k6 * (lam + p.sigma + p.mu) - p.varphi * lam * self.t3

    def t5(self, lam: float) -> float:
        return self.params.varphi * lam * self.t4 / self.denominator(lam)

    def t6(self, lam: float) -> float:
        p = self.params
        return (p.omega + p.mu) * p.Lambda / self.denominator(lam)

    def q0_identity_reference(self) -> float:
        """(omega+mu)*(sigma+mu)^2*(1-R0), which Q0 must equal."""
        p = self.params
        return (p.omega + p.mu) * (p.sigma + p.mu) ** 2 * (1.0 - self.r0_at_build)

    def sign_pattern(self) -> tuple[int, int, int, int]:
        """Signs of (Q3, Q2, Q1, Q0); 0 marks a boundary coefficient."""
        coeffs = self.coefficients()
        scale = float(np.max(np.abs(coeffs)))
        if scale == 0.0:
            return (0, 0, 0, 0)
        return tuple(0 if abs(c) <= _SIGN_TOL * scale else (1 if c > 0 else -1) for c in coeffs)


def build_polynomial(params: Params) -> EndemicPolynomial:
    from .threshold import r0 as _r0

    p = params
    d = derived_rates(p)
    for name, k in (("k1", d.k1), ("k2", d.k2), ("k3", d.k3), ("k4", d.k4), ("k5", d.k5), ("k6", d.k6)):
        if k <= 0.0:
            raise DegenerateRatesError(f"aggregate exit rate {name} = {k!r} is not positive")

    vr = 1.0 - p.rho
    t1 = p.eta * p.theta / d.k1 + p.epsilon * (1.0 - p.eta) / d.k2
    t2 = p.phi * vr * p.theta1 / d.k3 + p.epsilon1 * (1.0 - p.phi) * vr / d.k4
    t3 = p.gamma1 * p.eta / d.k1 + p.gamma2 * (1.0 - p.eta) / d.k2 + p.gamma3 * t1 / d.k5
    t4 = p.gamma3 * t2 / d.k5 + p.gamma4 * p.phi * vr / d.k3 + p.gamma5 * (1.0 - p.phi) * vr / d.k4
    x = (p.omega - p.varphi) / d.k6

    d1 = 1.0 - (p.nu1 * p.phi * vr * p.beta / d.k3 + p.kappa * (1.0 - p.phi) * vr * p.beta / d.k4)
    d2 = p.phi * vr / d.k3 + (1.0 - p.phi) * vr / d.k4 + t2 / d.k5 + t4 / d.k6
    d3 = 1.0 - (p.nu * p.eta * p.beta / d.k1 + (1.0 - p.eta) * p.beta / d.k2)
    d4 = p.eta / d.k1 + (1.0 - p.eta) / d.k2 + t1 / d.k5 + t3 / d.k6

    f1 = p.sigma * d1 + p.mu * d3
    f2 = d1 * t3 * x + p.sigma * d2 + (vr - t4 * x) * d3 + p.mu * d4
    f3 = d2 * t3 * x + (vr - t4 * x) * d4

    lin1 = d.k6 - p.varphi * t3  # slope of d(lam); positive for valid parameters
    lin0 = d.k6 * (p.sigma + p.mu)
    q3 = f3 * lin1
    q2 = f3 * lin0 + f2 * lin1
    q1 = f2 * lin0 + f1 * lin1
    q0 = f1 * lin0

    return EndemicPolynomial(
        Q3=q3, Q2=q2, Q1=q1, Q0=q0,
        t1=t1, t2=t2, t3=t3, t4=t4, x=x,
        D1=d1, D2=d2, D3=d3, D4=d4,
        F1=f1, F2=f2, F3=f3,
        r0_at_build=_r0(p).r0,
        q3_positive=q3 > 0.0,
        params=p,
    )


#: Table of possible positive-root counts by (sign Q2, sign Q1, R0 regime).
_CASE_BY_SIGNS = {(1, 1): 1, (1, -1): 2, (-1, 1): 3, (-1, -1): 4}


@dataclass(frozen=True)
class SignCase:
    """Sign-pattern classification of the cubic.

    ``case_id`` is None when any coefficient sits on a sign boundary (the
    tabulated classification assumes strict signs); ``possible_root_counts``
    is still valid then, computed from the non-zero coefficients.
    """

    case_id: int | None
    r0_regime: str  # "below", "above", or "critical"
    possible_root_counts: frozenset[int]
    signs: tuple[int, int, int, int]
    boundary: bool
    degenerate_coefficients: tuple[str, ...]


def classify(poly: EndemicPolynomial) -> SignCase:
    """Descartes' rule of signs applied to the cubic's coefficients."""
    signs = poly.sign_pattern()
    names = ("Q3", "Q2", "Q1", "Q0")
    degenerate = tuple(n for n, s in zip(names, signs) if s == 0)
    nonzero = [s for s in signs if s != 0]
    changes = sum(1 for a, b in zip(nonzero, nonzero[1:]) if a != b)
    possible = frozenset(range(changes, -1, -2))

    if poly.r0_at_build < 1.0:
        regime = "below"
    elif poly.r0_at_build > 1.0:
        regime = "above"
    else:
        regime = "critical"

    boundary = bool(degenerate) or signs[0] <= 0
    case_id = None
    if not boundary:
        case_id = _CASE_BY_SIGNS.get((signs[1], signs[2]))
    return SignCase(
        case_id=case_id,
        r0_regime=regime,
        possible_root_counts=possible,
        signs=signs,
        boundary=boundary,
        degenerate_coefficients=degenerate,
    )


@dataclass(frozen=True)
class EndemicEquilibrium:
    """One positive root of the cubic expanded to a full steady state.

    ``compartments`` keeps the raw reconstruction (it may carry negative
    entries for infeasible roots); ``state`` clamps rounding-level negatives
    and is only meaningful when ``feasible``.
    """

    lambda_star: float
    compartments: np.ndarray
    residual: float
    feasible: bool

    @property
    def state(self) -> State:
        if not self.feasible:
            raise ValueError("infeasible equilibrium has no valid state")
        return State.from_array(np.maximum(self.compartments, 0.0))


def _reconstruct(poly: EndemicPolynomial, lam: float) -> np.ndarray:
    p = poly.params
    d = derived_rates(p)
    vr = 1.0 - p.rho
    t6v = poly.t6(lam)
    t5v = poly.t5(lam)
    g = vr * lam + p.mu - (p.sigma * t5v + poly.x * lam * (poly.t3 * t5v + poly.t4))
    v = (p.sigma + poly.x * poly.t3 * lam) * t6v / g
    s = t5v * v + t6v
    a = p.eta * lam * s / d.k1
    i = (1.0 - p.eta) * lam * s / d.k2
    a1 = p.phi * vr * lam * v / d.k3
    i1 = (1.0 - p.phi) * vr * lam * v / d.k4
    q = lam * (poly.t1 * s + poly.t2 * v) / d.k5
    r = lam * (poly.t3 * s + poly.t4 * v) / d.k6
    return np.array([s, v, a, i, a1, i1, q, r])


def _positive_real_roots(poly: EndemicPolynomial) -> list[float]:
    coeffs = poly.coefficients()
    scale = float(np.max(np.abs(coeffs)))
    if scale == 0.0:
        return []
    trimmed = np.trim_zeros(np.where(np.abs(coeffs) <= 1e-14 * scale, 0.0, coeffs), "f")
    if trimmed.size <= 1:
        return []
    roots = np.roots(trimmed)  # companion-matrix eigenvalues
    out = []
    for z in roots:
        if abs(z.imag) > _REAL_TOL * (1.0 + abs(z.real)) or z.real <= 0.0:
            continue
        lam = float(z.real)
        deriv = np.polyder(trimmed)
        for _ in range(2):  # Newton polish sharpens the fixed-point residual
            slope = float(np.polyval(deriv, lam))
            if slope == 0.0:
                break
            step = float(np.polyval(trimmed, lam)) / slope
            if not np.isfinite(step) or abs(step) > 0.5 * lam:
                break
            lam -= step
        if lam > 0.0:
            out.append(lam)
    return sorted(out)


def endemic_equilibria(params: Params, include_infeasible: bool = False) -> list[EndemicEquilibrium]:
    """All endemic equilibria, sorted by the equilibrium force of infection.

    Roots whose reconstruction leaves any compartment below
    -1e-8*Lambda/mu, or whose fixed-point residual exceeds 1e-8*Lambda, are
    excluded unless ``include_infeasible`` is set (they are then returned
    with ``feasible=False`` for reporting).
    """
    poly = build_polynomial(params)
    neg_tol = 1e-8 * params.Lambda / params.mu
    res_tol = 1e-8 * params.Lambda
    out = []
    for lam in _positive_real_roots(poly):
        comps = _reconstruct(poly, lam)
        residual = float(np.max(np.abs(rhs_array(comps, params)))) if np.all(np.isfinite(comps)) else np.inf
        feasible = bool(np.all(comps >= -neg_tol) and residual <= res_tol)
        eq = EndemicEquilibrium(lambda_star=lam, compartments=comps, residual=residual, feasible=feasible)
        if feasible or include_infeasible:
            out.append(eq)
    return out


@dataclass(frozen=True)
class SuppressionReport:
    """Comparison of the symptomatic endemic level with and without vaccination."""

    applicable: bool
    i_star_sigma: float | None
    i_star_zero: float | None
    suppressed: bool | None
    sigma: float


def _symptomatic_level(params: Params) -> float | None:
    eqs = endemic_equilibria(params)
    if not eqs:
        return None
    # With a perfect vaccine the equilibrium is unique; keep the largest
    # root (the stable branch) if several survive filtering.
    return float(eqs[-1].compartments[3])


def vaccination_suppression_check(params: Params) -> SuppressionReport:
    """Check I*(sigma) < I*(0) in the perfect-vaccine, no-waning regime.

    Requires rho=1 and omega=0. When either regime has no endemic
    equilibrium the comparison is reported as not applicable.
    """
    if params.rho != 1.0 or params.omega != 0.0:
        raise InvalidRegimeError(
            f"requires rho=1 and omega=0 (got rho={params.rho!r}, omega={params.omega!r})"
        )
    i_sigma = _symptomatic_level(params)
    i_zero = _symptomatic_level(params.replace(sigma=0.0))
    if i_sigma is None or i_zero is None:
        return SuppressionReport(
            applicable=False, i_star_sigma=i_sigma, i_star_zero=i_zero,
            suppressed=None, sigma=params.sigma,
        )
    return SuppressionReport(
        applicable=True,
        i_star_sigma=i_sigma,
        i_star_zero=i_zero,
        suppressed=bool(i_sigma < i_zero),
        sigma=params.sigma,
    )


def equilibria_to_csv(equilibria: list[EndemicEquilibrium], path=None) -> str:
    lines = ["lambda_star,S,V,A,I,A1,I1,Q,R,residual,feasible"]
    for eq in equilibria:
        row = [repr(eq.lambda_star)]
        row += [repr(float(v)) for v in eq.compartments]
        row += [repr(eq.residual), str(eq.feasible).lower()]
        lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
