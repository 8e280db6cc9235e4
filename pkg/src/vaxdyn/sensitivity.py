"""Local sensitivity of the reproduction number to every model parameter.

Two indices per parameter p: the raw partial derivative gamma = dR0/dp and
the normalized (elasticity) index epsilon = gamma * p / R0, the percent
change in R0 per percent change in p. Derivatives come from verified
central differences on the closed form; parameters absent from R0
(Lambda, gamma3, omega, varphi) are reported as structural zeros rather
than small floats.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

from .errors import DerivativeInstabilityError, UndefinedIndexError
from .params import PARAM_NAMES, Params
from .threshold import r0

__all__ = [
    "STRUCTURAL_ZEROS",
    "SensitivityRow",
    "local_index",
    "normalized_index",
    "sensitivity_table",
    "table_to_csv",
    "chart_data_to_csv",
]

#: Parameters that do not appear in the closed-form reproduction number.
STRUCTURAL_ZEROS = frozenset({"Lambda", "gamma3", "omega", "varphi"})

_AGREE_RTOL = 1e-6


@dataclass(frozen=True)
class SensitivityRow:
    param: str
    gamma: float
    epsilon: float


def _r0_at(params: Params, name: str, value: float) -> float:
    return r0(params.replace(**{name: value})).r0


def _valid(name: str, value: float) -> bool:
    if value < 0.0:
        return False
    if name in ("rho", "eta", "phi") and value > 1.0:
        return False
    return True


def _derivative(params: Params, name: str, h: float) -> float:
    """Second-order difference; one-sided when a bound blocks the stencil."""
    p = getattr(params, name)
    if _valid(name, p - h) and _valid(name, p + h):
        return (_r0_at(params, name, p + h) - _r0_at(params, name, p - h)) / (2.0 * h)
    f0 = _r0_at(params, name, p)
    if _valid(name, p + 2 * h):  # at the lower bound: forward stencil
        return (-3.0 * f0 + 4.0 * _r0_at(params, name, p + h) - _r0_at(params, name, p + 2 * h)) / (2.0 * h)
    if _valid(name, p - 2 * h):  # at the upper bound: backward stencil
        return (3.0 * f0 - 4.0 * _r0_at(params, name, p - h) + _r0_at(params, name, p - 2 * h)) / (2.0 * h)
    raise DerivativeInstabilityError(f"no valid difference stencil for {name} at {p!r}")


def local_index(params: Params, param_name: str) -> float:
    """dR0/dp by central difference with step h = max(1e-6*|p|, 1e-10).

    The estimate is recomputed at h/2; disagreement beyond 1e-6 relative
    (plus a floor forgiving physically negligible indices) raises
    :class:`DerivativeInstabilityError`. Structural zeros return exactly 0.
    """
    if param_name not in PARAM_NAMES:
        raise KeyError(f"unknown parameter {param_name!r}")
    if param_name in STRUCTURAL_ZEROS:
        return 0.0
    p = getattr(params, param_name)
    h = max(1e-6 * abs(p), 1e-10)
    d1 = _derivative(params, param_name, h)
    d2 = _derivative(params, param_name, h / 2.0)
    floor = 1e-9 * r0(params).r0 / max(abs(p), 1e-10)
    if abs(d1 - d2) > _AGREE_RTOL * max(abs(d1), abs(d2)) + floor:
        raise DerivativeInstabilityError(
            f"derivative for {param_name} unstable: {d1!r} vs {d2!r}"
        )
    return (4.0 * d2 - d1) / 3.0  # Richardson-extrapolated central difference


def normalized_index(params: Params, param_name: str) -> float:
    """Elasticity epsilon = (dR0/dp) * p / R0. Undefined when R0 = 0."""
    base = r0(params).r0
    if base == 0.0:
        raise UndefinedIndexError("R0 is zero; normalized index undefined")
    gamma = local_index(params, param_name)
    return gamma * getattr(params, param_name) / base


def sensitivity_table(params: Params) -> list[SensitivityRow]:
    """One row per parameter, in canonical order."""
    rows = []
    base = r0(params).r0
    if base == 0.0:
        raise UndefinedIndexError("R0 is zero; sensitivity table undefined")
    for name in PARAM_NAMES:
        gamma = local_index(params, name)
        epsilon = gamma * getattr(params, name) / base
        rows.append(SensitivityRow(param=name, gamma=gamma, epsilon=epsilon))
    return rows


def table_to_csv(rows: list[SensitivityRow], path=None) -> str:
    buf = io.StringIO()
    buf.write("param,gamma_R0,epsilon_R0\n")
    for row in rows:
        buf.write(f"{row.param},{row.gamma!r},{row.epsilon!r}\n")
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def chart_data_to_csv(rows: list[SensitivityRow], path=None) -> str:
    """(param, epsilon) pairs for bar-chart rendering by external tools."""
    buf = io.StringIO()
    buf.write("param,epsilon_R0\n")
    for row in rows:
        buf.write(f"{row.param},{row.epsilon!r}\n")
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
