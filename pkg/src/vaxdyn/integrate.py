"""Adaptive trajectory integration and the Lyapunov decrease check.

The stepper is an explicit embedded Dormand-Prince 5(4) pair with standard
proportional step control. The system is non-stiff at realistic parameter
scales, so no implicit machinery is needed. After every accepted step,
floating-point undershoots in [-tol_abs, 0) are clamped to zero; anything
below -tol_abs is flagged in the trajectory diagnostics.

The core step loop compiles with numba when available (calibration
evaluates tens of thousands of trajectories); the identical function body
runs in plain Python otherwise.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import IntegrationError, InvalidRegimeError
from .model import COMPARTMENTS, State, params_vector, rhs_core
from .params import Params

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "integrate",
    "trajectory_to_csv",
    "LyapunovReport",
    "lyapunov_decrease_check",
]

# Dormand-Prince 5(4) tableau. The 5th-order solution is propagated; the
# difference to the embedded 4th-order solution estimates the local error.
_A_MAT = np.zeros((7, 6))
_A_MAT[1, :1] = [1 / 5]
_A_MAT[2, :2] = [3 / 40, 9 / 40]
_A_MAT[3, :3] = [44 / 45, -56 / 15, 32 / 9]
_A_MAT[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
_A_MAT[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
_A_MAT[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_ERR = _B5 - np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)

_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_SAFETY = 0.9


def _core(y0, t0, out_times, p, rel_tol, abs_tol, max_step, neg_tol):
    """One shared stepper body; compiled with numba when importable.

    Steps whose undershoot would leave a compartment below -neg_tol are
    rejected outright (the exact flow preserves non-negativity, so a
    smaller step always repairs this); accepted-step undershoots inside
    [-neg_tol, 0) are clamped to zero.

    Returns (samples, accepted, rejected, min_component_pre_clamp,
    max_conservation_defect, max_population_bound_excess, status,
    last_good_time); status 1 flags step-size underflow.
    """
    t_end = out_times[-1]
    n_out = out_times.shape[0]
    out_ys = np.zeros((n_out, 8))
    y = y0.copy()
    t = t0
    out_idx = 0
    if abs(out_times[0] - t) <= 1e-12 * max(1.0, abs(t)):
        out_ys[0] = y
        out_idx = 1

    k = np.zeros((7, 8))
    k[0] = rhs_core(y, p)
    h = min(max_step, max((t_end - t) / 100.0, 1e-3))
    n_accept = 0
    n_reject = 0
    min_component = y.min()
    max_cons = 0.0
    max_bound = -1e300
    pop_scale = p[0] / p[2]  # Lambda / mu
    n_start = y.sum()
    status = 0

    while t < t_end:
        t_target = out_times[out_idx] if out_idx < n_out else t_end
        h_try = min(h, max_step, t_end - t)
        lands = t + h_try >= t_target - 1e-12 * max(1.0, abs(t_target))
        if lands:
            h_try = t_target - t
        if h_try < 1e-13 * max(1.0, abs(t)):
            status = 1
            break

        for i in range(1, 7):
            y_stage = y.copy()
            for j in range(i):
                a = h_try * _A_MAT[i, j]
                if a != 0.0:
                    y_stage += a * k[j]
            k[i] = rhs_core(y_stage, p)
        y_new = y.copy()
        err = np.zeros(8)
        for i in range(7):
            y_new += (h_try * _B5[i]) * k[i]
            err += (h_try * _ERR[i]) * k[i]
        scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = np.sqrt(np.mean((err / scale) ** 2))

        if not np.isfinite(err_norm):
            n_reject += 1
            h = h_try * _MIN_FACTOR
            continue
        if err_norm > 1.0:
            n_reject += 1
            h = h_try * max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2)
            continue
        m = y_new.min()
        if m < -neg_tol:
            n_reject += 1
            h = h_try * 0.5
            continue
        factor = _MAX_FACTOR if err_norm == 0.0 else min(_MAX_FACTOR, _SAFETY * err_norm ** -0.2)
        h = h_try * factor

        # Accepted: clamp the tolerated undershoot, track diagnostics.
        if m < min_component:
            min_component = m
        y_new = np.maximum(y_new, 0.0)
        t = t_target if lands else t + h_try
        y = y_new
        k[0] = rhs_core(y, p)
        n_accept += 1

        n_t = y.sum()
        defect = abs(
            k[0].sum() - (p[0] - p[2] * n_t - p[17] * (y[3] + y[6]) - p[18] * y[5])
        )
        if defect > max_cons:
            max_cons = defect
        bound = pop_scale + (n_start - pop_scale) * np.exp(-p[2] * (t - t0))
        if n_t - bound > max_bound:
            max_bound = n_t - bound

        if lands and out_idx < n_out:
            out_ys[out_idx] = y
            out_idx += 1

    if status == 0:
        while out_idx < n_out:  # t_end hit exactly between output landings
            out_ys[out_idx] = y
            out_idx += 1
    return out_ys, n_accept, n_reject, min_component, max_cons, max_bound, status, t


_core_fast = njit(cache=True)(_core)


@dataclass(frozen=True)
class IntegratorConfig:
    """Step-control settings.

    ``abs_tol=None`` resolves to 1e-8 * Lambda/mu at integration time, i.e.
    an absolute tolerance proportional to the population scale. Pass an
    individual-scale abs_tol instead when sub-unit infected tails matter
    (attractor classification near the threshold).
    """

    rel_tol: float = 1e-8
    abs_tol: float | None = None
    max_step: float = 10.0
    output_stride: float = 1.0

    def __post_init__(self):
        if self.rel_tol <= 0 or (self.abs_tol is not None and self.abs_tol <= 0):
            raise ValueError("tolerances must be > 0")
        if self.max_step <= 0 or self.output_stride <= 0:
            raise ValueError("max_step and output_stride must be > 0")


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution: strictly increasing times, one state row per time."""

    times: np.ndarray
    ys: np.ndarray  # shape (len(times), 8)
    params: Params
    diagnostics: dict = field(default_factory=dict)

    @property
    def states(self) -> list[State]:
        return [State.from_array(y, t=float(t)) for t, y in zip(self.times, self.ys)]

    @property
    def final_state(self) -> State:
        return State.from_array(self.ys[-1], t=float(self.times[-1]))

    def compartment(self, name: str) -> np.ndarray:
        return self.ys[:, COMPARTMENTS.index(name)]

    def total_population(self) -> np.ndarray:
        return self.ys.sum(axis=1)

    def total_infected(self) -> np.ndarray:
        """A + I + A1 + I1 + Q at every sample."""
        return self.ys[:, 2:7].sum(axis=1)


def _output_grid(t0: float, t_end: float, stride: float) -> np.ndarray:
    grid = np.arange(t0, t_end, stride)
    if grid.size == 0 or grid[-1] < t_end:
        grid = np.append(grid, t_end)
    return grid


def integrate(
    initial: State,
    params: Params,
    t_end: float,
    config: IntegratorConfig | None = None,
) -> Trajectory:
    """Integrate from ``initial`` to ``t_end``, sampling every output_stride.

    Raises :class:`IntegrationError` on step-size underflow, carrying the
    last good time. Diagnostics record accepted/rejected step counts, the
    worst pre-clamp negative excursion, the worst defect of the
    population-conservation identity, and the worst excess over the
    exponential population bound.
    """
    cfg = config or IntegratorConfig()
    pop_scale = params.Lambda / params.mu
    abs_tol = cfg.abs_tol if cfg.abs_tol is not None else 1e-8 * pop_scale
    clamp_tol = 1e-9 * pop_scale

    t0 = float(initial.t)
    if t_end <= t0:
        raise ValueError(f"t_end={t_end!r} must exceed the initial time {t0!r}")
    out_times = _output_grid(t0, float(t_end), cfg.output_stride)

    out_ys, n_accept, n_reject, min_comp, max_cons, max_bound, status, t_last = _core_fast(
        initial.as_array(), t0, out_times, params_vector(params),
        cfg.rel_tol, abs_tol, cfg.max_step, clamp_tol,
    )
    if status == 1:
        raise IntegrationError("step size underflow", last_good_time=t_last)

    diagnostics = {
        "n_accepted": int(n_accept),
        "n_rejected": int(n_reject),
        "min_component": float(min_comp),
        "negative_flagged": bool(min_comp < -clamp_tol),
        "clamp_tol": clamp_tol,
        "max_conservation_defect": float(max_cons),
        "max_bound_excess": float(max_bound),
    }
    return Trajectory(times=out_times, ys=out_ys, params=params, diagnostics=diagnostics)


def trajectory_to_csv(traj: Trajectory, path=None) -> str:
    """Write ``t,S,V,A,I,A1,I1,Q,R,N`` rows at full float precision."""
    buf = io.StringIO()
    buf.write("t,S,V,A,I,A1,I1,Q,R,N\n")
    for t, y in zip(traj.times, traj.ys):
        row = [repr(float(t))] + [repr(float(v)) for v in y] + [repr(float(y.sum()))]
        buf.write(",".join(row) + "\n")
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


@dataclass(frozen=True)
class LyapunovReport:
    """Monotonicity report for L = mu/(3(sigma+mu))*A + mu/(6(sigma+mu))*I."""

    times: np.ndarray
    values: np.ndarray
    non_increasing: bool
    max_increase: float
    tolerance: float
    r0: float


def lyapunov_decrease_check(trajectory: Trajectory, params: Params) -> LyapunovReport:
    """Check that the candidate Lyapunov value never rises along a trajectory.

    Valid only in the perfect-vaccine, no-waning regime (rho=1, omega=0) on
    the invariant subspace A1 = I1 = 0; otherwise raises
    :class:`InvalidRegimeError`. Increases up to 1e-9 * L(0) are tolerated
    as integration noise. Decrease must hold whenever R0 <= 1.
    """
    from .threshold import r0 as _r0  # local import to avoid a cycle

    if params.rho != 1.0 or params.omega != 0.0:
        raise InvalidRegimeError(
            f"requires rho=1 and omega=0 (got rho={params.rho!r}, omega={params.omega!r})"
        )
    y0 = trajectory.ys[0]
    if y0[4] != 0.0 or y0[5] != 0.0:
        raise InvalidRegimeError("trajectory must start with A1 = I1 = 0")

    c = params.mu / (params.sigma + params.mu)
    values = c / 3.0 * trajectory.ys[:, 2] + c / 6.0 * trajectory.ys[:, 3]
    tol = 1e-9 * float(values[0])
    rises = np.diff(values)
    max_increase = float(rises.max(initial=0.0))
    return LyapunovReport(
        times=trajectory.times,
        values=values,
        non_increasing=bool(max_increase <= tol),
        max_increase=max_increase,
        tolerance=tol,
        r0=_r0(params).r0,
    )
