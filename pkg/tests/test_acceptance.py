"""Acceptance gate: every release criterion with its stated tolerance.

Each test prints one [PASS] line on success so a plain ``pytest -s
tests/test_acceptance.py`` run doubles as the acceptance report. Budgets
are wall-clock seconds on commodity hardware.
"""

import time
from datetime import date, timedelta

import numpy as np
import pytest

from oracles import fd_rhs_hessian
from vaxdyn import fitting as F
from vaxdyn.bifurcation import (
    bifurcation_coefficients,
    bistability_demo,
    critical_beta,
    find_backward_witness,
    rhs_hessian_at_dfe,
    witness_initial_states,
)
from vaxdyn.equilibria import build_polynomial, classify, endemic_equilibria, vaccination_suppression_check
from vaxdyn.integrate import IntegratorConfig, integrate, lyapunov_decrease_check
from vaxdyn.model import State, rhs_array
from vaxdyn.params import sample_params, fitted_params
from vaxdyn.sensitivity import sensitivity_table
from vaxdyn.threshold import beta_for_target_r0, r0, r0_ngm_oracle


class Budget:
    def __init__(self, name, seconds):
        self.name = name
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.elapsed = time.perf_counter() - self.start
        if exc_type is None:
            assert self.elapsed < self.seconds, (
                f"{self.name} exceeded budget: {self.elapsed:.1f}s >= {self.seconds}s"
            )
            print(f"[PASS] {self.name} ({self.elapsed:.1f}s)")


def test_criterion_01_r0_oracle_equivalence():
    with Budget("criterion 1: closed-form R0 equals NGM spectral radius (1000 sets)", 5.0):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            p = sample_params(rng)
            closed = r0(p).r0
            oracle = r0_ngm_oracle(p)
            assert abs(closed - oracle) <= 1e-9 * max(closed, 1e-12)


def test_criterion_02_q0_identity():
    with Budget("criterion 2: Q0 identity on 1000 sets and at the threshold", 5.0):
        rng = np.random.default_rng(2)
        for _ in range(1000):
            p = sample_params(rng)
            poly = build_polynomial(p)
            ref = poly.q0_identity_reference()
            scale = (p.omega + p.mu) * (p.sigma + p.mu) ** 2
            assert abs(poly.Q0 - ref) <= 1e-9 * max(abs(ref), scale)
        for seed in range(20):
            p = sample_params(np.random.default_rng(1000 + seed))
            p = p.replace(beta=critical_beta(p))
            poly = build_polynomial(p)
            scale = (p.omega + p.mu) * (p.sigma + p.mu) ** 2
            assert abs(poly.Q0) <= 1e-9 * scale


def test_criterion_03_equilibrium_residuals_and_descartes():
    with Budget("criterion 3: fixed-point residuals + Descartes soundness (500 sets)", 30.0):
        rng = np.random.default_rng(3)
        n_with_equilibria = 0
        for _ in range(500):
            p = sample_params(rng)
            poly = build_polynomial(p)
            case = classify(poly)
            eqs = endemic_equilibria(p)
            for eq in eqs:
                assert np.max(np.abs(rhs_array(eq.compartments, p))) <= 1e-8 * p.Lambda
            if not case.boundary:
                assert len(eqs) in case.possible_root_counts
            n_with_equilibria += bool(eqs)
        assert n_with_equilibria > 50  # the sweep exercises non-trivial cases


def test_criterion_04_backward_bifurcation_witness():
    with Budget("criterion 4: backward-bifurcation witness with bistability demo", 120.0):
        witness = find_backward_witness(seed=0)
        rep = witness.report
        assert r0(witness.params).r0 < 1.0
        assert rep.a_coeff > 0.0 and rep.b_coeff > 0.0
        assert len(witness.equilibria) >= 1 and all(e.feasible for e in witness.equilibria)
        low, high = witness_initial_states(witness.params, witness.equilibria)
        demo = bistability_demo(witness.params, low, high, t_end=5000.0)
        assert demo.attractor_low == "dfe"
        assert demo.attractor_high == "endemic"
        assert demo.bistable


def test_criterion_05_global_stability_regime():
    with Budget("criterion 5: global stability with perfect vaccine (10 initial states)", 60.0):
        p = fitted_params().replace(rho=1.0, omega=0.0, varphi=0.0, beta=0.05)
        assert r0(p).r0 < 1.0
        rng = np.random.default_rng(5)
        cfg = IntegratorConfig(rel_tol=1e-8, abs_tol=1e-4, output_stride=5.0)
        scale = p.Lambda / p.mu
        for _ in range(10):
            y = rng.uniform(0.0, 1.0, 8)
            y[4] = y[5] = 0.0  # perfect vaccine: breakthrough classes start empty
            y = y / y.sum() * scale * rng.uniform(0.1, 0.9)
            traj = integrate(State.from_array(y), p, 3000.0, cfg)
            assert traj.total_infected()[-1] < 1.0
            report = lyapunov_decrease_check(traj, p)
            assert report.non_increasing


def test_criterion_06_vaccination_suppresses_equilibrium():
    with Budget("criterion 6: perfect-vaccine equilibrium shrinks with vaccination", 30.0):
        base = fitted_params().replace(rho=1.0, omega=0.0, varphi=0.0)
        p = base.replace(beta=beta_for_target_r0(base, 1.05))
        assert r0(p).r0 > 1.0 and r0(p.replace(sigma=0.0)).r0 > 1.0
        rep = vaccination_suppression_check(p)
        assert rep.applicable and rep.suppressed
        assert rep.i_star_sigma < rep.i_star_zero
        levels = []
        for sigma in np.linspace(0.0, p.sigma, 10):
            r = vaccination_suppression_check(p.replace(sigma=sigma))
            assert r.applicable
            levels.append(r.i_star_sigma)
        assert np.all(np.diff(levels) <= 1e-9 * max(levels))


def test_criterion_07_sensitivity_regression():
    with Budget("criterion 7: sensitivity table reproduces the reference indices", 5.0):
        fitted = fitted_params()
        rows = {r.param: r for r in sensitivity_table(fitted)}
        assert abs(rows["beta"].epsilon - 1.0) <= 1e-9
        assert rows["sigma"].epsilon == pytest.approx(0.0242, abs=0.05)
        assert rows["rho"].epsilon == pytest.approx(-0.4251, abs=0.05)
        assert rows["kappa"].epsilon == pytest.approx(0.5181, abs=0.05)
        assert rows["nu1"].epsilon == pytest.approx(0.4737, abs=0.05)
        for name in ("Lambda", "gamma3", "omega", "varphi"):
            assert rows[name].gamma == 0.0 and rows[name].epsilon == 0.0
        assert abs(rows["theta"].epsilon) < abs(rows["theta1"].epsilon)
        assert abs(rows["epsilon"].epsilon) < abs(rows["epsilon1"].epsilon)


def _three_param_spec(truth):
    base = F.default_fit_spec()
    entries = {}
    for name, entry in base.entries.items():
        if name in ("beta", "rho", "eta"):
            entries[name] = entry
        else:
            v = getattr(truth, name)
            entries[name] = F.ParamSpec(initial=v, lower=v, upper=v, free=False)
    return F.FitSpec(entries=entries)


def test_criterion_08_fit_round_trip():
    with Budget("criterion 8: synthetic round trip (noiseless 1%, noisy loss floor)", 300.0):
        truth = fitted_params()
        init_state = F.initial_state_from_active(37000.0, 60.2e6)
        offsets = np.arange(170.0)
        dates = tuple(date(2021, 2, 17) + timedelta(days=i) for i in range(170))
        cfg = F.IntegratorConfig(rel_tol=1e-9, output_stride=1.0)
        clean = F.model_active(truth, init_state, offsets, cfg)
        spec = _three_param_spec(truth)

        res = F.fit(spec, F.ActiveSeries(dates=dates, values=clean), init_state, seed=1, n_starts=8)
        for name in ("beta", "rho", "eta"):
            assert getattr(res.params, name) == pytest.approx(getattr(truth, name), rel=0.01), name

        rng = np.random.default_rng(8)
        noisy = clean * (1.0 + 0.02 * rng.standard_normal(clean.size))
        floor = float(np.sum((noisy - clean) ** 2))
        res2 = F.fit(spec, F.ActiveSeries(dates=dates, values=noisy), init_state, seed=1, n_starts=8)
        assert res2.loss <= 1.5 * floor


def test_criterion_09_snapshot_fit_reproduces_findings(snapshot_dir):
    with Budget("criterion 9: bundled-data calibration recovers the reference findings", 600.0):
        series = F.load_series(*(snapshot_dir / F.DATA_FILENAMES[k] for k in
                                 ("confirmed", "deaths", "recovered", "vaccinations")))
        window = F.derive_active(series).window(F.VACCINATION_START, F.ACTIVE_CUTOFF)
        init_state = F.initial_state_from_active(float(window.values[0]), 60.2e6)
        res = F.fit(F.default_fit_spec(), window, init_state, seed=0, n_starts=8)
        p = res.params
        assert p.rho < 0.5
        assert p.gamma5 > p.gamma2
        assert p.delta1 < p.delta
        assert res.loss <= res.loss_initial


def test_criterion_10_b_positivity_and_hessian_oracle():
    with Budget("criterion 10: b > 0 at the threshold (100 sets) + Hessian oracle", 60.0):
        rng = np.random.default_rng(10)
        for i in range(100):
            p = sample_params(rng).replace()
            p = p.replace(beta=critical_beta(p))
            rep = bifurcation_coefficients(p)
            assert rep.b_coeff > 0.0, f"set {i}"
            if i % 10 == 0:  # the FD tensor is the slow part; 10 sets suffice
                analytic = rhs_hessian_at_dfe(p)
                numeric = fd_rhs_hessian(p)
                scale = np.max(np.abs(analytic))
                assert np.max(np.abs(analytic - numeric)) <= 1e-6 * scale
