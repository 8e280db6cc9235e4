import pytest

from vaxdyn.errors import UndefinedIndexError
from vaxdyn.model import derived_rates
from vaxdyn.params import PARAM_NAMES
from vaxdyn.sensitivity import (
    STRUCTURAL_ZEROS,
    chart_data_to_csv,
    local_index,
    normalized_index,
    sensitivity_table,
    table_to_csv,
)
from vaxdyn.threshold import r0


def test_structural_zero_rows_are_exact(fitted):
    for name in ("Lambda", "gamma3", "omega", "varphi"):
        assert local_index(fitted, name) == 0.0
        assert normalized_index(fitted, name) == 0.0


def test_beta_index_is_linear(fitted):
    analytic = r0(fitted).r0 / fitted.beta
    assert local_index(fitted, "beta") == pytest.approx(analytic, rel=1e-8)
    assert normalized_index(fitted, "beta") == pytest.approx(1.0, abs=1e-9)


def test_linear_parameters_match_analytic(fitted):
    # R0 is linear in each of these, so the difference quotient is exact up
    # to cancellation noise ~ eps * R0 / h with h = 1e-6 * p; 1e-8 * R0/p
    # bounds that with two orders of safety
    d = derived_rates(fitted)
    analytic = {
        "nu": d.B1 / d.k1,
        "nu1": d.B3 / d.k3,
        "kappa": d.B4 / d.k4,
        "beta": r0(fitted).r0 / fitted.beta,
    }
    base = r0(fitted).r0
    for name, want in analytic.items():
        tol = 1e-8 * base / getattr(fitted, name)
        assert local_index(fitted, name) == pytest.approx(want, abs=tol)


def test_reference_regression_values(fitted):
    rows = {r.param: r for r in sensitivity_table(fitted)}
    assert rows["sigma"].gamma == pytest.approx(185.9, rel=0.10)
    assert rows["sigma"].epsilon == pytest.approx(0.0242, abs=0.05)
    assert rows["rho"].epsilon == pytest.approx(-0.4251, abs=0.05)
    assert rows["kappa"].epsilon == pytest.approx(0.5181, abs=0.05)
    assert rows["nu1"].epsilon == pytest.approx(0.4737, abs=0.05)
    assert rows["sigma"].epsilon > 0


def test_isolation_orderings(fitted):
    rows = {r.param: r for r in sensitivity_table(fitted)}
    assert abs(rows["theta"].epsilon) < abs(rows["theta1"].epsilon)
    assert abs(rows["epsilon"].epsilon) < abs(rows["epsilon1"].epsilon)


def test_zero_valued_parameter_uses_one_sided_stencil(fitted):
    # at p = 0 the step floor is 1e-10, so cancellation noise limits the
    # one-sided estimate to ~1e-5 relative
    assert fitted.delta1 == 0.0
    d = derived_rates(fitted)
    analytic = -r0(fitted).r_I1 / d.k4  # dR0/ddelta1 = -kappa*B4/k4^2
    assert local_index(fitted, "delta1") == pytest.approx(analytic, rel=1e-5)
    assert normalized_index(fitted, "delta1") == 0.0


def test_scale_consistency_under_beta_doubling(fitted):
    doubled = fitted.replace(beta=2 * fitted.beta)
    assert r0(doubled).r0 == pytest.approx(2 * r0(fitted).r0, rel=1e-12)
    base_rows = {r.param: r for r in sensitivity_table(fitted)}
    new_rows = {r.param: r for r in sensitivity_table(doubled)}
    for name in PARAM_NAMES:
        if name == "beta" or name in STRUCTURAL_ZEROS:
            continue
        b, n = base_rows[name].epsilon, new_rows[name].epsilon
        assert n == pytest.approx(b, rel=1e-9, abs=1e-12)


def test_undefined_index_when_r0_zero(fitted):
    p = fitted.replace(beta=0.0)
    with pytest.raises(UndefinedIndexError):
        normalized_index(p, "rho")
    with pytest.raises(UndefinedIndexError):
        sensitivity_table(p)


def test_unknown_parameter_rejected(fitted):
    with pytest.raises(KeyError):
        local_index(fitted, "nonesuch")


def test_table_covers_all_parameters_in_order(fitted):
    rows = sensitivity_table(fitted)
    assert [r.param for r in rows] == list(PARAM_NAMES)


def test_rows_satisfy_normalization_identity(fitted):
    base = r0(fitted).r0
    for row in sensitivity_table(fitted):
        p = getattr(fitted, row.param)
        if p != 0.0:
            assert row.epsilon == pytest.approx(row.gamma * p / base, rel=1e-12)


def test_csv_exports(fitted, tmp_path):
    rows = sensitivity_table(fitted)
    table = table_to_csv(rows, tmp_path / "sens.csv")
    chart = chart_data_to_csv(rows, tmp_path / "chart.csv")
    assert table.splitlines()[0] == "param,gamma_R0,epsilon_R0"
    assert chart.splitlines()[0] == "param,epsilon_R0"
    assert len(table.splitlines()) == len(PARAM_NAMES) + 1
    # determinism: regenerating gives identical bytes
    assert table_to_csv(sensitivity_table(fitted)) == table
