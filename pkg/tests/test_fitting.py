from datetime import date, timedelta

import numpy as np
import pytest

from vaxdyn import fitting as F
from vaxdyn.errors import (
    CountryNotFoundError,
    DataQualityWarning,
    EmptyWindowError,
    FitFailureError,
    MalformedHeaderError,
)
from vaxdyn.params import fitted_params


def write_wide(path, dates, rows):
    """rows: list of (province, country, values)."""
    headers = ["Province/State", "Country/Region", "Lat", "Long"]
    headers += [f"{d.month}/{d.day}/{str(d.year)[2:]}" for d in dates]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(headers) + "\n")
        for prov, country, values in rows:
            fh.write(",".join([prov, country, "0", "0"] + [str(v) for v in values]) + "\n")
    return path


@pytest.fixture
def mini_files(tmp_path):
    dates = [date(2020, 1, 22) + timedelta(days=i) for i in range(3)]

    def make(name, values):
        return write_wide(tmp_path / name, dates, [("", "South Africa", values)])

    return {
        "confirmed": make("c.csv", [10, 20, 30]),
        "deaths": make("d.csv", [1, 2, 3]),
        "recovered": make("r.csv", [2, 4, 6]),
        "vaccinations": make("v.csv", [0, 5, 5]),
    }


class TestLoadSeries:
    def test_minimal_fixture(self, mini_files):
        s = F.load_series(
            mini_files["confirmed"], mini_files["deaths"],
            mini_files["recovered"], mini_files["vaccinations"],
        )
        assert len(s.dates) == 3
        assert s.dates[0] == date(2020, 1, 22)
        assert list(s.confirmed_cum) == [10, 20, 30]
        assert list(s.vaccinations_daily) == [0, 5, 5]

    def test_missing_country(self, mini_files):
        with pytest.raises(CountryNotFoundError, match="Lesotho"):
            F.load_series(
                mini_files["confirmed"], mini_files["deaths"],
                mini_files["recovered"], mini_files["vaccinations"],
                country="Lesotho",
            )

    def test_malformed_date_header(self, tmp_path, mini_files):
        bad = tmp_path / "bad.csv"
        bad.write_text(
            "Province/State,Country/Region,Lat,Long,notadate\n,South Africa,0,0,1\n",
            encoding="utf-8",
        )
        with pytest.raises(MalformedHeaderError):
            F.load_series(bad, mini_files["deaths"], mini_files["recovered"], mini_files["vaccinations"])

    def test_wrong_leading_columns(self, tmp_path, mini_files):
        bad = tmp_path / "bad2.csv"
        bad.write_text("a,b,c,d,1/22/20\n,South Africa,0,0,1\n", encoding="utf-8")
        with pytest.raises(MalformedHeaderError):
            F.load_series(bad, mini_files["deaths"], mini_files["recovered"], mini_files["vaccinations"])

    def test_decreasing_cumulative_warns_and_clamps(self, tmp_path, mini_files):
        dates = [date(2020, 1, 22) + timedelta(days=i) for i in range(3)]
        dipped = write_wide(tmp_path / "dip.csv", dates, [("", "South Africa", [10, 8, 30])])
        with pytest.warns(DataQualityWarning):
            s = F.load_series(dipped, mini_files["deaths"], mini_files["recovered"], mini_files["vaccinations"])
        assert list(s.confirmed_cum) == [10, 10, 30]

    def test_province_rows_are_summed(self, tmp_path, mini_files):
        dates = [date(2020, 1, 22) + timedelta(days=i) for i in range(3)]
        split = write_wide(
            tmp_path / "split.csv", dates,
            [("Gauteng", "South Africa", [5, 10, 15]), ("Western Cape", "South Africa", [5, 10, 15])],
        )
        s = F.load_series(split, mini_files["deaths"], mini_files["recovered"], mini_files["vaccinations"])
        assert list(s.confirmed_cum) == [10, 20, 30]


@pytest.fixture(scope="module")
def series(snapshot_dir):
    return F.load_series(*(snapshot_dir / F.DATA_FILENAMES[k] for k in
                           ("confirmed", "deaths", "recovered", "vaccinations")))


class TestSnapshot:

    def test_calendar_anchors(self, series):
        assert series.dates[0] == date(2020, 1, 22)
        assert series.day_index(date(2021, 2, 17)) == 392
        assert series.day_index(F.ACTIVE_CUTOFF) == 561

    def test_truncation_removes_artificial_ramp(self, series):
        active = F.derive_active(series)
        assert active.dates[-1] == date(2021, 8, 5)
        # past the cutoff the raw series ramps because recoveries froze
        raw = series.confirmed_cum - series.recovered_cum - series.deaths_cum
        assert raw[-1] > 2 * raw[561]

    def test_primary_estimates(self, series):
        est = F.estimate_primaries(series, population=60.2e6)
        assert est.sigma == pytest.approx(7.9e-4, rel=0.01)
        assert est.doses_total == 8_182_380
        assert est.mu == pytest.approx(9.468e-3 / 365.0, rel=1e-12)
        assert est.mu == pytest.approx(2.594e-5, rel=1e-3)
        # the canonical vector keeps the reference value, which differs
        assert fitted_params().mu == 2.6433e-5
        assert est.Lambda == pytest.approx(60.2e6 * (0.012 + 9.468e-3) / 365.0, rel=1e-12)

    def test_zero_doses_gives_zero_sigma(self, series):
        zeroed = F.CaseSeries(
            dates=series.dates,
            confirmed_cum=series.confirmed_cum,
            deaths_cum=series.deaths_cum,
            recovered_cum=series.recovered_cum,
            vaccinations_daily=np.zeros_like(series.vaccinations_daily),
        )
        assert F.estimate_primaries(zeroed, population=60.2e6).sigma == 0.0

    def test_window_outside_series_raises(self, series):
        with pytest.raises(EmptyWindowError):
            F.estimate_primaries(series, population=60.2e6,
                                 window=(date(2025, 1, 1), date(2025, 6, 1)))


def test_derive_active_closed_cases_only():
    dates = tuple(date(2021, 1, 1) + timedelta(days=i) for i in range(4))
    conf = np.array([10.0, 20.0, 30.0, 40.0])
    series = F.CaseSeries(
        dates=dates, confirmed_cum=conf, deaths_cum=conf * 0.25,
        recovered_cum=conf * 0.75, vaccinations_daily=np.zeros(4),
    )
    active = F.derive_active(series)
    assert np.all(active.values == 0.0)


def test_derive_active_respects_custom_cutoff():
    dates = tuple(date(2021, 8, 1) + timedelta(days=i) for i in range(10))
    conf = np.arange(10, dtype=float)
    series = F.CaseSeries(
        dates=dates, confirmed_cum=conf, deaths_cum=np.zeros(10),
        recovered_cum=np.zeros(10), vaccinations_daily=np.zeros(10),
    )
    active = F.derive_active(series, cutoff=date(2021, 8, 5))
    assert active.dates[-1] == date(2021, 8, 5)
    assert len(active.dates) == 5


def test_initial_state_partition():
    st = F.initial_state_from_active(1000.0, 1e6, eta_split=0.4, q_fraction=0.5)
    assert st.Q == 500.0
    assert st.A == pytest.approx(0.4 * 500.0)
    assert st.I == pytest.approx(0.6 * 500.0)
    assert st.A1 == st.I1 == st.V == st.R == 0.0
    assert st.S == 1e6 - 1000.0
    assert st.n == pytest.approx(1e6)


class TestFitSpecFile:
    def test_round_trip(self, tmp_path):
        spec = F.default_fit_spec()
        path = tmp_path / "spec.csv"
        path.write_text(F.format_fit_spec(spec), encoding="utf-8")
        again = F.load_fit_spec(path)
        assert again == spec

    def test_rejects_bad_header(self):
        from vaxdyn.errors import ParamsError

        with pytest.raises(ParamsError, match="header"):
            F.parse_fit_spec("a,b,c\nx,1,2\n")

    def test_rejects_unknown_parameter(self):
        from vaxdyn.errors import ParamsError

        text = F.format_fit_spec(F.default_fit_spec()).replace("kappa,", "quux,")
        with pytest.raises(ParamsError, match="quux"):
            F.parse_fit_spec(text)

    def test_fixed_rows_may_omit_bounds(self):
        text = F.format_fit_spec(F.default_fit_spec())
        lines = text.splitlines()
        out = []
        for line in lines:
            if line.startswith("Lambda,"):
                cells = line.split(",")
                out.append(f"Lambda,{cells[1]},,,false")
            else:
                out.append(line)
        spec = F.parse_fit_spec("\n".join(out))
        assert spec.entries["Lambda"].lower == spec.entries["Lambda"].initial


class TestFitSpec:
    def test_default_spec_bounds_and_fixed_rows(self):
        spec = F.default_fit_spec()
        assert set(spec.entries) == set(F.PARAM_NAMES)
        for name in ("Lambda", "sigma", "mu", "omega"):
            assert not spec.entries[name].free
        assert spec.entries["rho"].lower == 0.3
        assert spec.entries["rho"].upper == 1.0
        assert spec.entries["beta"].upper == 3.0
        assert spec.entries["kappa"].lower == 1.0
        # boxes tabulated against companion parameters stay inside the
        # companion's own admissible range
        assert spec.entries["delta1"].upper <= spec.entries["delta"].lower
        assert spec.entries["theta1"].upper <= spec.entries["theta"].upper
        assert spec.entries["phi"].lower >= spec.entries["eta"].lower

    def test_initial_outside_bounds_rejected(self):
        with pytest.raises(ValueError):
            F.ParamSpec(initial=0.5, lower=0.0, upper=0.4)

    def test_build_params_round_trip(self):
        spec = F.default_fit_spec()
        theta = spec.initial_vector()
        p = spec.build_params(theta)
        for name in spec.free_names:
            assert getattr(p, name) == spec.entries[name].initial


def three_param_spec(truth):
    base = F.default_fit_spec()
    entries = {}
    for name, entry in base.entries.items():
        if name in ("beta", "rho", "eta"):
            entries[name] = entry
        else:
            v = getattr(truth, name)
            entries[name] = F.ParamSpec(initial=v, lower=v, upper=v, free=False)
    return F.FitSpec(entries=entries)


def synthetic_active(truth, init_state, n_days=170):
    offsets = np.arange(float(n_days))
    dates = tuple(date(2021, 2, 17) + timedelta(days=i) for i in range(n_days))
    cfg = F.IntegratorConfig(rel_tol=1e-9, output_stride=1.0)
    return F.ActiveSeries(dates=dates, values=F.model_active(truth, init_state, offsets, cfg))


class TestFit:
    def test_noiseless_round_trip_three_params(self, fitted):
        init_state = F.initial_state_from_active(37000.0, 60.2e6)
        active = synthetic_active(fitted, init_state)
        res = F.fit(three_param_spec(fitted), active, init_state, seed=1, n_starts=2)
        for name in ("beta", "rho", "eta"):
            got = getattr(res.params, name)
            want = getattr(fitted, name)
            assert got == pytest.approx(want, rel=0.01), name
        assert res.loss <= res.loss_initial
        assert res.n_starts == 2

    def test_results_stay_inside_bounds(self, fitted):
        init_state = F.initial_state_from_active(37000.0, 60.2e6)
        active = synthetic_active(fitted, init_state)
        spec = three_param_spec(fitted)
        res = F.fit(spec, active, init_state, seed=3, n_starts=2, max_nfev=60)
        lo, hi = spec.bounds()
        x = np.array([getattr(res.params, n) for n in spec.free_names])
        assert np.all(x >= lo) and np.all(x <= hi)
        assert set(res.at_bound) == set(spec.free_names)

    def test_determinism_bit_for_bit(self, fitted):
        init_state = F.initial_state_from_active(37000.0, 60.2e6)
        active = synthetic_active(fitted, init_state)
        spec = three_param_spec(fitted)
        r1 = F.fit(spec, active, init_state, seed=7, n_starts=3, max_nfev=40)
        r2 = F.fit(spec, active, init_state, seed=7, n_starts=3, max_nfev=40)
        assert r1.params == r2.params
        assert r1.loss == r2.loss
        assert r1.best_start == r2.best_start

    def test_empty_series_fails(self, fitted):
        init_state = F.initial_state_from_active(37000.0, 60.2e6)
        empty = F.ActiveSeries(dates=(), values=np.array([]))
        with pytest.raises(FitFailureError):
            F.fit(three_param_spec(fitted), empty, init_state)


def test_model_active_rejects_nonuniform_offsets(fitted):
    init_state = F.initial_state_from_active(37000.0, 60.2e6)
    with pytest.raises(ValueError):
        F.model_active(fitted, init_state, np.array([0.0, 1.0, 3.0]))
