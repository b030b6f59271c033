from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from chargecheck.errors import DomainError
from chargecheck.physics import cumulative_draw
from chargecheck.predictor import EmpiricalDist
from chargecheck.priors import Hypothesis, UndeclaredModel
from chargecheck.simulate import (ConfusionMatrix, DriverScenario, StudyConfig, TripGenConfig,
                                  generate_trip_log, run_mc_study, run_season, run_sweep,
                                  scenario_sweep, simulate_observation, soc_pair_for,
                                  study_predictor, study_trip_log, trip_distances, with_trip)
from chargecheck.triplog import Season, format_gps_csv, parse_gps_csv, total_duration, trip_count

from oracles import naive_cumulative_draw_kwh


def test_size_contract():
    log = generate_trip_log(TripGenConfig(n_trips=1, mean_trip_duration=10), Season.SUMMER)
    assert trip_count(log) == 1 and len(log) == 11
    assert log.speed[0] == 0 and log.speed[-1] == 0


@pytest.mark.parametrize("s", range(3))
def test_urban_calibration_distance(s):
    cfg = TripGenConfig(n_trips=40, mean_trip_duration=1000, cruise_mean=8.0, seed=s)
    log = generate_trip_log(cfg, Season.SUMMER)
    assert trip_count(log) == 40 and total_duration(log) == 40_000
    assert trip_distances(log).sum() / 1000 == pytest.approx(320, rel=0.2)


@pytest.mark.parametrize("cfg", [TripGenConfig(),
                                 TripGenConfig(cruise_mean=8.0, mean_trip_duration=1000)])
@pytest.mark.parametrize("s", range(3))
def test_trip_distance_band(cfg, s):
    d = trip_distances(generate_trip_log(replace(cfg, seed=s), Season.WINTER))
    nominal = cfg.cruise_mean * cfg.mean_trip_duration
    assert np.all(np.abs(d / nominal - 1) <= 0.5)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
@seed(43)
def test_trip_distance_band_any_seed(s):
    cfg = TripGenConfig(seed=s)
    d = trip_distances(generate_trip_log(cfg, Season.SUMMER))
    assert np.all(np.abs(d / (cfg.cruise_mean * cfg.mean_trip_duration) - 1) <= 0.5)


def test_default_interval_is_about_320_km():
    log = generate_trip_log(TripGenConfig(), Season.SUMMER)
    assert trip_count(log) == 40
    assert trip_distances(log).sum() / 1000 == pytest.approx(320, rel=0.2)


def test_generator_deterministic():
    cfg = TripGenConfig(n_trips=5, seed=8)
    assert generate_trip_log(cfg, Season.SUMMER) == generate_trip_log(cfg, Season.SUMMER)
    assert generate_trip_log(cfg, Season.SUMMER) != generate_trip_log(replace(cfg, seed=9),
                                                                      Season.SUMMER)


def test_season_only_moves_timestamps():
    cfg = TripGenConfig(n_trips=5, seed=8)
    s, w = generate_trip_log(cfg, Season.SUMMER), generate_trip_log(cfg, Season.WINTER)
    assert s.season is Season.SUMMER and w.season is Season.WINTER
    assert np.array_equal(s.speed, w.speed) and not np.array_equal(s.time, w.time)
    assert parse_gps_csv(format_gps_csv(w)).season is Season.WINTER


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(1, 400), st.floats(0.5, 35), st.floats(0, 0.9),
       st.floats(0, 0.1), st.integers(0, 10**6))
@seed(37)
def test_generated_logs_are_valid(n, dur, cruise, jitter, stop, s):
    cfg = TripGenConfig(n_trips=n, mean_trip_duration=dur, cruise_mean=cruise,
                        duration_jitter=jitter, stop_prob=stop, seed=s)
    log = generate_trip_log(cfg, Season.SUMMER)  # TripLog validates on construction
    assert trip_count(log) == n and np.all(log.speed >= 0)
    v0, v1, h0, h1 = log.step_arrays()
    assert np.all(np.abs(v1 - v0) <= cfg.accel_bound + 1e-9)
    assert np.all(np.abs(h1 - h0) <= cfg.max_grade * v0 + 1e-9)


@pytest.mark.parametrize("bad", [dict(n_trips=0), dict(cruise_mean=0), dict(stop_prob=1.0),
                                 dict(duration_jitter=1.0), dict(speed_noise=-1)])
def test_tripgen_validation(bad):
    with pytest.raises(DomainError):
        TripGenConfig(**bad)


def test_scenario_invariants():
    model = UndeclaredModel(0.5, 7, 35)
    DriverScenario(Hypothesis.H1, 10.0, 80, 500, Season.SUMMER).check(model)
    with pytest.raises(DomainError):
        DriverScenario(Hypothesis.H0, 1.0, 80, 500, Season.SUMMER)
    with pytest.raises(DomainError):
        DriverScenario(Hypothesis.H1, 0.0, 80, 500, Season.SUMMER)
    with pytest.raises(DomainError):
        DriverScenario(Hypothesis.H1, 5.0, 80, 500, Season.SUMMER).check(model)


def test_h0_observation_is_x_c(moving_log, kia):
    obs = simulate_observation(DriverScenario("H0", 0.0, 120, 900, "summer"), moving_log, kia)
    assert obs.x_d == obs.x_c == cumulative_draw(moving_log, 120, 900, kia)
    assert obs.feasible and obs.soc.x0 == kia.e_max and obs.soc.x_d == pytest.approx(obs.x_d)


def test_large_undeclared_gives_negative_x_d(moving_log, kia):
    obs = simulate_observation(DriverScenario("H1", 17.5, 80, 300, "summer"), moving_log, kia)
    assert obs.x_c < 17.5 and obs.x_d < 0
    assert obs.feasible and obs.soc.x1 == kia.e_max
    assert obs.soc.x_d == pytest.approx(obs.x_d, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(x_u=st.floats(0.01, 35), m=st.floats(0, 350), w=st.floats(0, 6000),
       s=st.integers(0, 2**31))
@seed(41)
def test_conservation_against_oracle(x_u, m, w, s, kia_dict):
    from conftest import random_log
    from chargecheck.physics import EvParams
    kia = EvParams.kia_soul_2020()
    log = random_log(np.random.default_rng(s), 60, n_trips=2, vmax=20)
    obs = simulate_observation(DriverScenario("H1", x_u, m, w, "winter"), log, kia)
    # machine precision relative to the larger of the two operands
    assert abs(obs.x_d + x_u - obs.x_c) <= 2 * np.spacing(max(abs(obs.x_c), x_u))
    ref = naive_cumulative_draw_kwh(list(zip(log.trip, log.speed, log.altitude)), m, w, kia_dict)
    assert obs.x_c == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_soc_pair_feasibility():
    assert soc_pair_for(10, 35).x_d == 10
    assert soc_pair_for(-5, 35).x_d == -5
    assert soc_pair_for(35, 35) is not None
    assert soc_pair_for(35.01, 35) is None and soc_pair_for(-36, 35) is None


def test_confusion_accounting():
    cm = ConfusionMatrix()
    cm.add([0, 0, 0, 1, 1, 1, 1], [0, 0, 2, 1, 1, 0, 2])
    assert cm.row_total(Hypothesis.H0) == 3 and cm.row_total(Hypothesis.H1) == 4
    assert cm.specificity == 1.0
    assert cm.sensitivity == pytest.approx(2 / 3)
    assert cm.erasure_rate(Hypothesis.H1) == 0.25
    assert (cm + cm).row_total(Hypothesis.H1) == 8
    assert cm.to_csv() == "truth,decided_h0,decided_h1,decided_e\nH0,2,0,1\nH1,1,2,1\n"
    assert np.isnan(ConfusionMatrix().sensitivity)


SMALL = StudyConfig(trials=400, samples=2000, trip=TripGenConfig(n_trips=6, seed=1))


@pytest.fixture(scope="module")
def small_reports():
    return run_mc_study(SMALL)


def test_study_rows_sum_to_trials(small_reports):
    for rep in small_reports.values():
        c = rep.confusion.counts
        assert np.all(c >= 0) and c.sum() == SMALL.trials
        assert len(rep.posteriors_h0) == rep.confusion.row_total(Hypothesis.H0)
        assert len(rep.posteriors_h1) == rep.confusion.row_total(Hypothesis.H1)
        _, counts = rep.posterior_histogram(Hypothesis.H1)
        assert counts.sum() == len(rep.posteriors_h1)


def test_study_is_calibrated_on_average(small_reports):
    for rep in small_reports.values():
        assert rep.posteriors_h1.mean() > rep.posteriors_h0.mean()


def test_study_deterministic(small_reports):
    again = run_mc_study(replace(SMALL, workers=3))
    for s, rep in small_reports.items():
        assert np.array_equal(rep.confusion.counts, again[s].confusion.counts)
        assert np.array_equal(rep.posteriors_h1, again[s].posteriors_h1)
        assert rep.summary() == again[s].summary()


def test_study_seed_matters(small_reports):
    other = run_season(replace(SMALL, seed=7), Season.SUMMER)
    assert not np.array_equal(other.posteriors_h1, small_reports[Season.SUMMER].posteriors_h1)


def test_exclusion_knob():
    # a long interval drives x_c past the battery capacity for most H0 trials
    study = replace(SMALL, trials=300, trip=TripGenConfig(n_trips=60, seed=2))
    tallied = run_season(study, Season.WINTER)
    excluded = run_season(replace(study, exclude_infeasible=True), Season.WINTER)
    assert tallied.infeasible[0] > 0
    assert tallied.confusion.counts.sum() == 300
    assert excluded.confusion.counts.sum() == 300 - tallied.infeasible.sum()
    assert "(excluded)" in excluded.summary() and "(tallied)" in tallied.summary()


def test_report_csv(small_reports):
    rep = small_reports[Season.SUMMER]
    text = rep.posterior_histogram_csv(Hypothesis.H0)
    lines = text.splitlines()
    assert lines[0] == "posterior_left,posterior_right,count" and len(lines) == 21
    assert sum(int(ln.split(",")[2]) for ln in lines[1:]) == len(rep.posteriors_h0)


def test_study_config_validation():
    with pytest.raises(DomainError):
        StudyConfig(trials=0)
    with pytest.raises(DomainError):
        StudyConfig(x_u_max=40.0)
    assert StudyConfig().undeclared().x_u_max == 35.0
    assert with_trip(SMALL, n_trips=3).trip.n_trips == 3


def test_shared_log_across_seasons():
    s = study_trip_log(SMALL, Season.SUMMER)
    w = study_trip_log(SMALL, Season.WINTER)
    assert np.array_equal(s.speed, w.speed) and s.season != w.season


@pytest.fixture(scope="module")
def sweep_setup(kia):
    log = study_trip_log(SMALL, Season.SUMMER)
    return log, study_predictor(SMALL, Season.SUMMER, log)


def test_sweep_shift_identity(sweep_setup, kia):
    log, xc = sweep_setup
    model = SMALL.undeclared()
    base = scenario_sweep(log, kia, Season.SUMMER, xc, model, 0.0, 3000,
                          rng=np.random.default_rng(5))
    for frac in (0.2, 0.5):
        x_u = frac * kia.e_max
        r = scenario_sweep(log, kia, Season.SUMMER, xc, model, x_u, 3000,
                           rng=np.random.default_rng(5))
        shift = round(x_u / xc.bin_width)
        assert r.xd_dist.first_bin == base.xd_dist.first_bin - shift
        assert np.array_equal(r.xd_dist.masses, base.xd_dist.masses)


def test_sweep_posteriors_match_curve(sweep_setup, kia):
    log, xc = sweep_setup
    r = scenario_sweep(log, kia, Season.SUMMER, xc, SMALL.undeclared(), 7.0, 500,
                       rng=np.random.default_rng(1))
    from chargecheck.detector import posterior_h1
    for x in r.xd_samples[:20]:
        assert posterior_h1(xc, SMALL.undeclared(), x).posterior_h1 == r.curve.at(x)
    assert 0 <= r.fraction_above(0.9) <= 1
    with pytest.raises(DomainError):
        scenario_sweep(log, kia, Season.SUMMER, xc, SMALL.undeclared(), -1.0, 10)


def test_run_sweep_uses_independent_stream():
    a = run_sweep(SMALL, Season.SUMMER, 0.0, 500)
    b = run_sweep(SMALL, Season.SUMMER, 0.0, 500)
    assert np.array_equal(a.xd_samples, b.xd_samples)
    assert isinstance(a.xd_dist, EmpiricalDist)
