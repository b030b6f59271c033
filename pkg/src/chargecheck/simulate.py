"""Synthetic certified intervals and the Monte Carlo study of the detector.

Trip logs come from a clamped mean-reverting random walk on speed with random
stops, and a smooth bounded-grade walk on altitude. Compliant (H0) and
non-compliant (H1) drivers are simulated through the energy balance
``x_d = x_c - x_u`` and classified by the detector.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

import numpy as np

from .detector import (Decision, PosteriorCurve, SocPair, Thresholds, posterior_curve,
                       ternary_decisions)
from .errors import DomainError
from .physics import EvParams, PhysicsConstants, cumulative_draw, cumulative_draw_many
from .predictor import (DEFAULT_BIN_WIDTH, DEFAULT_SAMPLES, DistStats, EmpiricalDist,
                        dist_stats, predict_xc, sample_xc)
from .priors import (AuxPowerModel, Hypothesis, MassModel, UndeclaredModel, sample_aux_power,
                     sample_mass)
from .triplog import Season, TripLog

SEASON_START = {
    Season.SUMMER: datetime(2024, 7, 1, tzinfo=timezone.utc),
    Season.WINTER: datetime(2024, 1, 8, tzinfo=timezone.utc),
}


@dataclass(frozen=True)
class TripGenConfig:
    """Synthetic trip generator settings.

    The defaults give 40 trips of about 7.5 km, about 300 km over two weeks,
    driven at motorway pace so the whole interval takes about 2.5 h.
    """

    n_trips: int = 40
    mean_trip_duration: float = 220.0  # s
    duration_jitter: float = 0.0  # trip durations uniform in mean * (1 +/- jitter)
    cruise_mean: float = 42.0  # m/s, target speed before stops and ramps
    cruise_spread: float = 0.1  # relative sd of the per-trip cruise speed
    reversion: float = 0.15  # 1/s, pull of the speed towards the cruise speed
    speed_noise: float = 0.5  # m/s per step
    accel_bound: float = 2.0  # m/s^2
    stop_prob: float = 1.0 / 800  # per s while moving
    stop_dwell: float = 15.0  # mean s stood still per stop
    max_grade: float = 0.04
    grade_smoothness: float = 0.98  # AR(1) coefficient of the grade
    interval_days: float = 14.0
    seed: int = 0

    def __post_init__(self):
        if self.n_trips < 1 or self.mean_trip_duration < 1:
            raise DomainError("need at least one trip of at least 1 s")
        for name in ("cruise_mean", "accel_bound", "max_grade", "interval_days"):
            if not getattr(self, name) > 0:
                raise DomainError(f"TripGenConfig.{name} must be positive")
        if not 0 <= self.duration_jitter < 1:
            raise DomainError("duration_jitter must lie in [0, 1)")
        if not 0 <= self.stop_prob < 1 or not 0 <= self.grade_smoothness < 1:
            raise DomainError("stop_prob and grade_smoothness must lie in [0, 1)")
        if min(self.cruise_spread, self.reversion, self.speed_noise, self.stop_dwell) < 0:
            raise DomainError("TripGenConfig spreads and rates must be non-negative")


def _trip_profile(cfg: TripGenConfig, steps: int, h_start: float,
                  rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    v = np.zeros(steps + 1)
    h = np.empty(steps + 1)
    h[0] = h_start
    target = max(0.3 * cfg.cruise_mean, cfg.cruise_mean * (1 + cfg.cruise_spread * rng.normal()))
    noise = rng.normal(size=steps)
    grade_noise = rng.normal(size=steps)
    stops = rng.random(steps) < cfg.stop_prob
    dwell_draws = rng.exponential(cfg.stop_dwell, size=steps) if cfg.stop_dwell > 0 else np.zeros(steps)
    a_max = cfg.accel_bound
    grade = 0.0
    stopping, dwell = False, 0.0
    for t in range(steps):
        vt = v[t]
        if stopping:
            if vt > 0:
                nxt = max(vt - a_max, 0.0)
            else:
                nxt = 0.0
                dwell -= 1
                stopping = dwell > 0
        else:
            a = cfg.reversion * (target - vt) + cfg.speed_noise * noise[t]
            nxt = max(vt + min(max(a, -a_max), a_max), 0.0)
            if stops[t] and vt > 0:
                stopping, dwell = True, dwell_draws[t]
        # leave room to brake to a standstill by the last sample
        v[t + 1] = min(nxt, a_max * (steps - t - 1))
        grade = (cfg.grade_smoothness * grade
                 + (1 - cfg.grade_smoothness) * cfg.max_grade * grade_noise[t]
                 - 1e-4 * (h[t] - h_start) / max(1.0, vt))
        grade = min(max(grade, -cfg.max_grade), cfg.max_grade)
        h[t + 1] = h[t] + grade * vt
    return v, h


_DISTANCE_BAND = 0.5  # per-trip distance within +/-50% of cruise_mean * mean_trip_duration
_MAX_REDRAWS = 20


def _band_limited_profile(cfg: TripGenConfig, steps: int, h_start: float,
                          rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    # redraw trips whose distance leaves the band; keep the closest if none fits
    nominal = cfg.cruise_mean * cfg.mean_trip_duration
    best, best_err = None, np.inf
    for _ in range(_MAX_REDRAWS):
        v, h = _trip_profile(cfg, steps, h_start, rng)
        err = abs(v[:-1].sum() / nominal - 1)
        if err <= _DISTANCE_BAND:
            return v, h
        if err < best_err:
            best, best_err = (v, h), err
    return best


def generate_trip_log(cfg: TripGenConfig, season: Season,
                      rng: np.random.Generator | None = None) -> TripLog:
    """Random multi-trip record for one certified interval.

    Each trip starts and ends at rest. The speed profile depends only on the
    generator stream, so the same seed gives the same driving in both seasons;
    ``season`` only moves the timestamps.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    start = int(SEASON_START[Season(season)].timestamp())
    slot = cfg.interval_days * 86400 / cfg.n_trips
    trips, times, speeds, alts = [], [], [], []
    prev_end = start - 1
    h_start = 20.0
    for i in range(cfg.n_trips):
        lo, hi = 1 - cfg.duration_jitter, 1 + cfg.duration_jitter
        steps = max(1, int(round(cfg.mean_trip_duration * rng.uniform(lo, hi))))
        slack = max(0.0, slot - steps - 60)
        t0 = max(int(start + i * slot + rng.uniform(0, slack)), prev_end + 60)
        v, h = _band_limited_profile(cfg, steps, h_start, rng)
        trips.append(np.full(steps + 1, i + 1))
        times.append(t0 + np.arange(steps + 1))
        speeds.append(v)
        alts.append(h)
        prev_end = t0 + steps
        h_start = h[-1]
    return TripLog(np.concatenate(trips), np.concatenate(times), np.concatenate(speeds),
                   np.concatenate(alts), Season(season))


def trip_distances(trip_log: TripLog) -> np.ndarray:
    """Distance of each trip in m (sum of v[t] over its 1 s steps)."""
    same = np.r_[trip_log.trip[1:] == trip_log.trip[:-1], False]
    labels = trip_log.trip_labels()
    return np.array([trip_log.speed[(trip_log.trip == k) & same].sum() for k in labels])


@dataclass(frozen=True)
class DriverScenario:
    true_hypothesis: Hypothesis
    true_x_u: float  # kWh
    true_m_peop: float  # kg
    true_w_aux: float  # W
    season: Season

    def __post_init__(self):
        h = Hypothesis(self.true_hypothesis)
        object.__setattr__(self, "true_hypothesis", h)
        object.__setattr__(self, "season", Season(self.season))
        if h is Hypothesis.H0 and self.true_x_u != 0:
            raise DomainError("an H0 driver has no undeclared energy")
        if h is Hypothesis.H1 and not self.true_x_u > 0:
            raise DomainError("an H1 driver needs positive undeclared energy")

    def check(self, model: UndeclaredModel) -> None:
        if self.true_hypothesis is Hypothesis.H1 and not model.x_u_min < self.true_x_u <= model.x_u_max:
            raise DomainError(f"x_u = {self.true_x_u} is outside the slab of {model}")


@dataclass(frozen=True)
class Observation:
    x_c: float
    x_d: float
    soc: SocPair | None  # None when no SoC pair in [0, e_max] realises x_d

    @property
    def feasible(self) -> bool:
        return self.soc is not None


def soc_pair_for(x_d: float, e_max: float) -> SocPair | None:
    """SoC readings realising ``x_d``; the car leaves the certified charger full
    unless it gained energy overall."""
    if x_d > e_max or x_d < -e_max:
        return None
    return SocPair(e_max, e_max - x_d) if x_d >= 0 else SocPair(e_max + x_d, e_max)


def simulate_observation(scenario: DriverScenario, trip_log: TripLog, params: EvParams,
                         consts: PhysicsConstants = PhysicsConstants()) -> Observation:
    x_c = cumulative_draw(trip_log, scenario.true_m_peop, scenario.true_w_aux, params, consts)
    x_d = x_c - scenario.true_x_u
    return Observation(x_c, x_d, soc_pair_for(x_d, params.e_max))


@dataclass
class ConfusionMatrix:
    """Counts indexed [truth (H0, H1), decision (H0, H1, E)]."""

    counts: np.ndarray = field(default_factory=lambda: np.zeros((2, 3), dtype=np.int64))

    ROWS = (Hypothesis.H0, Hypothesis.H1)
    COLS = (Decision.H0, Decision.H1, Decision.E)

    def add(self, truth: np.ndarray, decision: np.ndarray) -> None:
        """``truth`` in {0, 1}, ``decision`` in {0: H0, 1: H1, 2: E}."""
        np.add.at(self.counts, (np.asarray(truth, dtype=int), np.asarray(decision, dtype=int)), 1)

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts)

    def row_total(self, truth: Hypothesis) -> int:
        return int(self.counts[self.ROWS.index(truth)].sum())

    @property
    def sensitivity(self) -> float:
        tp, fn = self.counts[1, 1], self.counts[1, 0]
        return float(tp / (tp + fn)) if tp + fn else float("nan")

    @property
    def specificity(self) -> float:
        tn, fp = self.counts[0, 0], self.counts[0, 1]
        return float(tn / (tn + fp)) if tn + fp else float("nan")

    def erasure_rate(self, truth: Hypothesis) -> float:
        n = self.row_total(truth)
        return float(self.counts[self.ROWS.index(truth), 2] / n) if n else float("nan")

    def to_csv(self) -> str:
        lines = ["truth,decided_h0,decided_h1,decided_e"]
        for h, row in zip(self.ROWS, self.counts):
            lines.append(f"{h.value},{row[0]},{row[1]},{row[2]}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class StudyConfig:
    trials: int = 10_000
    p1_sim: float = 0.5  # Bernoulli used to draw the true hypothesis
    p1_detector: float = 0.5  # prior fed to the detector
    x_u_min: float = 0.0
    x_u_max: float | None = None  # None -> battery capacity
    samples: int = DEFAULT_SAMPLES
    bin_width: float = DEFAULT_BIN_WIDTH
    seed: int = 2024
    seasons: tuple[Season, ...] = (Season.SUMMER, Season.WINTER)
    trip: TripGenConfig = TripGenConfig()
    thresholds: Thresholds = Thresholds()
    mass_model: MassModel = MassModel()
    aux_model: AuxPowerModel = field(default_factory=AuxPowerModel)
    params: EvParams = field(default_factory=EvParams.kia_soul_2020)
    consts: PhysicsConstants = PhysicsConstants()
    mass_scale: float = 1.0  # misspecification: true mass = scale * prior draw
    aux_scale: float = 1.0  # misspecification: true power = scale * prior draw
    exclude_infeasible: bool = False
    posterior_bins: int = 20
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError("need at least one trial")
        if not (0 <= self.p1_sim <= 1 and 0 <= self.p1_detector <= 1):
            raise DomainError("prior probabilities must lie in [0, 1]")
        if self.mass_scale <= 0 or self.aux_scale <= 0:
            raise DomainError("misspecification scales must be positive")
        object.__setattr__(self, "seasons", tuple(Season(s) for s in self.seasons))
        self.undeclared().check_capacity(self.params.e_max)

    def undeclared(self, p1: float | None = None) -> UndeclaredModel:
        hi = self.params.e_max if self.x_u_max is None else self.x_u_max
        return UndeclaredModel(self.p1_detector if p1 is None else p1, self.x_u_min, hi)


@dataclass
class StudyReport:
    season: Season
    confusion: ConfusionMatrix
    infeasible: np.ndarray  # SoC-infeasible trials per truth class (H0, H1)
    posteriors_h0: np.ndarray  # detector output on tallied H0 trials
    posteriors_h1: np.ndarray
    xc_stats: DistStats
    posterior_bins: int = 20
    excluded_infeasible: bool = False

    @property
    def sensitivity(self) -> float:
        return self.confusion.sensitivity

    @property
    def specificity(self) -> float:
        return self.confusion.specificity

    def erasure_rate(self, truth: Hypothesis) -> float:
        return self.confusion.erasure_rate(truth)

    def posterior_histogram(self, truth: Hypothesis) -> tuple[np.ndarray, np.ndarray]:
        p = self.posteriors_h0 if Hypothesis(truth) is Hypothesis.H0 else self.posteriors_h1
        edges = np.linspace(0.0, 1.0, self.posterior_bins + 1)
        counts, _ = np.histogram(p, bins=edges)
        return edges, counts

    def posterior_histogram_csv(self, truth: Hypothesis) -> str:
        edges, counts = self.posterior_histogram(truth)
        buf = io.StringIO()
        buf.write("posterior_left,posterior_right,count\n")
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            buf.write(f"{lo:.6g},{hi:.6g},{c}\n")
        return buf.getvalue()

    def summary(self) -> str:
        c = self.confusion.counts
        s = self.xc_stats
        return "\n".join([
            f"season: {self.season.value}",
            f"x_c predictor: mean {s.mean:.3f} kWh, sd {s.variance ** 0.5:.3f} kWh, "
            f"mode {s.mode:.2f} kWh, support [{s.support[0]:.1f}, {s.support[1]:.1f}] kWh",
            "truth  decided_H0  decided_H1  decided_E",
            f"H0     {c[0, 0]:10d}  {c[0, 1]:10d}  {c[0, 2]:9d}",
            f"H1     {c[1, 0]:10d}  {c[1, 1]:10d}  {c[1, 2]:9d}",
            f"sensitivity (erasures excluded): {100 * self.sensitivity:.1f}%",
            f"specificity (erasures excluded): {100 * self.specificity:.1f}%",
            f"erasure rate: H0 {100 * self.erasure_rate(Hypothesis.H0):.1f}%, "
            f"H1 {100 * self.erasure_rate(Hypothesis.H1):.1f}%",
            f"SoC-infeasible trials: H0 {self.infeasible[0]}, H1 {self.infeasible[1]}"
            + (" (excluded)" if self.excluded_infeasible else " (tallied)"),
        ]) + "\n"


def _stream(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *tags]))


_SEASON_TAG = {Season.SUMMER: 1, Season.WINTER: 2}
_TRIPS, _PREDICT, _TRIALS, _SWEEP = 11, 12, 13, 14


def study_trip_log(study: StudyConfig, season: Season) -> TripLog:
    # same stream for every season: identical driving, season-specific dates
    return generate_trip_log(study.trip, season, _stream(study.seed, _TRIPS, study.trip.seed))


def study_predictor(study: StudyConfig, season: Season, trip_log: TripLog) -> EmpiricalDist:
    return predict_xc(trip_log, study.params, season, study.mass_model, study.aux_model,
                      study.samples, study.bin_width,
                      _stream(study.seed, _PREDICT, _SEASON_TAG[season]), study.consts,
                      study.workers)


def run_season(study: StudyConfig, season: Season) -> StudyReport:
    season = Season(season)
    log = study_trip_log(study, season)
    xc = study_predictor(study, season, log)
    curve = posterior_curve(xc, study.undeclared())
    rng = _stream(study.seed, _TRIALS, _SEASON_TAG[season])
    n = study.trials
    truth = (rng.random(n) < study.p1_sim).astype(int)
    slab = study.undeclared()
    u = rng.random(n)
    x_u = np.where(truth == 1, slab.x_u_min + (slab.x_u_max - slab.x_u_min) * (1.0 - u), 0.0)
    m = study.mass_scale * sample_mass(study.mass_model, rng, n)
    w = study.aux_scale * sample_aux_power(study.aux_model, season, rng, n)
    x_c = cumulative_draw_many(log, m, w, study.params, study.consts, study.workers)
    x_d = x_c - x_u
    e_max = study.params.e_max
    feasible = (x_d <= e_max) & (x_d >= -e_max)
    post = curve.at(x_d)
    decision = ternary_decisions(post, study.thresholds)
    keep = feasible if study.exclude_infeasible else np.ones(n, dtype=bool)
    cm = ConfusionMatrix()
    cm.add(truth[keep], decision[keep])
    infeasible = np.array([np.sum(~feasible & (truth == 0)), np.sum(~feasible & (truth == 1))])
    return StudyReport(season, cm, infeasible, post[keep & (truth == 0)],
                       post[keep & (truth == 1)], dist_stats(xc), study.posterior_bins,
                       study.exclude_infeasible)


def run_mc_study(study: StudyConfig) -> dict[Season, StudyReport]:
    """Confusion matrices of the detector for each configured season."""
    return {s: run_season(study, s) for s in study.seasons}


@dataclass(frozen=True)
class SweepResult:
    x_u: float
    curve: PosteriorCurve
    xd_samples: np.ndarray
    xd_dist: EmpiricalDist
    posteriors: np.ndarray

    def fraction_above(self, level: float) -> float:
        return float(np.mean(self.posteriors > level))


def scenario_sweep(trip_log: TripLog, params: EvParams, season: Season, xc_dist: EmpiricalDist,
                   undeclared: UndeclaredModel, x_u: float, n: int = DEFAULT_SAMPLES,
                   mass_model: MassModel = MassModel(),
                   aux_model: AuxPowerModel | None = None,
                   rng: np.random.Generator | None = None,
                   consts: PhysicsConstants = PhysicsConstants(),
                   workers: int = 1) -> SweepResult:
    """Detector curve and simulated ``x_d`` for drivers with a fixed undeclared
    energy ``x_u``.

    With a shared ``rng`` seed, different ``x_u`` values see the same ``x_c``
    draws, so their ``x_d`` histograms are exact shifts of each other.
    """
    if x_u < 0:
        raise DomainError("x_u must be non-negative")
    aux_model = AuxPowerModel() if aux_model is None else aux_model
    rng = np.random.default_rng(0) if rng is None else rng
    curve = posterior_curve(xc_dist, undeclared)
    xs = sample_xc(trip_log, params, season, mass_model, aux_model, n, rng, consts, workers)
    xd = xs - x_u
    return SweepResult(x_u, curve, xd, EmpiricalDist.from_samples(xd, xc_dist.bin_width),
                       curve.at(xd))


def with_trip(study: StudyConfig, **changes) -> StudyConfig:
    return replace(study, trip=replace(study.trip, **changes))


def run_sweep(study: StudyConfig, season: Season, x_u: float,
              n: int | None = None) -> SweepResult:
    """:func:`scenario_sweep` on the study's trip log and predictor.

    The simulated drivers use their own stream, independent of the one that
    built the predictor.
    """
    season = Season(season)
    log = study_trip_log(study, season)
    xc = study_predictor(study, season, log)
    return scenario_sweep(log, study.params, season, xc, study.undeclared(), x_u,
                          study.samples if n is None else n, study.mass_model, study.aux_model,
                          _stream(study.seed, _SWEEP, _SEASON_TAG[season]), study.consts,
                          study.workers)
