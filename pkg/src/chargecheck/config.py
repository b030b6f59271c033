"""Configuration files for the command line tools.

All files are line-oriented ``key = value`` (see :mod:`chargecheck.kvfile`).
Relative paths inside a file are resolved against the file's directory.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

from .detector import Thresholds
from .errors import DomainError
from .kvfile import get_bool, get_float, get_floats, get_int, read_kv
from .physics import EvParams, load_params
from .predictor import DEFAULT_BIN_WIDTH, DEFAULT_SAMPLES
from .priors import DEFAULT_OCCUPANCY_PMF, AuxPowerModel, MassModel, UndeclaredModel
from .simulate import StudyConfig, TripGenConfig
from .triplog import DEFAULT_MONTH_MAP, Season, month_map_from_winter

MODEL_KEYS = {
    "ev_params", "occupancy_pmf", "per_person_mean_kg", "sigma_coeff", "winter_shape",
    "winter_scale", "summer_shape", "summer_scale", "p1", "x_u_min_kwh", "x_u_max_kwh",
    "h0_threshold", "h1_threshold", "bin_width_kwh", "samples", "seed", "winter_months",
    "workers",
}
APP_KEYS = MODEL_KEYS | {"driver_state_dir", "lambda", "g_max"}

# config key -> (TripGenConfig field, type)
TRIP_KEYS = {
    "n_trips": ("n_trips", int),
    "mean_trip_duration_s": ("mean_trip_duration", float),
    "duration_jitter": ("duration_jitter", float),
    "cruise_mean_mps": ("cruise_mean", float),
    "cruise_spread": ("cruise_spread", float),
    "reversion_per_s": ("reversion", float),
    "speed_noise_mps": ("speed_noise", float),
    "accel_bound_mps2": ("accel_bound", float),
    "stop_prob_per_s": ("stop_prob", float),
    "stop_dwell_s": ("stop_dwell", float),
    "max_grade": ("max_grade", float),
    "grade_smoothness": ("grade_smoothness", float),
    "interval_days": ("interval_days", float),
    "trip_seed": ("seed", int),
}
STUDY_KEYS = MODEL_KEYS | set(TRIP_KEYS) | {
    "trials", "p1_sim", "seasons", "exclude_infeasible", "mass_scale", "aux_scale",
    "posterior_bins",
}
TRIPGEN_KEYS = set(TRIP_KEYS) | {"season", "seed"}


def _check_keys(kv: Mapping[str, str], allowed: set[str], source: str) -> None:
    unknown = sorted(set(kv) - allowed)
    if unknown:
        raise DomainError(f"{source}: unknown keys {unknown}")


def _resolve(base: Path | None, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() or base is None else base / p


def _models(kv: Mapping[str, str], base: Path | None):
    params = load_params(_resolve(base, kv["ev_params"]) if "ev_params" in kv else None)
    mass = MassModel(get_floats(kv, "occupancy_pmf", DEFAULT_OCCUPANCY_PMF),
                     get_float(kv, "per_person_mean_kg", 74.0),
                     get_float(kv, "sigma_coeff", 12.0))
    aux = AuxPowerModel({
        Season.WINTER: (get_float(kv, "winter_shape", 3.0), get_float(kv, "winter_scale", 800.0)),
        Season.SUMMER: (get_float(kv, "summer_shape", 2.0), get_float(kv, "summer_scale", 400.0)),
    })
    thresholds = Thresholds(get_float(kv, "h0_threshold", 0.4), get_float(kv, "h1_threshold", 0.6))
    return params, mass, aux, thresholds


def _month_map(kv: Mapping[str, str]):
    if "winter_months" not in kv:
        return dict(DEFAULT_MONTH_MAP)
    return month_map_from_winter(int(m) for m in get_floats(kv, "winter_months", ()))


def trip_config_from_kv(kv: Mapping[str, str], base: TripGenConfig = TripGenConfig()) -> TripGenConfig:
    changes = {}
    for key, (name, typ) in TRIP_KEYS.items():
        if key in kv:
            changes[name] = get_int(kv, key) if typ is int else get_float(kv, key)
    return replace(base, **changes)


@dataclass(frozen=True)
class AppConfig:
    params: EvParams = field(default_factory=EvParams.kia_soul_2020)
    mass_model: MassModel = MassModel()
    aux_model: AuxPowerModel = field(default_factory=AuxPowerModel)
    p1: float | None = None  # None: take the prior from the driver state
    x_u_min: float = 0.0
    x_u_max: float | None = None  # None -> battery capacity
    thresholds: Thresholds = Thresholds()
    bin_width: float = DEFAULT_BIN_WIDTH
    samples: int = DEFAULT_SAMPLES
    seed: int = 0
    driver_state_dir: Path = Path("driver_state")
    month_map: dict = field(default_factory=lambda: dict(DEFAULT_MONTH_MAP))
    forgetting: float = 1.0
    g_max: float | None = None
    workers: int = 1

    def undeclared(self, p1: float) -> UndeclaredModel:
        hi = self.params.e_max if self.x_u_max is None else self.x_u_max
        model = UndeclaredModel(p1, self.x_u_min, hi)
        model.check_capacity(self.params.e_max)
        return model


def load_app_config(path: str | Path | None) -> AppConfig:
    if path is None:
        return AppConfig()
    path = Path(path)
    kv = read_kv(path)
    _check_keys(kv, APP_KEYS, str(path))
    base = path.parent
    params, mass, aux, thresholds = _models(kv, base)
    return AppConfig(
        params=params, mass_model=mass, aux_model=aux,
        p1=get_float(kv, "p1") if "p1" in kv else None,
        x_u_min=get_float(kv, "x_u_min_kwh", 0.0),
        x_u_max=get_float(kv, "x_u_max_kwh") if "x_u_max_kwh" in kv else None,
        thresholds=thresholds,
        bin_width=get_float(kv, "bin_width_kwh", DEFAULT_BIN_WIDTH),
        samples=get_int(kv, "samples", DEFAULT_SAMPLES),
        seed=get_int(kv, "seed", 0),
        driver_state_dir=_resolve(base, kv.get("driver_state_dir", "driver_state")),
        month_map=_month_map(kv),
        forgetting=get_float(kv, "lambda", 1.0),
        g_max=get_float(kv, "g_max") if "g_max" in kv else None,
        workers=get_int(kv, "workers", 1),
    )


def study_config_from_kv(kv: Mapping[str, str], base: Path | None = None,
                         source: str = "<study>") -> StudyConfig:
    _check_keys(kv, STUDY_KEYS, source)
    params, mass, aux, thresholds = _models(kv, base)
    seasons = tuple(Season(s.strip()) for s in kv.get("seasons", "summer,winter").split(",")
                    if s.strip())
    return StudyConfig(
        trials=get_int(kv, "trials", 10_000),
        p1_sim=get_float(kv, "p1_sim", 0.5),
        p1_detector=get_float(kv, "p1", 0.5),
        x_u_min=get_float(kv, "x_u_min_kwh", 0.0),
        x_u_max=get_float(kv, "x_u_max_kwh") if "x_u_max_kwh" in kv else None,
        samples=get_int(kv, "samples", DEFAULT_SAMPLES),
        bin_width=get_float(kv, "bin_width_kwh", DEFAULT_BIN_WIDTH),
        seed=get_int(kv, "seed", 2024),
        seasons=seasons,
        trip=trip_config_from_kv(kv),
        thresholds=thresholds,
        mass_model=mass,
        aux_model=aux,
        params=params,
        mass_scale=get_float(kv, "mass_scale", 1.0),
        aux_scale=get_float(kv, "aux_scale", 1.0),
        exclude_infeasible=get_bool(kv, "exclude_infeasible", False),
        posterior_bins=get_int(kv, "posterior_bins", 20),
        workers=get_int(kv, "workers", 1),
    )


def load_study_config(path: str | Path) -> StudyConfig:
    path = Path(path)
    return study_config_from_kv(read_kv(path), path.parent, str(path))


def load_tripgen_config(path: str | Path) -> tuple[TripGenConfig, Season | None]:
    path = Path(path)
    kv = read_kv(path)
    _check_keys(kv, TRIPGEN_KEYS, str(path))
    cfg = trip_config_from_kv(kv)
    if "seed" in kv:
        cfg = replace(cfg, seed=get_int(kv, "seed"))
    season = Season(kv["season"]) if "season" in kv else None
    return cfg, season
