"""Bayesian detection of undeclared EV charging between certified charges."""

from .detector import (Decision, DetectorOutput, SocPair, Support, Thresholds, posterior_h1,
                       ternary_decision, update_prior, weighted_bonus, xd_dist_h1, xd_mixture)
from .errors import DomainError, TripLogError
from .physics import (EnergyStep, EvParams, PhysicsConstants, cumulative_draw, energy_step,
                      vehicle_energy)
from .predictor import EmpiricalDist, dist_stats, predict_xc
from .priors import (AuxPowerModel, Hypothesis, MassModel, UndeclaredModel, gamma_from_moments,
                     mass_density, sample_aux_power, sample_mass, sample_undeclared)
from .simulate import (ConfusionMatrix, DriverScenario, StudyConfig, StudyReport, TripGenConfig,
                       generate_trip_log, run_mc_study, run_sweep, scenario_sweep,
                       simulate_observation)
from .triplog import GpsSample, Season, TripLog, infer_season, parse_gps_csv, total_duration, trip_count

__version__ = "0.1.0"
