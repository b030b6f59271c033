"""Prior models for the unobserved quantities of a certified interval.

* passenger mass: a mixture over the number of occupants, each component a
  Gaussian restricted to positive mass,
* auxiliary power: a Gamma distribution whose parameters depend on the season,
* undeclared energy: a spike at zero (no hidden charging) mixed with a uniform
  slab (hidden charging happened).

Samplers take a ``numpy.random.Generator`` and are deterministic given its
state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .errors import DomainError
from .triplog import Season

DEFAULT_OCCUPANCY_PMF = (0.61, 0.23, 0.11, 0.04, 0.01)


class Hypothesis(str, enum.Enum):
    H0 = "H0"  # no undeclared charging
    H1 = "H1"  # at least one undeclared charging event


@dataclass(frozen=True)
class MassModel:
    occupancy_pmf: tuple[float, ...] = DEFAULT_OCCUPANCY_PMF
    per_person_mean: float = 74.0  # kg
    sigma_coeff: float = 12.0  # sigma_k = sigma_coeff * sqrt(k)

    def __post_init__(self):
        p = np.asarray(self.occupancy_pmf, dtype=float)
        object.__setattr__(self, "occupancy_pmf", tuple(float(x) for x in p))
        if p.ndim != 1 or p.size == 0:
            raise DomainError("occupancy pmf must be a non-empty sequence")
        if np.any(p < 0):
            raise DomainError("occupancy pmf has negative entries")
        if abs(p.sum() - 1.0) > 1e-12:
            raise DomainError(f"occupancy pmf sums to {p.sum()!r}, expected 1")
        if np.any(np.diff(p) > 0):
            raise DomainError("occupancy pmf must be non-increasing in the number of people")
        if self.per_person_mean <= 0 or self.sigma_coeff < 0:
            raise DomainError("per-person mean must be positive and sigma_coeff non-negative")

    @property
    def occupants(self) -> np.ndarray:
        return np.arange(1, len(self.occupancy_pmf) + 1)

    @property
    def means(self) -> np.ndarray:
        return self.per_person_mean * self.occupants

    @property
    def sigmas(self) -> np.ndarray:
        return self.sigma_coeff * np.sqrt(self.occupants)

    def expected_occupants(self) -> float:
        return float(np.dot(self.occupants, self.occupancy_pmf))


def sample_mass(model: MassModel, rng: np.random.Generator, size: int | None = None):
    """Passenger mass draws (kg). Non-positive Gaussian draws are redrawn
    from the same component."""
    n = 1 if size is None else int(size)
    k = rng.choice(len(model.occupancy_pmf), size=n, p=model.occupancy_pmf)
    mu, sd = model.means[k], model.sigmas[k]
    m = rng.normal(mu, sd)
    bad = np.flatnonzero(m <= 0)
    while bad.size:
        m[bad] = rng.normal(mu[bad], sd[bad])
        bad = bad[m[bad] <= 0]
    return float(m[0]) if size is None else m


def mass_density(model: MassModel, m):
    """Mixture density of passenger mass with each component renormalised
    to (0, inf)."""
    m = np.asarray(m, dtype=float)
    p = np.asarray(model.occupancy_pmf)
    mu, sd = model.means, model.sigmas
    if np.any(sd == 0):
        raise DomainError("density undefined for a zero-variance component")
    z = norm.sf(0.0, loc=mu, scale=sd)  # mass of each component on (0, inf)
    dens = (p / z * norm.pdf(m[..., None], loc=mu, scale=sd)).sum(axis=-1)
    dens = np.where(m > 0, dens, 0.0)
    return float(dens) if dens.ndim == 0 else dens


def gamma_from_moments(mean: float, variance: float) -> tuple[float, float]:
    """(shape, scale) of the Gamma distribution with the given mean and variance."""
    if not (mean > 0 and variance > 0):
        raise DomainError(f"mean and variance must be positive, got {mean}, {variance}")
    return mean * mean / variance, variance / mean


def gamma_moments(shape: float, scale: float) -> tuple[float, float]:
    return shape * scale, shape * scale * scale


@dataclass(frozen=True)
class AuxPowerModel:
    """Seasonal Gamma(shape, scale) models of the average auxiliary power (W)."""

    params: dict = field(default_factory=lambda: {
        Season.WINTER: (3.0, 800.0),
        Season.SUMMER: (2.0, 400.0),
    })

    def __post_init__(self):
        params = {Season(s): (float(k), float(t)) for s, (k, t) in self.params.items()}
        for s in Season:
            if s not in params:
                raise DomainError(f"no auxiliary-power model for {s.value}")
            k, t = params[s]
            if not (k > 0 and t > 0):
                raise DomainError(f"{s.value}: shape and scale must be positive")
        object.__setattr__(self, "params", params)

    @classmethod
    def from_moments(cls, moments: dict) -> "AuxPowerModel":
        return cls({s: gamma_from_moments(*mv) for s, mv in moments.items()})

    def shape_scale(self, season: Season) -> tuple[float, float]:
        return self.params[Season(season)]

    def mean(self, season: Season) -> float:
        return gamma_moments(*self.shape_scale(season))[0]

    def variance(self, season: Season) -> float:
        return gamma_moments(*self.shape_scale(season))[1]


def sample_aux_power(model: AuxPowerModel, season: Season, rng: np.random.Generator,
                     size: int | None = None):
    shape, scale = model.shape_scale(season)
    return rng.gamma(shape, scale, size=size)


@dataclass(frozen=True)
class UndeclaredModel:
    """Slab-and-spike prior on the undeclared energy x_U (kWh).

    Under H1, x_U is uniform on ``(x_u_min, x_u_max]``; under H0 it is 0.
    """

    p1: float = 0.5
    x_u_min: float = 0.0
    x_u_max: float = 35.0

    def __post_init__(self):
        if not 0.0 <= self.p1 <= 1.0:
            raise DomainError(f"p1 must lie in [0, 1], got {self.p1}")
        if not 0.0 <= self.x_u_min < self.x_u_max:
            raise DomainError(f"need 0 <= x_u_min < x_u_max, got ({self.x_u_min}, {self.x_u_max})")

    def check_capacity(self, e_max: float) -> None:
        if self.x_u_max > e_max * (1 + 1e-12):
            raise DomainError(f"x_u_max {self.x_u_max} exceeds the battery capacity {e_max}")

    def with_p1(self, p1: float) -> "UndeclaredModel":
        return UndeclaredModel(p1, self.x_u_min, self.x_u_max)


def sample_undeclared(model: UndeclaredModel, hypothesis: Hypothesis, rng: np.random.Generator,
                      size: int | None = None):
    if Hypothesis(hypothesis) is Hypothesis.H0:
        return 0.0 if size is None else np.zeros(size)
    u = rng.random(size)
    # 1 - u lies in (0, 1], giving the half-open slab (x_u_min, x_u_max]
    return model.x_u_min + (model.x_u_max - model.x_u_min) * (1.0 - u)


def slab_mass_bins(model: UndeclaredModel, bin_width: float) -> tuple[int, int]:
    """Bin offsets ``(lo, hi)`` such that the slab covers offsets lo+1..hi.

    Both slab edges must sit on the bin grid.
    """
    lo = model.x_u_min / bin_width
    hi = model.x_u_max / bin_width
    lo_i, hi_i = round(lo), round(hi)
    if not (math.isclose(lo, lo_i, abs_tol=1e-9) and math.isclose(hi, hi_i, abs_tol=1e-9)):
        raise DomainError(f"slab ({model.x_u_min}, {model.x_u_max}] does not align with "
                          f"bin width {bin_width}")
    return int(lo_i), int(hi_i)
