"""Bayesian test for undeclared charging.

The observed differential state of charge is ``x_d = x0 - x1 = x_c - x_u``.
Under H0 its distribution is the predictive distribution of ``x_c``; under H1
it is that distribution correlated with the uniform slab of ``x_u``, both on
the same bin grid. The posterior of H1 is evaluated from the two bin masses
at the observed bin.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .predictor import EmpiricalDist, bin_indices
from .priors import UndeclaredModel, slab_mass_bins


class Decision(str, enum.Enum):
    H0 = "H0"
    H1 = "H1"
    E = "E"  # erasure: no judgement


class Support(str, enum.Enum):
    BELOW = "below_both_supports"
    ABOVE = "above_both_supports"
    INSIDE = "in_support"


@dataclass(frozen=True)
class Thresholds:
    """Posterior in ``[0, h0_max]`` decides H0, in ``(h1_min, 1]`` decides H1."""

    h0_max: float = 0.4
    h1_min: float = 0.6

    def __post_init__(self):
        if not 0.0 <= self.h0_max <= self.h1_min <= 1.0:
            raise DomainError(f"need 0 <= h0_max <= h1_min <= 1, got {self}")


@dataclass(frozen=True)
class SocPair:
    x0: float  # SoC after the previous certified charge (kWh)
    x1: float  # SoC at the current plug-in (kWh)

    @property
    def x_d(self) -> float:
        return self.x0 - self.x1

    def check(self, e_max: float) -> None:
        for name, v in (("x0", self.x0), ("x1", self.x1)):
            if not 0.0 <= v <= e_max:
                raise DomainError(f"{name} = {v} kWh is outside [0, {e_max}]")


@dataclass(frozen=True)
class DetectorOutput:
    posterior_h1: float
    decision: Decision
    f_h0_at_xd: float
    f_h1_at_xd: float
    xd_bin_index: int
    support_flag: Support
    p1: float


def xd_dist_h1(xc_dist: EmpiricalDist, undeclared: UndeclaredModel) -> EmpiricalDist:
    """Distribution of ``x_d`` under H1 by discrete correlation with the slab.

    ``F1[j] = sum_u F_c[j + u] / m`` over the ``m`` slab bin offsets ``u``.
    """
    lo, hi = slab_mass_bins(undeclared, xc_dist.bin_width)
    m = hi - lo
    masses = np.convolve(xc_dist.masses, np.full(m, 1.0 / m))
    return EmpiricalDist(xc_dist.bin_width, xc_dist.first_bin - hi, masses, xc_dist.sample_count)


def xd_mixture(xc_dist: EmpiricalDist, undeclared: UndeclaredModel) -> EmpiricalDist:
    """Prior predictive of ``x_d``: ``p1 * F(x_d | H1) + (1 - p1) * F(x_d | H0)``."""
    h1 = xd_dist_h1(xc_dist, undeclared)
    lo, hi = h1.first_bin, xc_dist.last_bin
    p1 = undeclared.p1
    masses = p1 * h1.on_range(lo, hi) + (1 - p1) * xc_dist.on_range(lo, hi)
    return EmpiricalDist(xc_dist.bin_width, lo, masses, xc_dist.sample_count)


def _bayes(p1: float, f1, f0):
    f1 = np.asarray(f1, dtype=float)
    f0 = np.asarray(f0, dtype=float)
    num = p1 * f1
    den = num + (1 - p1) * f0
    with np.errstate(invalid="ignore", divide="ignore"):
        post = np.where(den > 0, num / np.where(den > 0, den, 1.0), p1)
    return post


@dataclass(frozen=True)
class PosteriorCurve:
    """Posterior of H1 for every bin of the x_d support, plus its likelihoods."""

    bin_width: float
    first_bin: int
    posterior: np.ndarray
    f_h0: np.ndarray
    f_h1: np.ndarray
    p1: float

    @property
    def bins(self) -> np.ndarray:
        return np.arange(self.first_bin, self.first_bin + len(self.posterior))

    @property
    def last_bin(self) -> int:
        return self.first_bin + len(self.posterior) - 1

    def at_bins(self, idx) -> np.ndarray:
        """Posterior at arbitrary bin indices, applying the out-of-support rules."""
        idx = np.asarray(idx)
        rel = idx - self.first_bin
        inside = np.clip(rel, 0, len(self.posterior) - 1)
        return np.where(rel < 0, 1.0, np.where(rel >= len(self.posterior), 0.0,
                                               self.posterior[inside]))

    def at(self, x_d) -> np.ndarray:
        return self.at_bins(bin_indices(x_d, self.bin_width))


def posterior_curve(xc_dist: EmpiricalDist, undeclared: UndeclaredModel) -> PosteriorCurve:
    h1 = xd_dist_h1(xc_dist, undeclared)
    lo, hi = h1.first_bin, xc_dist.last_bin
    f1 = h1.on_range(lo, hi)
    f0 = xc_dist.on_range(lo, hi)
    return PosteriorCurve(xc_dist.bin_width, lo, _bayes(undeclared.p1, f1, f0), f0, f1, undeclared.p1)


def ternary_decision(posterior: float, thresholds: Thresholds = Thresholds()) -> Decision:
    if not 0.0 <= posterior <= 1.0:  # also rejects NaN
        raise DomainError(f"posterior must lie in [0, 1], got {posterior}")
    if posterior <= thresholds.h0_max:
        return Decision.H0
    if posterior > thresholds.h1_min:
        return Decision.H1
    return Decision.E


def ternary_decisions(posteriors, thresholds: Thresholds = Thresholds()) -> np.ndarray:
    """Vectorised :func:`ternary_decision`: 0 = H0, 1 = H1, 2 = E."""
    p = np.asarray(posteriors, dtype=float)
    if np.any(~((p >= 0) & (p <= 1))):
        raise DomainError("posteriors must lie in [0, 1]")
    return np.where(p <= thresholds.h0_max, 0, np.where(p > thresholds.h1_min, 1, 2))


def posterior_h1(xc_dist: EmpiricalDist, undeclared: UndeclaredModel, x_d: float,
                 thresholds: Thresholds = Thresholds()) -> DetectorOutput:
    if not math.isfinite(x_d):
        raise DomainError(f"x_d must be finite, got {x_d}")
    h1 = xd_dist_h1(xc_dist, undeclared)
    j = int(bin_indices(x_d, xc_dist.bin_width))
    f0 = xc_dist.mass_at(j)
    f1 = h1.mass_at(j)
    if j < h1.first_bin:
        post, flag = 1.0, Support.BELOW
    elif j > xc_dist.last_bin:
        post, flag = 0.0, Support.ABOVE
    else:
        post, flag = float(_bayes(undeclared.p1, f1, f0)), Support.INSIDE
    return DetectorOutput(post, ternary_decision(post, thresholds), f0, f1, j, flag, undeclared.p1)


def update_prior(posterior: float, forgetting: float) -> float:
    """Prior of H1 for the next interval: ``forgetting * posterior``."""
    if not (0.0 <= posterior <= 1.0 and 0.0 <= forgetting <= 1.0):
        raise DomainError("posterior and forgetting factor must lie in [0, 1]")
    return forgetting * posterior


def weighted_bonus(posterior: float, g_max: float) -> float:
    if g_max < 0:
        raise DomainError(f"maximal bonus must be non-negative, got {g_max}")
    if not 0.0 <= posterior <= 1.0:
        raise DomainError(f"posterior must lie in [0, 1], got {posterior}")
    return (1.0 - posterior) * g_max
