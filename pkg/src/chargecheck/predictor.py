"""Monte Carlo predictive distribution of the energy drawn over an interval.

Each Monte Carlo sample draws one passenger mass and one auxiliary power for
the whole interval, evaluates the physics model on the trip log, and the
results are binned on a grid anchored at 0 kWh.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .physics import EvParams, PhysicsConstants, cumulative_draw_many
from .priors import AuxPowerModel, MassModel, sample_aux_power, sample_mass
from .triplog import Season, TripLog

DEFAULT_SAMPLES = 10_000
DEFAULT_BIN_WIDTH = 0.1  # kWh


@dataclass(frozen=True, eq=False)
class EmpiricalDist:
    """Probability masses on the bins ``[i*w, (i+1)*w)`` for
    ``i = first_bin .. first_bin + len(masses) - 1``."""

    bin_width: float
    first_bin: int
    masses: np.ndarray
    sample_count: int

    def __post_init__(self):
        m = np.array(self.masses, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "first_bin", int(self.first_bin))
        if not self.bin_width > 0:
            raise DomainError("bin width must be positive")
        if m.ndim != 1 or m.size == 0:
            raise DomainError("masses must be a non-empty 1-d array")
        if np.any(m < 0):
            raise DomainError("negative bin mass")
        if abs(m.sum() - 1.0) > 1e-9:
            raise DomainError(f"bin masses sum to {m.sum()!r}")

    @classmethod
    def from_samples(cls, values, bin_width: float = DEFAULT_BIN_WIDTH) -> "EmpiricalDist":
        idx = bin_indices(values, bin_width)
        if idx.size == 0:
            raise DomainError("no samples")
        lo = int(idx.min())
        counts = np.bincount(idx - lo)
        return cls(bin_width, lo, counts / idx.size, int(idx.size))

    @property
    def origin(self) -> float:
        """Left edge of the first bin (kWh)."""
        return self.first_bin * self.bin_width

    @property
    def last_bin(self) -> int:
        return self.first_bin + len(self.masses) - 1

    @property
    def bins(self) -> np.ndarray:
        return np.arange(self.first_bin, self.last_bin + 1)

    @property
    def left_edges(self) -> np.ndarray:
        return self.bins * self.bin_width

    @property
    def centers(self) -> np.ndarray:
        return (self.bins + 0.5) * self.bin_width

    def mass_at(self, index):
        """Mass of bin ``index`` (0 outside the stored range); vectorised."""
        index = np.asarray(index)
        rel = index - self.first_bin
        inside = (rel >= 0) & (rel < len(self.masses))
        out = np.where(inside, self.masses[np.clip(rel, 0, len(self.masses) - 1)], 0.0)
        return float(out) if out.ndim == 0 else out

    def on_range(self, first: int, last: int) -> np.ndarray:
        """Masses on bins ``first..last`` inclusive, zero-padded."""
        return self.mass_at(np.arange(first, last + 1))

    def shifted(self, bins: int) -> "EmpiricalDist":
        return EmpiricalDist(self.bin_width, self.first_bin + bins, self.masses, self.sample_count)


def bin_indices(values, bin_width: float) -> np.ndarray:
    return np.floor(np.asarray(values, dtype=float) / bin_width).astype(np.int64)


def check_same_grid(a: EmpiricalDist, b: EmpiricalDist) -> None:
    if not math.isclose(a.bin_width, b.bin_width, rel_tol=1e-12):
        raise DomainError(f"bin widths differ: {a.bin_width} vs {b.bin_width}")


def total_variation(a: EmpiricalDist, b: EmpiricalDist) -> float:
    check_same_grid(a, b)
    lo = min(a.first_bin, b.first_bin)
    hi = max(a.last_bin, b.last_bin)
    return 0.5 * float(np.abs(a.on_range(lo, hi) - b.on_range(lo, hi)).sum())


def rebin(d: EmpiricalDist, factor: int) -> EmpiricalDist:
    """Merge groups of ``factor`` adjacent bins (grid stays anchored at 0)."""
    if factor < 1:
        raise DomainError("rebin factor must be >= 1")
    new_idx = np.floor_divide(d.bins, factor)
    lo = int(new_idx.min())
    masses = np.bincount(new_idx - lo, weights=d.masses)
    masses /= masses.sum()
    return EmpiricalDist(d.bin_width * factor, lo, masses, d.sample_count)


def sample_xc(trip_log: TripLog, params: EvParams, season: Season, mass_model: MassModel,
              aux_model: AuxPowerModel, n: int, rng: np.random.Generator,
              consts: PhysicsConstants = PhysicsConstants(), workers: int = 1) -> np.ndarray:
    """``n`` iid draws of the interval's cumulative battery draw (kWh)."""
    if n < 1:
        raise DomainError(f"sample count must be >= 1, got {n}")
    # all draws come from one stream before evaluation, so the result does not
    # depend on the number of workers
    m = sample_mass(mass_model, rng, n)
    w = sample_aux_power(aux_model, season, rng, n)
    return cumulative_draw_many(trip_log, m, w, params, consts, workers)


def predict_xc(trip_log: TripLog, params: EvParams, season: Season, mass_model: MassModel,
               aux_model: AuxPowerModel, n: int = DEFAULT_SAMPLES,
               bin_width: float = DEFAULT_BIN_WIDTH, rng: np.random.Generator | None = None,
               consts: PhysicsConstants = PhysicsConstants(), workers: int = 1) -> EmpiricalDist:
    if rng is None:
        rng = np.random.default_rng(0)
    xs = sample_xc(trip_log, params, season, mass_model, aux_model, n, rng, consts, workers)
    return EmpiricalDist.from_samples(xs, bin_width)


@dataclass(frozen=True)
class DistStats:
    mean: float
    variance: float
    mode: float  # centre of the modal bin
    mode_bin: int
    support: tuple[float, float]  # (left edge of first bin, right edge of last bin)


def dist_stats(d: EmpiricalDist) -> DistStats:
    c = d.centers
    mean = float(np.dot(d.masses, c))
    var = float(np.dot(d.masses, (c - mean) ** 2))
    k = int(np.argmax(d.masses))  # first maximum, i.e. lowest bin on ties
    return DistStats(mean, var, float(c[k]), d.first_bin + k,
                     (d.origin, (d.last_bin + 1) * d.bin_width))


HISTOGRAM_HEADER = "bin_left_kwh,bin_right_kwh,probability"


def format_histogram_csv(d: EmpiricalDist) -> str:
    buf = io.StringIO()
    buf.write(HISTOGRAM_HEADER + "\n")
    w = d.bin_width
    for i, p in zip(d.bins, d.masses):
        buf.write(f"{i * w:.10g},{(i + 1) * w:.10g},{p:.17g}\n")
    return buf.getvalue()


def parse_histogram_csv(text: str) -> EmpiricalDist:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != HISTOGRAM_HEADER:
        raise DomainError(f"histogram CSV must start with {HISTOGRAM_HEADER!r}")
    rows = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    if rows.size == 0:
        raise DomainError("histogram CSV has no rows")
    width = rows[0, 1] - rows[0, 0]
    first = round(rows[0, 0] / width)
    idx = np.rint(rows[:, 0] / width).astype(int)
    if not np.array_equal(idx, np.arange(first, first + len(rows))):
        raise DomainError("histogram bins are not contiguous")
    return EmpiricalDist(width, first, rows[:, 2], 0)
