from pathlib import Path

import numpy as np
import pytest

from chargecheck.physics import EvParams, PhysicsConstants
from chargecheck.triplog import Season, TripLog

FIXTURES = Path(__file__).parent / "fixtures"
T0 = 1_720_000_000  # 2024-07-03, summer


@pytest.fixture(scope="session")
def kia():
    return EvParams.kia_soul_2020()


@pytest.fixture(scope="session")
def consts():
    return PhysicsConstants()


@pytest.fixture(scope="session")
def kia_dict(kia):
    return {f: getattr(kia, f) for f in ("m_veh", "j_int", "a_veh", "c_w", "c_roll",
                                         "eta_prop", "eta_recup")}


def make_log(trips, season=Season.SUMMER, gap=600, t0=T0):
    """TripLog from a list of per-trip (speeds, altitudes) pairs."""
    k, t, v, h = [], [], [], []
    now = t0
    for i, (speeds, alts) in enumerate(trips, start=1):
        n = len(speeds)
        k += [i] * n
        t += list(range(now, now + n))
        v += list(speeds)
        h += list(alts)
        now += n + gap
    return TripLog(np.array(k), np.array(t), np.array(v, float), np.array(h, float), season)


def random_log(rng, n_samples=101, n_trips=1, vmax=30.0):
    trips = []
    for _ in range(n_trips):
        v = rng.uniform(0, vmax, n_samples)
        h = np.cumsum(rng.normal(0, 0.5, n_samples))
        trips.append((v, h))
    return make_log(trips)


@pytest.fixture
def moving_log():
    """Two flat trips at a steady 10-15 m/s, enough to make x_c positive."""
    rng = np.random.default_rng(7)
    trips = [(np.r_[0, rng.uniform(10, 15, 598), 0], np.zeros(600)) for _ in range(2)]
    return make_log(trips)
