"""Discrete-time (1 s) energy model of an electric vehicle.

The vehicle energy is kinetic + potential + rotational. Over each step the
consumed energy is the change in vehicle energy plus air, roll and auxiliary
losses, and the energy drawn from the battery is the consumed energy scaled by
the propulsion or recuperation efficiency depending on its sign.

All internal arithmetic is in joules; the public cumulative quantities are in
kWh.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DomainError
from .kvfile import get_float, parse_kv, read_kv
from .triplog import TripLog

JOULES_PER_KWH = 3.6e6

# keys in the EV parameter file -> EvParams field
_PARAM_KEYS = {
    "e_max_kwh": "e_max",
    "m_veh_kg": "m_veh",
    "a_veh_m2": "a_veh",
    "j_int_kgm2": "j_int",
    "c_rad": "c_rad",
    "c_roll": "c_roll",
    "c_w": "c_w",
    "eta_prop": "eta_prop",
    "eta_recup": "eta_recup",
}


@dataclass(frozen=True)
class EvParams:
    """Known constants of one EV model.

    ``c_rad`` is carried for completeness but no energy term uses it.
    """

    e_max: float  # kWh
    m_veh: float  # kg
    a_veh: float  # m^2
    j_int: float  # kg m^2
    c_rad: float
    c_roll: float
    c_w: float
    eta_prop: float
    eta_recup: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v) or v <= 0:
                raise DomainError(f"EvParams.{f.name} must be strictly positive, got {v}")
        for name in ("eta_prop", "eta_recup"):
            if not getattr(self, name) < 1:
                raise DomainError(f"EvParams.{name} must lie in (0, 1)")

    @classmethod
    def from_kv(cls, kv: dict[str, str]) -> "EvParams":
        unknown = set(kv) - set(_PARAM_KEYS)
        if unknown:
            raise DomainError(f"unknown EV parameter keys: {sorted(unknown)}")
        return cls(**{field: get_float(kv, key) for key, field in _PARAM_KEYS.items()})

    @classmethod
    def load(cls, path: str | os.PathLike) -> "EvParams":
        return cls.from_kv(read_kv(path))

    @classmethod
    def kia_soul_2020(cls) -> "EvParams":
        text = resources.files("chargecheck").joinpath("data/kia_soul_ev_2020.cfg").read_text()
        return cls.from_kv(parse_kv(text, source="kia_soul_ev_2020.cfg"))


@dataclass(frozen=True)
class PhysicsConstants:
    g: float = 9.81  # m/s^2
    rho_air: float = 1.2041  # kg/m^3, dry air at 20 C
    joules_per_kwh: float = JOULES_PER_KWH

    def __post_init__(self):
        if self.g <= 0 or self.rho_air <= 0:
            raise DomainError("g and rho_air must be positive")
        if self.joules_per_kwh != JOULES_PER_KWH:
            raise DomainError("joules_per_kwh is fixed at 3.6e6")


@dataclass(frozen=True)
class EnergyStep:
    delta_e_req: float
    delta_e_air: float
    delta_e_roll: float
    delta_e_aux: float
    delta_e_cons: float
    delta_x: float


def vehicle_energy(m_total: float, v: float, h: float, params: EvParams,
                   consts: PhysicsConstants = PhysicsConstants()) -> float:
    """Kinetic + potential + rotational energy in J."""
    if v < 0:
        raise DomainError(f"speed must be non-negative, got {v}")
    if m_total < params.m_veh:
        raise DomainError(f"total mass {m_total} is below the kerb mass {params.m_veh}")
    return 0.5 * m_total * v * v + m_total * consts.g * h + 0.5 * params.j_int * v * v


def battery_draw(delta_e_cons, params: EvParams):
    """Energy drawn from the battery for a given consumed energy.

    The efficiency multiplies in both branches, exactly as in the source model.
    Works elementwise on arrays.
    """
    return np.where(delta_e_cons > 0, delta_e_cons * params.eta_prop,
                    np.where(delta_e_cons < 0, delta_e_cons * params.eta_recup, 0.0))


def energy_step(v_t: float, v_next: float, h_t: float, h_next: float, m_total: float,
                w_aux: float, params: EvParams,
                consts: PhysicsConstants = PhysicsConstants()) -> EnergyStep:
    if v_next < 0:
        raise DomainError(f"speed must be non-negative, got {v_next}")
    if w_aux < 0:
        raise DomainError(f"auxiliary power must be non-negative, got {w_aux}")
    req = (vehicle_energy(m_total, v_next, h_next, params, consts)
           - vehicle_energy(m_total, v_t, h_t, params, consts))
    ds = v_t  # distance covered in the 1 s step
    air = 0.5 * consts.rho_air * params.a_veh * params.c_w * v_t * v_t * ds
    roll = params.c_roll * m_total * consts.g * ds
    aux = w_aux * 1.0
    cons = req + air + roll + aux
    return EnergyStep(req, air, roll, aux, cons, float(battery_draw(cons, params)))


@dataclass(frozen=True)
class StepCoefficients:
    """Per-step affine form of the consumed energy.

    For step ``t``: ``delta_e_cons[t] = mass[t] * m_total + fixed[t] + w_aux``.
    The total mass and the auxiliary power are the only unknowns of the model,
    so this form lets many (mass, power) draws share one pass over the log.
    """

    mass: np.ndarray
    fixed: np.ndarray

    @property
    def n_steps(self) -> int:
        return len(self.mass)


def step_coefficients(trip_log: TripLog, params: EvParams,
                      consts: PhysicsConstants = PhysicsConstants()) -> StepCoefficients:
    v0, v1, h0, h1 = trip_log.step_arrays()
    dv2 = v1 * v1 - v0 * v0
    mass = 0.5 * dv2 + consts.g * (h1 - h0) + params.c_roll * consts.g * v0
    fixed = 0.5 * params.j_int * dv2 + 0.5 * consts.rho_air * params.a_veh * params.c_w * v0 ** 3
    return StepCoefficients(mass, fixed)


# rows per evaluation block; depends only on the log length so results never
# depend on how blocks are spread over workers
_BLOCK_ELEMENTS = 1 << 21


def draw_joules(coeffs: StepCoefficients, m_total: np.ndarray, w_aux: np.ndarray,
                params: EvParams, workers: int = 1) -> np.ndarray:
    """Total battery draw in J for each (m_total, w_aux) pair."""
    m_total = np.atleast_1d(np.asarray(m_total, dtype=float))
    w_aux = np.atleast_1d(np.asarray(w_aux, dtype=float))
    m_total, w_aux = np.broadcast_arrays(m_total, w_aux)
    out = np.empty(m_total.shape[0])
    if coeffs.n_steps == 0:
        out[:] = 0.0
        return out
    sum_mass = coeffs.mass.sum()
    sum_fixed = coeffs.fixed.sum()
    rows = max(1, _BLOCK_ELEMENTS // coeffs.n_steps)

    def block(start: int) -> None:
        stop = min(start + rows, len(out))
        m = m_total[start:stop]
        w = w_aux[start:stop]
        cons = np.multiply.outer(m, coeffs.mass)
        cons += coeffs.fixed
        cons += w[:, None]
        total = m * sum_mass + sum_fixed + w * coeffs.n_steps
        pos = np.maximum(cons, 0.0, out=cons).sum(axis=1)
        out[start:stop] = params.eta_prop * pos + params.eta_recup * (total - pos)

    starts = range(0, len(out), rows)
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(block, starts))
    else:
        for s in starts:
            block(s)
    return out


def cumulative_draw(trip_log: TripLog, m_peop: float, w_aux: float, params: EvParams,
                    consts: PhysicsConstants = PhysicsConstants()) -> float:
    """Energy drawn from the battery over every step of every trip, in kWh.

    ``m_peop`` and ``w_aux`` are held constant over the whole interval; the
    auxiliary load only runs during trips.
    """
    if m_peop < 0:
        raise DomainError(f"passenger mass must be non-negative, got {m_peop}")
    if w_aux < 0:
        raise DomainError(f"auxiliary power must be non-negative, got {w_aux}")
    coeffs = step_coefficients(trip_log, params, consts)
    joules = draw_joules(coeffs, params.m_veh + m_peop, w_aux, params)[0]
    return float(joules / consts.joules_per_kwh)


def cumulative_draw_many(trip_log: TripLog, m_peop, w_aux, params: EvParams,
                         consts: PhysicsConstants = PhysicsConstants(),
                         workers: int = 1) -> np.ndarray:
    """Vectorised :func:`cumulative_draw` over paired arrays of mass and power (kWh)."""
    m_peop = np.asarray(m_peop, dtype=float)
    w_aux = np.asarray(w_aux, dtype=float)
    if np.any(m_peop < 0) or np.any(w_aux < 0):
        raise DomainError("passenger mass and auxiliary power must be non-negative")
    coeffs = step_coefficients(trip_log, params, consts)
    return draw_joules(coeffs, params.m_veh + m_peop, w_aux, params, workers) / consts.joules_per_kwh


def load_params(path: str | os.PathLike | None) -> EvParams:
    return EvParams.kia_soul_2020() if path is None else EvParams.load(Path(path))
