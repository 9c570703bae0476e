"""Atmospheric flight dynamics: states, bank schedules, propagation.

Two dynamics modes share one right-hand side. The full mode integrates all
six states over a rotating oblate planet; the simplified mode freezes the
heading and position angles and drops rotation and oblateness, leaving the
planar (V, gamma, r) system. Bank angle is the only control.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernel
from .env_models import AtmosphereModel, PlanetModel, VehicleModel, density

__all__ = [
    "SimState",
    "DynamicsMode",
    "BankSchedule",
    "StopConditions",
    "Trajectory",
    "SingularStateError",
    "eom",
    "propagate",
    "TRUTH_DT",
    "PREDICTION_DT",
]

TRUTH_DT = 0.05
PREDICTION_DT = 0.5


class SingularStateError(ValueError):
    """Full-mode dynamics evaluated at a singular attitude (cos(gamma) = 0)."""


@dataclass(frozen=True)
class SimState:
    """Planet-relative spherical state plus the realized bank angle."""

    t: float
    v: float
    gamma: float
    chi: float
    r: float
    theta: float
    delta: float
    sigma: float = 0.0

    def __post_init__(self):
        if self.v <= 0.0:
            raise ValueError("state speed must be positive")
        if self.r <= 0.0:
            raise ValueError("state radius must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.gamma, self.chi, self.r, self.theta, self.delta])

    def altitude(self, planet: PlanetModel) -> float:
        return self.r - planet.radius

    def replace(self, **kw) -> "SimState":
        return replace(self, **kw)


@dataclass(frozen=True)
class DynamicsMode:
    """Model-fidelity switches. simplified implies no rotation, no oblateness."""

    kind: str = "full"
    include_j2: bool = True
    rotating: bool = True

    def __post_init__(self):
        if self.kind not in ("full", "simplified"):
            raise ValueError(f"unknown dynamics kind {self.kind!r}")
        if self.kind == "simplified" and (self.include_j2 or self.rotating):
            raise ValueError("simplified dynamics cannot include J2 or rotation")

    @classmethod
    def full(cls, include_j2: bool = True, rotating: bool = True) -> "DynamicsMode":
        return cls("full", include_j2, rotating)

    @classmethod
    def simplified(cls) -> "DynamicsMode":
        return cls("simplified", False, False)


class BankSchedule:
    """Piecewise-quadratic bank-angle history sigma(t).

    Stored as contiguous segments [t_start, a, b, c] with
    sigma = a + b*tau + c*tau^2, tau = t - t_start; the last segment extends
    forever. Values before the first segment clamp to its start value.
    """

    def __init__(self, segments):
        segs = np.atleast_2d(np.asarray(segments, dtype=float))
        if segs.shape[1] != 4:
            raise ValueError("segments must be rows of [t_start, a, b, c]")
        if np.any(np.diff(segs[:, 0]) <= 0.0):
            raise ValueError("segment start times must be strictly increasing")
        self.segments = segs

    @classmethod
    def constant(cls, sigma: float, t_start: float = 0.0) -> "BankSchedule":
        return cls([[t_start, sigma, 0.0, 0.0]])

    @classmethod
    def hold_then_step(cls, t_switch: float, sigma1: float, sigma2: float,
                       t_start: float = 0.0) -> "BankSchedule":
        """Constant sigma1, instantaneous jump to sigma2 at t_switch."""
        if t_switch <= t_start:
            return cls.constant(sigma2, t_start)
        return cls([[t_start, sigma1, 0.0, 0.0], [t_switch, sigma2, 0.0, 0.0]])

    @classmethod
    def piecewise_constant(cls, t_starts, values) -> "BankSchedule":
        return cls([[t, v, 0.0, 0.0] for t, v in zip(t_starts, values)])

    def breakpoints(self) -> np.ndarray:
        return self.segments[:, 0].copy()

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self.segments[:, 0], t, side="right") - 1, 0, None)
        t0, a, b, c = (self.segments[idx, k] for k in range(4))
        tau = np.maximum(t - t0, 0.0)
        out = a + b * tau + c * tau * tau
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class StopConditions:
    """Which events terminate a propagation (any subset; t_max always does)."""

    t_max: float = 3000.0
    altitude_up: float | None = None
    altitude_down: float | None = None
    gamma_sign_change: bool = False

    def __post_init__(self):
        if self.t_max <= 0.0:
            raise ValueError("t_max must be positive")


_TAGS = {
    _kernel.STATUS_TIME: "max_time",
    _kernel.STATUS_ALT_UP: "alt_up",
    _kernel.STATUS_ALT_DOWN: "alt_down",
    _kernel.STATUS_GAMMA_SIGN: "gamma_sign",
}


class Trajectory:
    """Recorded propagation: column arrays plus the termination tag."""

    def __init__(self, data: np.ndarray, status: str, planet: PlanetModel):
        self._data = data
        self.status = status
        self.planet = planet

    t = property(lambda self: self._data[:, 0])
    v = property(lambda self: self._data[:, 1])
    gamma = property(lambda self: self._data[:, 2])
    chi = property(lambda self: self._data[:, 3])
    r = property(lambda self: self._data[:, 4])
    theta = property(lambda self: self._data[:, 5])
    delta = property(lambda self: self._data[:, 6])
    sigma = property(lambda self: self._data[:, 7])

    def __len__(self) -> int:
        return self._data.shape[0]

    def altitude(self) -> np.ndarray:
        return self.r - self.planet.radius

    def state(self, i: int) -> SimState:
        row = self._data[i]
        return SimState(t=row[0], v=row[1], gamma=row[2], chi=row[3],
                        r=row[4], theta=row[5], delta=row[6], sigma=row[7])

    @property
    def final_state(self) -> SimState:
        return self.state(-1)

    def density(self, atm: AtmosphereModel) -> np.ndarray:
        return density(atm, self.altitude())

    def dynamic_pressure(self, atm: AtmosphereModel) -> np.ndarray:
        return 0.5 * self.density(atm) * self.v**2

    def to_csv(self, path, atm: AtmosphereModel | None = None,
               formulations: dict | None = None,
               nose_radius: float | None = None) -> None:
        cols = ["t", "altitude", "v", "gamma", "chi", "theta", "delta", "sigma"]
        arrays = [self.t, self.altitude(), self.v, self.gamma, self.chi,
                  self.theta, self.delta, self.sigma]
        if atm is not None:
            rho = self.density(atm)
            cols += ["rho", "q_dyn"]
            arrays += [rho, 0.5 * rho * self.v**2]
            if formulations:
                if nose_radius is None:
                    raise ValueError("heat-flux columns need a nose radius")
                for name in sorted(formulations):
                    cols.append(f"flux_{name}")
                    arrays.append(
                        formulations[name].flux(rho, self.v, nose_radius))
        elif formulations:
            raise ValueError("heat-flux columns need an atmosphere model")
        with open(path, "w") as f:
            f.write(",".join(cols) + "\n")
            for row in zip(*arrays):
                f.write(",".join(repr(x) for x in row) + "\n")


def _envpack(planet, atm, vehicle, mode, rho_scales):
    return _kernel.make_envpack(
        planet, atm, vehicle,
        simplified=(mode.kind == "simplified"),
        include_j2=mode.include_j2,
        rotating=mode.rotating,
        rho_l=rho_scales[0], rho_d=rho_scales[1],
    )


def eom(state: SimState, planet: PlanetModel, atm: AtmosphereModel,
        vehicle: VehicleModel, mode: DynamicsMode = DynamicsMode(),
        rho_scales=(1.0, 1.0)) -> tuple:
    """Time derivatives (V', gamma', chi', r', theta', delta') at a state."""
    if mode.kind == "full" and abs(math.cos(state.gamma)) < 1e-12:
        raise SingularStateError("heading rate undefined at |gamma| = 90 deg")
    if mode.kind == "full" and abs(math.cos(state.delta)) < 1e-12:
        raise SingularStateError("longitude rate undefined at the poles")
    env = _envpack(planet, atm, vehicle, mode, rho_scales)
    y = (state.v, state.gamma, state.chi, state.r, state.theta, state.delta)
    out = _kernel.rhs(y, state.sigma, env)
    if not all(math.isfinite(x) for x in out):
        raise ValueError("non-finite derivative")
    return out


def propagate(state: SimState, schedule: BankSchedule, stops: StopConditions,
              planet: PlanetModel, atm: AtmosphereModel, vehicle: VehicleModel,
              mode: DynamicsMode = DynamicsMode(), dt: float = TRUTH_DT,
              rho_scales=(1.0, 1.0), record: bool = True) -> Trajectory:
    """Fixed-step RK4 propagation under a bank schedule until a stop event.

    The returned trajectory includes the exact termination state; event times
    are located by in-step bisection to 1e-3 s. With record=False only the
    initial and terminal rows are kept.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    env = _envpack(planet, atm, vehicle, mode, rho_scales)
    segs = schedule.segments
    h_up = -1e30 if stops.altitude_up is None else float(stops.altitude_up)
    h_dn = -1e30 if stops.altitude_down is None else float(stops.altitude_down)
    t_max = state.t + stops.t_max
    cap = int(math.ceil(stops.t_max / dt)) + segs.shape[0] + 16
    out = np.empty((cap if record else 2, 8))
    probe = np.empty(7)
    y0 = (state.v, state.gamma, state.chi, state.r, state.theta, state.delta)
    nrec, status, _ = _kernel.propagate_core(
        y0, state.t, dt, t_max, segs, env,
        h_up, h_dn, stops.gamma_sign_change, -1.0,
        1 if record else 0, out, probe)
    if not record:
        # terminal row only was written at index 0; prepend the initial state
        data = np.empty((2, 8))
        data[0, 0] = state.t
        data[0, 1:7] = y0
        data[0, 7] = schedule(state.t)
        data[1] = out[0]
        return Trajectory(data, _TAGS[status], planet)
    return Trajectory(out[:nrec].copy(), _TAGS[status], planet)
