"""Planet, atmosphere, and vehicle models.

All quantities are SI (meters, seconds, kilograms, radians) unless a name
says otherwise. Configuration mappings use degrees and kilometers only where
the key name makes that explicit.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

G0 = 9.80665

__all__ = [
    "ConfigError",
    "PlanetModel",
    "PerturbationModel",
    "AtmosphereModel",
    "VehicleModel",
    "EARTH",
    "US76_TABLE",
    "G0",
    "gravity_components",
    "density",
    "earth_exponential",
    "earth_tabulated",
    "planet_from_config",
    "atmosphere_from_config",
    "vehicle_from_config",
]


class ConfigError(ValueError):
    """A model record failed validation."""


@dataclass(frozen=True)
class PlanetModel:
    """Central body: point gravity plus the leading oblateness harmonic."""

    mu: float = 3.986004418e14
    radius: float = 6378137.0
    j2: float = 1.08263e-3
    omega: float = 7.2921159e-5

    def __post_init__(self):
        if not (self.mu > 0.0 and self.radius > 0.0):
            raise ConfigError("planet mu and radius must be positive")
        if self.j2 < 0.0 or self.omega < 0.0:
            raise ConfigError("planet j2 and omega must be non-negative")


EARTH = PlanetModel()


def gravity_components(planet: PlanetModel, r: float, delta: float) -> tuple[float, float]:
    """Radial and latitudinal gravity at radius r and latitude delta.

    Returns (g_r, g_delta) as vector components in the local frame, radial
    positive outward and latitudinal positive northward, so g_r is negative
    everywhere and g_delta vanishes at the equator and the poles.
    """
    if not (math.isfinite(r) and math.isfinite(delta)):
        raise ValueError("non-finite input to gravity_components")
    if r <= 0.5 * planet.radius:
        raise ValueError(f"radius {r:.3e} m is inside the central body")
    mu, j2, re = planet.mu, planet.j2, planet.radius
    z = 1.5 * mu * j2 * re * re / r**4
    sd = math.sin(delta)
    g_r = -mu / (r * r) + z * (3.0 * sd * sd - 1.0)
    g_delta = -z * math.sin(2.0 * delta)
    return g_r, g_delta


@dataclass(frozen=True)
class PerturbationModel:
    """Multiplicative density modifier: bias plus sinusoidal altitude waves.

    The multiplier is a pure function of altitude given the stored fields,
    and the fields are derived deterministically from ``seed`` when built
    through :meth:`from_seed`. It is clamped to [0.2, 3.0] so the perturbed
    density stays positive and physically plausible.
    """

    bias: float = 1.0
    waves: tuple[tuple[float, float, float], ...] = ()  # (amplitude, wavelength, phase)
    seed: int | None = None

    MULT_MIN = 0.2
    MULT_MAX = 3.0

    def __post_init__(self):
        if self.bias <= 0.0:
            raise ConfigError("perturbation bias must be positive")
        for amp, wl, _ in self.waves:
            if wl <= 0.0:
                raise ConfigError("perturbation wavelength must be positive")
            if amp < 0.0:
                raise ConfigError("perturbation amplitude must be non-negative")

    def multiplier(self, h):
        h = np.asarray(h, dtype=float)
        s = np.zeros_like(h)
        for amp, wl, phase in self.waves:
            s = s + amp * np.sin(2.0 * math.pi * h / wl + phase)
        m = np.clip(self.bias * (1.0 + s), self.MULT_MIN, self.MULT_MAX)
        return float(m) if m.ndim == 0 else m

    @classmethod
    def from_seed(cls, seed: int, bias_halfwidth: float = 0.1,
                  wave_amplitudes: tuple[float, ...] = (0.08, 0.05, 0.03),
                  wavelengths: tuple[float, ...] = (52000.0, 23000.0, 11000.0)) -> "PerturbationModel":
        """Draw bias and wave phases deterministically from a seed."""
        rng = np.random.Generator(np.random.Philox(key=seed))
        bias = 1.0 + bias_halfwidth * (2.0 * rng.random() - 1.0)
        phases = rng.random(len(wave_amplitudes)) * 2.0 * math.pi
        waves = tuple((a, w, p) for a, w, p in zip(wave_amplitudes, wavelengths, phases))
        return cls(bias=bias, waves=waves, seed=seed)


# Standard-atmosphere density approximation, 0-200 km: (altitude m, density kg/m^3).
US76_TABLE: tuple[tuple[float, float], ...] = (
    (0.0, 1.225),
    (2000.0, 1.0066),
    (4000.0, 0.81935),
    (6000.0, 0.66011),
    (8000.0, 0.52579),
    (10000.0, 0.41351),
    (12000.0, 0.31194),
    (14000.0, 0.22786),
    (16000.0, 0.16647),
    (18000.0, 0.12165),
    (20000.0, 0.088910),
    (25000.0, 0.040084),
    (30000.0, 0.018410),
    (35000.0, 0.0084634),
    (40000.0, 0.0039957),
    (45000.0, 0.0019663),
    (50000.0, 0.0010269),
    (55000.0, 5.6810e-4),
    (60000.0, 3.0968e-4),
    (65000.0, 1.6321e-4),
    (70000.0, 8.2829e-5),
    (75000.0, 3.9921e-5),
    (80000.0, 1.8458e-5),
    (85000.0, 8.2196e-6),
    (90000.0, 3.4160e-6),
    (95000.0, 1.3930e-6),
    (100000.0, 5.6040e-7),
    (110000.0, 9.7080e-8),
    (120000.0, 2.2220e-8),
    (130000.0, 8.1520e-9),
    (140000.0, 3.8310e-9),
    (150000.0, 2.0760e-9),
    (160000.0, 1.2330e-9),
    (170000.0, 7.8150e-10),
    (180000.0, 5.1940e-10),
    (190000.0, 3.5810e-10),
    (200000.0, 2.5410e-10),
)


@dataclass(frozen=True)
class AtmosphereModel:
    """Density vs altitude: exponential or tabulated, optionally perturbed.

    Tabulated models interpolate log-linearly between rows and extrapolate
    exponentially above the top row (slope from the top two rows). Altitudes
    below zero clamp to zero with a warning.
    """

    kind: str = "exponential"
    rho0: float = 1.225
    scale_height: float = 8500.0
    table: tuple[tuple[float, float], ...] = ()
    perturbation: PerturbationModel | None = None

    def __post_init__(self):
        if self.kind not in ("exponential", "tabulated"):
            raise ConfigError(f"unknown atmosphere kind {self.kind!r}")
        if self.kind == "exponential":
            if self.rho0 <= 0.0 or self.scale_height <= 0.0:
                raise ConfigError("exponential atmosphere needs rho0 > 0 and scale_height > 0")
        else:
            if len(self.table) < 2:
                raise ConfigError("tabulated atmosphere needs at least two rows")
            hs = [row[0] for row in self.table]
            if any(b <= a for a, b in zip(hs, hs[1:])):
                raise ConfigError("atmosphere table altitudes must be strictly increasing")
            if any(row[1] <= 0.0 for row in self.table):
                raise ConfigError("atmosphere table densities must be strictly positive")

    def density(self, h):
        return density(self, h)

    def with_perturbation(self, pert: PerturbationModel | None) -> "AtmosphereModel":
        return replace(self, perturbation=pert)


def density(atm: AtmosphereModel, h):
    """Density at altitude h (scalar or array), perturbation applied if set."""
    h = np.asarray(h, dtype=float)
    if np.any(h < 0.0):
        warnings.warn("negative altitude clamped to 0 in density()", RuntimeWarning, stacklevel=2)
        h = np.maximum(h, 0.0)
    if atm.kind == "exponential":
        rho = atm.rho0 * np.exp(-h / atm.scale_height)
    else:
        tab_h = np.array([row[0] for row in atm.table])
        log_rho = np.log([row[1] for row in atm.table])
        rho = np.exp(np.interp(h, tab_h, log_rho))
        # np.interp clamps; redo the region above the table with the top-two-row slope
        slope = (log_rho[-1] - log_rho[-2]) / (tab_h[-1] - tab_h[-2])
        above = h > tab_h[-1]
        if np.any(above):
            rho = np.where(above, np.exp(log_rho[-1] + slope * (h - tab_h[-1])), rho)
    if atm.perturbation is not None:
        rho = rho * atm.perturbation.multiplier(h)
    return float(rho) if np.ndim(rho) == 0 else rho


def earth_exponential(rho0: float = 1.225, scale_height: float = 10000.0) -> AtmosphereModel:
    return AtmosphereModel(kind="exponential", rho0=rho0, scale_height=scale_height)


def earth_tabulated(perturbation: PerturbationModel | None = None) -> AtmosphereModel:
    return AtmosphereModel(kind="tabulated", table=US76_TABLE, perturbation=perturbation)


@dataclass(frozen=True)
class VehicleModel:
    """Aerodynamic reference data and bank actuator limits.

    Lift and drag coefficients are trim constants; bank angle is the only
    control. Rates and accelerations are in rad/s and rad/s^2.
    """

    mass: float = 9300.0
    s_ref: float = 19.86
    cl: float = 0.39
    cd: float = 1.30
    nose_radius: float = 6.03
    max_bank_rate: float = math.radians(15.0)
    max_bank_accel: float = math.radians(5.0)
    bank_deadband: float = math.radians(0.1)

    def __post_init__(self):
        if min(self.mass, self.s_ref, self.cd, self.nose_radius) <= 0.0:
            raise ConfigError("vehicle mass, s_ref, cd, nose_radius must be positive")
        if self.cl < 0.0:
            raise ConfigError("vehicle cl must be non-negative")
        if self.max_bank_rate <= 0.0 or self.max_bank_accel <= 0.0:
            raise ConfigError("bank rate and acceleration limits must be positive")
        if self.bank_deadband < 0.0:
            raise ConfigError("bank deadband must be non-negative")

    @property
    def ballistic_coefficient(self) -> float:
        return self.mass / (self.cd * self.s_ref)

    def with_aero_scaled(self, cl_mult: float = 1.0, cd_mult: float = 1.0) -> "VehicleModel":
        """New vehicle with dispersed aerodynamic coefficients."""
        return replace(self, cl=self.cl * cl_mult, cd=self.cd * cd_mult)


def planet_from_config(cfg: dict | None) -> PlanetModel:
    if not cfg:
        return EARTH
    return PlanetModel(
        mu=float(cfg.get("mu", EARTH.mu)),
        radius=float(cfg.get("radius", EARTH.radius)),
        j2=float(cfg.get("j2", EARTH.j2)),
        omega=float(cfg.get("omega", EARTH.omega)),
    )


def _perturbation_from_config(cfg: dict | None) -> PerturbationModel | None:
    if not cfg:
        return None
    if "seed" in cfg and "waves" not in cfg:
        return PerturbationModel.from_seed(
            int(cfg["seed"]),
            bias_halfwidth=float(cfg.get("bias_halfwidth", 0.1)),
        )
    waves = tuple((float(w[0]), float(w[1]), float(w[2])) for w in cfg.get("waves", ()))
    return PerturbationModel(bias=float(cfg.get("bias", 1.0)), waves=waves,
                             seed=cfg.get("seed"))


def atmosphere_from_config(cfg: dict | None) -> AtmosphereModel:
    if not cfg:
        return earth_tabulated()
    kind = cfg.get("kind", "tabulated")
    pert = _perturbation_from_config(cfg.get("perturbation"))
    if kind == "exponential":
        return AtmosphereModel(
            kind="exponential",
            rho0=float(cfg.get("rho0", 1.225)),
            scale_height=float(cfg.get("scale_height", 10000.0)),
            perturbation=pert,
        )
    if kind == "tabulated":
        table = cfg.get("table", "us76")
        if isinstance(table, str):
            if table != "us76":
                raise ConfigError(f"unknown named atmosphere table {table!r}")
            rows = US76_TABLE
        else:
            rows = tuple((float(r[0]), float(r[1])) for r in table)
        return AtmosphereModel(kind="tabulated", table=rows, perturbation=pert)
    raise ConfigError(f"unknown atmosphere kind {kind!r}")


def vehicle_from_config(cfg: dict | None) -> VehicleModel:
    if not cfg:
        return VehicleModel()
    base = VehicleModel()
    return VehicleModel(
        mass=float(cfg.get("mass", base.mass)),
        s_ref=float(cfg.get("s_ref", base.s_ref)),
        cl=float(cfg.get("cl", base.cl)),
        cd=float(cfg.get("cd", base.cd)),
        nose_radius=float(cfg.get("nose_radius", base.nose_radius)),
        max_bank_rate=math.radians(float(cfg.get("max_bank_rate_deg", 15.0))),
        max_bank_accel=math.radians(float(cfg.get("max_bank_accel_deg", 5.0))),
        bank_deadband=math.radians(float(cfg.get("bank_deadband_deg", 0.1))),
    )
