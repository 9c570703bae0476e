import math

import numpy as np
import pytest

from aerocap.env_models import (EARTH, US76_TABLE, AtmosphereModel, ConfigError,
                                PerturbationModel, PlanetModel, VehicleModel,
                                atmosphere_from_config, density, earth_exponential,
                                earth_tabulated, gravity_components,
                                planet_from_config, vehicle_from_config)


def test_point_gravity_without_oblateness():
    planet = PlanetModel(j2=0.0)
    for delta in (-1.2, 0.0, 0.7):
        g_r, g_d = gravity_components(planet, planet.radius, delta)
        assert g_r == pytest.approx(-planet.mu / planet.radius**2, rel=1e-15)
        assert g_d == 0.0


def test_oblate_gravity_structure():
    r = EARTH.radius + 100.0e3
    z = 1.5 * EARTH.mu * EARTH.j2 * EARTH.radius**2 / r**4
    g_eq, g_d_eq = gravity_components(EARTH, r, 0.0)
    assert g_eq == pytest.approx(-EARTH.mu / r**2 - z, rel=1e-14)
    assert g_d_eq == 0.0
    g_pole, g_d_pole = gravity_components(EARTH, r, 0.5 * math.pi)
    assert g_pole == pytest.approx(-EARTH.mu / r**2 + 2.0 * z, rel=1e-14)
    assert g_d_pole == pytest.approx(0.0, abs=1e-16)
    # the oblateness pull points toward the equator in both hemispheres
    _, g_d_north = gravity_components(EARTH, r, 0.6)
    _, g_d_south = gravity_components(EARTH, r, -0.6)
    assert g_d_north < 0.0 < g_d_south


def test_gravity_rejects_bad_input():
    with pytest.raises(ValueError):
        gravity_components(EARTH, 0.2 * EARTH.radius, 0.0)
    with pytest.raises(ValueError):
        gravity_components(EARTH, math.nan, 0.0)


def test_exponential_density_profile():
    atm = earth_exponential(rho0=1.225, scale_height=10000.0)
    assert density(atm, 0.0) == pytest.approx(1.225, rel=1e-15)
    assert density(atm, 10000.0) == pytest.approx(1.225 / math.e, rel=1e-14)
    h = np.array([0.0, 5000.0, 50000.0])
    rho = density(atm, h)
    assert rho.shape == (3,)
    assert np.all(np.diff(rho) < 0.0)


def test_tabulated_density_interpolation():
    atm = earth_tabulated()
    for h, rho in US76_TABLE[::7]:
        assert density(atm, h) == pytest.approx(rho, rel=1e-12)
    # log-linear between rows: the altitude midpoint gives the geometric mean
    (h1, r1), (h2, r2) = US76_TABLE[3], US76_TABLE[4]
    assert density(atm, 0.5 * (h1 + h2)) == pytest.approx(math.sqrt(r1 * r2), rel=1e-12)


def test_tabulated_density_extrapolates_above_table():
    atm = earth_tabulated()
    (h1, r1), (h2, r2) = US76_TABLE[-2], US76_TABLE[-1]
    slope = (math.log(r2) - math.log(r1)) / (h2 - h1)
    h = h2 + 25.0e3
    assert density(atm, h) == pytest.approx(r2 * math.exp(slope * (h - h2)), rel=1e-12)


def test_negative_altitude_clamps_with_warning():
    atm = earth_exponential()
    with pytest.warns(RuntimeWarning):
        rho = density(atm, -10.0)
    assert rho == pytest.approx(atm.rho0, rel=1e-15)


def test_atmosphere_validation():
    with pytest.raises(ConfigError):
        AtmosphereModel(kind="exponential", rho0=-1.0)
    with pytest.raises(ConfigError):
        AtmosphereModel(kind="tabulated", table=((0.0, 1.0),))
    with pytest.raises(ConfigError):
        AtmosphereModel(kind="tabulated", table=((0.0, 1.0), (0.0, 0.5)))
    with pytest.raises(ConfigError):
        AtmosphereModel(kind="tabulated", table=((0.0, 1.0), (1000.0, -0.5)))
    with pytest.raises(ConfigError):
        AtmosphereModel(kind="banana")


def test_perturbation_multiplier_and_clamp():
    pert = PerturbationModel(bias=1.05, waves=((0.08, 52000.0, 0.3),))
    h = 40.0e3
    expected = 1.05 * (1.0 + 0.08 * math.sin(2.0 * math.pi * h / 52000.0 + 0.3))
    assert pert.multiplier(h) == pytest.approx(expected, rel=1e-14)
    wild = PerturbationModel(bias=2.9, waves=((0.9, 10000.0, 0.0),))
    hs = np.linspace(0.0, 120.0e3, 500)
    m = wild.multiplier(hs)
    assert np.all(m >= PerturbationModel.MULT_MIN)
    assert np.all(m <= PerturbationModel.MULT_MAX)


def test_perturbation_from_seed_deterministic():
    a = PerturbationModel.from_seed(42)
    b = PerturbationModel.from_seed(42)
    assert a == b
    c = PerturbationModel.from_seed(43)
    assert c != a
    assert abs(a.bias - 1.0) <= 0.1
    assert len(a.waves) == 3


def test_perturbed_density_is_multiplicative():
    pert = PerturbationModel(bias=1.1, waves=((0.05, 23000.0, 1.0),))
    base = earth_exponential()
    atm = base.with_perturbation(pert)
    h = 33.0e3
    assert density(atm, h) == pytest.approx(density(base, h) * pert.multiplier(h),
                                            rel=1e-14)


def test_vehicle_ballistic_coefficient_and_scaling():
    veh = VehicleModel()
    assert veh.ballistic_coefficient == pytest.approx(
        veh.mass / (veh.cd * veh.s_ref), rel=1e-15)
    scaled = veh.with_aero_scaled(cl_mult=1.1, cd_mult=0.9)
    assert scaled.cl == pytest.approx(1.1 * veh.cl)
    assert scaled.cd == pytest.approx(0.9 * veh.cd)
    assert scaled.mass == veh.mass
    with pytest.raises(ConfigError):
        VehicleModel(mass=-1.0)
    with pytest.raises(ConfigError):
        VehicleModel(cl=-0.1)


def test_planet_validation():
    with pytest.raises(ConfigError):
        PlanetModel(mu=-1.0)
    with pytest.raises(ConfigError):
        PlanetModel(j2=-1e-3)


def test_config_loaders():
    assert planet_from_config(None) == EARTH
    p = planet_from_config({"mu": 4.0e13, "radius": 3.0e6, "j2": 0.0, "omega": 0.0})
    assert p.mu == 4.0e13

    atm = atmosphere_from_config({"kind": "exponential", "rho0": 0.02,
                                  "scale_height": 11000.0})
    assert atm.kind == "exponential" and atm.scale_height == 11000.0
    tab = atmosphere_from_config({"kind": "tabulated", "table": "us76"})
    assert tab.table == US76_TABLE
    custom = atmosphere_from_config(
        {"kind": "tabulated", "table": [[0.0, 1.0], [10000.0, 0.1]]})
    assert custom.table == ((0.0, 1.0), (10000.0, 0.1))
    with pytest.raises(ConfigError):
        atmosphere_from_config({"kind": "tabulated", "table": "mars"})
    with pytest.raises(ConfigError):
        atmosphere_from_config({"kind": "banana"})

    veh = vehicle_from_config({"mass": 5000.0, "max_bank_rate_deg": 20.0})
    assert veh.mass == 5000.0
    assert veh.max_bank_rate == pytest.approx(math.radians(20.0))
    assert vehicle_from_config(None) == VehicleModel()


def test_seeded_perturbation_config():
    atm = atmosphere_from_config({"kind": "exponential",
                                  "perturbation": {"seed": 7}})
    assert atm.perturbation is not None
    assert atm.perturbation == PerturbationModel.from_seed(7)
    explicit = atmosphere_from_config(
        {"kind": "exponential",
         "perturbation": {"bias": 1.02, "waves": [[0.05, 23000.0, 0.4]]}})
    assert explicit.perturbation.bias == 1.02
    assert explicit.perturbation.waves == ((0.05, 23000.0, 0.4),)
