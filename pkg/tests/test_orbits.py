import math

import pytest

from aerocap.dynamics import SimState
from aerocap.env_models import EARTH, PlanetModel
from aerocap.orbits import (CaptureFailureError, apoapsis_radius, delta_v_inclination,
                            delta_v_planar, exit_summary, inclination,
                            kepler_elements, kepler_to_state, state_to_inertial,
                            total_budget)

NR = PlanetModel(j2=0.0, omega=0.0)  # non-rotating spherical body for oracles


def test_circular_equatorial_orbit_elements():
    r = EARTH.radius + 400.0e3
    v = math.sqrt(EARTH.mu / r)
    st = SimState(t=0.0, v=v, gamma=0.0, chi=0.5 * math.pi, r=r, theta=0.3,
                  delta=0.0)
    k = kepler_elements(st, NR, rotating=False)
    assert k.e == pytest.approx(0.0, abs=1e-12)
    assert k.a == pytest.approx(r, rel=1e-12)
    assert k.r_a == pytest.approx(r, rel=1e-12)
    assert k.r_p == pytest.approx(r, rel=1e-12)
    assert k.i == pytest.approx(0.0, abs=1e-12)
    assert k.energy == pytest.approx(-EARTH.mu / (2.0 * r), rel=1e-12)


def test_perigee_state_gives_visviva_apoapsis():
    a, e = 8000.0e3, 0.2
    r_p = a * (1.0 - e)
    v_p = math.sqrt(EARTH.mu * (2.0 / r_p - 1.0 / a))
    st = SimState(t=0.0, v=v_p, gamma=0.0, chi=0.0, r=r_p, theta=1.0, delta=0.0)
    k = kepler_elements(st, NR, rotating=False)
    assert k.a == pytest.approx(a, rel=1e-12)
    assert k.e == pytest.approx(e, rel=1e-12)
    assert k.r_a == pytest.approx(a * (1.0 + e), rel=1e-12)
    # northbound at the equator: a polar orbit
    assert k.i == pytest.approx(0.5 * math.pi, rel=1e-12)


def test_kepler_roundtrip():
    a, e, i = 7.3e6, 0.15, math.radians(63.4)
    for nu in (0.0, 1.0, 2.5, 4.0):
        st = kepler_to_state(EARTH, a, e, i, raan=0.7, argp=1.1, nu=nu,
                             rotating=False)
        k = kepler_elements(st, EARTH, rotating=False)
        assert k.a == pytest.approx(a, rel=1e-10)
        assert k.e == pytest.approx(e, rel=1e-9, abs=1e-10)
        assert k.i == pytest.approx(i, rel=1e-10)


def test_rotating_frame_roundtrip():
    a, e, i = 7.0e6, 0.05, math.radians(51.6)
    st = kepler_to_state(EARTH, a, e, i, raan=0.2, argp=0.4, nu=1.2,
                         rotating=True)
    k = kepler_elements(st, EARTH, rotating=True)
    assert k.a == pytest.approx(a, rel=1e-10)
    assert k.i == pytest.approx(i, rel=1e-10)


def test_rotation_changes_inertial_velocity():
    st = SimState(t=0.0, v=7800.0, gamma=0.0, chi=0.5 * math.pi,
                  r=EARTH.radius + 300.0e3, theta=0.0, delta=0.0)
    _, v_rot = state_to_inertial(st, EARTH, rotating=True)
    _, v_fix = state_to_inertial(st, EARTH, rotating=False)
    dv = math.dist(v_rot, v_fix)
    assert dv == pytest.approx(EARTH.omega * st.r, rel=1e-12)


def test_unbound_orbit_reads_infinite_apoapsis():
    r = EARTH.radius + 200.0e3
    v_esc = math.sqrt(2.0 * EARTH.mu / r)
    st = SimState(t=0.0, v=1.05 * v_esc, gamma=0.1, chi=1.0, r=r, theta=0.0,
                  delta=0.2)
    r_a, _ = exit_summary(st, NR, rotating=False)
    assert math.isinf(r_a)
    with pytest.raises(CaptureFailureError):
        total_budget(st, r, math.radians(90.0), NR, rotating=False)


def test_rectilinear_orbit_rejected():
    st = SimState(t=0.0, v=5000.0, gamma=0.5 * math.pi, chi=0.0,
                  r=EARTH.radius + 200.0e3, theta=0.0, delta=0.0)
    with pytest.raises(CaptureFailureError):
        kepler_elements(st, NR, rotating=False)


def test_planar_budget_matches_hohmann():
    mu = EARTH.mu
    r1, r2 = 6.7e6, 7.5e6
    # exit orbit = circular at r1: burn pair is the classic two-impulse transfer
    dv1, dv2 = delta_v_planar(r1, r1, r2, mu)
    at = 0.5 * (r1 + r2)
    want1 = math.sqrt(mu / r1) * (math.sqrt(2.0 * r2 / (r1 + r2)) - 1.0)
    want2 = math.sqrt(mu / r2) * (1.0 - math.sqrt(2.0 * r1 / (r1 + r2)))
    assert dv1 == pytest.approx(want1, rel=1e-12)
    assert dv2 == pytest.approx(want2, rel=1e-12)
    assert math.sqrt(mu * (2.0 / r1 - 1.0 / at)) > math.sqrt(mu / r1)


def test_planar_budget_vanishes_on_target_orbit():
    mu = EARTH.mu
    rt = 6.578e6
    dv1, dv2 = delta_v_planar(rt, rt, rt, mu)
    assert dv1 == pytest.approx(0.0, abs=1e-9)
    assert dv2 == pytest.approx(0.0, abs=1e-9)


def test_printed_form_differs_and_guards_domain():
    mu = EARTH.mu
    rt = 6.578e6
    dv1, dv2 = delta_v_planar(2.0 * rt, 1.5 * rt, rt, mu, printed_form=True)
    assert dv1 > 0.0 and dv2 > 0.0
    # does not vanish at the matched case
    with pytest.raises(ValueError):
        delta_v_planar(1.001 * rt, rt, rt, mu, printed_form=True)


def test_inclination_impulse():
    assert delta_v_inclination(7500.0, math.radians(60.0)) == pytest.approx(7500.0)
    assert delta_v_inclination(7500.0, 0.0) == 0.0
    assert delta_v_inclination(7500.0, -0.2) == delta_v_inclination(7500.0, 0.2)
    with pytest.raises(ValueError):
        delta_v_inclination(-1.0, 0.1)


def test_total_budget_zero_at_target():
    i_t = math.radians(90.0)
    rt = EARTH.radius + 200.0e3
    st = kepler_to_state(EARTH, rt, 0.0, i_t, raan=0.4, nu=2.0, rotating=True)
    b = total_budget(st, rt, i_t, EARTH, rotating=True)
    assert b.dv1 == pytest.approx(0.0, abs=1e-8)
    assert b.dv2 == pytest.approx(0.0, abs=1e-8)
    assert b.dv_plane == pytest.approx(0.0, abs=1e-8)
    assert b.dv_planar == pytest.approx(0.0, abs=1e-8)
    assert b.dv_total == pytest.approx(0.0, abs=1e-8)
    assert b.r_a == pytest.approx(rt, rel=1e-10)


def test_total_budget_composition():
    # elliptical exit orbit, 2 degrees off-plane
    i_t = math.radians(90.0)
    a, e = 7.2e6, 0.04
    st = kepler_to_state(EARTH, a, e, i_t + math.radians(2.0), nu=2.2,
                         rotating=True)
    rt = EARTH.radius + 200.0e3
    b = total_budget(st, rt, i_t, EARTH, rotating=True)
    assert b.dv_planar == pytest.approx(b.dv1 + b.dv2, rel=1e-12)
    assert b.dv_total == pytest.approx(math.hypot(b.dv1, b.dv_plane) + b.dv2,
                                       rel=1e-12)
    assert b.dv_total <= b.dv1 + b.dv_plane + b.dv2 + 1e-12
    v_post = math.sqrt(EARTH.mu * (2.0 / b.r_a - 2.0 / (b.r_a + rt)))
    assert b.dv_plane == pytest.approx(
        2.0 * v_post * math.sin(abs(b.incl - i_t) / 2.0), rel=1e-12)


def test_inclination_helpers_agree():
    st = kepler_to_state(EARTH, 7.0e6, 0.1, math.radians(75.0), nu=0.5,
                         rotating=False)
    k = kepler_elements(st, EARTH, rotating=False)
    assert inclination(st, EARTH, rotating=False) == k.i
    assert apoapsis_radius(st, EARTH, rotating=False) == k.r_a
