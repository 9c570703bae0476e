import math

import numpy as np
import pytest

from aerocap.dynamics import (PREDICTION_DT, TRUTH_DT, BankSchedule, DynamicsMode,
                              SimState, SingularStateError, StopConditions,
                              Trajectory, eom, propagate)
from aerocap.env_models import (EARTH, PlanetModel, VehicleModel, density,
                                earth_exponential)

ATM = earth_exponential(rho0=1.225, scale_height=10000.0)
VEH = VehicleModel()


def entry(v=11000.0, gamma_deg=-6.0, h=121.9e3, chi_deg=90.0, sigma=0.0):
    return SimState(t=0.0, v=v, gamma=math.radians(gamma_deg),
                    chi=math.radians(chi_deg), r=EARTH.radius + h,
                    theta=0.0, delta=0.0, sigma=sigma)


def planar_rates(state, planet, atm, veh):
    """Independent planar (V, gamma, r) right-hand side for cross-checking."""
    rho = density(atm, state.r - planet.radius)
    q = 0.5 * rho * state.v**2
    drag = q * veh.s_ref * veh.cd / veh.mass
    lift = q * veh.s_ref * veh.cl / veh.mass
    g = planet.mu / state.r**2
    v_dot = -drag - g * math.sin(state.gamma)
    gam_dot = (lift * math.cos(state.sigma) / state.v
               + (state.v / state.r - g / state.v) * math.cos(state.gamma))
    r_dot = state.v * math.sin(state.gamma)
    return v_dot, gam_dot, r_dot


def test_constants():
    assert TRUTH_DT == 0.05
    assert PREDICTION_DT == 0.5


def test_simplified_eom_matches_planar_formulas():
    for sigma_deg in (0.0, 60.0, 120.0, 180.0):
        st = entry(h=60.0e3, sigma=math.radians(sigma_deg))
        got = eom(st, EARTH, ATM, VEH, mode=DynamicsMode.simplified())
        want = planar_rates(st, EARTH, ATM, VEH)
        assert got[0] == pytest.approx(want[0], rel=1e-12)
        assert got[1] == pytest.approx(want[1], rel=1e-12)
        assert got[3] == pytest.approx(want[2], rel=1e-12)
        # frozen angles in the planar set
        assert got[2] == 0.0 and got[4] == 0.0 and got[5] == 0.0


def test_full_eom_reduces_to_planar_without_rotation_and_j2():
    planet = PlanetModel(j2=0.0, omega=0.0)
    st = entry(h=60.0e3, sigma=math.radians(45.0))  # equatorial eastbound
    got = eom(st, planet, ATM, VEH, mode=DynamicsMode.full(include_j2=False,
                                                           rotating=False))
    want = planar_rates(st, planet, ATM, VEH)
    assert got[0] == pytest.approx(want[0], rel=1e-12)
    assert got[3] == pytest.approx(want[2], rel=1e-12)
    # gamma gains only the lateral-lift term, zero for the planar bank split
    assert got[1] == pytest.approx(want[1], rel=1e-12)
    # eastbound on the equator: longitude advances, latitude rate comes from
    # the heading only
    assert got[4] == pytest.approx(st.v * math.cos(st.gamma) / st.r, rel=1e-12)
    assert got[5] == pytest.approx(0.0, abs=1e-18)


def test_full_eom_singularities():
    st = entry().replace(gamma=0.5 * math.pi)
    with pytest.raises(SingularStateError):
        eom(st, EARTH, ATM, VEH, mode=DynamicsMode.full())
    st2 = entry().replace(delta=0.5 * math.pi)
    with pytest.raises(SingularStateError):
        eom(st2, EARTH, ATM, VEH, mode=DynamicsMode.full())


def test_state_validation():
    with pytest.raises(ValueError):
        SimState(t=0.0, v=-1.0, gamma=0.0, chi=0.0, r=7.0e6, theta=0.0, delta=0.0)
    with pytest.raises(ValueError):
        SimState(t=0.0, v=100.0, gamma=0.0, chi=0.0, r=-1.0, theta=0.0, delta=0.0)


def test_mode_validation():
    with pytest.raises(ValueError):
        DynamicsMode("simplified", include_j2=True, rotating=False)
    with pytest.raises(ValueError):
        DynamicsMode("banana")
    assert DynamicsMode.simplified().rotating is False


def test_bank_schedule_evaluation():
    sched = BankSchedule.constant(0.4)
    assert sched(0.0) == 0.4 and sched(1.0e6) == 0.4

    step = BankSchedule.hold_then_step(10.0, 0.1, 2.0)
    assert step(9.999) == pytest.approx(0.1)
    assert step(10.0) == pytest.approx(2.0)
    assert step(-5.0) == pytest.approx(0.1)  # clamps before the first segment

    ramp = BankSchedule([[0.0, 0.0, 0.2, 0.0], [5.0, 1.0, 0.0, -0.01]])
    assert ramp(2.5) == pytest.approx(0.5)
    assert ramp(7.0) == pytest.approx(1.0 - 0.01 * 4.0)
    ts = np.array([0.0, 2.5, 7.0])
    assert ramp(ts) == pytest.approx([0.0, 0.5, 0.96])

    pc = BankSchedule.piecewise_constant([0.0, 3.0, 8.0], [0.1, 0.2, 0.3])
    assert pc(4.0) == pytest.approx(0.2)

    with pytest.raises(ValueError):
        BankSchedule([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    with pytest.raises(ValueError):
        BankSchedule([[0.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])


def test_hold_then_step_degenerate_switch():
    sched = BankSchedule.hold_then_step(0.0, 0.1, 2.0)
    assert sched(0.0) == 2.0
    assert sched.segments.shape == (1, 4)


def test_propagation_reaches_exit_and_stops_on_boundary():
    st = entry(v=11055.0, gamma_deg=-5.5)
    stops = StopConditions(t_max=2000.0, altitude_up=121.9e3, altitude_down=0.0)
    traj = propagate(st, BankSchedule.constant(0.0), stops, EARTH, ATM, VEH,
                     mode=DynamicsMode.full())
    assert traj.status == "alt_up"
    final = traj.final_state
    assert final.gamma > 0.0
    # event bisected to 1e-3 s: the boundary is met to within v * 1e-3
    assert abs(final.r - EARTH.radius - 121.9e3) < 0.002 * final.v
    assert len(traj) > 100
    assert np.all(np.diff(traj.t) > 0.0)


def test_propagation_impact_tag():
    st = entry(v=7000.0, gamma_deg=-35.0)
    stops = StopConditions(t_max=2000.0, altitude_up=121.9e3, altitude_down=0.0)
    traj = propagate(st, BankSchedule.constant(math.pi), stops, EARTH, ATM, VEH,
                     mode=DynamicsMode.simplified())
    assert traj.status == "alt_down"
    assert traj.final_state.altitude(EARTH) < 50.0


def test_propagation_timeout_tag():
    st = entry()
    traj = propagate(st, BankSchedule.constant(0.0), StopConditions(t_max=5.0),
                     EARTH, ATM, VEH, mode=DynamicsMode.simplified())
    assert traj.status == "max_time"
    assert traj.final_state.t == pytest.approx(5.0, abs=1e-9)


def test_gamma_sign_change_stop():
    st = entry(v=11055.0, gamma_deg=-5.5)
    stops = StopConditions(t_max=2000.0, gamma_sign_change=True)
    traj = propagate(st, BankSchedule.constant(0.0), stops, EARTH, ATM, VEH,
                     mode=DynamicsMode.simplified())
    assert traj.status == "gamma_sign"
    assert abs(traj.final_state.gamma) < 1e-5


def test_record_false_matches_recorded_terminal_state():
    st = entry(v=11055.0, gamma_deg=-5.5)
    stops = StopConditions(t_max=2000.0, altitude_up=121.9e3, altitude_down=0.0)
    sched = BankSchedule.hold_then_step(40.0, 0.0, math.radians(150.0))
    full = propagate(st, sched, stops, EARTH, ATM, VEH)
    slim = propagate(st, sched, stops, EARTH, ATM, VEH, record=False)
    assert slim.status == full.status
    assert len(slim) == 2
    a, b = slim.final_state, full.final_state
    assert a.t == pytest.approx(b.t, abs=1e-12)
    assert a.v == pytest.approx(b.v, rel=1e-12)
    assert a.r == pytest.approx(b.r, rel=1e-12)
    assert slim.state(0).v == st.v


def test_rk4_step_halving_convergence():
    st = entry(v=10000.0, gamma_deg=-6.0, h=90.0e3)
    stops = StopConditions(t_max=30.0)
    sched = BankSchedule.constant(math.radians(45.0))

    def final_v(dt):
        return propagate(st, sched, stops, EARTH, ATM, VEH,
                         mode=DynamicsMode.simplified(), dt=dt).final_state.v

    err_coarse = abs(final_v(0.8) - final_v(0.025))
    err_fine = abs(final_v(0.4) - final_v(0.025))
    assert err_fine < err_coarse / 8.0


def test_trajectory_accessors():
    st = entry()
    traj = propagate(st, BankSchedule.constant(0.2), StopConditions(t_max=2.0),
                     EARTH, ATM, VEH, mode=DynamicsMode.simplified())
    assert traj.altitude()[0] == pytest.approx(121.9e3, abs=1e-6)
    assert traj.sigma[-1] == pytest.approx(0.2)
    assert traj.dynamic_pressure(ATM).shape == traj.t.shape
    assert isinstance(traj.state(0), SimState)


def test_trajectory_csv_roundtrip(tmp_path):
    st = entry()
    traj = propagate(st, BankSchedule.constant(0.2), StopConditions(t_max=2.0),
                     EARTH, ATM, VEH, mode=DynamicsMode.simplified())
    path = tmp_path / "traj.csv"
    traj.to_csv(path, atm=ATM)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "t,altitude,v,gamma,chi,theta,delta,sigma,rho"
    assert len(rows) == len(traj) + 1
    first = [float(x) for x in rows[1].split(",")]
    assert first[2] == pytest.approx(st.v)


def test_propagate_validation():
    st = entry()
    with pytest.raises(ValueError):
        propagate(st, BankSchedule.constant(0.0), StopConditions(t_max=1.0),
                  EARTH, ATM, VEH, dt=-0.1)
    with pytest.raises(ValueError):
        StopConditions(t_max=0.0)
