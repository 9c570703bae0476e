import math

import numpy as np
import pytest

from aerocap import orbits
from aerocap.bangbang import (BangBangSpec, CorridorViolationError,
                              RatioStudyResult, StudyEnv,
                              altitude_dominance_check, constant_integral_check,
                              heat_ratio_exponent_sweep, heat_ratio_vs_gamma,
                              propagate_bangbang, solve_switch_time,
                              study_entry_state)
from aerocap.dynamics import BankSchedule
from aerocap.env_models import EARTH, VehicleModel, earth_exponential
from aerocap.heating import HeatFluxFormulation

TARGET = EARTH.radius + 500.0e3


@pytest.fixture(scope="module")
def env():
    return StudyEnv(planet=EARTH, atm=earth_exponential(), vehicle=VehicleModel())


@pytest.fixture(scope="module")
def entry():
    return study_entry_state(EARTH, 16.0e3, math.radians(-7.0))


@pytest.fixture(scope="module")
def solved_pair(env, entry):
    spec_ud = solve_switch_time("up_down", entry, env, TARGET)
    spec_du = solve_switch_time("down_up", entry, env, TARGET)
    return spec_ud, spec_du


def apo_radius(spec, entry, env):
    traj = propagate_bangbang(spec, entry, env, record=False)
    assert traj.status == "alt_up"
    k = orbits.kepler_elements(traj.final_state, env.planet,
                               rotating=env.mode.rotating)
    return k.r_a


def test_study_entry_state_is_equatorial_eastbound():
    s = study_entry_state(EARTH, 11.0e3, math.radians(-6.0), h0=120.0e3)
    assert s.v == 11.0e3
    assert s.gamma == math.radians(-6.0)
    assert s.chi == pytest.approx(0.5 * math.pi)
    assert s.r == EARTH.radius + 120.0e3
    assert s.theta == 0.0 and s.delta == 0.0 and s.t == 0.0


def test_spec_validation_and_bank_order():
    with pytest.raises(ValueError):
        BangBangSpec("sideways", 10.0, TARGET)
    with pytest.raises(ValueError):
        BangBangSpec("up_down", -1.0, TARGET)
    with pytest.raises(ValueError):
        BangBangSpec("up_down", 10.0, 0.0)
    ud = BangBangSpec("up_down", 10.0, TARGET)
    du = BangBangSpec("down_up", 10.0, TARGET)
    assert ud.banks == (0.0, math.pi)
    assert du.banks == (math.pi, 0.0)


def test_spec_schedule_evaluates_switch():
    spec = BangBangSpec("up_down", 25.0, TARGET)
    sched = spec.schedule(t_start=5.0)
    assert sched(5.0) == 0.0
    assert sched(29.9) == 0.0
    assert sched(30.1) == math.pi
    # zero switch time degenerates to holding the second command
    flat = BangBangSpec("down_up", 0.0, TARGET).schedule()
    assert flat(0.0) == 0.0 and flat(500.0) == 0.0


def test_solver_meets_target_both_orders(env, entry, solved_pair):
    spec_ud, spec_du = solved_pair
    assert apo_radius(spec_ud, entry, env) == pytest.approx(
        TARGET, abs=env.apo_tolerance)
    assert apo_radius(spec_du, entry, env) == pytest.approx(
        TARGET, abs=env.apo_tolerance)
    assert spec_ud.t_switch > 0.0 and spec_du.t_switch > 0.0


def test_up_down_apoapsis_grows_with_switch_time(env, entry, solved_pair):
    # below the solved switch time the profile digs in and impacts, so the
    # monotone stretch is probed upward from the solution
    ts = solved_pair[0].t_switch
    apos = [apo_radius(BangBangSpec("up_down", f * ts, TARGET), entry, env)
            for f in (1.0, 1.02, 1.05)]
    assert apos[0] < apos[1] < apos[2]


def test_up_down_exits_faster_at_equal_target(env, entry, solved_pair):
    spec_ud, spec_du = solved_pair
    v_ud = propagate_bangbang(spec_ud, entry, env, record=False).final_state.v
    v_du = propagate_bangbang(spec_du, entry, env, record=False).final_state.v
    assert v_ud >= v_du


def test_corridor_violation_low(env):
    # this shallow, even a never-ending lift-down hold exits unbound
    entry = study_entry_state(EARTH, 16.0e3, math.radians(-4.5))
    with pytest.raises(CorridorViolationError) as err:
        solve_switch_time("up_down", entry, env, TARGET)
    assert err.value.bound == "low"
    assert err.value.achievable > TARGET


def test_corridor_violation_high(env):
    entry = study_entry_state(EARTH, 16.0e3, math.radians(-9.0))
    target = EARTH.radius + 50000.0e3
    with pytest.raises(CorridorViolationError) as err:
        solve_switch_time("up_down", entry, env, target)
    assert err.value.bound == "high"
    assert err.value.achievable < target


def test_solver_rejects_unknown_sequence(env, entry):
    with pytest.raises(ValueError):
        solve_switch_time("diagonal", entry, env, TARGET)


def test_ratio_study_result_validation():
    good = RatioStudyResult(grid=(1.0, 2.0), ratios={"a": (1.1, math.nan)},
                            notes=("", "failed"))
    assert math.isnan(good.ratios["a"][1])
    with pytest.raises(ValueError):
        RatioStudyResult(grid=(1.0, 2.0), ratios={"a": (1.1,)},
                         notes=("", ""))
    with pytest.raises(ValueError):
        RatioStudyResult(grid=(1.0, 2.0), ratios={"a": (1.1, -2.0)},
                         notes=("", ""))
    with pytest.raises(ValueError):
        RatioStudyResult(grid=(1.0, 2.0), ratios={"a": (1.1, 1.2)},
                         notes=("",))


def test_heat_ratio_vs_gamma_orders_by_density_exponent(env, entry):
    registry = {
        "superlinear": HeatFluxFormulation(name="superlinear", c=1.0, m_rho=1.5,
                                           n_v=6.0),
        "sublinear": HeatFluxFormulation(name="sublinear", c=1.0, m_rho=0.5,
                                         n_v=3.0),
    }
    gammas = (math.radians(-7.0), math.radians(-8.0))
    res = heat_ratio_vs_gamma(gammas, entry, env, TARGET, registry)
    assert res.grid == gammas
    assert res.notes == ("", "")
    for g in range(2):
        # the down-up order concentrates flight at depth, so any law that
        # grows faster than linearly in density pays for it, and vice versa
        assert res.ratios["superlinear"][g] > 1.0
        assert res.ratios["sublinear"][g] < 1.0
        assert res.meta["t_switch_up_down"][g] > 0.0
        assert res.meta["t_switch_down_up"][g] > 0.0
        assert (res.meta["v_exit_up_down"][g]
                >= res.meta["v_exit_down_up"][g])


def test_heat_ratio_vs_gamma_flags_corridor_violations(env, entry):
    registry = {"lin": HeatFluxFormulation(name="lin", c=1.0, m_rho=1.0)}
    res = heat_ratio_vs_gamma((math.radians(-9.0),), entry, env,
                              EARTH.radius + 50000.0e3, registry)
    assert math.isnan(res.ratios["lin"][0])
    assert "above the full-lift-up bound" in res.notes[0]
    assert math.isnan(res.meta["t_switch_up_down"][0])


def test_exponent_sweep_trends_and_contour(env, entry):
    m_vals = (0.6, 1.0, 1.4)
    n_vals = (3.0, 6.0)
    res = heat_ratio_exponent_sweep(m_vals, n_vals, entry, env, TARGET)
    assert len(res.grid) == 6
    ratio = {g: r for g, r in zip(res.grid, res.ratios["monomial"])}
    for n in n_vals:
        assert ratio[(0.6, n)] < ratio[(1.0, n)] < ratio[(1.4, n)]
    # the linear-in-density column is the ratio-one contour for every n_v
    for n, m_cross in res.contour:
        assert n in n_vals
        assert m_cross == pytest.approx(1.0, abs=0.4)
    assert len(res.contour) == len(n_vals)


def test_constant_integral_check_rows(env, entry, solved_pair):
    profiles = [
        ("up_down", solved_pair[0].schedule(entry.t)),
        ("constant_45deg", BankSchedule.constant(math.radians(45.0),
                                                 t_start=entry.t)),
    ]
    out = constant_integral_check(entry, env, profiles, n_v=3.0)
    assert out["n_v"] == 3.0
    assert [r["name"] for r in out["profiles"]] == ["up_down", "constant_45deg"]
    for row in out["profiles"]:
        assert row["integral"] > 0.0
        assert row["closed_form"] > 0.0
        assert row["rel_dev"] == row["integral"] / row["closed_form"] - 1.0
        assert 0.0 <= row["assumption_violation_fraction"] <= 1.0
    devs = [r["rel_dev"] for r in out["profiles"]]
    assert out["max_abs_rel_dev"] == pytest.approx(max(abs(d) for d in devs))
    assert out["spread"] == pytest.approx(max(devs) - min(devs))


def test_constant_integral_check_rejects_bad_inputs(env, entry):
    with pytest.raises(ValueError):
        constant_integral_check(entry, env, [], n_v=1.0)
    steep = study_entry_state(EARTH, 16.0e3, math.radians(-12.0))
    down = [("down", BankSchedule.constant(math.pi, t_start=0.0))]
    with pytest.raises(ValueError, match="did not reach"):
        constant_integral_check(steep, env, down, n_v=3.0)


def test_altitude_dominance_single_bank(env, entry):
    out = altitude_dominance_check(entry, env, TARGET,
                                   constant_banks=(math.radians(45.0),))
    names = [c["name"] for c in out["comparisons"]]
    assert names == ["down_up", "constant_45deg"]
    for c in out["comparisons"]:
        assert "excluded" not in c
        assert c["points"] == 400
        assert c["pass"]
    assert out["worst_margin"] >= -out["tolerance"]
    assert out["pass"]
