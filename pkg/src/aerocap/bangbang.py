"""Open-loop single-switch bank studies on the heat-load question.

A single-switch profile holds one bank extreme and jumps to the other once;
the switch time is solved by bisection so the exit orbit meets a target
apoapsis. Study drivers compare the up-then-down and down-then-up orderings
through stagnation-point heat loads across entry angles and across the
density/velocity exponents of the heat-flux law, check that the
drag-dominated deceleration integral is profile-independent against its
closed form, and check that the up-then-down profile rides above every
same-target alternative at each velocity.

All studies default to the non-rotating, oblateness-free dynamics and are
deterministic given their configuration; grid points are independent and
reported in grid order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import heating, orbits
from .dynamics import (BankSchedule, DynamicsMode, SimState, StopConditions,
                       Trajectory, propagate)
from .env_models import AtmosphereModel, PlanetModel, VehicleModel

__all__ = [
    "CorridorViolationError",
    "BangBangSpec",
    "StudyEnv",
    "RatioStudyResult",
    "study_entry_state",
    "solve_switch_time",
    "propagate_bangbang",
    "heat_ratio_vs_gamma",
    "heat_ratio_exponent_sweep",
    "constant_integral_check",
    "altitude_dominance_check",
]

_SEQUENCES = ("up_down", "down_up")


class CorridorViolationError(ValueError):
    """Target apoapsis outside what the bank extremes can reach.

    bound is 'low' when even the longest full-lift-down hold keeps the
    apoapsis above the target, 'high' when full lift up still falls short;
    achievable carries the apoapsis radius at the failing extreme.
    """

    def __init__(self, message: str, bound: str, achievable: float):
        super().__init__(message)
        self.bound = bound
        self.achievable = achievable


@dataclass(frozen=True)
class BangBangSpec:
    """One single-switch bank profile and the apoapsis it was solved for."""

    sequence: str
    t_switch: float
    target_apoapsis: float
    sigma_up: float = 0.0
    sigma_down: float = math.pi

    def __post_init__(self):
        if self.sequence not in _SEQUENCES:
            raise ValueError(f"sequence must be one of {_SEQUENCES}")
        if self.t_switch < 0.0:
            raise ValueError("t_switch must be non-negative")
        if self.target_apoapsis <= 0.0:
            raise ValueError("target apoapsis radius must be positive")

    @property
    def banks(self) -> tuple[float, float]:
        """(first, second) bank command in flight order."""
        if self.sequence == "up_down":
            return self.sigma_up, self.sigma_down
        return self.sigma_down, self.sigma_up

    def schedule(self, t_start: float = 0.0) -> BankSchedule:
        """The profile as a bank schedule starting at t_start."""
        first, second = self.banks
        if self.t_switch <= 0.0:
            return BankSchedule.constant(second, t_start=t_start)
        return BankSchedule.hold_then_step(t_start + self.t_switch, first,
                                           second, t_start=t_start)


@dataclass(frozen=True)
class StudyEnv:
    """Environment and solver settings shared by the open-loop studies."""

    planet: PlanetModel
    atm: AtmosphereModel
    vehicle: VehicleModel
    mode: DynamicsMode = DynamicsMode.simplified()
    dt: float = 0.05
    t_max: float = 3000.0
    exit_altitude: float | None = None  # None: the entry altitude
    apo_tolerance: float = 100.0
    max_iterations: int = 60

    def exit_alt_for(self, entry: SimState) -> float:
        if self.exit_altitude is not None:
            return self.exit_altitude
        return entry.r - self.planet.radius

    def stops_for(self, entry: SimState) -> StopConditions:
        return StopConditions(t_max=self.t_max,
                              altitude_up=self.exit_alt_for(entry),
                              altitude_down=0.0)


@dataclass(frozen=True)
class RatioStudyResult:
    """Down-up over up-down heat-load ratios on a study grid.

    grid holds the swept points (entry angles, or (m_rho, n_v) pairs),
    ratios maps formulation name to the per-point ratio (NaN where the
    point failed), notes carries one diagnostic string per point (empty
    when the point solved), meta carries parallel per-point scalars such
    as switch times and exit speeds, and contour, when present, holds the
    (n_v, m_rho) locations where the ratio crosses one.
    """

    grid: tuple
    ratios: dict[str, tuple]
    notes: tuple[str, ...]
    meta: dict[str, tuple] = field(default_factory=dict)
    contour: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        for name, vals in self.ratios.items():
            if len(vals) != len(self.grid):
                raise ValueError(f"ratio series {name!r} does not match the grid")
            if any(math.isfinite(v) and v <= 0.0 for v in vals):
                raise ValueError(f"ratio series {name!r} has non-positive entries")
        if len(self.notes) != len(self.grid):
            raise ValueError("notes must match the grid")


def study_entry_state(planet: PlanetModel, v0: float, gamma0: float,
                      h0: float = 121.9e3) -> SimState:
    """Equatorial eastbound entry state at the atmosphere interface."""
    return SimState(t=0.0, v=v0, gamma=gamma0, chi=0.5 * math.pi,
                    r=planet.radius + h0, theta=0.0, delta=0.0)


def _apoapsis_of(traj: Trajectory, env: StudyEnv) -> float:
    """Apoapsis radius reading used by the solver.

    Exits that are unbound read +inf; trajectories that hit the ground or
    run out the clock still inside the atmosphere read 0 (below any
    target), which keeps the bisection direction consistent.
    """
    if traj.status != "alt_up":
        return 0.0
    k = orbits.kepler_elements(traj.final_state, env.planet,
                               rotating=env.mode.rotating)
    if k.energy >= 0.0:
        return math.inf
    return k.r_a


def propagate_bangbang(spec: BangBangSpec, entry: SimState, env: StudyEnv,
                       record: bool = True) -> Trajectory:
    """Fly one single-switch profile to atmospheric exit (or failure)."""
    return propagate(entry, spec.schedule(entry.t), env.stops_for(entry),
                     env.planet, env.atm, env.vehicle, mode=env.mode,
                     dt=env.dt, record=record)


def solve_switch_time(sequence: str, entry: SimState, env: StudyEnv,
                      target_apoapsis: float, sigma_up: float = 0.0,
                      sigma_down: float = math.pi) -> BangBangSpec:
    """Bisect the switch time of a single-switch profile onto the target.

    For up-then-down the apoapsis grows with the switch time, for
    down-then-up it shrinks; either way the two pure-extreme endpoints
    bracket every reachable target, and they are checked first. The
    bracket grows by doubling from one second, capped at the exit time of
    the never-switching first leg, then bisection runs until the predicted
    apoapsis error drops under the tolerance or the iteration budget ends.
    """
    if sequence not in _SEQUENCES:
        raise ValueError(f"sequence must be one of {_SEQUENCES}")
    spec0 = BangBangSpec(sequence=sequence, t_switch=0.0,
                         target_apoapsis=target_apoapsis,
                         sigma_up=sigma_up, sigma_down=sigma_down)
    first, _ = spec0.banks
    stops = env.stops_for(entry)
    rising = sequence == "up_down"
    sgn = 1.0 if rising else -1.0

    def apo_at(ts: float) -> float:
        sched = BangBangSpec(sequence, ts, target_apoapsis, sigma_up,
                             sigma_down).schedule(entry.t)
        traj = propagate(entry, sched, stops, env.planet, env.atm,
                         env.vehicle, mode=env.mode, dt=env.dt, record=False)
        return _apoapsis_of(traj, env)

    hold = propagate(entry, BankSchedule.constant(first, t_start=entry.t),
                     stops, env.planet, env.atm, env.vehicle, mode=env.mode,
                     dt=env.dt, record=False)
    cap = hold.final_state.t - entry.t
    apo_hold = _apoapsis_of(hold, env)
    apo_now = apo_at(0.0)
    apo_up = apo_hold if rising else apo_now
    apo_down = apo_now if rising else apo_hold
    if target_apoapsis > apo_up:
        raise CorridorViolationError(
            f"target apoapsis {target_apoapsis:.0f} m above the full-lift-up "
            f"bound {apo_up:.0f} m", "high", apo_up)
    if target_apoapsis < apo_down:
        raise CorridorViolationError(
            f"target apoapsis {target_apoapsis:.0f} m below the "
            f"full-lift-down bound {apo_down:.0f} m", "low", apo_down)

    lo = 0.0
    hi = min(1.0, cap)
    while hi < cap and sgn * (apo_at(hi) - target_apoapsis) < 0.0:
        lo = hi
        hi = min(2.0 * hi, cap)
    ts = hi
    for _ in range(env.max_iterations):
        mid = 0.5 * (lo + hi)
        apo = apo_at(mid)
        if abs(apo - target_apoapsis) < env.apo_tolerance:
            ts = mid
            break
        if sgn * (apo - target_apoapsis) < 0.0:
            lo = mid
        else:
            hi = mid
    else:
        ts = 0.5 * (lo + hi)
    return BangBangSpec(sequence=sequence, t_switch=ts,
                        target_apoapsis=target_apoapsis,
                        sigma_up=sigma_up, sigma_down=sigma_down)


def _solved_pair(entry: SimState, env: StudyEnv,
                 target_apoapsis: float) -> tuple[Trajectory, Trajectory,
                                                  BangBangSpec, BangBangSpec]:
    spec_ud = solve_switch_time("up_down", entry, env, target_apoapsis)
    spec_du = solve_switch_time("down_up", entry, env, target_apoapsis)
    return (propagate_bangbang(spec_ud, entry, env),
            propagate_bangbang(spec_du, entry, env), spec_ud, spec_du)


def heat_ratio_vs_gamma(gamma0_values, entry0: SimState, env: StudyEnv,
                        target_apoapsis: float,
                        registry: dict[str, heating.HeatFluxFormulation],
                        ) -> RatioStudyResult:
    """Down-up over up-down heat-load ratio per formulation vs entry angle.

    Both orderings are solved to the same apoapsis at every entry angle;
    a corridor violation flags that point (NaN ratios, diagnostic note)
    and the study continues.
    """
    names = list(registry)
    ratios: dict[str, list[float]] = {n: [] for n in names}
    notes: list[str] = []
    meta: dict[str, list[float]] = {
        "t_switch_up_down": [], "t_switch_down_up": [],
        "v_exit_up_down": [], "v_exit_down_up": [],
    }
    r_n = env.vehicle.nose_radius
    for g0 in gamma0_values:
        entry = entry0.replace(gamma=g0, t=0.0)
        try:
            tr_ud, tr_du, spec_ud, spec_du = _solved_pair(entry, env,
                                                          target_apoapsis)
        except CorridorViolationError as exc:
            for n in names:
                ratios[n].append(math.nan)
            for key in meta:
                meta[key].append(math.nan)
            notes.append(str(exc))
            continue
        rho_ud = tr_ud.density(env.atm)
        rho_du = tr_du.density(env.atm)
        for n in names:
            q_ud = heating.heat_load(tr_ud.t, rho_ud, tr_ud.v, registry[n], r_n)
            q_du = heating.heat_load(tr_du.t, rho_du, tr_du.v, registry[n], r_n)
            ratios[n].append(q_du / q_ud)
        meta["t_switch_up_down"].append(spec_ud.t_switch)
        meta["t_switch_down_up"].append(spec_du.t_switch)
        meta["v_exit_up_down"].append(tr_ud.final_state.v)
        meta["v_exit_down_up"].append(tr_du.final_state.v)
        notes.append("")
    return RatioStudyResult(
        grid=tuple(float(g) for g in gamma0_values),
        ratios={n: tuple(v) for n, v in ratios.items()},
        notes=tuple(notes),
        meta={k: tuple(v) for k, v in meta.items()})


def heat_ratio_exponent_sweep(m_rho_values, n_v_values, entry: SimState,
                              env: StudyEnv,
                              target_apoapsis: float) -> RatioStudyResult:
    """Ratio surface over heat-flux exponents at one entry angle.

    The two trajectories do not depend on the heat-flux law, so they are
    solved once and only the monomial integrals are swept. Also locates,
    per velocity exponent, where the ratio crosses one (interpolated in
    the log of the ratio between bracketing density exponents).
    """
    tr_ud, tr_du, _, _ = _solved_pair(entry, env, target_apoapsis)
    rho_ud, v_ud, t_ud = tr_ud.density(env.atm), tr_ud.v, tr_ud.t
    rho_du, v_du, t_du = tr_du.density(env.atm), tr_du.v, tr_du.t

    m_vals = [float(m) for m in m_rho_values]
    n_vals = [float(n) for n in n_v_values]
    grid: list[tuple[float, float]] = []
    vals: list[float] = []
    contour: list[tuple[float, float]] = []
    for n in n_vals:
        row: list[float] = []
        for m in m_vals:
            q_ud = float(np.trapezoid(rho_ud**m * v_ud**n, t_ud))
            q_du = float(np.trapezoid(rho_du**m * v_du**n, t_du))
            grid.append((m, n))
            row.append(q_du / q_ud)
        vals.extend(row)
        logs = np.log(row)
        for j in range(len(m_vals) - 1):
            if logs[j] == 0.0 or logs[j] * logs[j + 1] < 0.0:
                frac = -logs[j] / (logs[j + 1] - logs[j])
                contour.append((n, m_vals[j] + frac * (m_vals[j + 1] - m_vals[j])))
                break
        else:
            if logs[-1] == 0.0:
                contour.append((n, m_vals[-1]))
    return RatioStudyResult(
        grid=tuple(grid),
        ratios={"monomial": tuple(vals)},
        notes=("",) * len(grid),
        contour=tuple(contour))


def constant_integral_check(entry: SimState, env: StudyEnv, profiles,
                            n_v: float, dominance_factor: float = 10.0,
                            ) -> dict:
    """Check the weighted deceleration integral against its closed form.

    For each named bank schedule, integrates rho * V**n_v over the flown
    trajectory and compares it to 2 m / ((n_v - 1) S C_D) *
    (V0**(n_v - 1) - Vf**(n_v - 1)) with that trajectory's own endpoint
    speeds. Every profile must reach a bound atmospheric exit. Alongside
    each deviation, reports the fraction of the material part of the
    integration window (integrand above 1e-6 of its peak) where drag does
    not dominate the along-track gravity component by dominance_factor.
    """
    if n_v == 1.0:
        raise ValueError("n_v = 1 makes the closed form singular")
    veh = env.vehicle
    coef = 2.0 * veh.mass / ((n_v - 1.0) * veh.s_ref * veh.cd)
    qs = 0.5 * veh.s_ref * veh.cd / veh.mass
    stops = env.stops_for(entry)
    rows = []
    for name, sched in profiles:
        traj = propagate(entry, sched, stops, env.planet, env.atm,
                         env.vehicle, mode=env.mode, dt=env.dt)
        if traj.status != "alt_up":
            raise ValueError(f"profile {name!r} did not reach atmospheric "
                             f"exit ({traj.status})")
        k = orbits.kepler_elements(traj.final_state, env.planet,
                                   rotating=env.mode.rotating)
        if k.energy >= 0.0:
            raise ValueError(f"profile {name!r} exits unbound")
        rho = traj.density(env.atm)
        v = traj.v
        integrand = rho * v**n_v
        integral = float(np.trapezoid(integrand, traj.t))
        closed = coef * (entry.v**(n_v - 1.0) - traj.final_state.v**(n_v - 1.0))
        window = integrand >= 1e-6 * integrand.max()
        drag = qs * rho * v * v
        grav = env.planet.mu / traj.r**2 * np.abs(np.sin(traj.gamma))
        weak = drag < dominance_factor * grav
        rows.append({
            "name": name,
            "integral": integral,
            "closed_form": closed,
            "rel_dev": integral / closed - 1.0,
            "assumption_violation_fraction":
                float(np.count_nonzero(weak & window) / max(window.sum(), 1)),
        })
    devs = [r["rel_dev"] for r in rows]
    return {
        "n_v": n_v,
        "profiles": rows,
        "max_abs_rel_dev": max(abs(d) for d in devs),
        "spread": max(devs) - min(devs),
    }


def _monotone_tail(traj: Trajectory) -> tuple[np.ndarray, np.ndarray] | None:
    """Radius vs speed over the strictly velocity-decreasing tail.

    Speed rises briefly after interface while gravity still beats drag;
    the comparison starts at the speed peak. Returns None when speed is
    not strictly decreasing after the peak (a skipping arc), which
    invalidates radius-vs-speed interpolation.
    """
    v = traj.v
    i0 = int(np.argmax(v))
    v_tail = v[i0:]
    if len(v_tail) < 2 or np.any(np.diff(v_tail) >= 0.0):
        return None
    return v_tail, traj.r[i0:]


def altitude_dominance_check(entry: SimState, env: StudyEnv,
                             target_apoapsis: float,
                             constant_banks=(math.radians(20.0),
                                             math.radians(30.0),
                                             math.radians(40.0),
                                             math.radians(50.0),
                                             math.radians(60.0)),
                             tolerance: float = 10.0) -> dict:
    """Check that up-then-down rides highest at every speed, same target.

    Compares the solved up-then-down trajectory against the down-then-up
    solved to the same apoapsis, and against each constant-bank pass with
    an up-then-down re-solved to that pass's own apoapsis (so every
    comparison shares its target). Radius is interpolated on the common
    speed range of the strictly-decreasing speed tails; trajectories that
    do not capture, or whose speed is not monotone past its peak, are
    excluded with a diagnostic.
    """
    stops = env.stops_for(entry)

    def compare(tr_ud: Trajectory, tr_alt: Trajectory) -> tuple[float, int] | str:
        tail_ud = _monotone_tail(tr_ud)
        tail_alt = _monotone_tail(tr_alt)
        if tail_ud is None:
            return "up-down speed not monotone past its peak"
        if tail_alt is None:
            return "alternative speed not monotone past its peak"
        v_ud, r_ud = tail_ud
        v_alt, r_alt = tail_alt
        lo = max(v_ud[-1], v_alt[-1])
        hi = min(v_ud[0], v_alt[0])
        if lo >= hi:
            return "no common speed range"
        v_grid = np.linspace(lo, hi, 400)
        r_ud_i = np.interp(v_grid, v_ud[::-1], r_ud[::-1])
        r_alt_i = np.interp(v_grid, v_alt[::-1], r_alt[::-1])
        margins = r_ud_i - r_alt_i
        return float(margins.min()), int(len(v_grid))

    comparisons = []

    def add(name: str, outcome) -> None:
        if isinstance(outcome, str):
            comparisons.append({"name": name, "excluded": outcome})
        else:
            margin, n_pts = outcome
            comparisons.append({"name": name, "min_margin": margin,
                                "points": n_pts,
                                "pass": margin >= -tolerance})

    tr_ud, tr_du, _, _ = _solved_pair(entry, env, target_apoapsis)
    add("down_up", compare(tr_ud, tr_du))

    for sigma in constant_banks:
        name = f"constant_{math.degrees(sigma):.0f}deg"
        tr_c = propagate(entry, BankSchedule.constant(sigma, t_start=entry.t),
                         stops, env.planet, env.atm, env.vehicle,
                         mode=env.mode, dt=env.dt)
        apo_c = _apoapsis_of(tr_c, env)
        if not math.isfinite(apo_c) or apo_c <= 0.0:
            add(name, f"constant-bank pass does not capture ({tr_c.status})")
            continue
        try:
            spec_m = solve_switch_time("up_down", entry, env, apo_c)
        except CorridorViolationError as exc:
            add(name, f"no matched up-down profile: {exc}")
            continue
        tr_m = propagate_bangbang(spec_m, entry, env)
        add(name, compare(tr_m, tr_c))

    margins = [c["min_margin"] for c in comparisons if "min_margin" in c]
    return {
        "target_apoapsis": target_apoapsis,
        "tolerance": tolerance,
        "comparisons": comparisons,
        "worst_margin": min(margins) if margins else math.nan,
        "pass": bool(margins) and all(c.get("pass", True)
                                      for c in comparisons),
    }
