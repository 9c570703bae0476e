"""Monte Carlo dispersion harness for closed-loop aerocapture runs.

Each run draws its dispersion vector from a counter-based stream (key is the
campaign master seed, counter is the run index), so any run can be
regenerated alone and results do not depend on execution order. The truth
simulation integrates the full rotating-planet dynamics at a fixed step with
the bank servo in the loop and the guidance called at its own period once
the sensed non-gravitational acceleration passes the activation threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernel, heating, orbits
from .dynamics import TRUTH_DT, SimState
from .env_models import (G0, AtmosphereModel, PerturbationModel, PlanetModel,
                         VehicleModel, density)
from .guidance import GuidanceConfig, GuidanceState, Predictor, guidance_call

__all__ = [
    "ScenarioConfig",
    "SampledInstance",
    "McRunResult",
    "CampaignResult",
    "sample_instance",
    "entry_state",
    "run_closed_loop",
    "run_campaign",
    "summary_stats",
    "compare_paired",
    "binned_metric",
    "binned_mean_ratio",
    "scenario_from_config",
]


@dataclass(frozen=True)
class ScenarioConfig:
    """Entry-state dispersions, fixed geometry, and campaign settings.

    Angles in radians, altitudes in meters. Degenerate ranges (lo == hi) pin
    a quantity; the sampler still draws it so the stream layout never moves.
    """

    v0_range: tuple[float, float] = (11050.0, 11060.0)
    gamma0_range: tuple[float, float] = (math.radians(-6.5), math.radians(-5.0))
    chi0_range: tuple[float, float] = (math.radians(-2.1789), math.radians(-1.1789))
    h0: float = 121.9e3
    theta0: float = math.radians(242.75)
    delta0: float = math.radians(-46.67)
    target_apoapsis_alt: float = 200.0e3
    target_inclination: float = math.radians(90.0)
    cl_mult_range: tuple[float, float] = (0.9, 1.1)
    cd_mult_range: tuple[float, float] = (0.9, 1.1)
    pert_enabled: bool = True
    pert_bias_halfwidth: float = 0.1
    pert_wave_amplitudes: tuple[float, ...] = (0.08, 0.05, 0.03)
    pert_wavelengths: tuple[float, ...] = (52000.0, 23000.0, 11000.0)
    n_runs: int = 100
    master_seed: int = 709
    t_max: float = 3000.0

    def __post_init__(self):
        for name in ("v0_range", "gamma0_range", "chi0_range",
                     "cl_mult_range", "cd_mult_range"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ValueError(f"{name} has hi < lo")
        if self.h0 <= 0.0 or self.t_max <= 0.0:
            raise ValueError("h0 and t_max must be positive")
        if self.n_runs < 1:
            raise ValueError("n_runs must be at least 1")
        if len(self.pert_wave_amplitudes) != len(self.pert_wavelengths):
            raise ValueError("perturbation amplitude and wavelength lists must match")

    def replace(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class SampledInstance:
    """One run's dispersion draw."""

    index: int
    v0: float
    gamma0: float
    chi0: float
    cl_mult: float
    cd_mult: float
    perturbation: PerturbationModel | None


def sample_instance(scenario: ScenarioConfig, index: int) -> SampledInstance:
    """Dispersions for run `index`: counter-based, order-independent."""
    rng = np.random.Generator(np.random.Philox(key=scenario.master_seed, counter=index))
    draws = rng.random(6 + len(scenario.pert_wave_amplitudes))

    def u(lo_hi, x):
        lo, hi = lo_hi
        return lo + (hi - lo) * x

    pert = None
    if scenario.pert_enabled:
        bias = 1.0 + scenario.pert_bias_halfwidth * (2.0 * draws[5] - 1.0)
        waves = tuple(
            (amp, wl, 2.0 * math.pi * ph)
            for amp, wl, ph in zip(scenario.pert_wave_amplitudes,
                                   scenario.pert_wavelengths, draws[6:]))
        pert = PerturbationModel(bias=bias, waves=waves, seed=index)
    return SampledInstance(
        index=index,
        v0=u(scenario.v0_range, draws[0]),
        gamma0=u(scenario.gamma0_range, draws[1]),
        chi0=u(scenario.chi0_range, draws[2]),
        cl_mult=u(scenario.cl_mult_range, draws[3]),
        cd_mult=u(scenario.cd_mult_range, draws[4]),
        perturbation=pert,
    )


def entry_state(instance: SampledInstance, scenario: ScenarioConfig,
                planet: PlanetModel, sigma0: float) -> SimState:
    return SimState(
        t=0.0, v=instance.v0, gamma=instance.gamma0, chi=instance.chi0,
        r=planet.radius + scenario.h0, theta=scenario.theta0,
        delta=scenario.delta0, sigma=sigma0)


@dataclass
class McRunResult:
    index: int
    tag: str                      # captured | skip_out | impact | truncated
    instance: SampledInstance
    t_end: float
    exit_state: SimState | None
    r_apo: float
    apo_error: float
    incl: float
    incl_error: float
    budget: orbits.DeltaVBudget | None
    reversals: int
    guidance_calls: int
    predictions: int
    heat_loads: dict[str, float] = field(default_factory=dict)
    peak_fluxes: dict[str, float] = field(default_factory=dict)
    telemetry: list | None = None
    trace: np.ndarray | None = None  # rows of (t, altitude, speed, bank)

    @property
    def captured(self) -> bool:
        return self.tag == "captured"


def run_closed_loop(instance: SampledInstance, scenario: ScenarioConfig,
                    gcfg: GuidanceConfig, planet: PlanetModel,
                    atm_base: AtmosphereModel, veh_nominal: VehicleModel,
                    registry: dict | None = None, dt: float = TRUTH_DT,
                    record_telemetry: bool = False) -> McRunResult:
    """Fly one dispersed entry under closed-loop guidance.

    Truth: full dynamics, perturbed atmosphere, dispersed aerodynamics;
    before the activation threshold the vehicle coasts ballistically (zero
    net lift). Onboard: unperturbed atmosphere, nominal aerodynamics,
    density filters. The run ends crossing the entry-interface altitude on
    ascent (captured or skip_out by the exit orbit energy), at the ground,
    or at t_max.
    """
    atm_onboard = atm_base.with_perturbation(None)
    atm_truth = atm_base.with_perturbation(
        instance.perturbation if instance.perturbation is not None else atm_base.perturbation)
    veh_truth = veh_nominal.with_aero_scaled(instance.cl_mult, instance.cd_mult)
    env_truth = _kernel.make_envpack(planet, atm_truth, veh_truth)
    # pre-activation the vehicle coasts ballistically (slow roll nulls the
    # net lift, drag acts in full), so the coast flies a lift-free model
    env_coast = _kernel.make_envpack(planet, atm_truth, replace(veh_truth, cl=0.0))
    predictor = Predictor(planet, atm_onboard, veh_nominal, gcfg)

    state0 = entry_state(instance, scenario, planet, gcfg.sigma0)
    y = (state0.v, state0.gamma, state0.chi, state0.r, state0.theta, state0.delta)
    t = 0.0
    sigma = state0.sigma
    rate = 0.0
    gstate = GuidanceState(sigma_cmd=sigma)
    next_call = math.inf
    activating = False
    predictions = 0
    telemetry: list | None = [] if record_telemetry else None

    cap = int(scenario.t_max / dt) + 4
    rec = np.empty((cap, 4))  # t, h, v, sigma
    n = 0
    tag = "truncated"
    t_end = scenario.t_max
    exit_state = None

    qs_const_truth = 0.5 * veh_truth.s_ref / veh_truth.mass
    qs_const_model = 0.5 * veh_nominal.s_ref / veh_nominal.mass

    while t < scenario.t_max - 1e-9:
        v, gamma, chi, r, theta, delta = y
        h = r - planet.radius
        rec[n] = (t, h, v, sigma)
        n += 1

        coasting = gstate.phase == "pre_entry"
        rho_truth = _kernel.density_at(h, env_truth)
        a_l = 0.0 if coasting else qs_const_truth * rho_truth * v * v * veh_truth.cl
        a_d = qs_const_truth * rho_truth * v * v * veh_truth.cd
        if coasting and math.hypot(a_l, a_d) >= gcfg.trigger_accel:
            gstate.phase = "phase1"
            next_call = t
            activating = True
        if gstate.phase in ("phase1", "phase2") and gamma > 0.0 and h >= gcfg.cutoff_altitude:
            gstate.phase = "inactive"
            next_call = math.inf
        if t >= next_call - 1e-9:
            rho_model = density(atm_onboard, h)
            m_l = qs_const_model * rho_model * v * v * veh_nominal.cl
            m_d = qs_const_model * rho_model * v * v * veh_nominal.cd
            state_now = SimState(t=t, v=v, gamma=gamma, chi=chi, r=r,
                                 theta=theta, delta=delta, sigma=sigma)
            guidance_call(state_now, gstate, gcfg, predictor, a_l, a_d, m_l, m_d)
            predictions += gstate.predictions_last_call
            next_call += gcfg.call_period
            if activating:
                # the coast roll stops on the first commanded attitude
                sigma = gstate.sigma_cmd
                rate = 0.0
                activating = False
            if telemetry is not None:
                telemetry.append({
                    "t": t, "phase": gstate.phase, "cmd": gstate.sigma_cmd,
                    "sigma": sigma, "pred_apo": gstate.last_pred_apo,
                    "pred_incl": gstate.last_pred_incl, "rho_l": gstate.rho_l,
                    "rho_d": gstate.rho_d, "reversals": gstate.reversals_used,
                })

        sigma, rate = _kernel.actuator_step(
            sigma, rate, gstate.sigma_cmd, veh_nominal.max_bank_rate,
            veh_nominal.max_bank_accel, veh_nominal.bank_deadband, dt)
        env_step = env_coast if gstate.phase == "pre_entry" else env_truth
        y_new = _kernel.rk4_step_const(y, dt, sigma, env_step)
        t_new = t + dt

        h_new = y_new[3] - planet.radius
        if h_new <= 0.0:
            tag = "impact"
            t_end = t_new
            y, t = y_new, t_new
            break
        if h < scenario.h0 <= h_new:
            # ascending exit: bisect the crossing to 1e-3 s
            lo, hi = 0.0, dt
            while hi - lo > 1e-3:
                mid = 0.5 * (lo + hi)
                y_mid = _kernel.rk4_step_const(y, mid, sigma, env_step)
                if y_mid[3] - planet.radius >= scenario.h0:
                    hi = mid
                else:
                    lo = mid
            y_exit = _kernel.rk4_step_const(y, hi, sigma, env_step)
            t_end = t + hi
            exit_state = SimState(t=t_end, v=y_exit[0], gamma=y_exit[1],
                                  chi=y_exit[2], r=y_exit[3], theta=y_exit[4],
                                  delta=y_exit[5], sigma=sigma)
            rec[n] = (t_end, y_exit[3] - planet.radius, y_exit[0], sigma)
            n += 1
            y, t = y_exit, t_end
            break
        y, t = y_new, t_new
    else:
        t_end = t
    if exit_state is None and tag == "truncated" and n < cap:
        rec[n] = (t, y[3] - planet.radius, y[0], sigma)
        n += 1

    r_apo = math.nan
    apo_error = math.nan
    incl = math.nan
    incl_error = math.nan
    budget = None
    if exit_state is not None:
        k = orbits.kepler_elements(exit_state, planet)
        incl = k.i
        incl_error = k.i - scenario.target_inclination
        if k.energy >= 0.0:
            tag = "skip_out"
            r_apo = math.inf
            apo_error = math.inf
        else:
            tag = "captured"
            r_apo = k.r_a
            apo_error = k.r_a - (planet.radius + scenario.target_apoapsis_alt)
            budget = orbits.total_budget(
                exit_state, planet.radius + scenario.target_apoapsis_alt,
                scenario.target_inclination, planet)

    heat_loads: dict[str, float] = {}
    peaks: dict[str, float] = {}
    if registry:
        ts = rec[:n, 0]
        rho = density(atm_truth, rec[:n, 1])
        vs = rec[:n, 2]
        for name, form in registry.items():
            q = heating.flux(form, rho, vs, veh_nominal.nose_radius)
            heat_loads[name] = float(np.trapezoid(q, ts))
            peaks[name] = float(np.max(q))

    return McRunResult(
        index=instance.index, tag=tag, instance=instance, t_end=t_end,
        exit_state=exit_state, r_apo=r_apo, apo_error=apo_error, incl=incl,
        incl_error=incl_error, budget=budget, reversals=gstate.reversals_used,
        guidance_calls=gstate.calls, predictions=predictions,
        heat_loads=heat_loads, peak_fluxes=peaks, telemetry=telemetry,
        trace=rec[:n].copy() if record_telemetry else None)


@dataclass
class CampaignResult:
    scenario: ScenarioConfig
    results: list[McRunResult]

    def captured(self) -> list[McRunResult]:
        return [r for r in self.results if r.captured]

    def summary(self) -> dict:
        return summary_stats(self.results)


def _campaign_worker(args) -> McRunResult:
    scenario, gcfg, planet, atm_base, veh, registry, record, idx = args
    return run_closed_loop(sample_instance(scenario, idx), scenario, gcfg,
                           planet, atm_base, veh, registry,
                           record_telemetry=record)


def run_campaign(scenario: ScenarioConfig, gcfg: GuidanceConfig,
                 planet: PlanetModel, atm_base: AtmosphereModel,
                 veh_nominal: VehicleModel, registry: dict | None = None,
                 record_telemetry: bool = False,
                 workers: int = 1) -> CampaignResult:
    """Run every instance of the campaign; results are ordered by run index.

    With workers > 1 the runs are farmed to a process pool. Each run draws
    its own counter-based stream, so the results are identical to a serial
    campaign regardless of scheduling.
    """
    jobs = [(scenario, gcfg, planet, atm_base, veh_nominal, registry,
             record_telemetry, i) for i in range(scenario.n_runs)]
    if workers <= 1 or scenario.n_runs <= 1:
        results = [_campaign_worker(job) for job in jobs]
    else:
        import multiprocessing as mp

        methods = mp.get_all_start_methods()
        ctx = mp.get_context("fork" if "fork" in methods else None)
        with ctx.Pool(min(workers, scenario.n_runs)) as pool:
            results = pool.map(_campaign_worker, jobs)
    return CampaignResult(scenario=scenario, results=results)


def summary_stats(results: list[McRunResult]) -> dict:
    """Aggregate campaign statistics; maneuver stats over captured runs only."""
    tags = {}
    for r in results:
        tags[r.tag] = tags.get(r.tag, 0) + 1
    out = {
        "runs": len(results),
        "tags": tags,
        "capture_rate": tags.get("captured", 0) / max(len(results), 1),
    }
    cap = [r for r in results if r.captured]
    if cap:
        apo = np.array([abs(r.apo_error) for r in cap])
        di = np.array([abs(r.incl_error) for r in cap])
        dvp = np.array([r.budget.dv_planar for r in cap])
        dvt = np.array([r.budget.dv_total for r in cap])
        out.update({
            "apo_error_mean": float(apo.mean()),
            "apo_error_max": float(apo.max()),
            "incl_error_mean": float(di.mean()),
            "incl_error_max": float(di.max()),
            "dv_planar_mean": float(dvp.mean()),
            "dv_planar_std": float(dvp.std()),
            "dv_planar_max": float(dvp.max()),
            "dv_total_mean": float(dvt.mean()),
            "dv_total_max": float(dvt.max()),
            "reversals_mean": float(np.mean([r.reversals for r in cap])),
            "reversals_max": int(max(r.reversals for r in cap)),
        })
        for name in cap[0].heat_loads:
            out[f"heat_{name}_mean"] = float(np.mean([r.heat_loads[name] for r in cap]))
    return out


def _default_metric(r: McRunResult) -> float:
    return r.budget.dv_planar


def compare_paired(a: CampaignResult, b: CampaignResult, metric=_default_metric) -> dict:
    """Pairwise statistics of metric over runs captured in both campaigns.

    Campaigns must be paired: same run count and identical dispersion draws
    run for run. MAD is the mean absolute pair difference; MAPD the mean
    absolute pair difference as a percentage of the baseline (b) value.
    """
    if len(a.results) != len(b.results):
        raise ValueError("campaigns are not paired: different run counts")
    pairs = []
    for ra, rb in zip(a.results, b.results):
        ia, ib = ra.instance, rb.instance
        if (ia.v0, ia.gamma0, ia.chi0, ia.cl_mult, ia.cd_mult) != \
           (ib.v0, ib.gamma0, ib.chi0, ib.cl_mult, ib.cd_mult):
            raise ValueError(f"campaigns are not paired: run {ia.index} draws differ")
        if ra.captured and rb.captured:
            pairs.append((metric(ra), metric(rb), ia.gamma0))
    if not pairs:
        return {"pairs": 0}
    xa = np.array([p[0] for p in pairs])
    xb = np.array([p[1] for p in pairs])
    diff = np.abs(xa - xb)
    return {
        "pairs": len(pairs),
        "mad": float(diff.mean()),
        "mapd_percent": float(100.0 * np.mean(diff / np.maximum(np.abs(xb), 1e-12))),
        "a_mean": float(xa.mean()),
        "b_mean": float(xb.mean()),
        "frac_a_lower": float(np.mean(xa < xb)),
        "ratio_b_over_a_mean": float(np.mean(xb / np.maximum(xa, 1e-12))),
    }


def binned_metric(results: list[McRunResult], metric, bin_width: float = math.radians(0.05),
                  captured_only: bool = True) -> list[dict]:
    """min/mean/max of metric in entry flight-path-angle bins."""
    rows: dict[int, list[float]] = {}
    gam0: dict[int, float] = {}
    for r in results:
        if captured_only and not r.captured:
            continue
        k = math.floor(r.instance.gamma0 / bin_width)
        rows.setdefault(k, []).append(metric(r))
        gam0[k] = (k + 0.5) * bin_width
    out = []
    for k in sorted(rows):
        vals = np.array(rows[k])
        out.append({"gamma0_center": gam0[k], "n": len(vals),
                    "min": float(vals.min()), "mean": float(vals.mean()),
                    "max": float(vals.max())})
    return out


def binned_mean_ratio(a: CampaignResult, b: CampaignResult, metric,
                      bin_width: float = math.radians(0.05)) -> list[dict]:
    """Ratio of per-bin means of metric, campaign a over campaign b."""
    rows_a = binned_metric(a.results, metric, bin_width)
    rows_b = binned_metric(b.results, metric, bin_width)
    by_a = {round(r["gamma0_center"], 12): r for r in rows_a}
    out = []
    for rb in rows_b:
        key = round(rb["gamma0_center"], 12)
        if key in by_a and rb["mean"] != 0.0:
            out.append({"gamma0_center": rb["gamma0_center"],
                        "n_a": by_a[key]["n"], "n_b": rb["n"],
                        "ratio": by_a[key]["mean"] / rb["mean"]})
    return out


def scenario_from_config(cfg: dict | None) -> ScenarioConfig:
    """Scenario from a config mapping; degrees/kilometer keys converted here."""
    if not cfg:
        return ScenarioConfig()
    base = ScenarioConfig()

    def rng(key, default, conv=float):
        val = cfg.get(key, default)
        if isinstance(val, (int, float)):
            val = (val, val)
        return (conv(val[0]), conv(val[1]))

    rad = math.radians
    return ScenarioConfig(
        v0_range=rng("v0_range", base.v0_range),
        gamma0_range=rng("gamma0_deg_range", tuple(map(math.degrees, base.gamma0_range)), rad),
        chi0_range=rng("chi0_deg_range", tuple(map(math.degrees, base.chi0_range)), rad),
        h0=float(cfg.get("h0", base.h0)),
        theta0=rad(float(cfg.get("theta0_deg", math.degrees(base.theta0)))),
        delta0=rad(float(cfg.get("delta0_deg", math.degrees(base.delta0)))),
        target_apoapsis_alt=float(cfg.get("target_apoapsis_alt", base.target_apoapsis_alt)),
        target_inclination=rad(float(cfg.get("target_inclination_deg",
                                             math.degrees(base.target_inclination)))),
        cl_mult_range=rng("cl_mult_range", base.cl_mult_range),
        cd_mult_range=rng("cd_mult_range", base.cd_mult_range),
        pert_enabled=bool(cfg.get("pert_enabled", base.pert_enabled)),
        pert_bias_halfwidth=float(cfg.get("pert_bias_halfwidth", base.pert_bias_halfwidth)),
        pert_wave_amplitudes=tuple(cfg.get("pert_wave_amplitudes", base.pert_wave_amplitudes)),
        pert_wavelengths=tuple(cfg.get("pert_wavelengths", base.pert_wavelengths)),
        n_runs=int(cfg.get("n_runs", base.n_runs)),
        master_seed=int(cfg.get("master_seed", base.master_seed)),
        t_max=float(cfg.get("t_max", base.t_max)),
    )
