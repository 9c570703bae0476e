"""Command-line front end: configs in, CSV/JSON artifacts out.

Subcommands cover a single closed-loop entry, a Monte Carlo campaign, the
open-loop heat-load studies, and paired-campaign comparison. Every run
writes a manifest (config hash, effective seed, package versions) next to
its outputs, and the outputs carry no timestamps, so a manifest plus the
same package versions reproduces them byte for byte.

Exit codes: 0 on success, 1 on configuration or input errors, 2 when the
computation itself reports a failure (a corridor violation on a required
study point, a single run that does not capture, a failed study check).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__, bangbang, env_models, heating, mc_harness, orbits
from .guidance import GUIDANCE_VARIANTS, guidance_from_config

__all__ = ["main"]

_SUBCOMMANDS = ("single-run", "campaign", "bangbang-study", "exponent-sweep",
                "constant-integral", "dominance-check", "compare")


class CliError(Exception):
    """Configuration or input problem; maps to exit code 1."""


class StudyFailure(Exception):
    """The computation ran but reported a failure; maps to exit code 2."""


# ---------------------------------------------------------------- config --

def _resolve_config(name: str) -> tuple[str, str]:
    """Return (label, text) for a config path or a bundled preset name."""
    p = Path(name)
    if p.is_file():
        return str(p), p.read_text()
    stem = name[:-4] if name.endswith(".cfg") else name
    res = resources.files("aerocap").joinpath("presets", f"{stem}.cfg")
    if res.is_file():
        return f"preset:{stem}", res.read_text()
    raise CliError(f"config {name!r} is neither a file nor a bundled preset")


def _load_config(name: str | None) -> tuple[dict, str, str]:
    """Parsed config plus its label and raw text ('' and {} when absent)."""
    if name is None:
        return {}, "none", ""
    label, text = _resolve_config(name)
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise CliError(f"config {label} does not parse: {exc}") from exc
    if cfg is None:
        cfg = {}
    if not isinstance(cfg, dict):
        raise CliError(f"config {label} must be a mapping at top level")
    return cfg, label, text


def _models(cfg: dict):
    planet = env_models.planet_from_config(cfg.get("planet"))
    atm = env_models.atmosphere_from_config(cfg.get("atmosphere"))
    veh = env_models.vehicle_from_config(cfg.get("vehicle"))
    return planet, atm, veh


def _scenario(cfg: dict, args) -> mc_harness.ScenarioConfig:
    scenario = mc_harness.scenario_from_config(cfg.get("scenario"))
    if getattr(args, "seed", None) is not None:
        scenario = replace(scenario, master_seed=args.seed)
    if getattr(args, "runs", None) is not None:
        scenario = replace(scenario, n_runs=args.runs)
    if getattr(args, "gamma0", None) is not None:
        g = math.radians(args.gamma0)
        scenario = replace(scenario, gamma0_range=(g, g))
    return scenario


def _guidance_cfg(cfg: dict, args, planet, scenario) -> "object":
    gcfg_map = dict(cfg.get("guidance") or {})
    if getattr(args, "guidance", None) is not None:
        gcfg_map["variant"] = args.guidance
    if getattr(args, "sigma_d", None) is not None:
        gcfg_map["sigma_d_deg"] = args.sigma_d
    return guidance_from_config(
        gcfg_map,
        target_apoapsis=planet.radius + scenario.target_apoapsis_alt,
        target_inclination=scenario.target_inclination)


def _study_env(cfg: dict, planet, atm, veh) -> bangbang.StudyEnv:
    study = cfg.get("study") or {}
    mode = (bangbang.DynamicsMode.full() if study.get("full_dynamics")
            else bangbang.DynamicsMode.simplified())
    return bangbang.StudyEnv(
        planet=planet, atm=atm, vehicle=veh, mode=mode,
        dt=float(study.get("dt", 0.05)),
        t_max=float(study.get("t_max", 3000.0)),
        apo_tolerance=float(study.get("apo_tolerance", 100.0)),
    )


def _study_entry(cfg: dict, planet, gamma0_override=None) -> tuple:
    study = cfg.get("study") or {}
    gamma0 = (gamma0_override if gamma0_override is not None
              else float(study.get("gamma0_deg", -7.0)))
    entry = bangbang.study_entry_state(
        planet,
        v0=float(study.get("v0", 16000.0)),
        gamma0=math.radians(gamma0),
        h0=float(study.get("h0", 121.9e3)))
    target = planet.radius + float(study.get("target_apoapsis_alt", 500.0e3))
    return entry, target


# --------------------------------------------------------------- outputs --

def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return _jsonable(obj.item())
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)  # JSON has no inf/nan
    return obj


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out: Path, subcommand: str, config_label: str,
                    config_text: str, args, seed=None,
                    config_sha256: str | None = None) -> None:
    overrides = {}
    for key in ("seed", "runs", "sigma_d", "guidance", "gamma0", "workers"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    import numba

    if config_sha256 is None:
        config_sha256 = hashlib.sha256(config_text.encode()).hexdigest()
    _write_json(out / "manifest.json", {
        "subcommand": subcommand,
        "config": config_label,
        "config_sha256": config_sha256,
        "overrides": overrides,
        "seed": seed,
        "versions": {
            "aerocap": __version__,
            "python": ".".join(map(str, sys.version_info[:3])),
            "numpy": np.__version__,
            "numba": numba.__version__,
        },
    })


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ----------------------------------------------------------- subcommands --

def _nominal_instance(scenario: mc_harness.ScenarioConfig,
                      ) -> mc_harness.SampledInstance:
    return mc_harness.SampledInstance(
        index=0,
        v0=0.5 * (scenario.v0_range[0] + scenario.v0_range[1]),
        gamma0=0.5 * (scenario.gamma0_range[0] + scenario.gamma0_range[1]),
        chi0=0.5 * (scenario.chi0_range[0] + scenario.chi0_range[1]),
        cl_mult=1.0, cd_mult=1.0, perturbation=None)


def _budget_payload(run: mc_harness.McRunResult) -> dict:
    payload = {
        "tag": run.tag,
        "t_end": run.t_end,
        "r_apo": run.r_apo,
        "apo_error": run.apo_error,
        "incl_deg": math.degrees(run.incl) if math.isfinite(run.incl) else None,
        "incl_error_deg": (math.degrees(run.incl_error)
                           if math.isfinite(run.incl_error) else None),
        "reversals": run.reversals,
        "guidance_calls": run.guidance_calls,
        "predictions": run.predictions,
        "heat_loads": dict(sorted(run.heat_loads.items())),
        "peak_fluxes": dict(sorted(run.peak_fluxes.items())),
    }
    if run.budget is not None:
        payload["delta_v"] = {
            "dv1": run.budget.dv1, "dv2": run.budget.dv2,
            "dv_plane": run.budget.dv_plane,
            "dv_planar": run.budget.dv_planar,
            "dv_total": run.budget.dv_total,
        }
    return payload


def _cmd_single_run(args) -> int:
    cfg, label, text = _load_config(args.config)
    planet, atm, veh = _models(cfg)
    scenario = _scenario(cfg, args)
    gcfg = _guidance_cfg(cfg, args, planet, scenario)
    registry = heating.registry_from_config(cfg.get("heat_formulations"))
    instance = _nominal_instance(scenario)
    run = mc_harness.run_closed_loop(instance, scenario, gcfg, planet, atm,
                                     veh, registry, record_telemetry=True)
    out = _out_dir(args)
    _write_csv(out / "trajectory.csv",
               ["t", "altitude", "velocity", "sigma_deg"],
               ((t, h, v, math.degrees(s)) for t, h, v, s in run.trace))
    _write_csv(out / "telemetry.csv",
               ["t", "phase", "cmd_deg", "sigma_deg", "pred_apo",
                "pred_incl_deg", "rho_l", "rho_d", "reversals"],
               ((row["t"], row["phase"], math.degrees(row["cmd"]),
                 math.degrees(row["sigma"]),
                 "" if row["pred_apo"] is None else row["pred_apo"],
                 "" if row["pred_incl"] is None
                 else math.degrees(row["pred_incl"]),
                 row["rho_l"], row["rho_d"], row["reversals"])
                for row in run.telemetry))
    _write_json(out / "budget.json", _budget_payload(run))
    _write_manifest(out, "single-run", label, text, args,
                    seed=scenario.master_seed)
    if not run.captured:
        print(f"run ended {run.tag}; outputs in {out}", file=sys.stderr)
        return 2
    print(f"captured: apoapsis error {run.apo_error / 1e3:+.3f} km, "
          f"inclination error {math.degrees(run.incl_error):+.4f} deg, "
          f"outputs in {out}")
    return 0


def _campaign_rows(camp: mc_harness.CampaignResult, registry) -> tuple:
    heat_names = sorted(registry) if registry else []
    header = ["index", "tag", "v0", "gamma0_deg", "chi0_deg", "cl_mult",
              "cd_mult", "t_end", "r_apo", "apo_error", "incl_deg",
              "incl_error_deg", "dv1", "dv2", "dv_plane", "dv_planar",
              "dv_total", "reversals", "guidance_calls", "predictions"]
    header += [f"heat_{n}" for n in heat_names]
    header += [f"peak_{n}" for n in heat_names]
    rows = []
    for r in camp.results:
        b = r.budget
        rows.append([
            r.index, r.tag, r.instance.v0, math.degrees(r.instance.gamma0),
            math.degrees(r.instance.chi0), r.instance.cl_mult,
            r.instance.cd_mult, r.t_end, r.r_apo, r.apo_error,
            math.degrees(r.incl) if math.isfinite(r.incl) else math.nan,
            math.degrees(r.incl_error) if math.isfinite(r.incl_error) else math.nan,
            b.dv1 if b else math.nan, b.dv2 if b else math.nan,
            b.dv_plane if b else math.nan, b.dv_planar if b else math.nan,
            b.dv_total if b else math.nan, r.reversals, r.guidance_calls,
            r.predictions,
        ] + [r.heat_loads.get(n, math.nan) for n in heat_names]
          + [r.peak_fluxes.get(n, math.nan) for n in heat_names])
    return header, rows


def _cmd_campaign(args) -> int:
    cfg, label, text = _load_config(args.config)
    planet, atm, veh = _models(cfg)
    scenario = _scenario(cfg, args)
    gcfg = _guidance_cfg(cfg, args, planet, scenario)
    registry = heating.registry_from_config(cfg.get("heat_formulations"))
    camp = mc_harness.run_campaign(scenario, gcfg, planet, atm, veh, registry,
                                   workers=args.workers)
    out = _out_dir(args)
    header, rows = _campaign_rows(camp, registry)
    _write_csv(out / "results.csv", header, rows)
    _write_json(out / "summary.json", camp.summary())

    metrics = {
        "dv_planar": lambda r: r.budget.dv_planar,
        "dv_total": lambda r: r.budget.dv_total,
        "abs_apo_error": lambda r: abs(r.apo_error),
        "abs_incl_error_deg": lambda r: abs(math.degrees(r.incl_error)),
    }
    bin_rows = []
    for name, metric in metrics.items():
        for row in mc_harness.binned_metric(camp.results, metric):
            bin_rows.append([name, math.degrees(row["gamma0_center"]),
                             row["n"], row["min"], row["mean"], row["max"]])
    _write_csv(out / "binned.csv",
               ["metric", "gamma0_center_deg", "n", "min", "mean", "max"],
               bin_rows)
    _write_manifest(out, "campaign", label, text, args,
                    seed=scenario.master_seed)
    stats = camp.summary()
    print(f"{stats['runs']} runs, capture rate {stats['capture_rate']:.3f}, "
          f"outputs in {out}")
    return 0


def _cmd_bangbang_study(args) -> int:
    cfg, label, text = _load_config(args.config)
    planet, atm, veh = _models(cfg)
    env = _study_env(cfg, planet, atm, veh)
    entry, target = _study_entry(cfg, planet, getattr(args, "gamma0", None))
    study = cfg.get("study") or {}
    gammas_deg = [float(g) for g in
                  study.get("gamma0_deg_values", (-6.5, -7.0, -8.0, -9.0))]
    registry = heating.registry_from_config(cfg.get("heat_formulations"))
    res = bangbang.heat_ratio_vs_gamma(
        [math.radians(g) for g in gammas_deg], entry, env, target, registry)

    out = _out_dir(args)
    rows = []
    for j, g in enumerate(res.grid):
        for name in sorted(res.ratios):
            rows.append([math.degrees(g), name, res.ratios[name][j],
                         res.meta["t_switch_up_down"][j],
                         res.meta["t_switch_down_up"][j],
                         res.meta["v_exit_up_down"][j],
                         res.meta["v_exit_down_up"][j],
                         res.notes[j]])
    _write_csv(out / "ratios.csv",
               ["gamma0_deg", "formulation", "q_du_over_q_ud",
                "t_switch_up_down", "t_switch_down_up", "v_exit_up_down",
                "v_exit_down_up", "note"], rows)

    per_form = {}
    for name, vals in res.ratios.items():
        finite = [v for v in vals if math.isfinite(v)]
        per_form[name] = {
            "m_rho": registry[name].m_rho,
            "all_above_1": bool(finite) and all(v > 1.0 for v in finite),
            "all_below_1": bool(finite) and all(v < 1.0 for v in finite),
            "min": min(finite) if finite else None,
            "max": max(finite) if finite else None,
        }
    failed = [math.degrees(g) for g, note in zip(res.grid, res.notes) if note]
    _write_json(out / "summary.json", {
        "per_formulation": per_form,
        "failed_points_gamma0_deg": failed,
    })
    _write_manifest(out, "bangbang-study", label, text, args)
    if failed:
        print(f"{len(failed)} grid point(s) failed; outputs in {out}",
              file=sys.stderr)
        return 2
    print(f"{len(res.grid)} grid points, outputs in {out}")
    return 0


def _cmd_exponent_sweep(args) -> int:
    cfg, label, text = _load_config(args.config)
    planet, atm, veh = _models(cfg)
    env = _study_env(cfg, planet, atm, veh)
    entry, target = _study_entry(cfg, planet, getattr(args, "gamma0", None))
    study = cfg.get("study") or {}
    m_vals = [float(m) for m in study.get(
        "m_rho_values", np.round(np.arange(0.4, 1.61, 0.1), 10).tolist())]
    n_vals = [float(n) for n in study.get(
        "n_v_values", list(range(2, 11)))]
    try:
        res = bangbang.heat_ratio_exponent_sweep(m_vals, n_vals, entry, env,
                                                 target)
    except bangbang.CorridorViolationError as exc:
        raise StudyFailure(str(exc)) from exc

    out = _out_dir(args)
    _write_csv(out / "sweep.csv", ["m_rho", "n_v", "q_du_over_q_ud"],
               ([m, n, r] for (m, n), r in
                zip(res.grid, res.ratios["monomial"])))
    _write_csv(out / "contour.csv", ["n_v", "m_rho_at_ratio_1"], res.contour)
    _write_json(out / "summary.json", {
        "contour": [list(c) for c in res.contour],
        "m_rho_values": m_vals,
        "n_v_values": n_vals,
    })
    _write_manifest(out, "exponent-sweep", label, text, args)
    print(f"{len(res.grid)} grid points, outputs in {out}")
    return 0


def _cmd_constant_integral(args) -> int:
    cfg, label, text = _load_config(args.config)
    planet, atm, veh = _models(cfg)
    env = _study_env(cfg, planet, atm, veh)
    entry, target = _study_entry(cfg, planet, getattr(args, "gamma0", None))
    study = cfg.get("study") or {}
    n_vals = [float(n) for n in study.get("n_v_values", (3.0, 4.0, 6.0))]
    arc_pairs = study.get("arc_pairs_deg", ((30.0, 150.0), (45.0, 135.0),
                                            (60.0, 120.0)))
    tolerance = float(study.get("tolerance", 0.02))

    try:
        profiles = [
            ("up_down", bangbang.solve_switch_time(
                "up_down", entry, env, target).schedule(entry.t)),
            ("down_up", bangbang.solve_switch_time(
                "down_up", entry, env, target).schedule(entry.t)),
        ]
        for up, down in arc_pairs:
            spec = bangbang.solve_switch_time(
                "up_down", entry, env, target,
                sigma_up=math.radians(float(up)),
                sigma_down=math.radians(float(down)))
            profiles.append((f"arc_{up:g}_{down:g}", spec.schedule(entry.t)))
    except bangbang.CorridorViolationError as exc:
        raise StudyFailure(str(exc)) from exc

    out = _out_dir(args)
    rows = []
    summary = {"n_v": {}, "tolerance": tolerance}
    worst = 0.0
    for n_v in n_vals:
        rep = bangbang.constant_integral_check(entry, env, profiles, n_v)
        for r in rep["profiles"]:
            rows.append([n_v, r["name"], r["integral"], r["closed_form"],
                         r["rel_dev"], r["assumption_violation_fraction"]])
        summary["n_v"][str(n_v)] = {
            "max_abs_rel_dev": rep["max_abs_rel_dev"],
            "spread": rep["spread"],
            "pass": rep["max_abs_rel_dev"] < tolerance,
        }
        worst = max(worst, rep["max_abs_rel_dev"])
    _write_csv(out / "integrals.csv",
               ["n_v", "profile", "integral", "closed_form", "rel_dev",
                "assumption_violation_fraction"], rows)
    summary["pass"] = worst < tolerance
    _write_json(out / "summary.json", summary)
    _write_manifest(out, "constant-integral", label, text, args)
    if not summary["pass"]:
        print(f"max relative deviation {worst:.4f} exceeds {tolerance}; "
              f"outputs in {out}", file=sys.stderr)
        return 2
    print(f"max relative deviation {worst:.4%}, outputs in {out}")
    return 0


def _cmd_dominance_check(args) -> int:
    cfg, label, text = _load_config(args.config)
    planet, atm, veh = _models(cfg)
    env = _study_env(cfg, planet, atm, veh)
    entry, target = _study_entry(cfg, planet, getattr(args, "gamma0", None))
    study = cfg.get("study") or {}
    banks = [math.radians(float(b)) for b in
             study.get("constant_banks_deg", (20.0, 30.0, 40.0, 50.0, 60.0))]
    tolerance = float(study.get("tolerance_m", 10.0))
    try:
        rep = bangbang.altitude_dominance_check(entry, env, target,
                                                constant_banks=banks,
                                                tolerance=tolerance)
    except bangbang.CorridorViolationError as exc:
        raise StudyFailure(str(exc)) from exc

    out = _out_dir(args)
    rows = []
    for c in rep["comparisons"]:
        if "excluded" in c:
            rows.append([c["name"], math.nan, 0, "", c["excluded"]])
        else:
            rows.append([c["name"], c["min_margin"], c["points"],
                         c["pass"], ""])
    _write_csv(out / "dominance.csv",
               ["comparison", "min_margin_m", "points", "pass", "excluded"],
               rows)
    _write_json(out / "summary.json", rep)
    _write_manifest(out, "dominance-check", label, text, args)
    if not rep["pass"]:
        print(f"dominance violated (worst margin {rep['worst_margin']:.2f} m);"
              f" outputs in {out}", file=sys.stderr)
        return 2
    print(f"dominance holds (worst margin {rep['worst_margin']:.2f} m), "
          f"outputs in {out}")
    return 0


def _read_campaign_csv(path: str) -> mc_harness.CampaignResult:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"campaign file {path!r} not found")
    results = []
    with open(p, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"index", "tag", "v0", "gamma0_deg", "chi0_deg", "cl_mult",
                    "cd_mult", "dv_planar", "dv_total"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            missing = sorted(required - set(reader.fieldnames or ()))
            raise CliError(f"{path}: not a campaign results file "
                           f"(missing {', '.join(missing)})")
        for row in reader:
            instance = mc_harness.SampledInstance(
                index=int(row["index"]), v0=float(row["v0"]),
                gamma0=math.radians(float(row["gamma0_deg"])),
                chi0=math.radians(float(row["chi0_deg"])),
                cl_mult=float(row["cl_mult"]), cd_mult=float(row["cd_mult"]),
                perturbation=None)
            captured = row["tag"] == "captured"
            budget = None
            if captured:
                budget = orbits.DeltaVBudget(
                    dv1=float(row["dv1"]), dv2=float(row["dv2"]),
                    dv_plane=float(row["dv_plane"]),
                    dv_planar=float(row["dv_planar"]),
                    dv_total=float(row["dv_total"]),
                    r_a=float(row["r_apo"]),
                    incl=math.radians(float(row["incl_deg"])))
            heat_loads = {k[len("heat_"):]: float(v) for k, v in row.items()
                          if k.startswith("heat_") and v not in ("", None)}
            results.append(mc_harness.McRunResult(
                index=instance.index, tag=row["tag"], instance=instance,
                t_end=float(row.get("t_end", math.nan)), exit_state=None,
                r_apo=float(row.get("r_apo", math.nan)),
                apo_error=float(row.get("apo_error", math.nan)),
                incl=math.radians(float(row.get("incl_deg", math.nan))),
                incl_error=math.radians(float(row.get("incl_error_deg",
                                                      math.nan))),
                budget=budget,
                reversals=int(row.get("reversals", 0)),
                guidance_calls=int(row.get("guidance_calls", 0)),
                predictions=int(row.get("predictions", 0)),
                heat_loads=heat_loads))
    return mc_harness.CampaignResult(scenario=None, results=results)


def _cmd_compare(args) -> int:
    camp_a = _read_campaign_csv(args.a)
    camp_b = _read_campaign_csv(args.b)
    try:
        stats = {
            "dv_planar": mc_harness.compare_paired(
                camp_a, camp_b, lambda r: r.budget.dv_planar),
            "dv_total": mc_harness.compare_paired(
                camp_a, camp_b, lambda r: r.budget.dv_total),
        }
    except ValueError as exc:
        raise CliError(str(exc)) from exc

    out = _out_dir(args)
    _write_json(out / "comparison.json", stats)
    bin_rows = []
    metrics = {"dv_planar": lambda r: r.budget.dv_planar,
               "dv_total": lambda r: r.budget.dv_total}
    heat_names = sorted(set(camp_a.results[0].heat_loads)
                        & set(camp_b.results[0].heat_loads)) \
        if camp_a.results and camp_b.results else []
    for name in heat_names:
        metrics[f"heat_{name}"] = (
            lambda r, _n=name: r.heat_loads[_n])
    for mname, metric in metrics.items():
        for row in mc_harness.binned_mean_ratio(camp_b, camp_a, metric):
            bin_rows.append([mname, math.degrees(row["gamma0_center"]),
                             row["n_a"], row["n_b"], row["ratio"]])
    _write_csv(out / "binned_ratio.csv",
               ["metric", "gamma0_center_deg", "n_b", "n_a",
                "ratio_b_over_a"], bin_rows)
    digest = hashlib.sha256()
    for path in (args.a, args.b):
        digest.update(Path(path).read_bytes())
    _write_manifest(out, "compare", f"{args.a},{args.b}", "", args,
                    config_sha256=digest.hexdigest())
    print(f"paired runs: {stats['dv_planar'].get('pairs', 0)}, "
          f"outputs in {out}")
    return 0


# ----------------------------------------------------------------- parser --

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aerocap",
        description="Aerocapture simulation, guidance, and heat-load studies")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="config file path or bundled preset name")
        p.add_argument("--out", default="out",
                       help="output directory (created if absent)")
        p.add_argument("--seed", type=int, help="master seed override")

    p = sub.add_parser("single-run",
                       help="one nominal closed-loop entry (trajectory CSV "
                            "+ budget JSON); exits 2 when not captured")
    common(p)
    p.add_argument("--gamma0", type=float,
                   help="entry flight-path angle override, degrees")
    p.add_argument("--sigma-d", dest="sigma_d", type=float,
                   help="deep-bank magnitude override, degrees")
    p.add_argument("--guidance", choices=sorted(GUIDANCE_VARIANTS),
                   help="guidance variant override")
    p.set_defaults(func=_cmd_single_run)

    p = sub.add_parser("campaign",
                       help="Monte Carlo campaign (per-run CSV, aggregate "
                            "JSON, binned-envelope CSV)")
    common(p)
    p.add_argument("--runs", type=int, help="run-count override")
    p.add_argument("--gamma0", type=float,
                   help="pin the entry angle, degrees (degenerate range)")
    p.add_argument("--sigma-d", dest="sigma_d", type=float,
                   help="deep-bank magnitude override, degrees")
    p.add_argument("--guidance", choices=sorted(GUIDANCE_VARIANTS),
                   help="guidance variant override")
    p.add_argument("--workers", type=int, default=1,
                   help="process count for the runs (default 1)")
    p.set_defaults(func=_cmd_campaign)

    for name, func, extra_help in (
            ("bangbang-study", _cmd_bangbang_study,
             "heat-load ratios vs entry angle (ratio CSV + summary JSON)"),
            ("exponent-sweep", _cmd_exponent_sweep,
             "heat-load ratio surface over exponents (+ ratio-1 contour)"),
            ("constant-integral", _cmd_constant_integral,
             "profile-independence check of the deceleration integral"),
            ("dominance-check", _cmd_dominance_check,
             "altitude-vs-speed dominance of the up-then-down profile")):
        p = sub.add_parser(name, help=extra_help)
        common(p)
        p.add_argument("--gamma0", type=float,
                       help="entry flight-path angle override, degrees")
        p.set_defaults(func=func)

    p = sub.add_parser("compare",
                       help="paired-campaign MAD/MAPD and binned ratios "
                            "from two results.csv files")
    p.add_argument("--a", required=True, help="campaign results.csv (baseline a)")
    p.add_argument("--b", required=True, help="campaign results.csv (compared b)")
    p.add_argument("--out", default="out",
                   help="output directory (created if absent)")
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (env_models.ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except StudyFailure as exc:
        print(f"study failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
