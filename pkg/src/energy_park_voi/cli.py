"""Command-line entry point.

Exit codes: 0 success, 1 internal error, 2 configuration or usage error,
3 infeasible design problem.  ``EPVOI_OUTPUT_DIR`` overrides the output
directory named in the config; ``--output-dir`` overrides both.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import plotting, reporting
from .config import ConfigError, RunConfig, build_analysis, build_inputs, default_config_yaml, load_config
from .optimizer import DesignVariables, InfeasibleDesignError, evaluate_fixed_design, operation_trace
from .pipeline import (
    SWEEP_AXES,
    AnalysisConfig,
    preposterior_value,
    prior_design,
    prior_scenarios,
    compute_evii,
    run_analysis,
    sensitivity_sweep,
)
from .scenarios import apply_reduction, load_scenario_set, save_scenario_set

OUTPUT_ENV = "EPVOI_OUTPUT_DIR"
EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 1, 2, 3

log = logging.getLogger("energy_park_voi")


class UsageError(Exception):
    pass


def _infeasible(exc: BaseException) -> bool:
    while exc is not None:
        if isinstance(exc, InfeasibleDesignError):
            return True
        exc = exc.__cause__
    return False


# --------------------------------------------------------------------------
# shared setup


def _load(args) -> tuple[RunConfig, Path]:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.model_copy(update={"seed": args.seed})
    overrides = {}
    if getattr(args, "samples", None) is not None:
        overrides["n_measurements"] = args.samples
    if getattr(args, "restricted_tech", None):
        overrides["restricted_tech"] = sorted(args.restricted_tech)
    if getattr(args, "cvar_alpha", None) is not None or getattr(args, "cvar_n", None) is not None:
        if args.cvar_alpha is None or args.cvar_n is None:
            raise UsageError("--cvar-alpha and --cvar-n must be given together")
        overrides["cvar"] = {"alpha": args.cvar_alpha, "n": args.cvar_n}
    if overrides:
        try:
            data = cfg.model_dump(mode="json")
            data["analysis"].update(overrides)
            cfg = RunConfig.model_validate(data)
        except ValidationError as exc:
            msgs = "; ".join(e["msg"] for e in exc.errors())
            raise ConfigError(f"invalid command-line override: {msgs}") from exc
    out = Path(args.output_dir or os.environ.get(OUTPUT_ENV) or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out


def _setup(args):
    cfg, out = _load(args)
    inputs = build_inputs(cfg)
    analysis = build_analysis(cfg)
    return cfg, out, inputs, analysis


def _config_echo(cfg: RunConfig) -> dict:
    return {"config": cfg.model_dump(mode="json")}


# --------------------------------------------------------------------------
# commands


def cmd_init_config(args) -> int:
    path = Path(args.output)
    if path.exists() and not args.force:
        raise UsageError(f"{path} exists; pass --force to overwrite")
    path.write_text(default_config_yaml())
    print(path)
    return EXIT_OK


def _write_prior(cfg: RunConfig, out: Path, inputs, analysis: AnalysisConfig, prior, figures: bool) -> None:
    digest, seed = cfg.digest(), cfg.seed
    rows = reporting.prior_rows(prior)
    reporting.write_csv(out / "prior_designs.csv", reporting.PRIOR_COLUMNS, rows, digest, seed)
    reporting.write_json(out / "prior_designs.json", {**_config_echo(cfg), **reporting.prior_payload(prior)},
                         digest, seed)
    full = prior_scenarios(inputs, analysis)
    (out / "designs").mkdir(exist_ok=True)
    for key, rep in sorted(prior.reports.items()):
        reduced = apply_reduction(full, prior.reductions[key], f"prior reduced ({key})")
        save_scenario_set(reduced, out / "scenarios" / key)
        doc = {"subset": key, "scenarios": f"../scenarios/{key}", **rep.to_dict()}
        reporting.write_json(out / "designs" / f"{key}.json", doc, digest, seed)
    if figures:
        plotting.plot_prior_costs(rows, out / "prior_designs.png")


def cmd_prior(args) -> int:
    cfg, out, inputs, analysis = _setup(args)
    prior = prior_design(inputs, analysis)
    _write_prior(cfg, out, inputs, analysis, prior, not args.no_figures)
    print(f"selected {prior.selected}: objective {prior.best.objective:.6g} EUR/yr -> {out}")
    return EXIT_OK


def cmd_voi(args) -> int:
    cfg, out, inputs, analysis = _setup(args)
    digest, seed = cfg.digest(), cfg.seed
    prior = prior_design(inputs, analysis)
    pre = preposterior_value(inputs, analysis, prior, "restricted")
    voi = compute_evii(prior.best.objective, pre.objectives())
    rows = reporting.scatter_rows(pre)
    reporting.write_csv(out / "voi_scatter.csv", reporting.SCATTER_COLUMNS, rows, digest, seed)
    reporting.write_json(out / "voi_result.json", {**_config_echo(cfg), **reporting.voi_payload(prior, pre, voi)},
                         digest, seed)
    if not args.no_figures:
        plotting.plot_design_scatter(rows, out / "voi_scatter.png", f"posterior designs ({prior.selected})")
    print(f"EVII {voi.evii:.6g} EUR/yr (SE {voi.standard_error:.3g}, n={voi.n_samples}) -> {out}")
    return EXIT_OK


def cmd_voo(args) -> int:
    cfg, out, inputs, analysis = _setup(args)
    digest, seed = cfg.digest(), cfg.seed
    result = run_analysis(inputs, analysis)
    rows = reporting.voo_scatter_rows(result)
    reporting.write_csv(out / "voo_scatter.csv", reporting.VOO_SCATTER_COLUMNS, rows, digest, seed)
    reporting.write_json(out / "voo_result.json", {**_config_echo(cfg), **reporting.analysis_payload(result)},
                         digest, seed)
    if not args.no_figures:
        plotting.plot_design_scatter(rows, out / "voo_scatter.png", "posterior designs (all technologies)")
    v = result.voo
    print(f"EVO {v.evo:.6g} EUR/yr (SE {v.standard_error:.3g}); net {v.net_value:.6g}; "
          f"switched in {v.switch_fraction:.0%} of samples -> {out}")
    return EXIT_OK


def _parse_values(axis: str, text: str) -> list:
    items = [v.strip() for v in (text or "").split(",") if v.strip()]
    if not items:
        raise UsageError("--values must list at least one value")
    if axis == "carbon-year":
        return items
    try:
        return [float(v) for v in items]
    except ValueError as exc:
        raise UsageError(f"--values for axis {axis} must be numbers: {exc}") from exc


def cmd_sweep(args) -> int:
    values = _parse_values(args.axis, args.values)
    cfg, out, inputs, analysis = _setup(args)
    if args.axis == "carbon-year":
        unknown = [v for v in values if v not in inputs.grid_cases]
        if unknown:
            raise ConfigError(f"grid cases not defined under data.grid_cases: {unknown}")
    digest, seed = cfg.digest(), cfg.seed
    rows = sensitivity_sweep(inputs, analysis, args.axis, values)
    table = reporting.sweep_rows(rows)
    reporting.write_csv(out / "sweep.csv", reporting.SWEEP_COLUMNS, table, digest, seed)
    payload = {
        **_config_echo(cfg),
        "axis": args.axis,
        "rows": [
            {
                **t,
                "error": r.error,
                "voi": None if r.result is None else r.result.voi.to_dict(),
                "voo": None if r.result is None else r.result.voo.to_dict(),
            }
            for t, r in zip(table, rows)
        ],
    }
    reporting.write_json(out / "sweep.json", payload, digest, seed)
    if not args.no_figures:
        plotting.plot_sweep([{"axis_value": t["axis_value"], "voi": t["voi_eur_yr"], "voi_se": t["voi_se"],
                              "voo": t["voo_eur_yr"], "voo_se": t["voo_se"]} for t in table],
                            args.axis, out / "sweep.png")
    failed = [r for r in rows if r.error]
    print(f"{len(rows) - len(failed)} of {len(rows)} sweep cells completed -> {out}")
    return EXIT_OK if not failed else EXIT_INTERNAL


def cmd_operate(args) -> int:
    design_path = Path(args.design)
    if not design_path.is_file():
        raise ConfigError(f"design artifact not found: {design_path}")
    try:
        doc = json.loads(design_path.read_text())
        scen_dir = (design_path.parent / doc["scenarios"]).resolve()
        scenarios = load_scenario_set(scen_dir)
        techs_named = doc["technologies"]
        caps = doc["capacities"]
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"unusable design artifact {design_path}: {exc}") from exc
    cfg, out = _load(args)
    inputs = build_inputs(cfg)
    analysis = build_analysis(cfg)
    missing = [n for n in techs_named if n not in analysis.catalogue]
    if missing:
        raise ConfigError(f"design uses technologies missing from the config: {missing}")
    if not 0 <= args.scenario < len(scenarios):
        raise UsageError(f"--scenario must lie in [0, {len(scenarios) - 1}]")
    params = inputs.params_for(analysis)
    techs = [analysis.catalogue[n] for n in techs_named]
    design = DesignVariables(caps["wind_kwp"], caps["solar_kwp"], dict(caps["storage_kwh"]))
    single = scenarios.single(args.scenario)
    sol = evaluate_fixed_design(design, params, single, techs, backend=analysis.backend)
    tr = operation_trace(sol, 0)
    s = single[0]
    w = params.operating_weight
    table = {
        "hour": np.arange(s.horizon),
        "load": s.load,
        "wind_generation": design.wind * s.wind,
        "solar_generation": design.solar * s.solar,
        **tr,
        "grid_energy_eur_yr": w * params.price * (tr["grid_import"] - tr["grid_export"]),
        "carbon_eur_yr": w * params.carbon_price * params.carbon_intensity * tr["grid_import"],
    }
    columns = list(table)
    rows = [{c: table[c][t] for c in columns} for t in range(s.horizon)]
    stem = f"operation_{doc['subset']}_s{args.scenario}"
    digest, seed = cfg.digest(), cfg.seed
    reporting.write_csv(out / f"{stem}.csv", columns, rows, digest, seed)
    summary = {"design": str(design_path), "scenario": args.scenario, "operating_weight": w,
               "costs": sol.scenario_costs[0].as_dict(), "objective": sol.objective}
    reporting.write_json(out / f"{stem}.json", summary, digest, seed)
    if not args.no_figures:
        plotting.plot_operation({c: list(table[c]) for c in columns}, out / f"{stem}.png")
    print(f"scenario {args.scenario}: cost {sol.scenario_costs[0].total:.6g} EUR/yr -> {out / (stem + '.csv')}")
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epvoi",
        description="Size an energy park and value storage measurements and technology optionality.",
        epilog="exit codes: 0 ok, 1 internal error, 2 config or usage error, 3 infeasible",
    )
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init-config", help="write the default desk-scale configuration")
    p.add_argument("--output", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_init_config)

    def common(p, samples=False):
        p.add_argument("--config", required=True)
        p.add_argument("--output-dir")
        p.add_argument("--seed", type=int)
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
        if samples:
            p.add_argument("--samples", type=int, help="number of measurement samples")
            p.add_argument("--restricted-tech", action="append", metavar="NAME",
                           help="fix the prior technology choice (repeat for several)")
            p.add_argument("--cvar-alpha", type=float)
            p.add_argument("--cvar-n", type=float)

    p = sub.add_parser("prior", help="prior designs for every technology subset")
    common(p)
    p.set_defaults(func=cmd_prior)
    p = sub.add_parser("voi", help="value of information for the chosen technology")
    common(p, samples=True)
    p.set_defaults(func=cmd_voi)
    p = sub.add_parser("voo", help="value of information and of technology optionality")
    common(p, samples=True)
    p.set_defaults(func=cmd_voo)
    p = sub.add_parser("sweep", help="VoI/VoO sensitivity along one axis")
    common(p, samples=True)
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("operate", help="hourly dispatch of a saved design in one scenario")
    common(p)
    p.add_argument("--design", required=True, help="designs/<subset>.json written by 'prior'")
    p.add_argument("--scenario", type=int, default=0)
    p.set_defaults(func=cmd_operate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code or 0)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        if _infeasible(exc):
            print(f"infeasible: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
