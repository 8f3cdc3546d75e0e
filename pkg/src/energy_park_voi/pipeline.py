"""Two-stage design analysis: prior design, simulated demonstrator
measurements, posterior re-design, and the value of information and of
technology optionality.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Sequence

import numpy as np

from .optimizer import (
    CvarConfig,
    DesignSolution,
    InfeasibleDesignError,
    SystemParams,
    single_scenario_cost,
    solve_design,
)
from .scenarios import (
    Reduction,
    ScenarioSet,
    apply_reduction,
    assemble_scenario_set,
    derive_seed,
    reduce_scenarios,
    rng_for,
    scenario_signature,
)
from .ts_data import GenerationDataset, LoadModel
from .uncertainty import PARAMETERS, StorageTechnology, measure_and_update

log = logging.getLogger(__name__)

NO_STORAGE = "none"


def subset_key(names: Sequence[str]) -> str:
    return "+".join(sorted(names)) if names else NO_STORAGE


@dataclass(frozen=True)
class GridCase:
    price: np.ndarray
    carbon_intensity: np.ndarray


@dataclass(frozen=True)
class ParkInputs:
    """Everything the analysis needs besides the analysis settings."""

    wind: GenerationDataset
    solar: GenerationDataset
    load: LoadModel
    base_params: SystemParams
    grid_cases: dict[str, GridCase] = field(default_factory=dict)

    def params_for(self, config: "AnalysisConfig") -> SystemParams:
        p = self.base_params
        if config.grid_case is not None:
            if config.grid_case not in self.grid_cases:
                raise KeyError(f"unknown grid case {config.grid_case!r}")
            g = self.grid_cases[config.grid_case]
            p = replace(p, price=g.price, carbon_intensity=g.carbon_intensity)
        if config.price_scale != 1.0:
            p = replace(p, price=p.price * config.price_scale)
        if config.carbon_scale != 1.0:
            p = replace(p, carbon_intensity=p.carbon_intensity * config.carbon_scale)
        return p


@dataclass(frozen=True)
class AnalysisConfig:
    catalogue: dict[str, StorageTechnology]
    techs_per_park: int = 1
    n_measurements: int = 250
    n_prior: int = 250
    n_reduced: int = 25
    r: float = 0.25
    cvar: CvarConfig | None = None
    seed: int = 0
    price_scale: float = 1.0
    carbon_scale: float = 1.0
    grid_case: str | None = None
    restricted_tech: tuple[str, ...] | None = None
    optionality_cost: float = 1e6  # EUR/yr per additional technology
    reuse_prior_reduction: bool = False
    paired_years: bool = False
    workers: int = 1
    max_failure_fraction: float = 0.01
    backend: str = "highs"

    def __post_init__(self):
        if self.n_measurements < 1:
            raise ValueError("need at least one measurement sample")
        if not 1 <= self.techs_per_park <= len(self.catalogue):
            raise ValueError("techs_per_park must lie between 1 and the catalogue size")
        if not self.r > 0:
            raise ValueError("r must be positive")
        if not 1 <= self.n_reduced <= self.n_prior:
            raise ValueError("need 1 <= n_reduced <= n_prior")
        if self.restricted_tech is not None:
            unknown = set(self.restricted_tech) - set(self.catalogue)
            if unknown:
                raise ValueError(f"restricted technologies not in catalogue: {sorted(unknown)}")

    @property
    def techs(self) -> list[StorageTechnology]:
        return [self.catalogue[n] for n in sorted(self.catalogue)]

    def subsets(self) -> list[tuple[str, ...]]:
        return list(itertools.combinations(sorted(self.catalogue), self.techs_per_park))

    def fingerprint(self) -> str:
        """Identifies settings that must match between compared runs."""
        c = None if self.cvar is None else (self.cvar.alpha, self.cvar.n)
        key = (c, self.price_scale, self.carbon_scale, self.grid_case, self.techs_per_park)
        return hashlib.sha256(repr(key).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class DesignReport:
    technologies: tuple[str, ...]
    capacities: dict
    objective: float
    expected_cost: float
    breakdown: dict
    expected_emissions_kg: float
    provenance: dict
    scenario_indices: tuple[int, ...]
    scenario_probabilities: tuple[float, ...]
    scenario_costs: tuple[float, ...]

    @property
    def key(self) -> str:
        return subset_key(self.technologies)

    @property
    def storage_total(self) -> float:
        return float(sum(self.capacities["storage_kwh"].values()))

    def to_dict(self) -> dict:
        return {
            "technologies": list(self.technologies),
            "capacities": self.capacities,
            "objective": self.objective,
            "expected_cost": self.expected_cost,
            "breakdown": self.breakdown,
            "expected_emissions_kg": self.expected_emissions_kg,
            "provenance": self.provenance,
            "scenario_indices": list(self.scenario_indices),
            "scenario_probabilities": list(self.scenario_probabilities),
            "scenario_costs": list(self.scenario_costs),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DesignReport":
        return cls(
            technologies=tuple(d["technologies"]),
            capacities=d["capacities"],
            objective=d["objective"],
            expected_cost=d["expected_cost"],
            breakdown=d["breakdown"],
            expected_emissions_kg=d["expected_emissions_kg"],
            provenance=d["provenance"],
            scenario_indices=tuple(d["scenario_indices"]),
            scenario_probabilities=tuple(d["scenario_probabilities"]),
            scenario_costs=tuple(d["scenario_costs"]),
        )


def _report(sol: DesignSolution, red: Reduction, provenance: dict) -> DesignReport:
    return DesignReport(
        technologies=sol.technologies,
        capacities=sol.design.as_dict(),
        objective=sol.objective,
        expected_cost=sol.expected_cost,
        breakdown=sol.expected_breakdown(),
        expected_emissions_kg=sol.expected_emissions,
        provenance=provenance,
        scenario_indices=red.indices,
        scenario_probabilities=red.probabilities,
        scenario_costs=tuple(c.total for c in sol.scenario_costs),
    )


def _mapper(workers: int):
    if workers <= 1:
        return map, None
    pool = ProcessPoolExecutor(max_workers=workers)
    return pool.map, pool


def design_for_subset(
    full: ScenarioSet,
    subset: Sequence[str],
    params: SystemParams,
    config: AnalysisConfig,
    provenance: dict,
    reduction: Reduction | None = None,
    mapper=map,
) -> tuple[DesignReport, Reduction]:
    """Signature, reduction and stochastic program for one technology subset."""
    techs = [config.catalogue[n] for n in subset]
    if reduction is None:
        sig = scenario_signature(full, partial(single_scenario_cost, params=params, techs=techs,
                                               backend=config.backend), mapper)
        reduced, reduction = reduce_scenarios(full, sig, config.n_reduced)
    else:
        reduced = apply_reduction(full, reduction)
    sol = solve_design(params, reduced, techs, cvar_cfg=config.cvar, backend=config.backend)
    return _report(sol, reduction, provenance), reduction


@dataclass
class PriorResult:
    reports: dict[str, DesignReport]
    selected: str
    reductions: dict[str, Reduction]

    @property
    def best(self) -> DesignReport:
        return self.reports[self.selected]

    @property
    def baseline(self) -> DesignReport:
        return self.reports[NO_STORAGE]


def prior_scenarios(inputs: ParkInputs, config: AnalysisConfig) -> ScenarioSet:
    return assemble_scenario_set(
        inputs.wind, inputs.solar, inputs.load, config.techs, config.n_prior,
        derive_seed(config.seed, "prior"), config.paired_years, "prior",
    )


def prior_design(inputs: ParkInputs, config: AnalysisConfig) -> PriorResult:
    """Design every k-subset (and the no-storage baseline) on prior scenarios."""
    params = inputs.params_for(config)
    full = prior_scenarios(inputs, config)
    mapper, pool = _mapper(config.workers)
    reports, reductions = {}, {}
    try:
        for subset in [()] + config.subsets():
            key = subset_key(subset)
            try:
                rep, red = design_for_subset(full, subset, params, config, {"stage": "prior"}, mapper=mapper)
            except InfeasibleDesignError as exc:
                raise InfeasibleDesignError(f"prior design infeasible for subset {key}: {exc}") from exc
            except Exception as exc:
                raise RuntimeError(f"prior design failed for subset {key}: {exc}") from exc
            reports[key], reductions[key] = rep, red
            log.info("prior %s: objective %.6g", key, rep.objective)
    finally:
        if pool is not None:
            pool.shutdown()
    if config.restricted_tech is not None:
        selected = subset_key(config.restricted_tech)
        if selected not in reports:
            raise ValueError(f"restricted subset {selected} is not a {config.techs_per_park}-subset")
    else:
        candidates = [subset_key(s) for s in config.subsets()]
        selected = min(candidates, key=lambda k: (reports[k].objective, k))
    return PriorResult(reports, selected, reductions)


@dataclass
class SampleRecord:
    index: int
    digest: str
    theta: dict
    z: dict
    reports: dict[str, DesignReport]
    best: str
    error: str | None = None

    def objective(self, key: str) -> float:
        return self.reports[key].objective


def measurement_draws(config: AnalysisConfig, j: int):
    """Posterior technologies plus the true values and measurements for sample ``j``."""
    rng = rng_for(config.seed, "measure", j)
    post, theta, z = {}, {}, {}
    for tech in config.techs:
        post[tech.name], theta[tech.name], z[tech.name] = measure_and_update(tech, config.r, rng)
    return post, theta, z


def _digest(theta: dict, z: dict) -> str:
    payload = json.dumps({"theta": theta, "z": z}, sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()


def posterior_sample(
    j: int,
    inputs: ParkInputs,
    config: AnalysisConfig,
    subsets: Sequence[tuple[str, ...]],
    prior_reductions: dict[str, Reduction] | None = None,
) -> SampleRecord:
    """Re-design under the posterior for measurement sample ``j``.

    Deterministic in ``(config, j)`` and in each subset independently, so a
    subset's result does not depend on which other subsets are evaluated.
    """
    post, theta, z = measurement_draws(config, j)
    digest = _digest(theta, z)
    try:
        params = inputs.params_for(config)
        full = assemble_scenario_set(
            inputs.wind, inputs.solar, inputs.load, [post[n] for n in sorted(post)], config.n_prior,
            derive_seed(config.seed, "posterior", j), config.paired_years, f"posterior[{j}]",
        )
        reports = {}
        for subset in subsets:
            key = subset_key(subset)
            red = prior_reductions.get(key) if (config.reuse_prior_reduction and prior_reductions) else None
            reports[key], _ = design_for_subset(full, subset, params, config,
                                                {"stage": "posterior", "sample": j}, reduction=red)
        best = min(reports, key=lambda k: (reports[k].objective, k))
        return SampleRecord(j, digest, theta, z, reports, best)
    except Exception as exc:
        return SampleRecord(j, digest, theta, z, {}, "", error=f"{type(exc).__name__}: {exc}")


def _posterior_job(j, inputs, config, subsets, reductions):
    return posterior_sample(j, inputs, config, subsets, reductions)


@dataclass
class PreposteriorResult:
    action_set: str
    samples: list[SampleRecord]
    failures: list[SampleRecord]

    def objectives(self, key: str | None = None) -> np.ndarray:
        if key is None:
            return np.array([s.reports[s.best].objective for s in self.samples])
        return np.array([s.objective(key) for s in self.samples])

    @property
    def mean(self) -> float:
        return float(np.mean(self.objectives()))

    @property
    def digests(self) -> list[str]:
        return [s.digest for s in self.samples]


def preposterior_value(
    inputs: ParkInputs,
    config: AnalysisConfig,
    prior: PriorResult,
    action_set: str = "restricted",
) -> PreposteriorResult:
    if action_set == "restricted":
        subsets = [tuple(prior.selected.split("+"))]
    elif action_set == "expanded":
        subsets = config.subsets()
    else:
        raise ValueError(f"unknown action set {action_set!r}")
    job = partial(_posterior_job, inputs=inputs, config=config, subsets=subsets, reductions=prior.reductions)
    mapper, pool = _mapper(config.workers)
    try:
        records = list(mapper(job, range(config.n_measurements)))
    finally:
        if pool is not None:
            pool.shutdown()
    ok = [r for r in records if r.error is None]
    bad = [r for r in records if r.error is not None]
    for r in bad:
        warnings.warn(f"measurement sample {r.index} failed: {r.error}", RuntimeWarning, stacklevel=2)
    if len(bad) > config.max_failure_fraction * len(records):
        raise RuntimeError(f"{len(bad)} of {len(records)} posterior samples failed; first: {bad[0].error}")
    return PreposteriorResult(action_set, ok, bad)


def restrict(expanded: PreposteriorResult, key: str) -> PreposteriorResult:
    """Restricted-action view of an expanded run (same samples, one subset)."""
    samples = [
        SampleRecord(s.index, s.digest, s.theta, s.z, {key: s.reports[key]}, key)
        for s in expanded.samples
    ]
    return PreposteriorResult("restricted", samples, expanded.failures)


def _se(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else math.nan


@dataclass(frozen=True)
class VoiResult:
    prior_cost: float
    preposterior_mean: float
    evii: float
    standard_error: float
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "prior_cost": self.prior_cost,
            "preposterior_mean": self.preposterior_mean,
            "evii": self.evii,
            "standard_error": self.standard_error,
            "n_samples": self.n_samples,
        }


def compute_evii(prior_cost: float, posterior_costs, prior_fingerprint: str | None = None,
                 posterior_fingerprint: str | None = None) -> VoiResult:
    """Prior optimum minus the mean of the posterior optima (a cost saving)."""
    if prior_fingerprint is not None and prior_fingerprint != posterior_fingerprint:
        raise ValueError("prior and pre-posterior runs used different settings")
    costs = np.asarray(posterior_costs, dtype=float)
    if costs.size == 0:
        raise ValueError("no posterior costs")
    mean = float(np.mean(costs))
    return VoiResult(float(prior_cost), mean, float(prior_cost) - mean, _se(costs), int(costs.size))


@dataclass(frozen=True)
class VooResult:
    restricted_mean: float
    expanded_mean: float
    evo: float
    standard_error: float
    switch_fraction: float
    switches: tuple[tuple[int, str], ...]
    min_inner_difference: float
    optionality_cost: float
    n_samples: int

    @property
    def net_value(self) -> float:
        return self.evo - self.optionality_cost

    def to_dict(self) -> dict:
        return {
            "restricted_mean": self.restricted_mean,
            "expanded_mean": self.expanded_mean,
            "evo": self.evo,
            "standard_error": self.standard_error,
            "switch_fraction": self.switch_fraction,
            "switches": [list(s) for s in self.switches],
            "min_inner_difference": self.min_inner_difference,
            "optionality_cost": self.optionality_cost,
            "net_value": self.net_value,
            "n_samples": self.n_samples,
        }


def compute_evo(
    restricted_costs,
    expanded_costs,
    restricted_digests: Sequence[str],
    expanded_digests: Sequence[str],
    chosen: Sequence[str] | None = None,
    restricted_key: str = "",
    optionality_cost: float = 0.0,
) -> VooResult:
    """Restricted minus expanded pre-posterior mean over common samples."""
    if list(restricted_digests) != list(expanded_digests):
        raise ValueError("restricted and expanded runs used different measurement samples")
    r = np.asarray(restricted_costs, float)
    e = np.asarray(expanded_costs, float)
    diff = r - e
    rel = diff / np.maximum(np.abs(r), 1.0)
    if rel.size and rel.min() < -1e-5:
        warnings.warn(f"expanded optimum above restricted by {-rel.min():.3g} (relative)", RuntimeWarning,
                      stacklevel=2)
    chosen = list(chosen) if chosen is not None else [restricted_key] * len(r)
    switches = tuple((i, c) for i, c in enumerate(chosen) if c != restricted_key)
    return VooResult(
        restricted_mean=float(r.mean()),
        expanded_mean=float(e.mean()),
        evo=float(diff.mean()),
        standard_error=_se(diff),
        switch_fraction=len(switches) / len(r) if len(r) else 0.0,
        switches=switches,
        min_inner_difference=float(rel.min()) if rel.size else 0.0,
        optionality_cost=optionality_cost,
        n_samples=int(len(r)),
    )


@dataclass
class AnalysisResult:
    config: AnalysisConfig
    prior: PriorResult
    expanded: PreposteriorResult
    restricted: PreposteriorResult
    voi: VoiResult
    voo: VooResult


def run_analysis(inputs: ParkInputs, config: AnalysisConfig, prior: PriorResult | None = None) -> AnalysisResult:
    """Full prior -> measurement -> posterior pipeline with VoI and VoO.

    The expanded run evaluates every subset per sample; the restricted
    run is its chosen-subset column, which is exactly what a stand-alone
    restricted run computes because each subset's solve is independent.
    """
    if prior is None:
        prior = prior_design(inputs, config)
    expanded = preposterior_value(inputs, config, prior, "expanded")
    restricted = restrict(expanded, prior.selected)
    voi = compute_evii(prior.best.objective, restricted.objectives(prior.selected))
    n_extra = len(config.catalogue) - config.techs_per_park
    voo = compute_evo(
        restricted.objectives(prior.selected),
        expanded.objectives(),
        restricted.digests,
        expanded.digests,
        chosen=[s.best for s in expanded.samples],
        restricted_key=prior.selected,
        optionality_cost=config.optionality_cost * n_extra,
    )
    return AnalysisResult(config, prior, expanded, restricted, voi, voo)


def risk_averse_run(inputs: ParkInputs, config: AnalysisConfig) -> AnalysisResult:
    if config.cvar is None:
        raise ValueError("risk-averse run needs a CVaR configuration")
    return run_analysis(inputs, config)


SWEEP_AXES = ("r", "price-scale", "carbon-scale", "carbon-year")


@dataclass
class SweepRow:
    axis_value: object
    voi: float
    voi_se: float
    voo: float
    voo_se: float
    error: str | None = None
    result: AnalysisResult | None = None


def sensitivity_sweep(inputs: ParkInputs, config: AnalysisConfig, axis: str, values: Sequence) -> list[SweepRow]:
    """Re-run the analysis for each value on ``axis`` with common seeds."""
    if not values:
        raise ValueError("sweep needs at least one value")
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    rows = []
    shared_prior = None
    for v in values:
        if axis == "r":
            cfg = replace(config, r=float(v))
        elif axis == "price-scale":
            cfg = replace(config, price_scale=float(v))
        elif axis == "carbon-scale":
            cfg = replace(config, carbon_scale=float(v))
        else:
            cfg = replace(config, grid_case=str(v))
        try:
            if axis == "r":
                # prior design does not depend on r
                if shared_prior is None:
                    shared_prior = prior_design(inputs, cfg)
                res = run_analysis(inputs, cfg, shared_prior)
            else:
                res = run_analysis(inputs, cfg)
            rows.append(SweepRow(v, res.voi.evii, res.voi.standard_error, res.voo.evo,
                                 res.voo.standard_error, result=res))
        except Exception as exc:
            log.warning("sweep cell %s=%s failed: %s", axis, v, exc)
            rows.append(SweepRow(v, math.nan, math.nan, math.nan, math.nan, error=str(exc)))
    return rows


__all__ = [
    "AnalysisConfig", "AnalysisResult", "DesignReport", "GridCase", "ParkInputs", "PriorResult",
    "PreposteriorResult", "SampleRecord", "SweepRow", "VoiResult", "VooResult", "compute_evii",
    "compute_evo", "measurement_draws", "posterior_sample", "preposterior_value", "prior_design",
    "prior_scenarios", "restrict", "risk_averse_run", "run_analysis", "sensitivity_sweep", "subset_key",
    "PARAMETERS",
]
