"""Scenario stochastic program for sizing wind, solar and storage.

Units: capacities in kW / kWp / kWh, energies in kWh per step, costs in
EUR per year.  Operating costs over the modelled horizon are multiplied by
``SystemParams.operating_weight`` (``8760 / T`` when a short horizon stands
in for a year).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .lp import EQ, GE, LE, CanonicalLP, LPBuilder, SolveOutcome, Status, solve_lp
from .scenarios import ScenarioSet
from .uncertainty import StorageTechnology


class InfeasibleDesignError(RuntimeError):
    """A design problem (or a fixed design) has no feasible operation."""

    def __init__(self, message: str, scenario: int | None = None):
        super().__init__(message)
        self.scenario = scenario


@dataclass(frozen=True)
class SystemParams:
    price: np.ndarray  # EUR/kWh per step
    carbon_intensity: np.ndarray  # kgCO2/kWh per step
    wind_cost: float = 350.0  # EUR/kWp/yr
    solar_cost: float = 60.0  # EUR/kWp/yr
    dt: float = 1.0
    soc0: float = 0.75
    carbon_price: float = 1.0  # EUR/kgCO2
    grid_capacity: float = 500e3  # kW
    solar_max: float = 500e3  # kWp
    budget: float = 200e6  # EUR/yr
    operating_weight: float = 1.0
    cap_exports: bool = False
    cyclic_soc: bool = False

    def __post_init__(self):
        for name in ("price", "carbon_intensity"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if len(self.price) != len(self.carbon_intensity):
            raise ValueError("price and carbon profiles differ in length")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if np.any(self.carbon_intensity < 0):
            raise ValueError("carbon intensity must be non-negative")
        if self.grid_capacity <= 0 or self.solar_max < 0 or self.budget < 0:
            raise ValueError("grid capacity must be positive; solar limit and budget non-negative")
        if not 0 <= self.soc0 <= 1:
            raise ValueError("initial state of charge must lie in [0, 1]")

    @property
    def horizon(self) -> int:
        return len(self.price)

    def check_technology(self, tech: StorageTechnology) -> None:
        if self.soc0 < 1 - tech.depth_of_discharge - 1e-12:
            raise ValueError(
                f"{tech.name}: initial SoC {self.soc0} below minimum {1 - tech.depth_of_discharge:.3g}"
            )


@dataclass(frozen=True)
class DesignVariables:
    wind: float
    solar: float
    storage: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.wind < 0 or self.solar < 0 or any(v < 0 for v in self.storage.values()):
            raise ValueError("capacities must be non-negative")

    def as_dict(self) -> dict:
        return {"wind_kwp": self.wind, "solar_kwp": self.solar, "storage_kwh": dict(self.storage)}


@dataclass(frozen=True)
class CvarConfig:
    alpha: float
    n: float

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if self.n < 0:
            raise ValueError("tail weighting n must be non-negative")

    @property
    def scale(self) -> float:
        return 1.0 / (1.0 + self.n * self.alpha)


def cvar(costs, probs, alpha: float) -> float:
    """Expected cost in the upper ``alpha`` tail (Rockafellar-Uryasev)."""
    costs = np.asarray(costs, float)
    probs = np.asarray(probs, float)
    order = np.argsort(-costs, kind="stable")
    remaining = alpha
    acc = 0.0
    for k in order:
        take = min(probs[k], remaining)
        acc += take * costs[k]
        remaining -= take
        if remaining <= 0:
            break
    return acc / alpha


def risk_averse_value(costs, probs, cfg: CvarConfig | None) -> float:
    """Scaled mean + tail objective evaluated at its optimal threshold."""
    costs = np.asarray(costs, float)
    probs = np.asarray(probs, float)
    mean = float(probs @ costs)
    if cfg is None:
        return mean
    # divide rather than multiply by the scale so exact cases stay exact
    return (mean + cfg.n * cfg.alpha * cvar(costs, probs, cfg.alpha)) / (1.0 + cfg.n * cfg.alpha)


def build_cvar_lp(costs, probs, cfg: CvarConfig) -> CanonicalLP:
    """Stand-alone LP over the threshold and excesses for fixed scenario costs."""
    costs = np.asarray(costs, float)
    probs = np.asarray(probs, float)
    b = LPBuilder()
    xi = b.add_vars("xi", (), lb=-np.inf, cost=cfg.n * cfg.alpha * cfg.scale)
    e = b.add_vars("excess", (len(costs),), cost=cfg.n * probs * cfg.scale)
    b.add_rows("tail", [(e, 1.0), (np.broadcast_to(xi, e.shape), 1.0)], GE, costs)
    b.offset = float(probs @ costs) * cfg.scale
    return b.build()


def _check_inputs(params: SystemParams, scenarios: ScenarioSet, techs: Sequence[StorageTechnology]):
    T = params.horizon
    if scenarios.horizon != T:
        raise ValueError(f"scenario horizon {scenarios.horizon} != price/carbon horizon {T}")
    names = [t.name for t in techs]
    if len(set(names)) != len(names):
        raise ValueError("duplicate technology in subset")
    for t in techs:
        params.check_technology(t)
        for s in scenarios:
            if t.name not in s.efficiency or t.name not in s.storage_cost:
                raise ValueError(f"scenario {s.index} lacks samples for {t.name}")


def build_stochastic_program(
    params: SystemParams,
    scenarios: ScenarioSet,
    techs: Sequence[StorageTechnology],
    fixed: DesignVariables | None = None,
    cvar_cfg: CvarConfig | None = None,
    split_penalty: float = 0.0,
) -> CanonicalLP:
    _check_inputs(params, scenarios, techs)
    T, M, I = params.horizon, len(scenarios), len(techs)
    dt, w = params.dt, params.operating_weight
    rho = scenarios.probabilities
    names = [t.name for t in techs]
    eta = np.array([[s.efficiency[n] for s in scenarios] for n in names]).reshape(I, M)
    ps = np.array([[s.storage_cost[n] for s in scenarios] for n in names]).reshape(I, M)
    L = np.array([s.load for s in scenarios])
    gw = np.array([s.wind for s in scenarios])
    gpv = np.array([s.solar for s in scenarios])
    pe = params.price
    ci = params.carbon_intensity
    pc = params.carbon_price
    scale = cvar_cfg.scale if cvar_cfg is not None else 1.0

    b = LPBuilder()
    if fixed is not None:
        missing = set(names) - set(fixed.storage)
        if missing:
            raise ValueError(f"fixed design lacks capacities for {sorted(missing)}")
        if fixed.solar > params.solar_max * (1 + 1e-12):
            raise InfeasibleDesignError("fixed solar capacity exceeds the solar limit")
        cw = b.add_vars("C_wind", (), lb=fixed.wind, ub=fixed.wind)
        cpv = b.add_vars("C_solar", (), lb=fixed.solar, ub=fixed.solar)
        cap = np.array([fixed.storage[n] for n in names])
        cs = b.add_vars("C_storage", (I,), lb=cap, ub=cap)
    else:
        cw = b.add_vars("C_wind", ())
        cpv = b.add_vars("C_solar", (), ub=params.solar_max)
        cs = b.add_vars("C_storage", (I,))
    ep = b.add_vars("E_charge", (I, M, T))
    en = b.add_vars("E_discharge", (I, M, T))
    soc = b.add_vars("SoC", (I, M, T + 1))
    curt = b.add_vars("curtail", (M, T))
    imp = b.add_vars("grid_import", (M, T))
    exp = b.add_vars("grid_export", (M, T))

    # expected cost
    b.add_cost(cw, scale * params.wind_cost)
    b.add_cost(cpv, scale * params.solar_cost)
    if I:
        b.add_cost(cs, scale * (ps @ rho))
    b.add_cost(imp, scale * w * rho[:, None] * (pe + pc * ci)[None, :])
    b.add_cost(exp, -scale * w * rho[:, None] * pe[None, :])
    if split_penalty:
        b.add_cost(ep, split_penalty)
        b.add_cost(en, split_penalty)

    if I:
        sq = np.sqrt(eta)[:, :, None]
        cs_b = np.broadcast_to(cs[:, None, None], (I, M, T))
        b.add_rows(
            "dynamics",
            [(soc[:, :, 1:], 1.0), (soc[:, :, :-1], -1.0), (ep, -sq), (en, 1.0 / sq)],
            EQ, 0.0,
        )
        delta = np.array([t.discharge_ratio for t in techs])[:, None, None]
        b.add_rows("charge_power", [(ep, 1.0), (cs_b, -delta * dt)], LE, 0.0)
        b.add_rows("discharge_power", [(en, 1.0), (cs_b, -delta * dt)], LE, 0.0)
        nu = np.array([t.depth_of_discharge for t in techs])[:, None, None]
        b.add_rows("soc_max", [(soc[:, :, 1:], 1.0), (cs_b, -1.0)], LE, 0.0)
        b.add_rows("soc_min", [(soc[:, :, 1:], 1.0), (cs_b, -(1.0 - nu))], GE, 0.0)
        b.add_rows("soc_init", [(soc[:, :, 0], 1.0), (np.broadcast_to(cs[:, None], (I, M)), -params.soc0)], EQ, 0.0)
        if params.cyclic_soc:
            b.add_rows("soc_cyclic", [(soc[:, :, T], 1.0), (soc[:, :, 0], -1.0)], GE, 0.0)

    cw_b = np.broadcast_to(cw, (M, T))
    cpv_b = np.broadcast_to(cpv, (M, T))
    # import - export = L - (gen - curtail) + sum_i (charge - discharge)
    terms = [(imp, 1.0), (exp, -1.0), (cw_b, gw), (cpv_b, gpv), (curt, -1.0)]
    for i in range(I):
        terms += [(ep[i], -1.0), (en[i], 1.0)]
    b.add_rows("grid_balance", terms, EQ, L)
    b.add_rows("curtail_cap", [(curt, 1.0), (cw_b, -gw), (cpv_b, -gpv)], LE, 0.0)
    if np.isfinite(params.grid_capacity):
        b.add_rows("grid_cap", [(imp, 1.0), (exp, -1.0)], LE, params.grid_capacity * dt)
        if params.cap_exports:
            b.add_rows("export_cap", [(exp, 1.0), (imp, -1.0)], LE, params.grid_capacity * dt)

    if fixed is None:
        budget_terms = [(np.broadcast_to(cw, (M,)), params.wind_cost), (np.broadcast_to(cpv, (M,)), params.solar_cost)]
        for i in range(I):
            budget_terms.append((np.broadcast_to(cs[i], (M,)), ps[i]))
        b.add_rows("budget", budget_terms, LE, params.budget)

    if cvar_cfg is not None:
        xi = b.add_vars("cvar_threshold", (), lb=-np.inf, cost=scale * cvar_cfg.n * cvar_cfg.alpha)
        ex = b.add_vars("cvar_excess", (M,), cost=scale * cvar_cfg.n * rho)
        # excess_m + xi - cost_m(x) >= 0
        terms = [
            (ex, 1.0),
            (np.broadcast_to(xi, (M,)), 1.0),
            (np.broadcast_to(cw, (M,)), -params.wind_cost),
            (np.broadcast_to(cpv, (M,)), -params.solar_cost),
        ]
        for i in range(I):
            terms.append((np.broadcast_to(cs[i], (M,)), -ps[i]))
        rows = b.add_rows("cvar_tail", terms, GE, 0.0)
        # operating part of cost_m, one coefficient per (m, t) column
        r_mt = np.broadcast_to(rows[:, None], (M, T))
        b.add_coeffs(r_mt, imp, np.broadcast_to(-w * (pe + pc * ci), (M, T)))
        b.add_coeffs(r_mt, exp, np.broadcast_to(w * pe, (M, T)))
    return b.build()


@dataclass(frozen=True)
class CostBreakdown:
    wind_capital: float
    solar_capital: float
    storage_capital: float
    grid_energy: float
    carbon: float
    emissions_kg: float

    @property
    def total(self) -> float:
        return self.wind_capital + self.solar_capital + self.storage_capital + self.grid_energy + self.carbon

    def as_dict(self) -> dict:
        return {
            "wind_capital": self.wind_capital,
            "solar_capital": self.solar_capital,
            "storage_capital": self.storage_capital,
            "grid_energy": self.grid_energy,
            "carbon": self.carbon,
            "total": self.total,
            "emissions_kg": self.emissions_kg,
        }


@dataclass(frozen=True)
class DesignSolution:
    design: DesignVariables
    objective: float
    expected_cost: float
    scenario_costs: tuple[CostBreakdown, ...]
    probabilities: tuple[float, ...]
    technologies: tuple[str, ...]
    outcome: SolveOutcome
    repaired_pairs: int = 0

    @property
    def expected_emissions(self) -> float:
        return float(sum(p * c.emissions_kg for p, c in zip(self.probabilities, self.scenario_costs)))

    def expected_breakdown(self) -> dict:
        keys = ("wind_capital", "solar_capital", "storage_capital", "grid_energy", "carbon", "total", "emissions_kg")
        out = dict.fromkeys(keys, 0.0)
        for p, c in zip(self.probabilities, self.scenario_costs):
            for k, v in c.as_dict().items():
                out[k] += p * v
        return out


def extract_design(
    outcome: SolveOutcome,
    params: SystemParams,
    scenarios: ScenarioSet,
    techs: Sequence[StorageTechnology],
) -> DesignSolution:
    if not outcome.optimal:
        raise ValueError(f"cannot extract a design from a {outcome.status.value} outcome")
    names = tuple(t.name for t in techs)
    cs = np.atleast_1d(outcome.value("C_storage")) if names else np.zeros(0)
    design = DesignVariables(
        wind=outcome.value("C_wind"),
        solar=outcome.value("C_solar"),
        storage={n: float(v) for n, v in zip(names, cs)},
    )
    imp = outcome.value("grid_import")
    exp = outcome.value("grid_export")
    w = params.operating_weight
    breakdown = []
    for m, s in enumerate(scenarios):
        storage_cap = float(sum(s.storage_cost[n] * design.storage[n] for n in names))
        emissions = w * float(params.carbon_intensity @ imp[m])
        breakdown.append(
            CostBreakdown(
                wind_capital=params.wind_cost * design.wind,
                solar_capital=params.solar_cost * design.solar,
                storage_capital=storage_cap,
                grid_energy=w * float(params.price @ (imp[m] - exp[m])),
                carbon=params.carbon_price * emissions,
                emissions_kg=emissions,
            )
        )
    probs = tuple(float(p) for p in scenarios.probabilities)
    expected = float(sum(p * c.total for p, c in zip(probs, breakdown)))
    return DesignSolution(design, outcome.objective, expected, tuple(breakdown), probs, names, outcome)


def _repair_split(lp: CanonicalLP, x: np.ndarray, params: SystemParams, scenarios: ScenarioSet,
                  techs: Sequence[StorageTechnology]) -> tuple[np.ndarray, int, bool]:
    """Remove simultaneous charge/discharge without moving any SoC trajectory.

    The energy freed by un-splitting a pair is absorbed by extra
    curtailment where possible and otherwise by lower imports / higher
    exports.  Returns ``(x, pairs_fixed, clean)``; ``clean`` is False when
    the only available adjustment would raise the cost.
    """
    names = lp.names
    I = len(techs)
    if I == 0:
        return x, 0, True
    x = x.copy()
    ep_c, en_c = names.cols("E_charge"), names.cols("E_discharge")
    cu_c, im_c, ex_c = names.cols("curtail"), names.cols("grid_import"), names.cols("grid_export")
    gw = np.array([s.wind for s in scenarios])
    gpv = np.array([s.solar for s in scenarios])
    gen = x[names.col("C_wind")] * gw + x[names.col("C_solar")] * gpv
    marg_imp = params.price + params.carbon_price * params.carbon_intensity
    fixed, clean = 0, True
    for i, t in enumerate(techs):
        Ep, En = x[ep_c[i]], x[en_c[i]]
        both = (Ep > 0) & (En > 0)
        if not both.any():
            continue
        eta = np.array([s.efficiency[t.name] for s in scenarios])[:, None]
        sq = np.sqrt(eta)
        d = sq * Ep - En / sq
        Ep2 = np.where(both, np.where(d >= 0, d / sq, 0.0), Ep)
        En2 = np.where(both, np.where(d >= 0, 0.0, -d * sq), En)
        Ep2, En2 = np.maximum(Ep2, 0.0), np.maximum(En2, 0.0)
        freed = (Ep - En) - (Ep2 - En2)  # >= 0
        cu = x[cu_c]
        room = np.maximum(gen - cu, 0.0)
        to_curt = np.minimum(freed, room)
        rest = freed - to_curt
        imp = x[im_c]
        less_imp = np.minimum(rest, imp)
        more_exp = rest - less_imp
        harmful = (less_imp * marg_imp[None, :] + more_exp * params.price[None, :]) < -1e-12
        if params.cap_exports and (more_exp > 0).any():
            harmful |= more_exp > 0
        if harmful.any():
            clean = False
            continue
        x[ep_c[i]], x[en_c[i]] = Ep2, En2
        x[cu_c] = cu + to_curt
        x[im_c] = imp - less_imp
        x[ex_c] = x[ex_c] + more_exp
        fixed += int(both.sum())
    return x, fixed, clean


def solve_design(
    params: SystemParams,
    scenarios: ScenarioSet,
    techs: Sequence[StorageTechnology],
    fixed: DesignVariables | None = None,
    cvar_cfg: CvarConfig | None = None,
    backend="highs",
) -> DesignSolution:
    """Build, solve and post-process the stochastic program."""
    lp = build_stochastic_program(params, scenarios, techs, fixed, cvar_cfg)
    outcome = solve_lp(lp, backend)
    if outcome.status == Status.INFEASIBLE:
        raise InfeasibleDesignError("design problem is infeasible")
    if not outcome.optimal:
        raise RuntimeError(f"LP solve failed: {outcome.status.value} ({outcome.message})")
    x, n_fixed, clean = _repair_split(lp, outcome.x, params, scenarios, techs)
    if not clean:
        c_scale = float(np.max(np.abs(lp.c))) if lp.n_vars else 1.0
        penalised = build_stochastic_program(params, scenarios, techs, fixed, cvar_cfg,
                                             split_penalty=1e-7 * c_scale)
        retry = solve_lp(penalised, backend)
        if not retry.optimal:
            raise RuntimeError(f"penalised re-solve failed: {retry.status.value}")
        x, more, _ = _repair_split(lp, retry.x, params, scenarios, techs)
        n_fixed += more
    if n_fixed:
        worst, row = lp.residuals(x)
        if worst > 1e-6:
            raise RuntimeError(f"split repair broke feasibility (violation {worst:.3g})")
        outcome = SolveOutcome(Status.OPTIMAL, lp.objective(x), x, lp.names, outcome.iterations,
                               outcome.wall_time, outcome.backend, outcome.message + " [split repaired]", worst)
    sol = extract_design(outcome, params, scenarios, techs)
    if n_fixed:
        sol = DesignSolution(sol.design, sol.objective, sol.expected_cost, sol.scenario_costs,
                             sol.probabilities, sol.technologies, sol.outcome, n_fixed)
    return sol


def single_scenario_cost(scenarios: ScenarioSet, params: SystemParams, techs: Sequence[StorageTechnology],
                         backend="highs") -> float:
    """Optimal cost of the design problem for a one-scenario set."""
    if len(scenarios) != 1:
        raise ValueError("expected a single-scenario set")
    return solve_design(params, scenarios, techs, backend=backend).objective


def evaluate_fixed_design(
    design: DesignVariables,
    params: SystemParams,
    scenarios: ScenarioSet,
    techs: Sequence[StorageTechnology],
    cvar_cfg: CvarConfig | None = None,
    backend="highs",
) -> DesignSolution:
    """Operate a frozen design on ``scenarios`` and report its cost."""
    names = [t.name for t in techs]
    for m, s in enumerate(scenarios):
        capital = params.wind_cost * design.wind + params.solar_cost * design.solar + sum(
            s.storage_cost[n] * design.storage.get(n, 0.0) for n in names
        )
        if capital > params.budget * (1 + 1e-9):
            raise InfeasibleDesignError(f"budget exceeded in scenario {m} ({capital:.6g} > {params.budget:.6g})", m)
    try:
        return solve_design(params, scenarios, techs, fixed=design, cvar_cfg=cvar_cfg, backend=backend)
    except InfeasibleDesignError as exc:
        # locate the first scenario that cannot be operated
        for m in range(len(scenarios)):
            try:
                solve_design(params, scenarios.single(m), techs, fixed=design, backend=backend)
            except InfeasibleDesignError:
                raise InfeasibleDesignError(f"fixed design infeasible in scenario {m}", m) from exc
        raise


def operation_trace(sol: DesignSolution, scenario: int) -> dict[str, np.ndarray]:
    """Hourly dispatch of one scenario from a solved program."""
    out = sol.outcome
    tr = {
        "grid_import": out.value("grid_import")[scenario],
        "grid_export": out.value("grid_export")[scenario],
        "curtailment": out.value("curtail")[scenario],
    }
    if sol.technologies:
        soc = out.value("SoC")
        ep = out.value("E_charge")
        en = out.value("E_discharge")
        for i, n in enumerate(sol.technologies):
            tr[f"soc_{n}"] = soc[i, scenario, 1:]
            tr[f"charge_{n}"] = ep[i, scenario]
            tr[f"discharge_{n}"] = en[i, scenario]
    return tr
