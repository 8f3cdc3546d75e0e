"""Joint scenarios of load, generation and storage performance, and their reduction."""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .ts_data import GenerationDataset, LoadModel, sample_generation_year, sample_load
from .uncertainty import StorageTechnology, sample_truncated_gaussian


def derive_seed(seed: int | np.random.SeedSequence, *keys) -> np.random.SeedSequence:
    """Child seed sequence addressed by ``keys`` (ints or strings).

    Unlike ``SeedSequence.spawn`` this is stateless, so the same address
    always yields the same stream regardless of call order.
    """
    if isinstance(seed, np.random.SeedSequence):
        entropy, base = seed.entropy, tuple(seed.spawn_key)
    else:
        entropy, base = int(seed), ()
    ints = tuple(k if isinstance(k, (int, np.integer)) else zlib.crc32(str(k).encode()) for k in keys)
    return np.random.SeedSequence(entropy, spawn_key=base + tuple(int(i) for i in ints))


def rng_for(seed, *keys) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *keys))


@dataclass(frozen=True)
class AnnualizationInputs:
    capex: float
    opex: float
    lifetime: float

    def __post_init__(self):
        if not self.lifetime > 0:
            raise ValueError("lifetime must be positive")
        if self.capex < 0 or self.opex < 0:
            raise ValueError("capex and opex must be non-negative")


def annualize(inputs: AnnualizationInputs) -> float:
    """Capital cost per year of lifetime plus yearly OPEX."""
    return inputs.capex / inputs.lifetime + inputs.opex


@dataclass(frozen=True)
class Scenario:
    probability: float
    load: np.ndarray
    wind: np.ndarray
    solar: np.ndarray
    efficiency: dict[str, float]
    storage_cost: dict[str, float]  # annualized, EUR/kWh/yr
    wind_year: int | None = None
    solar_year: int | None = None
    index: int = 0

    def __post_init__(self):
        if not 0 < self.probability <= 1 + 1e-12:
            raise ValueError(f"scenario probability {self.probability} outside (0, 1]")
        T = len(self.load)
        if len(self.wind) != T or len(self.solar) != T:
            raise ValueError("scenario profiles differ in length")
        for name, eta in self.efficiency.items():
            if not 0 < eta <= 1:
                raise ValueError(f"{name}: efficiency {eta} outside (0, 1]")
        for name, p in self.storage_cost.items():
            if not p >= 0:
                raise ValueError(f"{name}: storage cost {p} must be non-negative")

    @property
    def horizon(self) -> int:
        return len(self.load)


@dataclass(frozen=True)
class ScenarioSet:
    scenarios: tuple[Scenario, ...]
    provenance: str = "prior"

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        if not self.scenarios:
            raise ValueError("scenario set is empty")
        total = sum(s.probability for s in self.scenarios)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"scenario probabilities sum to {total!r}")
        if len({s.horizon for s in self.scenarios}) != 1:
            raise ValueError("scenarios have differing horizons")

    def __len__(self):
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    def __getitem__(self, i):
        return self.scenarios[i]

    @property
    def horizon(self) -> int:
        return self.scenarios[0].horizon

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([s.probability for s in self.scenarios])

    def single(self, i: int) -> "ScenarioSet":
        return ScenarioSet((replace(self.scenarios[i], probability=1.0),), f"{self.provenance}[{i}]")


def sample_technology_draws(tech: StorageTechnology, n: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """``n`` independent draws of cost, lifetime and efficiency."""
    cost = np.atleast_1d(sample_truncated_gaussian(tech.cost, rng, size=n))
    lifetime = np.atleast_1d(sample_truncated_gaussian(tech.lifetime, rng, size=n))
    eff = np.minimum(np.atleast_1d(sample_truncated_gaussian(tech.efficiency, rng, size=n)), 1.0)
    return {"cost": cost, "lifetime": lifetime, "efficiency": eff, "annualized": cost / lifetime}


def assemble_scenario_set(
    wind: GenerationDataset,
    solar: GenerationDataset,
    load: LoadModel,
    techs: Sequence[StorageTechnology],
    n: int,
    seed: int | np.random.SeedSequence,
    paired_years: bool = False,
    provenance: str = "prior",
) -> ScenarioSet:
    """Draw ``n`` equiprobable joint scenarios.

    Load and generation come from one stream and each technology from its
    own stream keyed by name, so a technology's draws do not depend on
    which other technologies are included.
    """
    if n < 1:
        raise ValueError("need at least one scenario")
    if wind.horizon != solar.horizon:
        raise ValueError("wind and solar datasets differ in horizon")
    horizon = wind.horizon
    base = rng_for(seed, "base")
    draws = {t.name: sample_technology_draws(t, n, rng_for(seed, "tech", t.name)) for t in techs}
    out = []
    for m in range(n):
        w = sample_generation_year(wind, base)
        if paired_years and int(w.label) in solar.profiles:
            s = solar.profiles[int(w.label)]
        else:
            s = sample_generation_year(solar, base)
        lp = sample_load(load, base, horizon)
        out.append(
            Scenario(
                probability=1.0 / n,
                load=lp.values,
                wind=w.values,
                solar=s.values,
                efficiency={t: float(d["efficiency"][m]) for t, d in draws.items()},
                storage_cost={t: float(d["annualized"][m]) for t, d in draws.items()},
                wind_year=_year(w.label),
                solar_year=_year(s.label),
                index=m,
            )
        )
    return ScenarioSet(tuple(out), provenance)


def _year(label: str) -> int | None:
    try:
        return int(label)
    except ValueError:
        return None


@dataclass(frozen=True)
class Reduction:
    indices: tuple[int, ...]
    probabilities: tuple[float, ...]
    residual: float


def kantorovich_residual(costs, probs, selected) -> float:
    costs = np.asarray(costs, float)
    probs = np.asarray(probs, float)
    sel = np.asarray(sorted(selected))
    d = np.abs(costs[:, None] - costs[None, sel]).min(axis=1)
    return float(probs @ d)


def fast_forward_selection(costs, probs, target: int) -> Reduction:
    """Greedy fast-forward selection on 1-d cost distances.

    Ties go to the lowest index, both when selecting and when assigning a
    dropped scenario's probability to its nearest kept scenario.
    """
    costs = np.asarray(costs, float)
    probs = np.asarray(probs, float)
    n = len(costs)
    if target < 1:
        raise ValueError("target must be at least 1")
    if target > n:
        raise ValueError(f"target {target} exceeds number of scenarios {n}")
    D = np.abs(costs[:, None] - costs[None, :])
    dmin = np.full(n, np.inf)
    chosen = np.zeros(n, dtype=bool)
    order = []
    for _ in range(target):
        resid = probs @ np.minimum(dmin[:, None], D)
        resid[chosen] = np.inf
        u = int(np.argmin(resid))
        order.append(u)
        chosen[u] = True
        dmin = np.minimum(dmin, D[:, u])
    keep = np.sort(np.asarray(order))
    new_p = probs[keep].copy()
    dropped = np.flatnonzero(~chosen)
    if dropped.size:
        nearest = np.argmin(D[np.ix_(dropped, keep)], axis=1)
        np.add.at(new_p, nearest, probs[dropped])
    resid = float(probs[dropped] @ D[np.ix_(dropped, keep)].min(axis=1)) if dropped.size else 0.0
    return Reduction(tuple(int(k) for k in keep), tuple(float(p) for p in new_p), resid)


def apply_reduction(scenarios: ScenarioSet, red: Reduction, provenance: str | None = None) -> ScenarioSet:
    kept = tuple(replace(scenarios[i], probability=p) for i, p in zip(red.indices, red.probabilities))
    return ScenarioSet(kept, provenance or f"reduced({scenarios.provenance})")


def reduce_scenarios(scenarios: ScenarioSet, signature, target: int) -> tuple[ScenarioSet, Reduction]:
    if len(signature) != len(scenarios):
        raise ValueError("one signature value per scenario is required")
    if target == len(scenarios):
        red = Reduction(tuple(range(len(scenarios))), tuple(scenarios.probabilities), 0.0)
        return scenarios, red
    red = fast_forward_selection(signature, scenarios.probabilities, target)
    return apply_reduction(scenarios, red), red


class SignatureError(RuntimeError):
    def __init__(self, index: int, message: str):
        super().__init__(f"scenario {index}: {message}")
        self.index = index


def scenario_signature(
    scenarios: ScenarioSet,
    single_cost: Callable[[ScenarioSet], float],
    mapper: Callable = map,
) -> np.ndarray:
    """Individually optimised cost of each scenario.

    ``single_cost`` solves the design problem for a one-scenario set;
    ``mapper`` may be a parallel ``map``.
    """
    singles = [scenarios.single(i) for i in range(len(scenarios))]
    out = []
    for i, cost in enumerate(mapper(_safe_cost, [single_cost] * len(singles), singles)):
        if isinstance(cost, Exception):
            raise SignatureError(i, str(cost)) from cost
        out.append(cost)
    return np.asarray(out, dtype=float)


def _safe_cost(fn, s):
    try:
        return fn(s)
    except Exception as exc:  # surfaced with the scenario index by the caller
        return exc


# --------------------------------------------------------------------------
# persistence


def save_scenario_set(scenarios: ScenarioSet, directory: str | Path) -> Path:
    """Write one CSV per scenario plus a JSON manifest."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    entries = []
    for k, s in enumerate(scenarios):
        fname = f"scenario_{k:04d}.csv"
        lines = ["hour,load,wind,solar"]
        lines += [f"{t},{float(a)!r},{float(b)!r},{float(c)!r}" for t, (a, b, c) in enumerate(zip(s.load, s.wind, s.solar))]
        (d / fname).write_text("\n".join(lines) + "\n")
        entries.append(
            {
                "file": fname,
                "index": s.index,
                "probability": s.probability,
                "efficiency": s.efficiency,
                "storage_cost": s.storage_cost,
                "wind_year": s.wind_year,
                "solar_year": s.solar_year,
            }
        )
    manifest = {"provenance": scenarios.provenance, "horizon": scenarios.horizon, "scenarios": entries}
    (d / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return d


def load_scenario_set(directory: str | Path) -> ScenarioSet:
    d = Path(directory)
    manifest = json.loads((d / "manifest.json").read_text())
    out = []
    for e in manifest["scenarios"]:
        data = np.loadtxt(d / e["file"], delimiter=",", skiprows=1, ndmin=2)
        out.append(
            Scenario(
                probability=e["probability"],
                load=data[:, 1],
                wind=data[:, 2],
                solar=data[:, 3],
                efficiency=e["efficiency"],
                storage_cost=e["storage_cost"],
                wind_year=e["wind_year"],
                solar_year=e["solar_year"],
                index=e["index"],
            )
        )
    return ScenarioSet(tuple(out), manifest["provenance"])
