"""Run configuration: YAML schema, validation and construction of inputs."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .optimizer import CvarConfig, SystemParams
from .pipeline import AnalysisConfig, GridCase, ParkInputs
from .scenarios import rng_for
from .ts_data import (
    GenerationDataset,
    LoadModel,
    ShapeParams,
    Units,
    ingest_profile_csv,
    synthesize_profile,
)
from .uncertainty import DEFAULT_CATALOGUE, StorageTechnology, TruncatedGaussianSpec

HOURS_PER_YEAR = 8760


class ConfigError(ValueError):
    """Invalid configuration; the message points at the offending line when known."""


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ShapeModel(_Model):
    mean: float = 0.0
    amplitude: float = 0.0
    seasonal_weight: float = 0.5
    diurnal_weight: float = 0.5
    noise: float = 0.0
    ar_coeff: float = 0.9
    sunrise: int = 6
    sunset: int = 20
    seasonal_amplitude: float = 0.0
    peak_hour: float = 18.0

    def to_params(self) -> ShapeParams:
        return ShapeParams(**self.model_dump())


class ProfileSource(_Model):
    """Either a CSV file or synthetic shape parameters."""

    file: Optional[str] = None
    synthetic: Optional[ShapeModel] = None

    @model_validator(mode="after")
    def _one_of(self):
        if (self.file is None) == (self.synthetic is None):
            raise ValueError("give exactly one of 'file' or 'synthetic'")
        return self


class GenerationSource(_Model):
    """Per-year CSV files, or synthetic shape parameters used for every year."""

    files: Optional[dict[int, str]] = None
    synthetic: Optional[ShapeModel] = None

    @model_validator(mode="after")
    def _one_of(self):
        if (self.files is None) == (self.synthetic is None):
            raise ValueError("give exactly one of 'files' or 'synthetic'")
        return self


class GridCaseModel(_Model):
    price: ProfileSource
    carbon: ProfileSource


class DataModel(_Model):
    years: list[int] = Field(default_factory=lambda: list(range(2010, 2020)))
    start_day: int = 0
    wind: GenerationSource = GenerationSource(
        synthetic=ShapeModel(mean=0.4, amplitude=0.35, seasonal_weight=0.3, diurnal_weight=0.5, noise=0.15,
                             ar_coeff=0.5)
    )
    solar: GenerationSource = GenerationSource(
        synthetic=ShapeModel(amplitude=0.8, noise=0.1, ar_coeff=0.5)
    )
    price: ProfileSource = ProfileSource(
        synthetic=ShapeModel(mean=0.1, amplitude=0.04, seasonal_weight=0.2, diurnal_weight=0.8, noise=0.01)
    )
    carbon: ProfileSource = ProfileSource(synthetic=ShapeModel(mean=0.3, amplitude=0.1, noise=0.03))
    grid_cases: dict[str, GridCaseModel] = Field(default_factory=dict)

    @field_validator("years")
    @classmethod
    def _years(cls, v):
        if not v or len(set(v)) != len(v):
            raise ValueError("years must be a non-empty list without repeats")
        return v


class MomentsModel(_Model):
    mean: float
    std: float = Field(gt=0)


class TechnologyModel(_Model):
    cost: MomentsModel  # EUR/kWh
    lifetime: MomentsModel  # years
    efficiency: MomentsModel  # round-trip fraction
    depth_of_discharge: float = Field(gt=0, le=1)
    discharge_ratio: float = Field(gt=0)

    def to_technology(self, name: str) -> StorageTechnology:
        def tn(m: MomentsModel):
            return TruncatedGaussianSpec(m.mean, m.std)

        return StorageTechnology(name, tn(self.cost), tn(self.lifetime), tn(self.efficiency),
                                 self.depth_of_discharge, self.discharge_ratio)


def _default_catalogue() -> dict[str, TechnologyModel]:
    out = {}
    for name, t in DEFAULT_CATALOGUE.items():
        out[name] = TechnologyModel(
            cost=MomentsModel(mean=t.cost.mean, std=t.cost.std),
            lifetime=MomentsModel(mean=t.lifetime.mean, std=t.lifetime.std),
            efficiency=MomentsModel(mean=t.efficiency.mean, std=t.efficiency.std),
            depth_of_discharge=t.depth_of_discharge,
            discharge_ratio=t.discharge_ratio,
        )
    return out


class LoadConfig(_Model):
    mean: float = Field(250e3, ge=0)  # kW
    std: float = Field(25e3, ge=0)


class SystemModel(_Model):
    wind_cost: float = Field(350.0, ge=0)  # EUR/kWp/yr, annualized
    solar_cost: float = Field(60.0, ge=0)
    soc0: float = Field(0.75, ge=0, le=1)
    carbon_price: float = Field(1.0, ge=0)  # EUR/kgCO2
    grid_capacity: float = Field(500e3, gt=0)  # kW
    solar_max: float = Field(500e3, ge=0)  # kWp
    budget: float = Field(200e6, ge=0)  # EUR/yr
    operating_weight: Optional[float] = Field(None, gt=0)  # default 8760 / horizon
    cap_exports: bool = False
    cyclic_soc: bool = False


class CvarModel(_Model):
    alpha: float = Field(gt=0, le=1)
    n: float = Field(ge=0)


class AnalysisModel(_Model):
    techs_per_park: int = Field(1, ge=1)
    n_measurements: int = Field(250, ge=1)
    n_prior: int = Field(250, ge=1)
    n_reduced: int = Field(25, ge=1)
    r: float = Field(0.25, gt=0)
    cvar: Optional[CvarModel] = None
    price_scale: float = Field(1.0, ge=0)
    carbon_scale: float = Field(1.0, ge=0)
    grid_case: Optional[str] = None
    restricted_tech: Optional[list[str]] = None
    optionality_cost: float = Field(1e6, ge=0)
    reuse_prior_reduction: bool = False
    paired_years: bool = False
    workers: int = Field(1, ge=1)
    max_failure_fraction: float = Field(0.01, ge=0, le=1)
    backend: Literal["highs", "simplex"] = "highs"


class RunConfig(_Model):
    seed: int = 0
    horizon: int = Field(168, ge=1, le=HOURS_PER_YEAR)
    output_dir: str = "results"
    data: DataModel = DataModel()
    load: LoadConfig = LoadConfig()
    technologies: dict[str, TechnologyModel] = Field(default_factory=_default_catalogue)
    system: SystemModel = SystemModel()
    analysis: AnalysisModel = AnalysisModel()

    @model_validator(mode="after")
    def _cross(self):
        if not self.technologies:
            raise ValueError("technologies: catalogue is empty")
        a = self.analysis
        if a.techs_per_park > len(self.technologies):
            raise ValueError("analysis.techs_per_park exceeds the catalogue size")
        if a.n_reduced > a.n_prior:
            raise ValueError("analysis.n_reduced exceeds analysis.n_prior")
        if a.restricted_tech is not None:
            unknown = sorted(set(a.restricted_tech) - set(self.technologies))
            if unknown:
                raise ValueError(f"analysis.restricted_tech names unknown technologies: {unknown}")
            if len(a.restricted_tech) != a.techs_per_park:
                raise ValueError("analysis.restricted_tech must list techs_per_park technologies")
        if a.grid_case is not None and a.grid_case not in self.data.grid_cases:
            raise ValueError(f"analysis.grid_case {a.grid_case!r} is not defined under data.grid_cases")
        return self

    def digest(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def with_analysis(self, **changes) -> "RunConfig":
        a = self.analysis.model_copy(update=changes)
        return self.model_copy(update={"analysis": AnalysisModel.model_validate(a.model_dump())})


# --------------------------------------------------------------------------
# parsing


def _line_of(root, loc) -> int | None:
    """Line (1-based) of the YAML node addressed by a pydantic error location."""
    node, line = root, None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if str(k.value) == str(key):
                    nxt, line = v, k.start_mark.line + 1
                    break
            if nxt is None:
                break
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            break
    if line is None and root is not None:
        line = root.start_mark.line + 1
    return line


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark is not None else source
        raise ConfigError(f"{where}: malformed YAML: {getattr(exc, 'problem', exc)}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}:1: top level must be a mapping")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = err["loc"]
            line = _line_of(root, loc)
            path = ".".join(str(p) for p in loc) or "<root>"
            lines.append(f"{source}:{line}: {path}: {err['msg']}")
        raise ConfigError("\n".join(lines)) from exc


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{p}: cannot read config: {exc.strerror}") from exc
    cfg = parse_config(text, str(p))
    return cfg.model_copy(update={"data": _resolve_paths(cfg.data, p.parent)})


def _resolve_paths(data: DataModel, base: Path) -> DataModel:
    def fix(f):
        return f if f is None or Path(f).is_absolute() else str(base / f)

    def src(s: ProfileSource) -> ProfileSource:
        return s.model_copy(update={"file": fix(s.file)})

    def gen(g: GenerationSource) -> GenerationSource:
        return g if g.files is None else g.model_copy(update={"files": {y: fix(f) for y, f in g.files.items()}})

    cases = {k: GridCaseModel(price=src(c.price), carbon=src(c.carbon)) for k, c in data.grid_cases.items()}
    return data.model_copy(update={"wind": gen(data.wind), "solar": gen(data.solar), "price": src(data.price),
                                   "carbon": src(data.carbon), "grid_cases": cases})


def default_config_yaml() -> str:
    return yaml.safe_dump(RunConfig().model_dump(mode="json"), sort_keys=False)


# --------------------------------------------------------------------------
# building inputs


def _profile(src: ProfileSource, kind: str, units: Units, cfg: RunConfig, *keys) -> np.ndarray:
    if src.file is not None:
        try:
            with open(src.file, "rb") as fh:
                return ingest_profile_csv(fh, units, cfg.horizon, label=Path(src.file).stem).values
        except OSError as exc:
            raise ConfigError(f"cannot read profile {src.file}: {exc.strerror}") from exc
    rng = rng_for(cfg.seed, "data", *keys)
    return synthesize_profile(kind, src.synthetic.to_params(), rng, cfg.horizon, cfg.data.start_day).values


def _generation(src: GenerationSource, kind: str, cfg: RunConfig) -> GenerationDataset:
    profiles = {}
    if src.files is not None:
        for year, f in sorted(src.files.items()):
            try:
                with open(f, "rb") as fh:
                    profiles[year] = ingest_profile_csv(fh, Units.GENERATION, cfg.horizon, label=str(year))
            except OSError as exc:
                raise ConfigError(f"cannot read {kind} profile {f}: {exc.strerror}") from exc
    else:
        params = src.synthetic.to_params()
        for year in cfg.data.years:
            rng = rng_for(cfg.seed, "data", kind, year)
            profiles[year] = synthesize_profile(kind, params, rng, cfg.horizon, cfg.data.start_day, label=str(year))
    return GenerationDataset(kind, profiles)


def build_inputs(cfg: RunConfig) -> ParkInputs:
    """Profiles, load model and system parameters described by ``cfg``."""
    price = _profile(cfg.data.price, "price", Units.PRICE, cfg, "price")
    carbon = _profile(cfg.data.carbon, "carbon", Units.CARBON, cfg, "carbon")
    s = cfg.system
    weight = s.operating_weight if s.operating_weight is not None else HOURS_PER_YEAR / cfg.horizon
    params = SystemParams(
        price=price, carbon_intensity=carbon, wind_cost=s.wind_cost, solar_cost=s.solar_cost, soc0=s.soc0,
        carbon_price=s.carbon_price, grid_capacity=s.grid_capacity, solar_max=s.solar_max, budget=s.budget,
        operating_weight=weight, cap_exports=s.cap_exports, cyclic_soc=s.cyclic_soc,
    )
    cases = {}
    for name, case in sorted(cfg.data.grid_cases.items()):
        cases[name] = GridCase(
            _profile(case.price, "price", Units.PRICE, cfg, "grid_case", name, "price"),
            _profile(case.carbon, "carbon", Units.CARBON, cfg, "grid_case", name, "carbon"),
        )
    return ParkInputs(
        wind=_generation(cfg.data.wind, "wind", cfg),
        solar=_generation(cfg.data.solar, "solar", cfg),
        load=LoadModel(cfg.load.mean, cfg.load.std),
        base_params=params,
        grid_cases=cases,
    )


def build_analysis(cfg: RunConfig) -> AnalysisConfig:
    a = cfg.analysis
    catalogue = {name: t.to_technology(name) for name, t in sorted(cfg.technologies.items())}
    return AnalysisConfig(
        catalogue=catalogue,
        techs_per_park=a.techs_per_park,
        n_measurements=a.n_measurements,
        n_prior=a.n_prior,
        n_reduced=a.n_reduced,
        r=a.r,
        cvar=None if a.cvar is None else CvarConfig(a.cvar.alpha, a.cvar.n),
        seed=cfg.seed,
        price_scale=a.price_scale,
        carbon_scale=a.carbon_scale,
        grid_case=a.grid_case,
        restricted_tech=None if a.restricted_tech is None else tuple(sorted(a.restricted_tech)),
        optionality_cost=a.optionality_cost,
        reuse_prior_reduction=a.reuse_prior_reduction,
        paired_years=a.paired_years,
        workers=a.workers,
        max_failure_fraction=a.max_failure_fraction,
        backend=a.backend,
    )
