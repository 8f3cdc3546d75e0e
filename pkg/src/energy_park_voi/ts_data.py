"""Hourly time-series inputs: ingestion, validation, sampling and synthesis.

Profiles are stored per unit of installed capacity for generation
(kWh/kWp per hour), in EUR/kWh for grid price and kgCO2/kWh for grid
carbon intensity.  Loads are in kW, i.e. kWh per hourly step.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Mapping

import numpy as np
from scipy import stats

DEFAULT_HORIZON = 8760
MAX_GENERATION_PER_KWP = 1.5


class ProfileError(ValueError):
    """Raised when a time series fails validation."""


class Units(str, Enum):
    GENERATION = "kWh/kWp"
    PRICE = "EUR/kWh"
    CARBON = "kgCO2/kWh"
    LOAD = "kWh"


@dataclass(frozen=True)
class HourlyProfile:
    values: np.ndarray
    units: Units
    label: str = "synthetic"

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "units", Units(self.units))
        _check_values(arr, self.units)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def horizon(self) -> int:
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, HourlyProfile):
            return NotImplemented
        return (
            self.units == other.units
            and self.label == other.label
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.units, self.label, self.values.tobytes()))


def _check_values(values: np.ndarray, units: Units, first_row: int = 1) -> None:
    if values.ndim != 1 or values.size == 0:
        raise ProfileError("profile must be a non-empty 1-d series")
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise ProfileError(f"non-finite value at row {bad[0] + first_row}")
    if units == Units.GENERATION:
        neg = np.flatnonzero(values < 0)
        if neg.size:
            raise ProfileError(f"negative generation value at row {neg[0] + first_row}")
        high = np.flatnonzero(values > MAX_GENERATION_PER_KWP)
        if high.size:
            raise ProfileError(
                f"generation value above {MAX_GENERATION_PER_KWP} kWh/kWp at row {high[0] + first_row}"
            )
    elif units in (Units.CARBON, Units.LOAD):
        neg = np.flatnonzero(values < 0)
        if neg.size:
            raise ProfileError(f"negative {units.value} value at row {neg[0] + first_row}")


def ingest_profile_csv(
    source: IO[bytes] | IO[str] | bytes | str,
    expected_units: Units | str,
    horizon: int = DEFAULT_HORIZON,
    label: str = "synthetic",
) -> HourlyProfile:
    """Read a ``hour,value`` CSV into a validated profile.

    Row numbers in error messages count data rows from 1 (the header is
    row 0).  Hours must be consecutive integers.
    """
    units = Units(expected_units)
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        raw = source.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ProfileError("empty CSV") from None
    if [h.strip().lower() for h in header] != ["hour", "value"]:
        raise ProfileError(f"expected header 'hour,value', got {','.join(header)!r}")

    hours, values = [], []
    for row_no, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise ProfileError(f"row {row_no}: expected 2 fields, got {len(row)}")
        try:
            hours.append(int(row[0]))
        except ValueError:
            raise ProfileError(f"row {row_no}: unparseable hour {row[0]!r}") from None
        try:
            v = float(row[1])
        except ValueError:
            raise ProfileError(f"row {row_no}: unparseable value {row[1]!r}") from None
        if not math.isfinite(v):
            raise ProfileError(f"row {row_no}: non-finite value {row[1]!r}")
        values.append(v)

    if len(values) != horizon:
        raise ProfileError(f"expected {horizon} data rows, found {len(values)}")
    hrs = np.asarray(hours)
    if horizon > 1 and not np.all(np.diff(hrs) == 1):
        raise ProfileError("hour column must be consecutive integers")
    arr = np.asarray(values, dtype=float)
    _check_values(arr, units)
    return HourlyProfile(arr, units, label)


def serialize_profile_csv(profile: HourlyProfile) -> str:
    """Inverse of :func:`ingest_profile_csv`; uses shortest round-trip floats."""
    lines = ["hour,value"]
    lines.extend(f"{h},{float(v)!r}" for h, v in enumerate(profile.values))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class GenerationDataset:
    """Historic (or synthetic) generation potential profiles keyed by year."""

    technology: str
    profiles: Mapping[int, HourlyProfile] = field(default_factory=dict)

    def __post_init__(self):
        if self.technology not in ("wind", "solar"):
            raise ValueError(f"unknown generation technology {self.technology!r}")
        if not self.profiles:
            raise ProfileError("generation dataset has no profiles")
        lengths = {len(p) for p in self.profiles.values()}
        if len(lengths) != 1:
            raise ProfileError(f"profiles have differing lengths {sorted(lengths)}")
        for p in self.profiles.values():
            if p.units != Units.GENERATION:
                raise ProfileError(f"profile {p.label} has units {p.units.value}")
        object.__setattr__(self, "profiles", dict(sorted(self.profiles.items())))

    @property
    def years(self) -> list[int]:
        return list(self.profiles)

    @property
    def horizon(self) -> int:
        return len(next(iter(self.profiles.values())))


def sample_generation_year(
    dataset: GenerationDataset, rng: np.random.Generator
) -> HourlyProfile:
    years = dataset.years
    if not years:
        raise ProfileError("cannot sample from an empty dataset")
    return dataset.profiles[years[int(rng.integers(len(years)))]]


@dataclass(frozen=True)
class LoadModel:
    """Constant industrial load with a truncated-Gaussian level (kW)."""

    mean: float
    std: float
    k: float = 2.0

    def __post_init__(self):
        if not self.mean > 0:
            raise ValueError("load mean must be positive")
        if self.std < 0:
            raise ValueError("load std must be non-negative")
        if self.k <= 0:
            raise ValueError("truncation multiple must be positive")

    @property
    def bounds(self) -> tuple[float, float]:
        return self.mean - self.k * self.std, self.mean + self.k * self.std


def sample_load(
    model: LoadModel, rng: np.random.Generator, horizon: int = DEFAULT_HORIZON
) -> HourlyProfile:
    if model.std == 0:
        level = model.mean
    else:
        level = float(
            stats.truncnorm.rvs(-model.k, model.k, loc=model.mean, scale=model.std, random_state=rng)
        )
    return HourlyProfile(np.full(horizon, level), Units.LOAD, "sampled")


@dataclass(frozen=True)
class ShapeParams:
    """Sinusoid + noise description of a synthetic profile.

    For ``wind`` the value is ``mean + amplitude * s`` with ``s`` a clipped
    mix of seasonal, diurnal and AR(1) components, so it always lies in
    ``[mean - amplitude, mean + amplitude]``.  For ``solar`` ``amplitude``
    is the clear-sky peak and ``mean`` is unused.
    """

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

    def __post_init__(self):
        for name in ("amplitude", "seasonal_weight", "diurnal_weight", "noise", "seasonal_amplitude"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0 <= self.ar_coeff < 1:
            raise ValueError("ar_coeff must lie in [0, 1)")
        if not 0 <= self.sunrise < self.sunset <= 24:
            raise ValueError("need 0 <= sunrise < sunset <= 24")


def _ar1(rng: np.random.Generator, n: int, phi: float) -> np.ndarray:
    eps = rng.standard_normal(n) * math.sqrt(1.0 - phi * phi)
    out = np.empty(n)
    prev = rng.standard_normal()
    for i in range(n):
        prev = phi * prev + eps[i]
        out[i] = prev
    return out


def synthesize_profile(
    kind: str,
    params: ShapeParams,
    rng: np.random.Generator,
    horizon: int = DEFAULT_HORIZON,
    start_day: int = 0,
    label: str = "synthetic",
) -> HourlyProfile:
    """Deterministic (given ``rng`` state) synthetic hourly profile."""
    t = np.arange(horizon, dtype=float)
    hour = t % 24
    day = start_day + t / 24.0
    seasonal = np.cos(2 * math.pi * (day - 15) / 365.0)  # peaks mid-January
    noise = _ar1(rng, horizon, params.ar_coeff) if params.noise > 0 else np.zeros(horizon)

    if kind == "wind":
        diurnal = np.sin(2 * math.pi * (hour - params.peak_hour + 6) / 24.0)
        s = params.seasonal_weight * seasonal + params.diurnal_weight * diurnal + params.noise * noise
        values = params.mean + params.amplitude * np.clip(s, -1.0, 1.0)
        values = np.clip(values, 0.0, MAX_GENERATION_PER_KWP)
        units = Units.GENERATION
    elif kind == "solar":
        daylight = params.sunset - params.sunrise
        arc = np.sin(math.pi * (hour - params.sunrise) / daylight)
        arc = np.where((hour >= params.sunrise) & (hour <= params.sunset), np.clip(arc, 0.0, None), 0.0)
        season = 1.0 - params.seasonal_amplitude * seasonal
        cloud = 1.0 - params.noise * (0.5 + 0.5 * np.tanh(noise))
        values = np.clip(params.amplitude * arc * np.clip(season, 0.0, None) * cloud, 0.0, MAX_GENERATION_PER_KWP)
        units = Units.GENERATION
    elif kind == "price":
        diurnal = np.sin(2 * math.pi * (hour - params.peak_hour + 6) / 24.0)
        values = params.mean + params.amplitude * (
            params.seasonal_weight * seasonal + params.diurnal_weight * diurnal
        ) + params.noise * noise
        units = Units.PRICE
    elif kind == "carbon":
        diurnal = np.sin(2 * math.pi * (hour - params.peak_hour + 6) / 24.0)
        values = params.mean + params.amplitude * (
            params.seasonal_weight * seasonal + params.diurnal_weight * diurnal
        ) + params.noise * noise
        values = np.clip(values, 0.0, None)
        units = Units.CARBON
    else:
        raise ValueError(f"unknown profile kind {kind!r}")
    return HourlyProfile(values, units, label)


def synthetic_generation_dataset(
    technology: str,
    params: ShapeParams,
    years: list[int],
    seed: int,
    horizon: int = DEFAULT_HORIZON,
    start_day: int = 0,
) -> GenerationDataset:
    """One synthetic profile per nominal year, each from its own seed."""
    profiles = {}
    for year in years:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(year,)))
        profiles[year] = synthesize_profile(technology, params, rng, horizon, start_day, str(year))
    return GenerationDataset(technology, profiles)
