"""Storage performance priors, demonstrator measurements and posteriors."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, stats

TRUNCATION = 2.0
PARAMETERS = ("cost", "lifetime", "efficiency")


@dataclass(frozen=True)
class TruncatedGaussianSpec:
    """Gaussian N(mean, std) truncated to ``[lower, upper]``.

    By default the support is ``mean +/- 2 std``.  Posteriors keep their
    prior's support, so ``lower``/``upper`` may be given explicitly.
    """

    mean: float
    std: float
    lower: float | None = None
    upper: float | None = None

    def __post_init__(self):
        if not self.std > 0:
            raise ValueError("std must be positive")
        if self.lower is None:
            object.__setattr__(self, "lower", self.mean - TRUNCATION * self.std)
        if self.upper is None:
            object.__setattr__(self, "upper", self.mean + TRUNCATION * self.std)
        if not self.lower < self.upper:
            raise ValueError("lower bound must be below upper bound")

    @property
    def _ab(self) -> tuple[float, float]:
        return (self.lower - self.mean) / self.std, (self.upper - self.mean) / self.std

    @property
    def dist(self):
        a, b = self._ab
        return stats.truncnorm(a, b, loc=self.mean, scale=self.std)

    def pdf(self, x):
        return self.dist.pdf(x)

    def moments(self) -> tuple[float, float]:
        """(mean, std) of the truncated distribution."""
        d = self.dist
        return float(d.mean()), float(d.std())

    def total_mass(self) -> float:
        return integrate.quad(self.pdf, self.lower, self.upper, limit=200)[0]


def sample_truncated_gaussian(
    spec: TruncatedGaussianSpec, rng: np.random.Generator, size: int | None = None
):
    a, b = spec._ab
    out = stats.truncnorm.rvs(a, b, loc=spec.mean, scale=spec.std, size=size, random_state=rng)
    # guard the edges against round-off in the inverse-cdf transform
    out = np.clip(out, spec.lower, spec.upper)
    return float(out) if size is None else out


@dataclass(frozen=True)
class MeasurementModel:
    """Demonstrator measurement z ~ N(theta, r * sigma)."""

    r: float
    reference_std: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("uncertainty reduction factor r must be positive")
        if not self.reference_std > 0:
            raise ValueError("reference std must be positive")

    @property
    def noise_std(self) -> float:
        return self.r * self.reference_std


def sample_measurement(
    theta_true: float,
    prior: TruncatedGaussianSpec,
    model: MeasurementModel,
    rng: np.random.Generator,
) -> float:
    if not math.isclose(model.reference_std, prior.std, rel_tol=1e-12):
        raise ValueError("measurement model must reference the prior's std")
    return float(theta_true + model.noise_std * rng.standard_normal())


def conjugate_posterior(
    prior: TruncatedGaussianSpec, z: float, model: MeasurementModel
) -> TruncatedGaussianSpec:
    """Gaussian-product posterior, truncated to the prior's support."""
    prec_prior = 1.0 / prior.std**2
    prec_meas = 1.0 / model.noise_std**2
    prec = prec_prior + prec_meas
    mean = (prior.mean * prec_prior + z * prec_meas) / prec
    return TruncatedGaussianSpec(mean, prec**-0.5, prior.lower, prior.upper)


def log_posterior_density(theta, prior: TruncatedGaussianSpec, z: float, model: MeasurementModel):
    """Unnormalised log density of the posterior; -inf outside the support."""
    theta = np.asarray(theta, dtype=float)
    inside = (theta >= prior.lower) & (theta <= prior.upper)
    lp = -0.5 * ((theta - prior.mean) / prior.std) ** 2 - 0.5 * ((z - theta) / model.noise_std) ** 2
    return np.where(inside, lp, -np.inf)


def posterior_moments_by_quadrature(
    prior: TruncatedGaussianSpec, z: float, model: MeasurementModel
) -> tuple[float, float]:
    """Posterior (mean, std) by direct numerical integration of prior x likelihood."""
    post = conjugate_posterior(prior, z, model)
    # shift by the log-density maximum so the integrand stays O(1)
    mode = min(max(post.mean, prior.lower), prior.upper)
    ref = float(log_posterior_density(mode, prior, z, model))

    def w(x):
        return math.exp(float(log_posterior_density(x, prior, z, model)) - ref)

    pts = [p for p in (post.mean,) if prior.lower < p < prior.upper]
    m0 = integrate.quad(w, prior.lower, prior.upper, points=pts or None, limit=200)[0]
    m1 = integrate.quad(lambda x: x * w(x), prior.lower, prior.upper, points=pts or None, limit=200)[0]
    mean = m1 / m0
    m2 = integrate.quad(lambda x: (x - mean) ** 2 * w(x), prior.lower, prior.upper, points=pts or None, limit=200)[0]
    return mean, math.sqrt(m2 / m0)


@dataclass(frozen=True)
class McmcSettings:
    n_samples: int = 250
    burn_in: int = 250
    thinning: int = 10
    proposal_std: float = 0.5  # fraction of the prior std

    def __post_init__(self):
        for name in ("n_samples", "burn_in", "thinning"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v <= 0:
                raise ValueError(f"{name} must be a positive integer")
        if not self.proposal_std > 0:
            raise ValueError("proposal_std must be positive")


@dataclass
class McmcResult:
    samples: np.ndarray
    acceptance_rate: float
    warnings: list[str] = field(default_factory=list)


def mcmc_posterior_samples(
    prior: TruncatedGaussianSpec,
    z: float,
    model: MeasurementModel,
    settings: McmcSettings,
    rng: np.random.Generator,
) -> McmcResult:
    """Random-walk Metropolis on the truncated posterior.

    Proposals are Gaussian with std ``proposal_std * prior.std``.
    Out-of-support proposals have zero density and are always rejected.
    """
    scale = settings.proposal_std * prior.std
    lo, hi = prior.lower, prior.upper
    mu, s0, s1 = prior.mean, prior.std, model.noise_std

    def logp(t):
        if t < lo or t > hi:
            return -math.inf
        return -0.5 * ((t - mu) / s0) ** 2 - 0.5 * ((z - t) / s1) ** 2

    x = min(max(z, lo), hi)
    lp = logp(x)
    n_total = settings.burn_in + settings.n_samples * settings.thinning
    steps = (rng.standard_normal(n_total) * scale).tolist()
    log_u = np.log(rng.random(n_total)).tolist()
    kept = []
    accepted_after_burn = 0
    burn, thin = settings.burn_in, settings.thinning
    for it in range(n_total):
        y = x + steps[it]
        lq = logp(y)
        if log_u[it] < lq - lp:
            x, lp = y, lq
            if it >= burn:
                accepted_after_burn += 1
        if it >= burn and (it - burn + 1) % thin == 0:
            kept.append(x)
    kept = np.asarray(kept)
    rate = accepted_after_burn / (n_total - settings.burn_in)
    notes = []
    if not 0.05 <= rate <= 0.95:
        notes.append(f"acceptance rate {rate:.3f} outside [0.05, 0.95]")
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
    return McmcResult(kept, rate, notes)


@dataclass(frozen=True)
class StorageTechnology:
    """Known and uncertain performance of one storage technology.

    ``efficiency`` is round-trip efficiency as a fraction; ``cost`` is
    EUR/kWh of energy capacity and ``lifetime`` is in years.
    """

    name: str
    cost: TruncatedGaussianSpec
    lifetime: TruncatedGaussianSpec
    efficiency: TruncatedGaussianSpec
    depth_of_discharge: float
    discharge_ratio: float

    def __post_init__(self):
        if not (self.efficiency.lower > 0 and self.efficiency.lower < 1):
            raise ValueError(f"{self.name}: efficiency support must start inside (0, 1)")
        if self.lifetime.lower <= 0:
            raise ValueError(f"{self.name}: lifetime support must be positive")
        if self.cost.lower < 0:
            raise ValueError(f"{self.name}: cost support must be non-negative")
        if not 0 < self.depth_of_discharge <= 1:
            raise ValueError(f"{self.name}: depth of discharge must lie in (0, 1]")
        if not self.discharge_ratio > 0:
            raise ValueError(f"{self.name}: discharge ratio must be positive")

    def spec(self, parameter: str) -> TruncatedGaussianSpec:
        return getattr(self, parameter)

    def with_specs(self, specs: dict[str, TruncatedGaussianSpec]) -> "StorageTechnology":
        return replace(self, **specs)

    def sample(self, rng: np.random.Generator) -> dict[str, float]:
        """One joint draw; parameters are independent."""
        draw = {p: sample_truncated_gaussian(self.spec(p), rng) for p in PARAMETERS}
        draw["efficiency"] = min(draw["efficiency"], 1.0)
        return draw


def _tn(mean, std):
    return TruncatedGaussianSpec(mean, std)


# Prior means/stds per technology, depth-of-discharge and discharge ratio.
DEFAULT_CATALOGUE: dict[str, StorageTechnology] = {
    "Li-ion": StorageTechnology("Li-ion", _tn(200, 50), _tn(20, 5), _tn(0.92, 0.035), 0.9, 2.0),
    "NaS": StorageTechnology("NaS", _tn(175, 37.5), _tn(25, 5), _tn(0.80, 0.05), 1.0, 1.0),
    "VRFB": StorageTechnology("VRFB", _tn(250, 75), _tn(20, 5), _tn(0.75, 0.05), 1.0, 0.5),
    "CAES": StorageTechnology("CAES", _tn(50, 15), _tn(25, 2.5), _tn(0.60, 0.025), 0.4, 0.1),
}


def measure_and_update(
    tech: StorageTechnology, r: float, rng: np.random.Generator
) -> tuple[StorageTechnology, dict[str, float], dict[str, float]]:
    """Simulate a demonstrator for ``tech``.

    Draws the true parameters from the prior, one measurement per
    parameter, and returns ``(posterior technology, theta_true, z)``.
    """
    theta, z, post = {}, {}, {}
    for p in PARAMETERS:
        prior = tech.spec(p)
        model = MeasurementModel(r, prior.std)
        theta[p] = sample_truncated_gaussian(prior, rng)
        z[p] = sample_measurement(theta[p], prior, model, rng)
        post[p] = conjugate_posterior(prior, z[p], model)
    return tech.with_specs(post), theta, z
