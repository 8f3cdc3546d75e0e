"""Acceptance criteria 1-8.

Each test records a PASS/FAIL line; the lines are printed at the end of the
pytest session (see ``conftest.pytest_terminal_summary``) and when this file
is run directly with ``python3 tests/test_acceptance.py``.
"""

import functools
import math
import sys
import tempfile
import time
import warnings
from itertools import combinations
from pathlib import Path

import numpy as np
import pytest

from energy_park_voi.config import RunConfig, build_analysis, build_inputs
from energy_park_voi.lp import solve_lp
from energy_park_voi.optimizer import (
    CvarConfig,
    build_cvar_lp,
    build_stochastic_program,
    risk_averse_value,
    solve_design,
)
from energy_park_voi.pipeline import prior_scenarios, sensitivity_sweep
from energy_park_voi.scenarios import fast_forward_selection, kantorovich_residual, reduce_scenarios
from energy_park_voi.uncertainty import (
    McmcSettings,
    MeasurementModel,
    TruncatedGaussianSpec,
    conjugate_posterior,
    mcmc_posterior_samples,
    sample_measurement,
    sample_truncated_gaussian,
)

sys.path.insert(0, str(Path(__file__).parent))
from conftest import random_design_instance  # noqa: E402
from invariants import check_invariants  # noqa: E402

RESULTS: dict[int, str] = {}


def criterion(number: int, title: str):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper():
            t0 = time.perf_counter()
            try:
                fn()
            except BaseException as exc:
                msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
                RESULTS[number] = f"criterion {number} FAIL  {title} ({time.perf_counter() - t0:.1f}s): {msg}"
                print(RESULTS[number])
                raise
            RESULTS[number] = f"criterion {number} PASS  {title} ({time.perf_counter() - t0:.1f}s)"
            print(RESULTS[number])
        return wrapper
    return deco


def batch_means_se(x: np.ndarray, n_batches: int = 50) -> float:
    """Standard error of a correlated chain's mean from batch means."""
    means = np.array([b.mean() for b in np.array_split(x, n_batches)])
    return float(means.std(ddof=1) / math.sqrt(n_batches))


def desk_config(**analysis) -> RunConfig:
    return RunConfig().with_analysis(**analysis)


# --------------------------------------------------------------------------


@criterion(1, "MCMC matches the conjugate truncated posterior")
def test_criterion_1_mcmc_vs_conjugate():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    settings = McmcSettings(n_samples=250 * 40, burn_in=250, thinning=10)
    bad = []
    for k in range(20):
        prior = TruncatedGaussianSpec(float(rng.uniform(-100, 100)), float(rng.uniform(0.1, 20)))
        r = float(rng.uniform(0.1, 2.0))
        model = MeasurementModel(r, prior.std)
        theta = sample_truncated_gaussian(prior, rng)
        z = sample_measurement(theta, prior, model, rng)
        mean, std = conjugate_posterior(prior, z, model).moments()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = mcmc_posterior_samples(prior, z, model, settings, rng)
        se = batch_means_se(res.samples)
        if abs(res.samples.mean() - mean) > 4 * se or abs(res.samples.std() / std - 1) > 0.10:
            bad.append((k, res.samples.mean(), mean, se, res.samples.std(), std))
    assert not bad, f"triples outside tolerance: {bad}"
    assert time.perf_counter() - t0 < 30


@criterion(2, "production LP backend matches the dense simplex oracle")
def test_criterion_2_lp_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    for k in range(25):
        params, scen, techs = random_design_instance(rng)
        if k % 3 == 0:
            lp = build_stochastic_program(params, scen, techs, cvar_cfg=CvarConfig(0.25, 1.0))
        else:
            lp = build_stochastic_program(params, scen, techs)
        h, s = solve_lp(lp, "highs"), solve_lp(lp, "simplex")
        assert h.optimal and s.optimal, (k, h.status, s.status)
        assert abs(h.objective - s.objective) <= 1e-6 * max(1.0, abs(s.objective)), (k, h.objective, s.objective)
    assert time.perf_counter() - t0 < 60


@criterion(3, "operating invariants on a one-week five-scenario two-technology design")
def test_criterion_3_week_invariants():
    t0 = time.perf_counter()
    cfg = desk_config(n_prior=5, n_reduced=5)
    inputs, analysis = build_inputs(cfg), build_analysis(cfg)
    scen = prior_scenarios(inputs, analysis)
    techs = [analysis.catalogue["Li-ion"], analysis.catalogue["NaS"]]
    params = inputs.params_for(analysis)
    assert params.horizon == 168 and len(scen) == 5
    sol = solve_design(params, scen, techs)
    check_invariants(params, scen, techs, sol)
    assert time.perf_counter() - t0 < 300


@criterion(4, "risk-averse objective degeneracy, hand case and dominance")
def test_criterion_4_cvar():
    costs, probs = [1.0, 2.0, 3.0, 4.0], [0.25] * 4
    hand = CvarConfig(0.25, 1.0)
    assert risk_averse_value(costs, probs, hand) == 2.8
    assert solve_lp(build_cvar_lp(costs, probs, hand)).objective == pytest.approx(2.8, abs=1e-12)
    rng = np.random.default_rng(404)
    for k in range(10):
        params, scen, techs = random_design_instance(rng)
        neutral = solve_design(params, scen, techs)
        zero = solve_design(params, scen, techs, cvar_cfg=CvarConfig(0.1, 0.0))
        assert abs(zero.objective - neutral.objective) <= 1e-8 * max(1.0, abs(neutral.objective)), k
        cfg = CvarConfig(float(rng.choice([0.05, 0.1, 0.25])), float(rng.uniform(0.5, 5.0)))
        averse = solve_design(params, scen, techs, cvar_cfg=cfg)
        tol = 1e-7 * max(1.0, abs(neutral.objective))
        assert averse.objective >= neutral.objective - tol, k
        assert averse.objective >= averse.expected_cost - tol, k


@criterion(5, "fast-forward scenario reduction")
def test_criterion_5_reduction():
    rng = np.random.default_rng(5)
    costs = rng.normal(0.0, 1.0, 250)
    probs = rng.dirichlet(np.ones(250))
    full = fast_forward_selection(costs, probs, 250)
    assert full.indices == tuple(range(250))
    assert np.allclose(full.probabilities, probs) and full.residual == 0.0

    cfg = desk_config(n_prior=4, n_reduced=4)
    scen = prior_scenarios(build_inputs(cfg), build_analysis(cfg))
    same, red = reduce_scenarios(scen, [1.0, 2.0, 3.0, 4.0], 4)
    assert same is scen and red.indices == (0, 1, 2, 3)

    hand = fast_forward_selection([0.0, 0.0, 10.0], [1 / 3] * 3, 2)
    assert hand.indices == (0, 2)
    assert hand.probabilities == pytest.approx((2 / 3, 1 / 3), abs=1e-15)

    residuals = []
    for m in range(1, 251):
        red = fast_forward_selection(costs, probs, m)
        assert sum(red.probabilities) == pytest.approx(1.0)
        assert red.residual == pytest.approx(kantorovich_residual(costs, probs, red.indices), abs=1e-12)
        residuals.append(red.residual)
    assert all(b <= a + 1e-12 for a, b in zip(residuals, residuals[1:]))


@pytest.mark.slow
@criterion(6, "VoI/VoO sign properties and r-sweep trend at desk scale")
def test_criterion_6_voi_voo_signs():
    t0 = time.perf_counter()
    cfg = desk_config(n_measurements=50, n_prior=30, n_reduced=10)
    inputs, analysis = build_inputs(cfg), build_analysis(cfg)
    assert inputs.params_for(analysis).horizon == 168
    rows = sensitivity_sweep(inputs, analysis, "r", [0.1, 0.25, 0.5])
    for row in rows:
        assert not row.error, row.error
        res = row.result
        print(f"  r={row.axis_value}: EVII {row.voi:.6g} (SE {row.voi_se:.3g}), "
              f"EVO {row.voo:.6g} (SE {row.voo_se:.3g}), prior choice {res.prior.selected}")
        assert res.voi.n_samples == 50
        assert row.voi >= -2 * row.voi_se
        assert row.voo >= -2 * row.voo_se
        for s in res.expanded.samples:
            restricted = s.objective(res.prior.selected)
            assert s.reports[s.best].objective <= restricted + 1e-5 * abs(restricted)
    for a, b in zip(rows, rows[1:]):
        assert b.voi <= a.voi + 2 * math.hypot(a.voi_se, b.voi_se), (a.axis_value, b.axis_value)
    assert time.perf_counter() - t0 < 1800


@criterion(7, "feasible-set monotonicity over technology subsets")
def test_criterion_7_monotonicity():
    cfg = desk_config(n_prior=5, n_reduced=5)
    inputs, analysis = build_inputs(cfg), build_analysis(cfg)
    scen = prior_scenarios(inputs, analysis)
    params = inputs.params_for(analysis)
    cat = analysis.catalogue
    obj = {(): solve_design(params, scen, []).objective}
    for k in (1, 2):
        for names in combinations(sorted(cat), k):
            obj[names] = solve_design(params, scen, [cat[n] for n in names]).objective
    tol = 1e-7 * abs(obj[()])
    for names, value in obj.items():
        if len(names) == 1:
            assert obj[()] >= value - tol, names
        if len(names) == 2:
            for n in names:
                assert obj[(n,)] >= value - tol, names


@criterion(8, "identical config and seed give byte-identical artifacts")
def test_criterion_8_determinism():
    import yaml

    from energy_park_voi.cli import main
    from energy_park_voi.config import default_config_yaml

    doc = yaml.safe_load(default_config_yaml())
    doc["horizon"] = 48
    doc["analysis"].update(n_prior=6, n_reduced=3, n_measurements=3)
    doc["seed"] = 8
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        cfg = tmp / "run.yaml"
        cfg.write_text(yaml.safe_dump(doc))
        outs = []
        for name in ("a", "b"):
            out = tmp / name
            assert main(["prior", "--config", str(cfg), "--output-dir", str(out), "--no-figures"]) == 0
            assert main(["voo", "--config", str(cfg), "--output-dir", str(out), "--no-figures"]) == 0
            assert main(["sweep", "--config", str(cfg), "--output-dir", str(out), "--no-figures",
                         "--axis", "price-scale", "--values", "0.8,1.2"]) == 0
            outs.append(out)
        files = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*") if p.suffix in (".csv", ".json"))
        assert len(files) >= 8
        for rel in files:
            assert (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes(), rel


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    failed = 0
    for test in tests:
        try:
            test()
        except BaseException:
            failed += 1
    print("\n".join(RESULTS[k] for k in sorted(RESULTS)))
    sys.exit(1 if failed else 0)
