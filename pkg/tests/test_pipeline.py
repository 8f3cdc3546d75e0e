import math
import warnings
from dataclasses import replace

import numpy as np
import pytest

from energy_park_voi import pipeline
from energy_park_voi.config import AnalysisModel, RunConfig, _default_catalogue, build_analysis, build_inputs
from energy_park_voi.optimizer import CvarConfig
from energy_park_voi.pipeline import (
    compute_evii,
    compute_evo,
    measurement_draws,
    posterior_sample,
    preposterior_value,
    prior_design,
    restrict,
    risk_averse_run,
    run_analysis,
    sensitivity_sweep,
    subset_key,
)


def tiny(techs=("CAES", "NaS"), **analysis):
    cat = _default_catalogue()
    a = dict(n_prior=6, n_reduced=3, n_measurements=3)
    a.update(analysis)
    cfg = RunConfig(horizon=24, technologies={k: cat[k] for k in techs}, analysis=AnalysisModel(**a))
    return build_inputs(cfg), build_analysis(cfg)


@pytest.fixture(scope="module")
def small():
    inputs, cfg = tiny()
    prior = prior_design(inputs, cfg)
    return inputs, cfg, prior


def test_subset_key():
    assert subset_key(()) == "none"
    assert subset_key(("NaS", "CAES")) == "CAES+NaS"


def test_prior_reports_every_subset(small):
    _, cfg, prior = small
    assert set(prior.reports) == {"none", "CAES", "NaS"}
    candidates = {k: r.objective for k, r in prior.reports.items() if k != "none"}
    assert prior.selected == min(sorted(candidates), key=candidates.get)
    assert prior.best.objective <= prior.baseline.objective * (1 + 1e-9)
    for rep in prior.reports.values():
        assert sum(rep.scenario_probabilities) == pytest.approx(1.0)
        assert len(rep.scenario_indices) == cfg.n_reduced


def test_single_technology_catalogue_selected():
    inputs, cfg = tiny(techs=("VRFB",), n_prior=3, n_reduced=2)
    assert prior_design(inputs, cfg).selected == "VRFB"


def test_restricted_tech_overrides_choice():
    inputs, cfg = tiny(restricted_tech=["CAES"])
    assert prior_design(inputs, cfg).selected == "CAES"


def test_two_technology_parks():
    inputs, cfg = tiny(techs=("CAES", "Li-ion", "NaS"), techs_per_park=2, n_prior=4, n_reduced=2)
    prior = prior_design(inputs, cfg)
    assert set(prior.reports) == {"none", "CAES+Li-ion", "CAES+NaS", "Li-ion+NaS"}
    assert "+" in prior.selected


def test_measurements_are_common_across_modes(small):
    inputs, cfg, prior = small
    a = preposterior_value(inputs, cfg, prior, "restricted")
    b = preposterior_value(inputs, cfg, prior, "expanded")
    assert a.digests == b.digests
    assert restrict(b, prior.selected).objectives().tolist() == a.objectives().tolist()
    for s in b.samples:
        r = s.objective(prior.selected)
        e = s.reports[s.best].objective
        assert r - e >= -1e-5 * abs(r)


def test_measurement_draws_depend_on_r_only_through_noise_scale():
    _, cfg = tiny()
    _, t1, z1 = measurement_draws(replace(cfg, r=0.1), 4)
    _, t2, z2 = measurement_draws(replace(cfg, r=0.2), 4)
    assert t1 == t2
    for name in t1:
        for p in t1[name]:
            assert z2[name][p] - t2[name][p] == pytest.approx(2 * (z1[name][p] - t1[name][p]))


def test_subset_results_independent_of_other_subsets(small):
    inputs, cfg, _ = small
    alone = posterior_sample(1, inputs, cfg, [("NaS",)])
    both = posterior_sample(1, inputs, cfg, [("CAES",), ("NaS",)])
    assert alone.reports["NaS"].to_dict() == both.reports["NaS"].to_dict()


def test_unknown_action_set(small):
    inputs, cfg, prior = small
    with pytest.raises(ValueError):
        preposterior_value(inputs, cfg, prior, "everything")


def test_evii_estimator():
    res = compute_evii(10.0, [10.0, 10.0])
    assert res.evii == 0.0 and res.standard_error == 0.0
    res = compute_evii(10.0, [8.0, 9.0, 10.0])
    assert res.evii == pytest.approx(1.0)
    assert res.standard_error == pytest.approx(np.std([8, 9, 10], ddof=1) / math.sqrt(3))
    assert math.isnan(compute_evii(10.0, [9.0]).standard_error)
    with pytest.raises(ValueError):
        compute_evii(10.0, [9.0], "a", "b")
    with pytest.raises(ValueError):
        compute_evii(10.0, [])


def test_evo_estimator():
    res = compute_evo([5.0, 6.0], [5.0, 6.0], ["a", "b"], ["a", "b"], restricted_key="X")
    assert res.evo == 0.0 and res.switch_fraction == 0.0
    res = compute_evo([5.0, 6.0], [4.0, 6.0], ["a", "b"], ["a", "b"], chosen=["Y", "X"], restricted_key="X",
                      optionality_cost=0.25)
    assert res.evo == pytest.approx(0.5)
    assert res.switches == ((0, "Y"),) and res.switch_fraction == 0.5
    assert res.net_value == pytest.approx(0.25)
    with pytest.raises(ValueError):
        compute_evo([1.0], [1.0], ["a"], ["b"])


def test_single_technology_catalogue_has_zero_evo():
    inputs, cfg = tiny(techs=("NaS",), n_prior=4, n_reduced=2, n_measurements=2)
    res = run_analysis(inputs, cfg)
    assert res.voo.evo == 0.0
    assert res.voo.optionality_cost == 0.0


def test_analysis_is_deterministic(small):
    inputs, cfg, prior = small
    a = run_analysis(inputs, cfg, prior)
    b = run_analysis(inputs, cfg)
    assert a.voi == b.voi and a.voo == b.voo


def test_parallel_matches_serial(small):
    inputs, cfg, prior = small
    serial = run_analysis(inputs, cfg, prior)
    parallel = run_analysis(inputs, replace(cfg, workers=2), prior)
    assert serial.voi == parallel.voi and serial.voo == parallel.voo


def test_reuse_prior_reduction(small):
    inputs, cfg, prior = small
    rec = posterior_sample(0, inputs, replace(cfg, reuse_prior_reduction=True), [("NaS",)], prior.reductions)
    assert rec.reports["NaS"].scenario_indices == prior.reductions["NaS"].indices


def test_failed_samples_recorded_and_threshold(small, monkeypatch):
    inputs, cfg, prior = small
    real = pipeline.design_for_subset

    def flaky(full, subset, *a, **kw):
        if full.provenance == "posterior[1]":
            raise RuntimeError("synthetic failure")
        return real(full, subset, *a, **kw)

    monkeypatch.setattr(pipeline, "design_for_subset", flaky)
    with pytest.warns(RuntimeWarning, match="sample 1 failed"):
        pre = preposterior_value(inputs, replace(cfg, max_failure_fraction=0.5), prior, "restricted")
    assert [s.index for s in pre.samples] == [0, 2]
    assert pre.failures[0].index == 1
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(RuntimeError, match="1 of 3"):
            preposterior_value(inputs, cfg, prior, "restricted")


def test_near_perfect_information_does_not_hurt():
    inputs, cfg = tiny(techs=("NaS",), n_prior=8, n_reduced=4, n_measurements=6, r=1e-6)
    res = run_analysis(inputs, cfg)
    assert res.voi.evii >= -2 * res.voi.standard_error


def test_uninformative_measurement_has_no_value():
    inputs, cfg = tiny(techs=("NaS",), n_prior=8, n_reduced=4, n_measurements=6, r=1e3)
    res = run_analysis(inputs, cfg)
    assert abs(res.voi.evii) <= 2 * res.voi.standard_error + 1e-9 * abs(res.voi.prior_cost)


def test_sweep_single_value_equals_direct_run(small):
    inputs, cfg, prior = small
    direct = run_analysis(inputs, cfg, prior)
    [row] = sensitivity_sweep(inputs, cfg, "r", [cfg.r])
    assert (row.voi, row.voi_se, row.voo, row.voo_se) == (
        direct.voi.evii, direct.voi.standard_error, direct.voo.evo, direct.voo.standard_error)
    [row] = sensitivity_sweep(inputs, cfg, "price-scale", [1.0])
    assert row.voi == direct.voi.evii and row.voo == direct.voo.evo


def test_sweep_cell_errors_do_not_stop_sweep(small):
    inputs, cfg, _ = small
    rows = sensitivity_sweep(inputs, replace(cfg, n_measurements=1), "carbon-year", ["missing"])
    assert rows[0].error and math.isnan(rows[0].voi)
    with pytest.raises(ValueError):
        sensitivity_sweep(inputs, cfg, "r", [])
    with pytest.raises(ValueError):
        sensitivity_sweep(inputs, cfg, "wind-speed", [1.0])


def test_price_scale_changes_costs(small):
    inputs, cfg, _ = small
    base = inputs.params_for(cfg)
    scaled = inputs.params_for(replace(cfg, price_scale=1.1))
    np.testing.assert_allclose(scaled.price, 1.1 * base.price)


def test_risk_averse_run(small):
    inputs, cfg, prior = small
    with pytest.raises(ValueError):
        risk_averse_run(inputs, cfg)
    zero = prior_design(inputs, replace(cfg, cvar=CvarConfig(0.1, 0.0)))
    for k, rep in prior.reports.items():
        assert zero.reports[k].objective == pytest.approx(rep.objective, rel=1e-8)
    averse = prior_design(inputs, replace(cfg, cvar=CvarConfig(0.25, 2.0)))
    for k, rep in prior.reports.items():
        assert averse.reports[k].objective >= rep.objective * (1 - 1e-9)
    res = risk_averse_run(inputs, replace(cfg, cvar=CvarConfig(0.25, 1.0), n_measurements=2))
    assert res.voi.n_samples == 2


def test_analysis_config_validation():
    _, cfg = tiny()
    with pytest.raises(ValueError):
        replace(cfg, n_reduced=10)
    with pytest.raises(ValueError):
        replace(cfg, restricted_tech=("Nope",))
    with pytest.raises(ValueError):
        replace(cfg, techs_per_park=3)
