import numpy as np
import pytest

from energy_park_voi.config import RunConfig, build_analysis, build_inputs
from energy_park_voi.optimizer import SystemParams
from energy_park_voi.scenarios import Scenario, ScenarioSet
from energy_park_voi.uncertainty import StorageTechnology, TruncatedGaussianSpec


def flat_params(T, price=0.1, carbon=0.0, **kw):
    """System parameters with constant price and carbon intensity."""
    price = np.broadcast_to(np.asarray(price, float), (T,))
    carbon = np.broadcast_to(np.asarray(carbon, float), (T,))
    return SystemParams(price=price, carbon_intensity=carbon, **kw)


def scenario(load, wind=None, solar=None, efficiency=None, storage_cost=None, probability=1.0, index=0):
    load = np.asarray(load, float)
    T = len(load)
    return Scenario(
        probability=probability,
        load=load,
        wind=np.zeros(T) if wind is None else np.asarray(wind, float),
        solar=np.zeros(T) if solar is None else np.asarray(solar, float),
        efficiency=efficiency or {},
        storage_cost=storage_cost or {},
        index=index,
    )


def one(s):
    return ScenarioSet((s,))


def make_tech(name="T", eff=0.9, dod=1.0, ratio=1.0, cost=(100.0, 10.0), life=(20.0, 2.0), eff_std=0.02):
    return StorageTechnology(
        name,
        TruncatedGaussianSpec(*cost),
        TruncatedGaussianSpec(*life),
        TruncatedGaussianSpec(eff, eff_std),
        dod,
        ratio,
    )


@pytest.fixture(scope="session")
def week_config():
    return RunConfig()


@pytest.fixture(scope="session")
def week_inputs(week_config):
    return build_inputs(week_config)


@pytest.fixture(scope="session")
def week_analysis(week_config):
    return build_analysis(week_config)


def random_design_instance(rng):
    """Tiny random design problem: T <= 6, <= 2 scenarios, <= 2 technologies."""
    from energy_park_voi.scenarios import ScenarioSet as _Set

    T = int(rng.integers(2, 7))
    n_scen = int(rng.integers(1, 3))
    n_tech = int(rng.integers(0, 3))
    techs = [
        make_tech(f"S{i}", eff=float(rng.uniform(0.6, 0.95)), dod=float(rng.uniform(0.4, 1.0)),
                  ratio=float(rng.uniform(0.1, 2.0)))
        for i in range(n_tech)
    ]
    probs = rng.dirichlet(np.ones(n_scen))
    probs[-1] = 1.0 - probs[:-1].sum()
    scen = []
    for m in range(n_scen):
        scen.append(scenario(
            load=rng.uniform(50, 150, T),
            wind=rng.uniform(0, 1, T),
            solar=rng.uniform(0, 1, T),
            efficiency={t.name: float(rng.uniform(0.6, 0.95)) for t in techs},
            storage_cost={t.name: float(rng.uniform(1, 10)) for t in techs},
            probability=float(probs[m]),
            index=m,
        ))
    params = flat_params(
        T,
        price=rng.uniform(-0.02, 0.3, T),
        carbon=rng.uniform(0, 0.5, T),
        wind_cost=float(rng.uniform(5, 40)),
        solar_cost=float(rng.uniform(2, 20)),
        grid_capacity=400.0,
        solar_max=float(rng.uniform(0, 300)),
        budget=float(rng.uniform(2000, 10000)),
        operating_weight=float(rng.uniform(1, 50)),
        soc0=float(rng.uniform(max([1 - t.depth_of_discharge for t in techs], default=0.0), 1.0)),
    )
    return params, _Set(tuple(scen)), techs


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.write_sep("=", "acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
