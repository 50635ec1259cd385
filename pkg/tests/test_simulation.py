import numpy as np
import pytest

from twojack.errors import DataError, InvalidModel
from twojack.estimators import FixedWeight
from twojack.simulation import (
    SimulationModel,
    coverage_experiment,
    coverage_table,
    draw_pair,
    draw_sample,
    misordering_probability,
    paired_coverage_test,
)


def test_model_validation():
    for bad in (0, 6, 9):
        with pytest.raises(InvalidModel):
            SimulationModel(bad)
    with pytest.raises(InvalidModel):
        SimulationModel(1, sigma1=3.0, sigma2=2.0)
    with pytest.raises(InvalidModel):
        SimulationModel(1, sigma1=0.0)
    with pytest.raises(InvalidModel):
        SimulationModel(4, shape=-1.0)
    assert SimulationModel(4).shape == 1.5 and SimulationModel(5).shape == 2.5


@pytest.mark.parametrize("model_id", [1, 2, 3, 4, 5])
def test_models_have_the_common_mean_and_stated_variance(model_id):
    model = SimulationModel(model_id)
    rng = np.random.default_rng(model_id)
    for pop in (1, 2):
        x = draw_sample(model, pop, 100_000, rng).values
        se = np.sqrt(model.variance(pop) / x.size)
        assert abs(x.mean() - model.mu) < 5 * se
        assert x.var() == pytest.approx(model.variance(pop), rel=0.1)


def test_draw_pair_is_reproducible():
    m = SimulationModel(2)
    a, b = draw_pair(m, 10, 5, 3), draw_pair(m, 10, 5, 3)
    np.testing.assert_array_equal(a[0], b[0])
    assert not np.array_equal(draw_pair(m, 10, 5, 4)[0], a[0])
    with pytest.raises(DataError):
        draw_sample(m, 1, 0, np.random.default_rng())


def test_coverage_is_independent_of_workers_and_method_order():
    m = SimulationModel(1)
    a = coverage_experiment(m, 12, 60, ["jackknife", "bootstrap:50"], seed=7, workers=1)
    b = coverage_experiment(m, 12, 60, ["bootstrap:50", "jackknife"], seed=7, workers=3)
    assert [r.coverage for r in a] == [r.coverage for r in b][::-1]
    np.testing.assert_array_equal(a[1].hits, b[0].hits)
    assert a[0].mean_ci_width == b[1].mean_ci_width


def test_single_replication_and_tiny_samples():
    (res,) = coverage_experiment(SimulationModel(1), 5, 1, ["clt"], seed=0)
    assert res.coverage in (0.0, 1.0) and res.reps == 1
    # N = 2 leaves too little data for GD leave-one-out; failures are counted, not raised
    (res,) = coverage_experiment(SimulationModel(1), 2, 20, ["jackknife"], seed=0)
    assert res.failures == 20 and np.isnan(res.coverage)
    (res,) = coverage_experiment(SimulationModel(1), 2, 20, ["clt"], seed=0)
    assert res.failures == 0


def test_argument_checks():
    with pytest.raises(DataError):
        coverage_experiment(SimulationModel(1), 10, 0, ["clt"])
    with pytest.raises(DataError):
        misordering_probability(SimulationModel(1), 1, 10)


def test_fixed_weight_clt_coverage_near_nominal():
    (res,) = coverage_experiment(SimulationModel(1), 400, 2000, ["clt"], FixedWeight(0.5), seed=11)
    assert abs(res.coverage - 0.95) < 3 * np.sqrt(0.95 * 0.05 / 2000) + 0.005


def test_misordering_equal_sigmas_is_one_half():
    p = misordering_probability(SimulationModel(1, sigma1=1.0, sigma2=1.0), 10, 4000, seed=2)
    assert abs(p - 0.5) < 4 * np.sqrt(0.25 / 4000)


def test_paired_coverage_test():
    m = SimulationModel(1)
    a, b = coverage_experiment(m, 15, 300, ["jackknife", "clt"], seed=1)
    p = paired_coverage_test(a, b)
    assert 0.0 <= p <= 1.0
    assert paired_coverage_test(a, a) == 1.0
    (short,) = coverage_experiment(m, 15, 10, ["clt"], seed=1)
    with pytest.raises(DataError):
        paired_coverage_test(a, short)


def test_coverage_table_shape():
    rows = coverage_table([1, 2], [10], 20, [20, 40], seed=3)
    assert [(r["model"], r["N"]) for r in rows] == [(1, 10), (2, 10)]
    assert set(rows[0]) >= {"jackknife", "bootstrap:20", "bootstrap:40"}
