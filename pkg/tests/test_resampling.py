import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twojack.core_stats import summarize
from twojack.errors import InvalidD, StatisticEvaluationError, TooFewObservations, UnbalancedDesign
from twojack.estimators import ElfessiUnbalanced, GraybillDeal, TwoSampleData, pooled_mean
from twojack.inference import PopulationParams, asymptotic_variance_formula
from twojack.resampling import (
    Centering,
    Norming,
    bootstrap_variance,
    delete_d_jackknife,
    jackknife,
    jackknife_paired,
    jackknife_unequal,
)

DATA_DIR = Path(__file__).parent / "data"


def constant(x1, x2):
    return 7.25


def pair_mean(x1, x2):
    return float(np.mean((np.asarray(x1) + np.asarray(x2)) / 2))


def naive_leave_one_out(stat, x1, x2):
    out = [stat(np.delete(x1, i), x2) for i in range(len(x1))]
    out += [stat(x1, np.delete(x2, i)) for i in range(len(x2))]
    return np.array(out)


# ---------------------------------------------------------------- unequal sizes


def test_constant_statistic_has_zero_variance(gravity):
    for norming in Norming:
        rep = jackknife_unequal(constant, gravity, norming)
        np.testing.assert_array_equal(rep.pseudo, 7.25)
        assert rep.variance == 0 and rep.sigma_sq == 0


def test_pooled_mean_pseudo_values_are_the_observations(gravity):
    rep = jackknife_unequal(pooled_mean, gravity)
    np.testing.assert_allclose(rep.pseudo, np.r_[gravity.x1, gravity.x2], atol=1e-10 * 90)
    s1, s2 = summarize(gravity.x1), summarize(gravity.x2)
    assert rep.tau1_sq == pytest.approx(s1.var_unbiased, rel=1e-10)
    assert rep.tau2_sq == pytest.approx(s2.var_unbiased, rel=1e-10)
    assert rep.variance == pytest.approx((11 * s1.var_unbiased + 12 * s2.var_unbiased) / 23**2, rel=1e-10)


def test_fast_and_reference_paths_agree(gravity, rng):
    for spec in (GraybillDeal(), ElfessiUnbalanced()):
        stat = spec.statistic()
        for _ in range(20):
            x1 = rng.normal(5, 1, rng.integers(3, 15))
            x2 = rng.normal(5, 2, rng.integers(3, 15))
            fast = jackknife_unequal(stat, (x1, x2))
            slow = jackknife_unequal(stat, (x1, x2), fast=False)
            np.testing.assert_allclose(fast.replicates, slow.replicates, rtol=1e-12)
            np.testing.assert_allclose(fast.replicates, naive_leave_one_out(stat, x1, x2), rtol=1e-12)
            assert fast.variance == pytest.approx(slow.variance, rel=1e-9)


def test_gravity_gd_table_value_and_centering_finding(gravity):
    stat = GraybillDeal().statistic()
    pooled = jackknife_unequal(stat, gravity, Norming.UNBIASED, Centering.POOLED)
    assert pooled.sd == pytest.approx(0.8492987, rel=1e-3)
    # per-sample centring, as written in the displayed estimator, is within 1%
    per_sample = jackknife_unequal(stat, gravity, Norming.UNBIASED, Centering.PER_SAMPLE)
    assert per_sample.sd == pytest.approx(0.8492987, rel=1e-2)
    assert per_sample.sd == pytest.approx(0.856708636, rel=1e-8)


def test_gravity_nair_table_value(gravity):
    stat = ElfessiUnbalanced().statistic()
    assert jackknife_unequal(stat, gravity, centering="pooled").sd == pytest.approx(0.9752919, rel=1e-3)
    assert jackknife_unequal(stat, gravity).sd == pytest.approx(0.9752919, rel=1e-2)


def test_pooled_centering_equals_classical_formula(gravity):
    stat = GraybillDeal().statistic()
    rep = jackknife_unequal(stat, gravity, centering=Centering.POOLED)
    loo = naive_leave_one_out(stat, gravity.x1, gravity.x2)
    n = 23
    assert rep.variance == pytest.approx((n - 1) / n * np.sum((loo - loo.mean()) ** 2), rel=1e-12)


def test_unequal_errors():
    with pytest.raises(TooFewObservations):
        jackknife_unequal(pooled_mean, ([1.0], [1.0, 2.0, 3.0]))
    with pytest.raises(TooFewObservations):
        jackknife_unequal(GraybillDeal().statistic(), ([1.0, 2.0], [1.0, 2.0, 3.0]))


def test_failing_statistic_reports_index():
    def picky(x1, x2):
        if 99.0 not in x1:
            raise ZeroDivisionError("needs 99")
        return 0.0

    with pytest.raises(StatisticEvaluationError) as info:
        jackknife_unequal(picky, ([1.0, 99.0, 3.0], [4.0, 5.0]), fast=False)
    assert info.value.index == 1


def test_leave_one_out_under_executor_matches_serial(gravity):
    stat = GraybillDeal().statistic()
    serial = jackknife_unequal(stat, gravity, fast=False)
    with ThreadPoolExecutor(4) as pool:
        parallel = jackknife_unequal(stat, gravity, fast=False, executor=pool)
    np.testing.assert_array_equal(serial.replicates, parallel.replicates)
    assert serial.variance == parallel.variance


def test_jackknife_deterministic(gravity):
    stat = GraybillDeal().statistic()
    a, b = jackknife_unequal(stat, gravity), jackknife_unequal(stat, gravity)
    assert a.variance == b.variance
    np.testing.assert_array_equal(a.pseudo, b.pseudo)


sizes = st.integers(min_value=3, max_value=12)


@settings(max_examples=1000, deadline=None)
@given(sizes, sizes, st.integers(0, 2**32 - 1))
def test_norming_ratio_unequal(n1, n2, seed):
    r = np.random.default_rng(seed)
    data = (r.normal(0, 1, n1), r.normal(0, 3, n2))
    stat = GraybillDeal().statistic()
    u = jackknife_unequal(stat, data, Norming.UNBIASED)
    p = jackknife_unequal(stat, data, Norming.PLUGIN)
    assert u.tau1_sq == pytest.approx(p.tau1_sq * n1 / (n1 - 1), rel=1e-12)
    assert u.tau2_sq == pytest.approx(p.tau2_sq * n2 / (n2 - 1), rel=1e-12)
    assert u.variance >= 0 and p.variance >= 0


@settings(max_examples=1000, deadline=None)
@given(sizes, sizes, st.integers(0, 2**32 - 1))
def test_pseudo_value_identity_property(n1, n2, seed):
    r = np.random.default_rng(seed)
    x1, x2 = r.normal(0, 50, n1), r.normal(0, 50, n2)
    rep = jackknife_unequal(pooled_mean, (x1, x2))
    scale = 1 + np.abs(np.r_[x1, x2]).max()
    np.testing.assert_allclose(rep.pseudo, np.r_[x1, x2], rtol=0, atol=1e-10 * scale)


@settings(max_examples=1000, deadline=None)
@given(sizes, sizes, st.integers(0, 2**32 - 1))
def test_within_sample_permutation_invariance(n1, n2, seed):
    r = np.random.default_rng(seed)
    x1, x2 = r.normal(0, 1, n1), r.normal(0, 2, n2)
    stat = GraybillDeal().statistic()
    a = jackknife_unequal(stat, (x1, x2))
    b = jackknife_unequal(stat, (r.permutation(x1), r.permutation(x2)))
    assert b.variance == pytest.approx(a.variance, rel=1e-9, abs=1e-15)


# ---------------------------------------------------------------- paired


def test_paired_mean_statistic_identity(rng):
    x1, x2 = rng.normal(0, 1, 9), rng.normal(0, 2, 9)
    rep = jackknife_paired(pair_mean, (x1, x2))
    z = (x1 + x2) / 2
    assert rep.variance == pytest.approx(np.var(z, ddof=1) / 9, rel=1e-12)
    assert jackknife_paired(constant, (x1, x2)).variance == 0


def test_paired_child_table_value(child):
    rep = jackknife_paired(GraybillDeal().statistic(), child)
    assert rep.sd == pytest.approx(0.6874476, rel=1e-3)
    rep = jackknife_paired(ElfessiUnbalanced().statistic(), child)
    assert rep.sd == pytest.approx(0.5593932, rel=1e-3)


def test_paired_fast_matches_reference(rng):
    stat = GraybillDeal().statistic()
    for _ in range(20):
        n = int(rng.integers(3, 20))
        x1, x2 = rng.normal(0, 1, n), rng.normal(0, 2, n)
        a = jackknife_paired(stat, (x1, x2))
        b = jackknife_paired(stat, (x1, x2), fast=False)
        np.testing.assert_allclose(a.replicates, b.replicates, rtol=1e-12)


def test_paired_norming_ratio(rng):
    x1, x2 = rng.normal(0, 1, 10), rng.normal(0, 2, 10)
    stat = GraybillDeal().statistic()
    u = jackknife_paired(stat, (x1, x2), Norming.UNBIASED)
    p = jackknife_paired(stat, (x1, x2), Norming.PLUGIN)
    assert p.variance == pytest.approx(u.variance * 9 / 10, rel=1e-14)


def test_paired_requires_balance(gravity):
    with pytest.raises(UnbalancedDesign):
        jackknife_paired(pooled_mean, gravity)


def test_auto_jackknife_dispatch(gravity, child):
    assert jackknife(pooled_mean, gravity).mode == "unequal"
    assert jackknife(pooled_mean, child).mode == "paired"


def test_jackknife_consistency_small():
    # scaled-down version of the acceptance check: n*Var / sigma^2(gamma) near 1
    stat = GraybillDeal().statistic()
    target = asymptotic_variance_formula(0.8, PopulationParams(0.5, 0.5, 1.0, 4.0))
    ratios = []
    for r in range(100):
        g = np.random.default_rng(r)
        rep = jackknife_unequal(stat, (g.normal(0, 1, 400), g.normal(0, 2, 400)))
        ratios.append(rep.n * rep.variance / target)
    assert 0.85 < np.mean(ratios) < 1.15


# ---------------------------------------------------------------- delete-d


def brute_force_delete_d(stat, x1, x2, d):
    N = len(x1)
    r = N - d
    full = stat(x1, x2)
    total = 0.0
    count = 0
    for keep in itertools.combinations(range(N), r):
        idx = list(keep)
        total += (stat(x1[idx], x2[idx]) - full) ** 2
        count += 1
    assert count == math.comb(N, d)
    return r / (d * count) * total


def test_delete_d_matches_brute_force(rng):
    x1, x2 = rng.normal(0, 1, 6), rng.normal(0, 2, 6)
    rep = delete_d_jackknife(pair_mean, (x1, x2), d=2)
    assert rep.exact and len(rep.replicates) == 15
    assert rep.variance == pytest.approx(brute_force_delete_d(pair_mean, x1, x2, 2), abs=1e-12)


def test_delete_d_gd_batch_path_matches_brute_force(rng):
    x1, x2 = rng.normal(0, 1, 8), rng.normal(0, 2, 8)
    stat = GraybillDeal().statistic()
    rep = delete_d_jackknife(stat, (x1, x2), d=3)
    assert rep.variance == pytest.approx(brute_force_delete_d(stat, x1, x2, 3), rel=1e-10)


def test_delete_one_equals_unbiased_paired_for_mean(rng):
    x1, x2 = rng.normal(0, 1, 12), rng.normal(0, 2, 12)
    d1 = delete_d_jackknife(pair_mean, (x1, x2), d=1).variance
    unbiased = jackknife_paired(pair_mean, (x1, x2), Norming.UNBIASED).variance
    plugin = jackknife_paired(pair_mean, (x1, x2), Norming.PLUGIN).variance
    assert d1 / unbiased == pytest.approx(1.0, rel=1e-12)
    assert d1 / plugin == pytest.approx(12 / 11, rel=1e-12)


def test_delete_d_constant_and_errors(rng):
    x1, x2 = rng.normal(0, 1, 7), rng.normal(0, 2, 7)
    for d in range(1, 6):
        assert delete_d_jackknife(constant, (x1, x2), d).variance == 0
    for bad in (0, 6):
        with pytest.raises(InvalidD):
            delete_d_jackknife(constant, (x1, x2), bad)
    with pytest.raises(InvalidD):
        delete_d_jackknife(constant, (x1, x2), 3, enumeration_limit=5)


def test_delete_d_sampling_is_seeded_and_close(rng):
    x1, x2 = rng.normal(0, 1, 16), rng.normal(0, 2, 16)
    exact = delete_d_jackknife(pair_mean, (x1, x2), 4)
    a = delete_d_jackknife(pair_mean, (x1, x2), 4, 400, np.random.default_rng(3))
    b = delete_d_jackknife(pair_mean, (x1, x2), 4, 400, np.random.default_rng(3))
    assert not a.exact and a.variance == b.variance
    assert len(set(map(tuple, a.replicates.reshape(-1, 1)))) > 1
    assert a.variance == pytest.approx(exact.variance, rel=0.25)


# ---------------------------------------------------------------- bootstrap


def test_bootstrap_golden_trace():
    doc = json.loads((DATA_DIR / "bootstrap_trace.json").read_text())
    res = bootstrap_variance(pooled_mean, (doc["sample1"], doc["sample2"]), doc["B"], seed=doc["seed"])
    np.testing.assert_array_equal(res.replicates, [r["value"] for r in doc["replicates"]])
    assert res.variance == pytest.approx(doc["variance"], abs=1e-15)


def test_bootstrap_constant_and_determinism(gravity):
    assert bootstrap_variance(constant, gravity, 50, seed=1).variance == 0
    stat = GraybillDeal().statistic()
    a = bootstrap_variance(stat, gravity, 200, seed=9)
    with ThreadPoolExecutor(3) as pool:
        b = bootstrap_variance(stat, gravity, 200, seed=9, executor=pool)
    np.testing.assert_array_equal(a.replicates, b.replicates)
    c = bootstrap_variance(stat, gravity, 200, rng=np.random.default_rng(4))
    d = bootstrap_variance(stat, gravity, 200, rng=np.random.default_rng(4))
    np.testing.assert_array_equal(c.replicates, d.replicates)


def test_bootstrap_batch_equals_row_by_row(gravity):
    stat = GraybillDeal().statistic()
    a = bootstrap_variance(stat, gravity, 100, rng=np.random.default_rng(5))
    b = bootstrap_variance(lambda x1, x2: stat(x1, x2), gravity, 100, rng=np.random.default_rng(5))
    np.testing.assert_allclose(a.replicates, b.replicates, rtol=1e-12)


def test_bootstrap_retries_degenerate_resamples():
    data = TwoSampleData.from_arrays([1.0, 1.0, 1.0, 2.0], [5.0, 5.0, 5.0, 6.0])
    stat = GraybillDeal().statistic()
    res = bootstrap_variance(stat, data, 400, seed=3)
    assert res.retries > 0
    assert np.all(np.isfinite(res.replicates))
    res = bootstrap_variance(stat, data, 400, rng=np.random.default_rng(3))
    assert res.retries > 0 and np.all(np.isfinite(res.replicates))


def test_bootstrap_gives_up_after_cap():
    data = TwoSampleData.from_arrays([1.0, 1.0], [2.0, 2.0])
    with pytest.raises(StatisticEvaluationError):
        bootstrap_variance(GraybillDeal().statistic(), data, 5, seed=0, max_retries=3)


def test_bootstrap_argument_checks(gravity):
    with pytest.raises(TooFewObservations):
        bootstrap_variance(pooled_mean, gravity, 1, seed=0)
    with pytest.raises(ValueError):
        bootstrap_variance(pooled_mean, gravity, 10)


def test_bootstrap_sd_consistent_with_jackknife(gravity):
    stat = GraybillDeal().statistic()
    sds = [bootstrap_variance(stat, gravity, 1000, seed=s).sd for s in range(30)]
    assert np.mean(sds) == pytest.approx(0.8492987, rel=0.15)
