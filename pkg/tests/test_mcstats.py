import math
from fractions import Fraction

import numpy as np
import pytest

import rmtlab.mcstats as M
import rmtlab.samplers as S
from rmtlab.process import ProcessSchedule


def _welford_all(values, stat_id="x"):
    acc = M.MCEstimate(stat_id)
    for v in values:
        acc.update(v)
    return acc


def test_estimate_matches_numpy():
    rng = np.random.default_rng(0)
    vals = rng.normal(size=501)
    acc = _welford_all(vals)
    assert acc.count == 501
    assert abs(acc.mean - vals.mean()) < 1e-12
    assert abs(acc.variance - vals.var(ddof=1)) < 1e-12
    assert abs(acc.stderr - math.sqrt(vals.var(ddof=1) / 501)) < 1e-14


def test_merge_matches_single_pass():
    rng = np.random.default_rng(1)
    vals = rng.exponential(size=1000)
    whole = _welford_all(vals)
    merged = _welford_all(vals[:137]).merge(_welford_all(vals[137:]))
    assert merged.count == whole.count
    assert abs(merged.mean - whole.mean) < 1e-12
    assert abs(merged.m2 - whole.m2) < 1e-12 * whole.m2


def test_merge_associative():
    rng = np.random.default_rng(2)
    chunks = [_welford_all(rng.normal(loc=3.0, size=n)) for n in (11, 230, 57)]
    a, b, c = chunks
    left = a.merge(b).merge(c)
    right = a.merge(b.merge(c))
    assert left.count == right.count
    assert abs(left.mean - right.mean) <= 1e-12 * abs(right.mean)
    assert abs(left.m2 - right.m2) <= 1e-12 * abs(right.m2)


def test_merge_empty_and_mismatched():
    a = _welford_all([1.0, 2.0], "p")
    empty = M.MCEstimate("p")
    out = a.merge(empty)
    assert out.count == 2 and out.mean == a.mean
    with pytest.raises(ValueError):
        a.merge(M.MCEstimate("q"))
    with pytest.raises(ValueError):
        empty.variance


def test_run_mc_constant_statistic():
    stats = {"one": lambda sample: 1.0}
    (est,) = M.run_mc(lambda rng: None, stats, 500, seed=7)
    assert est.count == 500
    assert est.mean == 1.0
    assert est.variance == 0.0
    assert est.stat_id == "one" and est.seed == 7


def test_run_mc_thread_count_is_bit_identical():
    stats = {
        "mean": lambda u: u,
        "sq": lambda u: u * u,
    }
    runs = [
        M.run_mc(lambda rng: rng.uniform(), stats, 3001, seed=42,
                 threads=t, samples_per_task=128)
        for t in (1, 2, 5)
    ]
    for other in runs[1:]:
        for a, b in zip(runs[0], other):
            assert a.count == b.count
            assert a.mean == b.mean
            assert a.m2 == b.m2


def test_run_mc_seed_changes_stream():
    stats = {"mean": lambda u: u}
    (a,) = M.run_mc(lambda rng: rng.uniform(), stats, 200, seed=1)
    (b,) = M.run_mc(lambda rng: rng.uniform(), stats, 200, seed=2)
    assert a.mean != b.mean


def test_run_mc_budget_validation():
    with pytest.raises(ValueError):
        M.run_mc(lambda rng: 0.0, {"x": lambda s: s}, 1, seed=0)


def test_run_mc_single_particle_product_mean():
    # N=1, alpha=M=1, theta=1, one step: y is a product of two independent
    # Uniform(0,1) squared-singular-value factors... the first power sum has
    # mean (1/2)^1 at T=1 for the single uniform corner.
    schedule = ProcessSchedule.constant(1, 1, 1, 1)

    def draw(rng):
        (spec,) = S.product_squared_singular_values(schedule, 2, 1, rng, keep={1})
        return spec.power_sum(1)

    (est,) = M.run_mc(draw, {"P1@T1": lambda v: v}, 100_000, seed=11, threads=4,
                      samples_per_task=4096)
    verdict = M.compare_report(est, 0.5)
    assert verdict.passed, f"z={verdict.z_score:.2f}"


def test_moment_table_and_cumulant_orders():
    rng = np.random.default_rng(3)
    xy = rng.normal(size=(4000, 2))
    xy[:, 1] = 0.5 * xy[:, 0] + xy[:, 1]
    table = M.moment_table(xy)
    assert set(table) == {frozenset({0}), frozenset({1}), frozenset({0, 1})}
    # order 1: the mean
    assert abs(M.joint_cumulant(table, (0,)) - xy[:, 0].mean()) < 1e-14
    # order 2: the covariance
    kappa = M.joint_cumulant(table, (0, 1))
    cov = np.cov(xy[:, 0], xy[:, 1], bias=True)[0, 1]
    assert abs(kappa - cov) < 1e-12


def test_cumulant_third_order_formula():
    table = {
        frozenset({0}): 1.3,
        frozenset({1}): -0.4,
        frozenset({2}): 2.2,
        frozenset({0, 1}): 0.9,
        frozenset({0, 2}): 3.1,
        frozenset({1, 2}): -1.5,
        frozenset({0, 1, 2}): 0.7,
    }
    e = {k: v for k, v in table.items()}
    expected = (
        e[frozenset({0, 1, 2})]
        - e[frozenset({0, 1})] * e[frozenset({2})]
        - e[frozenset({0, 2})] * e[frozenset({1})]
        - e[frozenset({1, 2})] * e[frozenset({0})]
        + 2 * e[frozenset({0})] * e[frozenset({1})] * e[frozenset({2})]
    )
    assert abs(M.joint_cumulant(table, (0, 1, 2)) - expected) < 1e-12


def test_cumulant_vanishes_on_factorizing_moments():
    means = {0: 0.7, 1: -1.2, 2: 0.35}
    table = {}
    for mask in range(1, 8):
        idx = frozenset(i for i in range(3) if mask >> i & 1)
        prod = 1.0
        for i in idx:
            prod *= means[i]
        table[idx] = prod
    for subset in ((0, 1), (0, 2), (1, 2), (0, 1, 2)):
        assert abs(M.joint_cumulant(table, subset)) < 1e-12


def test_cumulant_missing_moment_errors():
    table = {frozenset({0}): 1.0, frozenset({1}): 1.0}
    with pytest.raises(ValueError, match="missing"):
        M.joint_cumulant(table, (0, 1))
    with pytest.raises(ValueError):
        M.joint_cumulant(table, ())


def test_compare_report_pass_and_fail():
    rng = np.random.default_rng(4)
    est = _welford_all(rng.normal(loc=5.0, size=400), "stat")
    ok = M.compare_report(est, est.mean)
    assert ok.passed and ok.z_score == 0.0
    shifted = M.compare_report(est, est.mean + 10 * est.stderr)
    assert not shifted.passed
    assert abs(abs(shifted.z_score) - 10.0) < 1e-9
    with pytest.raises(ValueError):
        M.compare_report(_welford_all([1.0, 2.0]), 1.5)


def test_compare_report_zero_variance():
    est = _welford_all([2.0] * 50, "const")
    assert M.compare_report(est, 2.0).passed
    bad = M.compare_report(est, 2.5)
    assert not bad.passed and math.isinf(bad.z_score)


def test_comparison_csv_round_trip(tmp_path):
    est = _welford_all(np.linspace(0.0, 1.0, 64), "lin")
    verdicts = [M.compare_report(est, 0.5), M.compare_report(est, 2.0)]
    path = tmp_path / "report.csv"
    M.write_comparison_csv(path, verdicts)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "stat_id,mean,stderr,count,seed,z_score,reference,verdict"
    assert len(lines) == 3
    first = lines[1].split(",")
    assert first[0] == "lin"
    assert float(first[1]) == est.mean
    assert first[-1] == "pass"
    assert lines[2].split(",")[-1] == "fail"
