import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stackmc import worked_example as wx
from stackmc.distributions import Beta, DistributionSpec, Gaussian, Uniform, parse_distribution, sample
from stackmc.errors import (
    DegenerateWeightError,
    InsufficientDataError,
    NumericError,
    ParameterError,
    ShapeError,
)
from stackmc.estimators import (
    Dataset,
    FoldPartition,
    compute_alpha,
    eim_guard,
    fit_all_estimate,
    is_estimate,
    mc_estimate,
    partition_folds,
    stackmc_estimate,
    stackmc_is_estimate,
)
from stackmc.fitters import fourier, polynomial
from stackmc.testfunctions import eval_poly1d, eval_rosenbrock

U11 = DistributionSpec((Uniform(-1.0, 1.0),))
U01 = DistributionSpec((Uniform(0.0, 1.0),))
POLY3 = polynomial(1, 3)


def cubic(x):
    return 0.7 - 1.3 * x + 2.0 * x**2 + 0.4 * x**3


def make_dataset(dist, n, seed, fn):
    x = sample(dist, n, seed).points
    return Dataset(x, fn(x))


# --- plain and importance-sampled MC -----------------------------------------

def test_mc_estimate_reference_values(table_dataset):
    mean, sigma, eim = mc_estimate(table_dataset.values)
    assert mean == pytest.approx(1.1337, abs=1e-3)
    assert sigma == pytest.approx(5.6835, abs=1e-3)
    assert eim == pytest.approx(sigma / math.sqrt(20))


def test_mc_estimate_trivial_cases():
    assert mc_estimate([0.1] * 7) == (0.1, 0.0, 0.0)
    mean, sigma, eim = mc_estimate([0.0, 2.0])
    assert (mean, eim) == (1.0, 1.0)
    assert sigma == pytest.approx(math.sqrt(2), rel=1e-15)
    with pytest.raises(InsufficientDataError):
        mc_estimate([3.0])


def test_is_estimate_with_q_equal_p(table_dataset):
    assert is_estimate(table_dataset, U11, U11) == pytest.approx(np.mean(table_dataset.values), rel=1e-12)
    single = Dataset([[0.5]], [2.0])
    assert is_estimate(single, U01, U01) == 2.0


def test_is_estimate_of_second_moment():
    data = make_dataset(U01, 100_000, 6, lambda x: x[:, 0] ** 2)
    eim = mc_estimate(data.values)[2]
    assert abs(is_estimate(data, U01, U01) - 1 / 3) < 4 * eim
    # genuinely reweighted: draws from Beta(2,1), weights 1/(2x)
    q = DistributionSpec((Beta(2, 1),))
    data = make_dataset(q, 100_000, 7, lambda x: x[:, 0] ** 2)
    w = data.values * U01.marginals[0].pdf(data.points[:, 0]) / q.marginals[0].pdf(data.points[:, 0])
    assert abs(is_estimate(data, U01, q) - 1 / 3) < 4 * w.std(ddof=1) / math.sqrt(w.size)


def test_is_estimate_zero_sampling_density():
    data = Dataset([[0.2], [0.7]], [1.0, 1.0])
    with pytest.raises(DegenerateWeightError):
        is_estimate(data, U01, DistributionSpec((Uniform(0.0, 0.5),)))


# --- fit to all samples -------------------------------------------------------

def test_fit_all_reference_value(table_dataset):
    assert fit_all_estimate(table_dataset, POLY3, U11) == pytest.approx(1.3412, abs=1e-2)


def test_fit_all_in_family_and_constant():
    data = make_dataset(U11, 12, 3, lambda x: cubic(x[:, 0]))
    exact = 0.7 + 2.0 / 3
    assert fit_all_estimate(data, POLY3, U11) == pytest.approx(exact, abs=1e-8)
    const = Dataset(sample(U11, 9, 1).points, np.full(9, -2.5))
    assert fit_all_estimate(const, POLY3, U11) == pytest.approx(-2.5, abs=1e-12)


# --- folds -------------------------------------------------------------------

def test_partition_sizes():
    assert partition_folds(20, 5, 0).sizes == [4] * 5
    singletons = partition_folds(10, 10, 0)
    assert singletons.sizes == [1] * 10
    assert partition_folds(23, 10, 0).sizes == [3, 3, 3] + [2] * 7


def test_partition_is_seeded():
    a = partition_folds(50, 10, 5)
    b = partition_folds(50, 10, 5)
    c = partition_folds(50, 10, 6)
    assert all(np.array_equal(x, y) for x, y in zip(a.test_indices, b.test_indices))
    assert not all(np.array_equal(x, y) for x, y in zip(a.test_indices, c.test_indices))


@pytest.mark.parametrize("n,k", [(5, 1), (5, 6), (3, 0)])
def test_partition_errors(n, k):
    with pytest.raises(ParameterError):
        partition_folds(n, k, 0)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 300).flatmap(lambda n: st.tuples(st.just(n), st.integers(2, n), st.integers(0, 2**32))))
def test_partition_is_exact(args):
    n, k, seed = args
    p = partition_folds(n, k, seed)
    allidx = np.concatenate(p.test_indices)
    assert np.array_equal(np.sort(allidx), np.arange(n))
    assert max(p.sizes) - min(p.sizes) <= 1


def test_bad_injected_partition():
    data = Dataset(np.linspace(-1, 1, 10)[:, None], np.arange(10.0))
    overlap = FoldPartition(2, (np.arange(0, 6), np.arange(5, 10)))
    with pytest.raises(ParameterError):
        stackmc_estimate(data, U11, POLY3, partition=overlap)


# --- alpha ---------------------------------------------------------------------

def test_alpha_from_reference_predictions(table_dataset):
    pred = np.array([g for fold in wx.SAMPLES for _, _, g in fold])
    s = compute_alpha(pred, table_dataset.values)
    for key, expected in wx.ALPHA_BLOCK.items():
        assert getattr(s, key) == pytest.approx(expected, abs=2e-3), key


def test_alpha_trivial_cases():
    f = np.array([1.0, 3.0, -2.0, 0.5])
    s = compute_alpha(f, f)
    assert s.rho == pytest.approx(1.0) and s.alpha == pytest.approx(1.0)
    s = compute_alpha(np.full(4, 2.0), f)
    assert s.sigma_g == 0.0 and s.alpha == 0.0 and s.rho == 0.0
    s = compute_alpha(f, np.full(4, 7.0))
    assert s.constant_f and s.alpha == 0.0
    with pytest.raises(ShapeError):
        compute_alpha(f, f[:3])


def test_alpha_invariants():
    rng = np.random.default_rng(0)
    for _ in range(50):
        f = rng.normal(size=30)
        g = rng.normal(size=30) + rng.uniform(-2, 2) * f
        s = compute_alpha(g, f)
        assert s.sigma_f >= 0 and s.sigma_g >= 0
        assert abs(s.rho) <= 1 + 1e-12
        assert s.alpha == pytest.approx(s.rho * s.sigma_f / s.sigma_g)


# --- guard -------------------------------------------------------------------

def test_guard_examples():
    trig, L = eim_guard([1.0, 1.0, 1.0], 1.0, 0.3)
    assert not trig and list(L) == [0, 0, 0]
    trig, L = eim_guard([0.0, 6.0], 0.0, 1.0, 5.0)
    assert trig and L[1] == 6.0
    trig, L = eim_guard([2.0, 2.0], 2.0, 0.0)
    assert not trig
    trig, L = eim_guard([2.0, 2.0 + 1e-15], 2.0, 0.0)
    assert trig


def test_guard_on_reference_fold_integrals():
    eim = 5.6835 / math.sqrt(20)
    trig, L = eim_guard(wx.FOLD_G_HATS, 1.1337, eim, 5.0)
    assert not trig
    assert max(L) == pytest.approx((1.9032 - 1.1337) / eim)
    assert max(L) == pytest.approx(0.61, abs=0.01)


# --- StackMC -----------------------------------------------------------------

def test_reference_walkthrough(table_dataset, table_partition):
    rep = stackmc_estimate(table_dataset, U11, POLY3, k=5, partition=table_partition)
    corrected = [f.corrected for f in rep.per_fold]
    assert np.allclose(corrected, wx.FOLD_CORRECTED, atol=1e-2)
    assert rep.per_fold[0].correction == pytest.approx(-0.3553, abs=1e-2)
    # corrected 1.3613 = 0.8685 * 1.2529 + correction, so the last correction is positive
    assert rep.per_fold[4].correction == pytest.approx(1.3613 - 0.8685 * 1.2529, abs=1e-2)
    assert rep.per_fold[4].correction == pytest.approx(0.2732, abs=1e-2)
    assert rep.f_hat_smc == pytest.approx(0.8081, abs=1e-2)
    assert not rep.guard_triggered
    for fr in rep.per_fold:
        assert fr.corrected == rep.alpha * fr.g_hat + fr.correction
    assert rep.f_hat_smc == np.mean(corrected)


def test_alpha_zero_reduces_to_mc(table_dataset, table_partition):
    rep = stackmc_estimate(table_dataset, U11, POLY3, k=5, partition=table_partition, alpha=0.0)
    assert rep.f_hat_smc == pytest.approx(rep.f_hat_mc, rel=1e-12)


@pytest.mark.parametrize("k", [2, 5, 10])
def test_in_family_function_is_exact(k):
    data = make_dataset(U11, 40, 12, lambda x: cubic(x[:, 0]))
    rep = stackmc_estimate(data, U11, POLY3, k=k, seed=3)
    assert rep.f_hat_smc == pytest.approx(0.7 + 2.0 / 3, abs=1e-8)
    assert not rep.guard_triggered
    assert rep.alpha == pytest.approx(1.0, abs=1e-8)


def test_constant_function_returns_constant():
    data = Dataset(sample(U11, 30, 2).points, np.full(30, 0.1))
    rep = stackmc_estimate(data, U11, POLY3, k=5, seed=1)
    assert rep.f_hat_smc == 0.1 and rep.f_hat_mc == 0.1


def test_training_set_too_small():
    data = make_dataset(U11, 8, 0, lambda x: x[:, 0])
    with pytest.raises(InsufficientDataError):
        stackmc_estimate(data, U11, polynomial(1, 6), k=4)


def test_non_finite_surrogate_integral_names_fold():
    data = make_dataset(U11, 20, 0, lambda x: eval_poly1d(x[:, 0]))
    with pytest.raises(NumericError, match="fold 1"):
        stackmc_estimate(data, U11, POLY3, k=5, expectation=lambda m, d: float("nan"))


def test_fallback_to_mc_integral_for_fourier_under_gaussian():
    # E[cos(kx)] = cos(k mu) exp(-k^2 s^2 / 2), E[sin(kx)] = sin(k mu) exp(-k^2 s^2 / 2)
    dist = DistributionSpec((Gaussian(0.3, 0.8),))
    data = make_dataset(dist, 60, 4, lambda x: 1.0 + np.cos(x[:, 0]) - 0.5 * np.sin(2 * x[:, 0]))
    rep = stackmc_estimate(data, dist, fourier(1, 2), k=5, seed=2, n_g=400_000)
    exact = 1.0 + math.cos(0.3) * math.exp(-0.32) - 0.5 * math.sin(0.6) * math.exp(-4 * 0.32)
    # in-family data: every fold surrogate is exact, so only the n_g sampling error remains
    assert rep.f_hat_smc == pytest.approx(exact, abs=5e-3)
    assert rep.f_hat_fit == pytest.approx(exact, abs=5e-3)


def _rosen_dataset(n=60, seed=1):
    dist = parse_distribution("uniform(-3,3)^3")
    return dist, make_dataset(dist, n, seed, eval_rosenbrock)


@pytest.mark.parametrize("c", [0.001, 0.5, 3.0, 1234.5])
def test_scale_equivariance(c):
    dist, data = _rosen_dataset()
    spec = polynomial(3, 3)
    base = stackmc_estimate(data, dist, spec, k=6, seed=9)
    scaled = stackmc_estimate(data.with_values(c * data.values), dist, spec, k=6, seed=9)
    assert scaled.alpha == pytest.approx(base.alpha, rel=1e-10)
    assert np.allclose([f.likelihood for f in scaled.per_fold], [f.likelihood for f in base.per_fold], rtol=1e-9)
    assert scaled.guard_triggered == base.guard_triggered
    assert scaled.f_hat_smc == pytest.approx(c * base.f_hat_smc, rel=1e-10)


@pytest.mark.parametrize("a", [-1e4, -3.0, 0.25, 50.0])
def test_shift_equivariance(a):
    dist, data = _rosen_dataset()
    spec = polynomial(3, 3)
    base = stackmc_estimate(data, dist, spec, k=6, seed=9)
    moved = stackmc_estimate(data.with_values(data.values + a), dist, spec, k=6, seed=9)
    assert moved.alpha == pytest.approx(base.alpha, rel=1e-10)
    assert moved.guard_triggered == base.guard_triggered
    assert moved.f_hat_smc == pytest.approx(base.f_hat_smc + a, rel=1e-10)


def test_guard_fallback_is_bit_exact():
    data = make_dataset(U11, 20, 5, lambda x: eval_poly1d(x[:, 0]))
    sigma_f = mc_estimate(data.values)[1]
    from stackmc.fitters import analytic_expectation

    rep = stackmc_estimate(
        data, U11, POLY3, k=5, seed=1,
        expectation=lambda m, d: analytic_expectation(m, d) + 100 * sigma_f,
    )
    assert rep.guard_triggered
    assert rep.f_hat_smc == rep.f_hat_mc


def test_row_permutation_with_fixed_folds():
    dist, data = _rosen_dataset(50, 3)
    spec = polynomial(3, 3)
    part = partition_folds(50, 5, 8)
    base = stackmc_estimate(data, dist, spec, partition=part, k=5)
    perm = np.random.default_rng(0).permutation(50)
    inv = np.argsort(perm)
    shuffled = Dataset(data.points[perm], data.values[perm])
    moved = FoldPartition(5, tuple(np.sort(inv[t]) for t in part.test_indices))
    other = stackmc_estimate(shuffled, dist, spec, partition=moved, k=5)
    assert other.f_hat_smc == pytest.approx(base.f_hat_smc, rel=1e-12)


def test_seeded_runs_are_reproducible():
    dist, data = _rosen_dataset()
    a = stackmc_estimate(data, dist, polynomial(3, 3), seed=4)
    b = stackmc_estimate(data, dist, polynomial(3, 3), seed=4)
    assert a.to_text() == b.to_text()


def test_report_text_block(table_dataset, table_partition):
    rep = stackmc_estimate(table_dataset, U11, POLY3, k=5, partition=table_partition)
    text = rep.to_text()
    kv = dict(line.split(" = ") for line in text.strip().splitlines())
    assert float(kv["f_hat_smc"]) == rep.f_hat_smc
    assert kv["guard_triggered"] == "false"
    assert kv["k"] == "5"
    assert float(kv["fold3_g_hat"]) == rep.per_fold[2].g_hat


# --- importance-sampled StackMC -------------------------------------------------

def test_is_variant_with_q_equal_p_matches():
    dist, data = _rosen_dataset()
    spec = polynomial(3, 3)
    a = stackmc_estimate(data, dist, spec, k=5, seed=11)
    b = stackmc_is_estimate(data, dist, dist, spec, k=5, seed=11)
    assert b.f_hat_smc == pytest.approx(a.f_hat_smc, rel=1e-12, abs=1e-12)
    assert b.f_hat_mc == pytest.approx(a.f_hat_mc, rel=1e-12)
    assert b.alpha == pytest.approx(a.alpha, rel=1e-12)


def test_is_variant_constant_function():
    data = Dataset(sample(U01, 25, 0).points, np.full(25, 3.5))
    rep = stackmc_is_estimate(data, U01, U01, POLY3, k=5, seed=0)
    assert rep.f_hat_smc == 3.5


@pytest.mark.parametrize("q", [Beta(2, 1), Beta(1.5, 1)], ids=str)
def test_is_variant_unbiased_over_trials(q):
    qd = DistributionSpec((q,))
    est = []
    eims = []
    for t in range(500):
        data = make_dataset(qd, 40, 1000 + t, lambda x: x[:, 0] ** 2)
        rep = stackmc_is_estimate(data, U01, qd, POLY3, k=5, seed=t)
        est.append(rep.f_hat_smc)
        eims.append(rep.eim)
    est = np.array(est)
    assert abs(est.mean() - 1 / 3) < 4 * np.mean(eims)
    assert abs(est.mean() - 1 / 3) < 4 * est.std(ddof=1) / math.sqrt(est.size) + 1e-12
