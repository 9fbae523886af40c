import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from desmooth.asymptotics import amse
from desmooth.bandwidth import (
    BandwidthGrid,
    OptimalBandwidthInputs,
    bandwidth_recursion,
    baseline_optimal_bandwidth,
    cv_scores,
    default_cv_grid,
    loocv_select,
    optimal_bandwidth,
)
from desmooth.data import Dataset
from desmooth.errors import ConfigError, NoValidBandwidthError, UndefinedOptimumError
from desmooth.estimators import parse_method
from desmooth.kernel import Kernel, eval_scaled

from conftest import random_dataset


def inputs(**kw):
    base = dict(sigma2=0.01, n=10000, f_x0=1.0, lam=1.0, x0=0.5, g0=1.0, fprime_x0=0.0)
    base.update(kw)
    return OptimalBandwidthInputs(**base)


# ---------------------------------------------------------------------------
# grids and cross-validation


def test_grid_validation():
    with pytest.raises(ConfigError):
        BandwidthGrid([])
    with pytest.raises(ConfigError):
        BandwidthGrid([0.1, 0.1])
    with pytest.raises(ConfigError):
        BandwidthGrid([-0.1, 0.2])
    assert len(BandwidthGrid.log_spaced(0.1, 1.0, 5)) == 5


def test_default_grid_brackets_heuristic():
    xs = np.linspace(0, 1, 11)  # spacing 0.1, heuristic 0.05, reference 0.4
    g = default_cv_grid(xs)
    assert len(g) == 40
    assert_allclose([g.values[0], g.values[-1]], [0.1, 1.6])


def test_noiseless_linear_ll():
    xs = np.linspace(0, 1, 15)
    data = Dataset(xs, 3 * xs - 1)
    grid = BandwidthGrid.log_spaced(0.05, 2.0, 12)
    h, scores = loocv_select(data, parse_method("ll"), grid)
    assert np.all(scores < 1e-16)
    assert h == grid.values[0]


def test_three_point_nw_by_hand():
    xs = np.array([0.0, 0.3, 1.0])
    ys = np.array([1.0, 2.0, 0.5])
    h = 0.4
    K = eval_scaled(Kernel.GAUSSIAN, xs[:, None] - xs[None, :], h)
    expected = 0.0
    for i in range(3):
        j = [m for m in range(3) if m != i]
        expected += (ys[i] - K[i, j] @ ys[j] / K[i, j].sum()) ** 2
    _, scores = loocv_select(Dataset(xs, ys), parse_method("nw"), [h])
    assert_allclose(scores[0], expected, rtol=1e-14)


def test_h_star_attains_minimum(rng):
    data = random_dataset(rng, 30)
    for name in ("nw", "ll", "de1-2"):
        h, scores = loocv_select(data, parse_method(name, lam=1.0))
        grid = default_cv_grid(data.xs)
        assert scores[list(grid.values).index(h)] == scores.min()


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_permutation_invariance(seed):
    r = np.random.default_rng(seed)
    xs, ys = r.uniform(0, 1, 12), r.normal(size=12)
    perm = r.permutation(12)
    grid = BandwidthGrid.log_spaced(0.05, 1.0, 8)
    est = parse_method("ll")
    a = cv_scores(Dataset(xs, ys), est, grid)[0]
    b = cv_scores(Dataset(xs[perm], ys[perm]), est, grid)[0]
    assert_allclose(a, b, rtol=1e-13)


def test_loo_matches_refit(rng):
    data = random_dataset(rng, 12)
    est = parse_method("de1-3", lam=1.0)
    values, status = est.loo(data, [0.2])
    for i in range(data.n):
        keep = np.arange(data.n) != i
        refit = est.fit(data.subset(keep), 0.2, [data.xs[i]]).values[0]
        assert_allclose(values[0, i], refit, rtol=1e-12)


def test_degenerate_penalty_and_no_valid():
    data = Dataset([0.0, 1.0, 2.0, 3.0], [1.0, 2.0, 3.0, 4.0])
    est = parse_method("nw", kernel="epanechnikov")
    scores, n_bad = cv_scores(data, est, [0.5, 1.5])
    assert n_bad[0] == 4
    assert_allclose(scores[0], np.sum(data.ys**2))
    h, _ = loocv_select(data, est, [0.5, 1.5])
    assert h == 1.5
    with pytest.raises(NoValidBandwidthError):
        loocv_select(data, est, [0.2, 0.5])


def test_too_few_points():
    with pytest.raises(ConfigError):
        loocv_select(Dataset([0.0, 1.0], [0.0, 1.0]), parse_method("nw"))


# ---------------------------------------------------------------------------
# asymptotically optimal bandwidths


def test_k0_direct_value():
    h = optimal_bandwidth(0, inputs())
    expected = (0.01 * 0.28209479177387814 / (10000 * math.e * 4)) ** 0.2
    assert_allclose(h, expected, rtol=1e-12)
    assert_allclose(h, 0.030395, rtol=1e-4)


@pytest.mark.parametrize("k", [1, 3, 5])
def test_sigma_scaling_odd(k):
    assert_allclose(optimal_bandwidth(k, inputs(sigma2=0.02)) / optimal_bandwidth(k, inputs()), 2 ** (1 / (2 * k + 3)), rtol=1e-12)


def test_fifth_root_laws():
    # k = 1 (odd) and k = 0 (even) both scale as n^{-1/5}
    for k in (0, 1):
        assert_allclose(optimal_bandwidth(k, inputs(n=32 * 10000)) / optimal_bandwidth(k, inputs()), 0.5, rtol=1e-12)


@pytest.mark.parametrize("k", [1, 3])
def test_odd_optimum_minimises_amse(k):
    inp = inputs()
    h = optimal_bandwidth(k, inp)
    grid = np.geomspace(h / 10, 10 * h, 400)
    vals = [amse(k, inp.context(t)) for t in grid]
    step = np.log(grid[1] / grid[0])
    assert abs(np.log(grid[int(np.argmin(vals))] / h)) <= step
    # stationary point
    d = 1e-6 * h
    deriv = (amse(k, inp.context(h + d)) - amse(k, inp.context(h - d))) / (2 * d)
    assert abs(deriv) * h < 1e-6 * amse(k, inp.context(h))


@pytest.mark.parametrize("k", [0, 2])
@pytest.mark.parametrize("fp", [0.0, 0.4])
def test_even_optimum_relation_to_amse(k, fp):
    # the even-k bandwidth carries (lam + f'/f) where the bias carries (lam/(k+2) + f'/f)
    inp = inputs(fprime_x0=fp, f_x0=1.3)
    h = optimal_bandwidth(k, inp)
    grid = np.geomspace(h / 10, 10 * h, 4001)
    h_amse = grid[int(np.argmin([amse(k, inp.context(t)) for t in grid]))]
    r = fp / 1.3
    predicted = h * ((1.0 + r) / (1.0 / (k + 2) + r)) ** (2.0 / (2 * k + 5))
    assert_allclose(h_amse, predicted, rtol=2e-3)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
@pytest.mark.parametrize("lam", [1.0, -0.7, 2.0])
def test_recursion_matches_direct(k, lam):
    # the recursions carry no design-density term, so f' = 0 here
    inp = inputs(lam=lam, fprime_x0=0.0)
    direct = optimal_bandwidth(k + 2, inp)
    assert_allclose(bandwidth_recursion(optimal_bandwidth(k, inp), k, lam), direct, rtol=1e-10)


def test_remark_example():
    assert_allclose(bandwidth_recursion(0.5, 0, 1.0), (2 * 0.5**5) ** (1 / 9), rtol=1e-15)
    assert_allclose(bandwidth_recursion(0.5, 0, 1.0), 0.73487, atol=1e-5)


def test_lambda_two_odd_recursion():
    assert_allclose(bandwidth_recursion(0.3, 1, 2.0), (8 / 16 * 0.3**5) ** (1 / 9), rtol=1e-15)


def test_undefined_optima():
    with pytest.raises(UndefinedOptimumError):
        optimal_bandwidth(1, inputs(lam=0.0))
    with pytest.raises(UndefinedOptimumError):
        optimal_bandwidth(0, inputs(fprime_x0=-1.0))
    with pytest.raises(UndefinedOptimumError):
        bandwidth_recursion(0.5, 1, 0.0)
    with pytest.raises(ConfigError):
        optimal_bandwidth(2, inputs(fprime_x0=None))
    with pytest.raises(ConfigError):
        inputs(sigma2=0.0)


def test_g0_enters_as_square():
    assert_allclose(optimal_bandwidth(1, inputs(g0=2.0)) / optimal_bandwidth(1, inputs()), 4 ** (-1 / 5), rtol=1e-12)


@pytest.mark.parametrize("method", ["NW", "LL", "LQ", "LC"])
def test_baseline_optimum_minimises_amse(method):
    from desmooth.asymptotics import baseline_bias_variance

    inp = inputs(fprime_x0=0.2)
    h = baseline_optimal_bandwidth(method, inp)
    grid = np.geomspace(h / 10, 10 * h, 2001)
    vals = [sum((b**2, v)) for b, v in (baseline_bias_variance(method, inp.context(t)) for t in grid)]
    assert_allclose(grid[int(np.argmin(vals))], h, rtol=2e-3)
