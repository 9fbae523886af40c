import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import optimize

from desmooth.data import Dataset
from desmooth.errors import ConfigError, RankDeficiencyError
from desmooth.kernel import Kernel, eval_scaled
from desmooth.localpoly import fit_local_poly, nadaraya_watson

from conftest import random_dataset


def test_nw_definition(rng):
    data = random_dataset(rng, 25)
    grid = np.linspace(0, 1, 11)
    h = 0.15
    fit = fit_local_poly(data, 0, Kernel.GAUSSIAN, h, grid)
    K = eval_scaled(Kernel.GAUSSIAN, data.xs[None, :] - grid[:, None], h)
    assert_allclose(fit.values, K @ data.ys / K.sum(axis=1), rtol=1e-13)
    assert fit.method == "NW"


def test_linear_reproduction():
    xs = np.linspace(0, 1, 30)
    data = Dataset(xs, 2 * xs + 1)
    grid = np.linspace(0.1, 0.9, 17)
    for h in [0.05, 0.3, 5.0]:
        fit = fit_local_poly(data, 1, Kernel.GAUSSIAN, h, grid)
        assert_allclose(fit.values, 2 * grid + 1, atol=1e-10)


@pytest.mark.parametrize("degree", [0, 1, 2, 3])
@pytest.mark.parametrize("kernel", [Kernel.GAUSSIAN, Kernel.EPANECHNIKOV])
def test_polynomial_reproduction(degree, kernel, rng):
    coeffs = rng.normal(size=degree + 1)
    xs = np.sort(rng.uniform(0, 1, 40))
    data = Dataset(xs, np.polynomial.polynomial.polyval(xs, coeffs))
    grid = np.linspace(0.2, 0.8, 13)
    fit = fit_local_poly(data, degree, kernel, 0.25, grid)
    assert_allclose(fit.values, np.polynomial.polynomial.polyval(grid, coeffs), atol=1e-10)


def test_quadratic_matches_direct_minimisation(rng):
    data = random_dataset(rng, 20)
    h = 0.2
    grid = np.array([0.1, 0.35, 0.5, 0.77])
    fit = fit_local_poly(data, 2, Kernel.GAUSSIAN, h, grid)
    for x0, got in zip(grid, fit.values):
        sw = np.sqrt(eval_scaled(Kernel.GAUSSIAN, data.xs - x0, h))
        dx = data.xs - x0

        def resid(beta):
            return sw * (data.ys - beta[0] - beta[1] * dx - beta[2] * dx**2)

        sol = optimize.least_squares(resid, np.zeros(3), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        assert_allclose(got, sol.x[0], rtol=1e-8)


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**31),
    c=st.floats(-50, 50),
    degree=st.integers(0, 3),
)
def test_shift_invariance(seed, c, degree):
    r = np.random.default_rng(seed)
    data = random_dataset(r, 25)
    grid = np.linspace(0.1, 0.9, 9)
    a = fit_local_poly(data, degree, Kernel.GAUSSIAN, 0.2, grid).values
    b = fit_local_poly(data.shifted(c), degree, Kernel.GAUSSIAN, 0.2, grid + c).values
    assert_allclose(a, b, rtol=1e-12, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), h=st.floats(0.01, 2.0))
def test_nw_convex_combination(seed, h):
    r = np.random.default_rng(seed)
    data = random_dataset(r, 15, noise=1.0)
    fit = nadaraya_watson(data, Kernel.GAUSSIAN, h, np.linspace(-0.5, 1.5, 21))
    ok = ~fit.degenerate
    assert np.all(fit.values[ok] >= data.ys.min() - 1e-12)
    assert np.all(fit.values[ok] <= data.ys.max() + 1e-12)


def test_empty_window_flagged():
    data = Dataset([0.0, 0.1, 0.2], [1.0, 2.0, 3.0])
    fit = fit_local_poly(data, 0, Kernel.EPANECHNIKOV, 0.05, [0.1, 5.0])
    assert list(fit.degenerate) == [False, True]
    assert np.isnan(fit.values[1])
    assert fit.weight_sums[1] == 0.0


def test_rank_deficiency_names_point():
    # two distinct x values cannot support a quadratic
    data = Dataset([0.0, 0.0, 1.0, 1.0], [1.0, 1.1, 2.0, 2.1])
    with pytest.raises(RankDeficiencyError) as exc:
        fit_local_poly(data, 2, Kernel.GAUSSIAN, 0.5, [0.5])
    assert exc.value.x0 == 0.5


def test_preconditions():
    data = Dataset([0.0, 1.0], [0.0, 1.0])
    with pytest.raises(ConfigError):
        fit_local_poly(data, 6, Kernel.GAUSSIAN, 0.5)
    with pytest.raises(ConfigError):
        fit_local_poly(data, 2, Kernel.GAUSSIAN, 0.5)
    with pytest.raises(ConfigError):
        fit_local_poly(data, 1, Kernel.GAUSSIAN, -0.5)


def test_two_point_line_with_huge_bandwidth():
    data = Dataset([0.0, 1.0], [1.0, 3.0])
    fit = fit_local_poly(data, 1, Kernel.GAUSSIAN, 1e6, [0.0, 1.0])
    assert_allclose(fit.values, [1.0, 3.0], atol=1e-9)


def test_pointwise_bandwidths(rng):
    data = random_dataset(rng, 30)
    grid = np.array([0.3, 0.6])
    both = fit_local_poly(data, 1, Kernel.GAUSSIAN, np.array([0.1, 0.3]), grid).values
    assert_allclose(both[0], fit_local_poly(data, 1, Kernel.GAUSSIAN, 0.1, grid[:1]).values[0], rtol=1e-14)
    assert_allclose(both[1], fit_local_poly(data, 1, Kernel.GAUSSIAN, 0.3, grid[1:]).values[0], rtol=1e-14)
