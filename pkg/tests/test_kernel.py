import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from desmooth.errors import InvalidBandwidthError, UnsupportedMomentError
from desmooth.kernel import Kernel, eval_scaled, moment, roughness

KERNELS = [Kernel.GAUSSIAN, Kernel.EPANECHNIKOV]


def _quad(kernel, fn):
    lim = np.inf if kernel is Kernel.GAUSSIAN else 1.0
    val, _ = integrate.quad(lambda u: fn(u) * 1.0, -lim, lim, epsabs=1e-13, epsrel=1e-13)
    return val


def test_gaussian_at_zero():
    assert_allclose(eval_scaled(Kernel.GAUSSIAN, 0.0, 1.0), 0.3989423, atol=1e-7)
    assert_allclose(eval_scaled(Kernel.GAUSSIAN, 0.0, 1.0), 1 / np.sqrt(2 * np.pi), rtol=1e-15)


@pytest.mark.parametrize("kernel", KERNELS)
def test_symmetric_and_nonnegative(kernel):
    u = np.linspace(-3, 3, 601)
    assert_allclose(kernel(u), kernel(-u), rtol=0, atol=0)
    assert np.all(kernel(u) >= 0)
    assert eval_scaled(kernel, 1.7, 1.0) == eval_scaled(kernel, -1.7, 1.0)


def test_epanechnikov_compact_support():
    assert eval_scaled(Kernel.EPANECHNIKOV, 1.5, 1.0) == 0.0
    assert np.all(Kernel.EPANECHNIKOV(np.array([-1.0001, 1.0001, 5.0, -7.0])) == 0.0)


@pytest.mark.parametrize("kernel", KERNELS)
def test_integrates_to_one(kernel):
    assert_allclose(_quad(kernel, kernel), 1.0, atol=1e-8)
    assert_allclose(_quad(kernel, lambda u: u * kernel(u)), 0.0, atol=1e-8)


@pytest.mark.parametrize("kernel", KERNELS)
@pytest.mark.parametrize("h", [0.1, 1.0, 10.0])
def test_scaled_kernel_integrates_to_one(kernel, h):
    lim = np.inf if kernel is Kernel.GAUSSIAN else h
    val, _ = integrate.quad(lambda u: float(eval_scaled(kernel, u, h)), -lim, lim, epsabs=1e-12)
    assert_allclose(val, 1.0, atol=1e-8)


@pytest.mark.parametrize("kernel", KERNELS)
@pytest.mark.parametrize("k", range(7))
def test_moments_match_quadrature(kernel, k):
    assert_allclose(moment(kernel, k), _quad(kernel, lambda u: u**k * kernel(u)), rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("kernel", KERNELS)
@pytest.mark.parametrize("k", range(7))
def test_roughness_matches_quadrature(kernel, k):
    assert_allclose(roughness(kernel, k), _quad(kernel, lambda u: u**k * kernel(u) ** 2), rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize(
    "kernel, k, expected",
    [
        (Kernel.GAUSSIAN, 1, 0.0),
        (Kernel.GAUSSIAN, 2, 1.0),
        (Kernel.GAUSSIAN, 4, 3.0),
        (Kernel.GAUSSIAN, 6, 15.0),
        (Kernel.EPANECHNIKOV, 2, 0.2),
    ],
)
def test_known_moments(kernel, k, expected):
    assert_allclose(moment(kernel, k), expected, atol=1e-15)


def test_known_roughness():
    assert_allclose(roughness(Kernel.GAUSSIAN, 0), 0.2820948, atol=1e-7)
    assert_allclose(roughness(Kernel.EPANECHNIKOV, 0), 0.6, atol=1e-15)
    assert roughness(Kernel.GAUSSIAN, 1) == 0.0


def test_order_above_six_rejected():
    with pytest.raises(UnsupportedMomentError):
        moment(Kernel.GAUSSIAN, 7)
    with pytest.raises(UnsupportedMomentError):
        roughness(Kernel.EPANECHNIKOV, 8)


@pytest.mark.parametrize("h", [0.0, -1.0])
def test_nonpositive_bandwidth(h):
    with pytest.raises(InvalidBandwidthError):
        eval_scaled(Kernel.GAUSSIAN, 0.3, h)


def test_parse():
    assert Kernel.parse("Gaussian") is Kernel.GAUSSIAN
    assert Kernel.parse(Kernel.EPANECHNIKOV) is Kernel.EPANECHNIKOV
    with pytest.raises(ValueError):
        Kernel.parse("triweight")
