import numpy as np
import pytest
from numpy.testing import assert_allclose

from desmooth.errors import ConfigError
from desmooth.estimators import parse_method
from desmooth.kernel import Kernel

from conftest import random_dataset


@pytest.mark.parametrize(
    "name, family, degree, label",
    [
        ("nw", "lp", 0, "NW"),
        ("LL", "lp", 1, "LL"),
        ("lq", "lp", 2, "LQ"),
        ("lc", "lp", 3, "LC"),
        ("lp4", "lp", 4, "LP4"),
        ("de1-3", "de1", 3, "DE1-3"),
        ("DE1-0", "de1", 0, "DE1-0"),
        ("nls", "nls", 0, "NLS"),
        ("loglinear", "loglinear", 0, "LOGLINEAR"),
    ],
)
def test_parse(name, family, degree, label):
    est = parse_method(name)
    assert (est.family, est.degree, est.label) == (family, degree, label)


@pytest.mark.parametrize("name", ["foo", "lp9", "de1-8", "lp"])
def test_parse_rejects(name):
    with pytest.raises(ConfigError):
        parse_method(name)


def test_de_needs_lambda(rng):
    est = parse_method("de1-2")
    assert est.needs_lambda
    with pytest.raises(ConfigError):
        est.fit(random_dataset(rng, 10), 0.2)
    assert not est.with_lambda(1.0).needs_lambda


def test_loo_chunking_consistent(rng, monkeypatch):
    import desmooth.estimators as mod

    data = random_dataset(rng, 40)
    est = parse_method("lq")
    hs = np.geomspace(0.05, 1, 6)
    full = est.loo(data, hs)
    monkeypatch.setattr(mod, "_BLOCK_BUDGET", 100)
    chunked = est.loo(data, hs)
    assert_allclose(full[0], chunked[0], rtol=1e-13)
    assert np.array_equal(full[1], chunked[1])


def test_kernel_switch(rng):
    data = random_dataset(rng, 20)
    a = parse_method("ll").fit(data, 0.3, [0.5]).values
    b = parse_method("ll", kernel="epanechnikov").fit(data, 0.3, [0.5]).values
    assert parse_method("ll").with_kernel(Kernel.EPANECHNIKOV).kernel is Kernel.EPANECHNIKOV
    assert not np.allclose(a, b)


def test_nls_with_fixed_rate(rng):
    data = random_dataset(rng, 20)
    fit = parse_method("nls", lam=1.0).fit(data, None, [0.0, 1.0])
    assert_allclose(fit.values[1] / fit.values[0], np.e, rtol=1e-12)
