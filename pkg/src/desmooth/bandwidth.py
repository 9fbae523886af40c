"""Bandwidth selection: leave-one-out cross-validation and the asymptotically
optimal DE1-k bandwidths under exponential growth.

Optimal bandwidths (``g(x0) = g(0) exp(lambda x0)``)::

    odd k:   h^{2k+3} = s2 R(K) ((k+1)!)^2
                        / (n f e^{2 lam x0} g(0)^2 lam^{2k+2} (2k+2) mu_{k+1}^2)
    even k:  h^{2k+5} = s2 R(K) ((k+1)!)^2
                        / (n f e^{2 lam x0} g(0)^2 lam^{2k+2} (2k+4) mu_{k+2}^2 (lam + f'/f)^2)

and the degree-raising recursions ``h_{k+2} = ((k+3)(k+1) h_k^{2k+3} / lam^4)^{1/(2k+7)}``
(odd) and ``h_{k+2} = ((k+2)^3 h_k^{2k+5} / ((k+4) lam^4))^{1/(2k+9)}`` (even).  The
recursions use Gaussian moment ratios, so they agree with the direct formulas
for the Gaussian kernel only.

The even-k formula carries ``(lam + f'/f)``, while the even-k bias in
:mod:`desmooth.asymptotics` carries ``(lam/(k+2) + f'/f)``; for even k the
formula therefore does not minimise :func:`desmooth.asymptotics.amse`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .asymptotics import AsymptoticContext, baseline_bias_variance
from .data import Dataset, bandwidth_heuristic
from .errors import ConfigError, NoValidBandwidthError, UndefinedOptimumError
from .estimators import Estimator
from .kernel import Kernel
from .localpoly import OK

__all__ = [
    "BandwidthGrid",
    "default_cv_grid",
    "cv_scores",
    "loocv_select",
    "OptimalBandwidthInputs",
    "optimal_bandwidth",
    "bandwidth_recursion",
    "baseline_optimal_bandwidth",
]

# relative tolerance (of sum y^2) under which CV scores count as tied
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class BandwidthGrid:
    values: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=float))
        if v.size == 0:
            raise ConfigError("bandwidth grid is empty")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ConfigError("bandwidths must be positive and finite")
        if np.any(np.diff(v) <= 0):
            raise ConfigError("bandwidth grid must be strictly increasing")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def log_spaced(cls, lo: float, hi: float, num: int = 40) -> "BandwidthGrid":
        if not 0 < lo < hi:
            raise ConfigError(f"need 0 < lo < hi, got {lo}, {hi}")
        return cls(np.geomspace(lo, hi, num))

    def __len__(self):
        return self.values.size

    def __iter__(self):
        return iter(self.values)


def default_cv_grid(xs, num: int = 40, lo_factor: float = 0.25, hi_factor: float = 4.0) -> BandwidthGrid:
    """40 log-spaced bandwidths on ``[0.25 h_ref, 4 h_ref]``.

    ``h_ref`` is eight times half the median spacing of the sorted ``xs``.
    """
    h_ref = 8.0 * bandwidth_heuristic(xs)
    return BandwidthGrid.log_spaced(lo_factor * h_ref, hi_factor * h_ref, num)


def cv_scores(data: Dataset, estimator: Estimator, grid) -> tuple[np.ndarray, np.ndarray]:
    """Leave-one-out CV score for each bandwidth and the count of degenerate
    leave-one-out fits.  A degenerate fit contributes ``y_i^2``."""
    hs = grid.values if isinstance(grid, BandwidthGrid) else np.asarray(grid, dtype=float)
    values, status = estimator.loo(data, hs)
    ok = status == OK
    resid = np.where(ok, data.ys - values, data.ys)
    return np.sum(resid * resid, axis=1), np.sum(~ok, axis=1)


def loocv_select(data: Dataset, estimator: Estimator, grid: Optional[BandwidthGrid] = None) -> tuple[float, np.ndarray]:
    """Pick the bandwidth minimising the leave-one-out CV score.

    Scores within ``TIE_RTOL * sum(y^2)`` of the minimum are ties and resolve
    to the smallest bandwidth.

    Returns
    -------
    h_star : float
    scores : ndarray, one per grid bandwidth
    """
    if data.n < 3:
        raise ConfigError(f"cross-validation needs at least 3 observations, got {data.n}")
    if grid is None:
        grid = default_cv_grid(data.xs)
    elif not isinstance(grid, BandwidthGrid):
        grid = BandwidthGrid(grid)
    scores, n_bad = cv_scores(data, estimator, grid)
    valid = n_bad < data.n
    if not np.any(valid):
        raise NoValidBandwidthError(f"every leave-one-out fit of {estimator.label} is degenerate on this grid")
    best = np.min(scores[valid])
    tol = TIE_RTOL * (1.0 + float(data.ys @ data.ys))
    idx = int(np.flatnonzero(valid & (scores <= best + tol))[0])
    return float(grid.values[idx]), scores


@dataclass(frozen=True)
class OptimalBandwidthInputs:
    sigma2: float
    n: int
    f_x0: float
    lam: float
    x0: float
    g0: float = 1.0
    fprime_x0: Optional[float] = None
    kernel: Kernel = Kernel.GAUSSIAN

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ConfigError(f"sigma2 must be positive, got {self.sigma2!r}")
        if self.n < 1:
            raise ConfigError(f"n must be at least 1, got {self.n!r}")
        if not self.f_x0 > 0:
            raise ConfigError(f"f(x0) must be positive, got {self.f_x0!r}")

    def context(self, h: float) -> AsymptoticContext:
        g = self.g0 * math.exp(self.lam * self.x0)
        return AsymptoticContext(self.lam, g, h, self.n, self.sigma2, self.f_x0, self.fprime_x0 or 0.0, self.kernel)


def optimal_bandwidth(k: int, inputs: OptimalBandwidthInputs) -> float:
    """Asymptotically optimal DE1-k bandwidth at ``inputs.x0``."""
    if int(k) != k or k < 0:
        raise ConfigError(f"k must be a nonnegative integer, got {k!r}")
    k = int(k)
    p = inputs
    if p.lam == 0:
        raise UndefinedOptimumError("optimal bandwidth is undefined for lambda = 0 (bias vanishes)")
    K = p.kernel
    numer = p.sigma2 * K.roughness(0) * math.factorial(k + 1) ** 2
    common = p.n * p.f_x0 * math.exp(2.0 * p.lam * p.x0) * p.g0**2 * p.lam ** (2 * k + 2)
    if k % 2:
        denom = common * (2 * k + 2) * K.moment(k + 1) ** 2
        power = 2 * k + 3
    else:
        if p.fprime_x0 is None:
            raise ConfigError("even k requires f'(x0)")
        shift = p.lam + p.fprime_x0 / p.f_x0
        if shift == 0:
            raise UndefinedOptimumError("optimal bandwidth is undefined when lambda + f'/f = 0")
        denom = common * (2 * k + 4) * K.moment(k + 2) ** 2 * shift**2
        power = 2 * k + 5
    return (numer / denom) ** (1.0 / power)


def bandwidth_recursion(h_ok: float, k: int, lam: float) -> float:
    """Optimal bandwidth at degree ``k + 2`` from the one at degree ``k``."""
    if lam == 0:
        raise UndefinedOptimumError("bandwidth recursion is undefined for lambda = 0")
    if not h_ok > 0:
        raise ConfigError(f"bandwidth must be positive, got {h_ok!r}")
    if int(k) != k or k < 0:
        raise ConfigError(f"k must be a nonnegative integer, got {k!r}")
    k = int(k)
    lam4 = lam**4
    if k % 2:
        return ((k + 3) * (k + 1) / lam4 * h_ok ** (2 * k + 3)) ** (1.0 / (2 * k + 7))
    return ((k + 2) ** 3 / ((k + 4) * lam4) * h_ok ** (2 * k + 5)) ** (1.0 / (2 * k + 9))


def baseline_optimal_bandwidth(method: str, inputs: OptimalBandwidthInputs) -> float:
    """AMSE-minimising bandwidth for NW/LL/LQ/LC from their leading terms.

    With bias ``B h^q`` and variance ``V / h`` the minimiser is
    ``(V / (2 q B^2))^{1/(2q+1)}``.
    """
    method = method.upper()
    q = 2 if method in ("NW", "LL") else 4
    bias1, var1 = baseline_bias_variance(method, inputs.context(1.0))
    if bias1 == 0:
        raise UndefinedOptimumError(f"{method} leading bias vanishes; no finite optimum")
    return (var1 / (2 * q * bias1**2)) ** (1.0 / (2 * q + 1))
