"""Named estimator specifications shared by the bandwidth selector, the
simulation harness and the command line.

Recognised names (case-insensitive)::

    nw ll lq lc        local polynomial of degree 0..3
    lp<p>              local polynomial of degree p (0..5)
    de1-<k>            DE1-k under exponential growth (k = 0..7), needs lambda
    nls                exponential curve by nonlinear least squares (g(a) only
                       when a growth rate is attached)
    loglinear          exponential curve by OLS on log y
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from .data import Dataset, Fit
from .delocal import (
    MAX_K,
    ExponentialDE,
    LinearFirstOrderDE,
    _affine_core,
    de1k_exponential,
    de1k_linear,
    exponential_basis,
    linear_basis,
)
from .errors import ConfigError
from .kernel import Kernel, eval_scaled
from .localpoly import MAX_DEGREE, METHOD_NAMES, _local_poly_core, fit_local_poly
from .parametric import exponential_curve, fit_exponential_nls, fit_loglinear

__all__ = ["Estimator", "parse_method"]

_LP_ALIASES = {"nw": 0, "lcon": 0, "ll": 1, "lq": 2, "lc": 3}

# cap on floats held by one LOOCV block (bandwidths x rows x observations x basis)
_BLOCK_BUDGET = 4_000_000


@dataclass(frozen=True)
class Estimator:
    family: str  # "lp", "de1", "nls" or "loglinear"
    degree: int = 0
    de: Optional[Union[ExponentialDE, LinearFirstOrderDE]] = None
    kernel: Kernel = Kernel.GAUSSIAN

    @property
    def label(self) -> str:
        if self.family == "lp":
            return METHOD_NAMES.get(self.degree, f"LP{self.degree}")
        if self.family == "de1":
            return f"DE1-{self.degree}"
        return self.family.upper()

    @property
    def needs_bandwidth(self) -> bool:
        return self.family in ("lp", "de1")

    @property
    def needs_lambda(self) -> bool:
        return self.family == "de1" and self.de is None

    def with_lambda(self, lam: float) -> "Estimator":
        """Attach a known growth rate (DE1-k, and NLS which then fits g(a) only)."""
        if self.family not in ("de1", "nls"):
            return self
        return replace(self, de=ExponentialDE(float(lam)))

    def with_kernel(self, kernel) -> "Estimator":
        return replace(self, kernel=Kernel.parse(kernel))

    def _check_ready(self):
        if self.needs_lambda:
            raise ConfigError(f"{self.label} needs a growth rate lambda")

    def fit(self, data: Dataset, h=None, grid=None) -> Fit:
        """Fit on ``grid`` (default: the design points)."""
        self._check_ready()
        if self.family == "lp":
            return fit_local_poly(data, self.degree, self.kernel, h, grid)
        if self.family == "de1":
            if isinstance(self.de, ExponentialDE):
                return de1k_exponential(data, self.de, self.degree, self.kernel, h, grid)
            return de1k_linear(data, self.de, self.degree, self.kernel, h, grid)
        grid = data.xs.copy() if grid is None else np.atleast_1d(np.asarray(grid, dtype=float))
        if self.family == "nls":
            res = fit_exponential_nls(data, lam=None if self.de is None else self.de.lam)
            values = res.predict(grid)
            return Fit(grid, values, "NLS", None, converged=res.converged)
        log_ga, lam = fit_loglinear(data)
        values = exponential_curve(grid, np.exp(log_ga), lam, data.interval[0])
        return Fit(grid, values, "LOGLINEAR", None)

    def loo(self, data: Dataset, bandwidths):
        """Leave-one-out predictions at every design point for each bandwidth.

        Returns ``(values, status)`` of shape ``(len(bandwidths), n)``;
        ``status`` uses the codes of :mod:`desmooth.localpoly`.
        """
        self._check_ready()
        if not self.needs_bandwidth:
            raise ConfigError(f"{self.label} has no bandwidth to cross-validate")
        hs = np.atleast_1d(np.asarray(bandwidths, dtype=float))
        if np.any(~np.isfinite(hs)) or np.any(hs <= 0):
            raise ConfigError("bandwidths must be positive and finite")
        xs, ys = data.xs, data.ys
        n = xs.size
        width = self.degree + 2
        rows = max(1, int(_BLOCK_BUDGET // (hs.size * n * width)))
        values = np.empty((hs.size, n))
        status = np.empty((hs.size, n), dtype=int)
        hcol = hs[:, None, None]
        for r0 in range(0, n, rows):
            r1 = min(n, r0 + rows)
            grid = xs[r0:r1]
            dx = xs[None, :] - grid[:, None]
            W = eval_scaled(self.kernel, dx[None, :, :], hcol)
            idx = np.arange(r1 - r0)
            W[:, idx, r0 + idx] = 0.0
            if self.family == "lp":
                v, _, s = _local_poly_core(dx, W, ys, self.degree, hcol)
            elif isinstance(self.de, ExponentialDE):
                v, _, s = _affine_core(exponential_basis(self.de.lam, self.degree, dx), 0.0, W, ys)
            else:
                S, T = linear_basis(self.de, self.degree, grid, dx)
                v, _, s = _affine_core(S, T, W, ys)
            values[:, r0:r1] = v
            status[:, r0:r1] = s
        return values, status


def parse_method(name: str, lam: Optional[float] = None, kernel=Kernel.GAUSSIAN, degree: Optional[int] = None) -> Estimator:
    """Build an :class:`Estimator` from its command-line name."""
    key = str(name).strip().lower()
    kernel = Kernel.parse(kernel)
    if key in _LP_ALIASES:
        est = Estimator("lp", _LP_ALIASES[key], kernel=kernel)
    elif key in ("lp", "localpoly"):
        if degree is None:
            raise ConfigError("method 'lp' needs a degree")
        est = Estimator("lp", int(degree), kernel=kernel)
    elif m := re.fullmatch(r"lp(\d+)", key):
        est = Estimator("lp", int(m.group(1)), kernel=kernel)
    elif m := re.fullmatch(r"de1-?(\d+)", key):
        est = Estimator("de1", int(m.group(1)), kernel=kernel)
    elif key in ("de1", "de") and degree is not None:
        est = Estimator("de1", int(degree), kernel=kernel)
    elif key == "nls":
        est = Estimator("nls")
    elif key in ("loglinear", "log-linear"):
        est = Estimator("loglinear")
    else:
        raise ConfigError(f"unknown method {name!r}")
    if est.family == "lp" and not 0 <= est.degree <= MAX_DEGREE:
        raise ConfigError(f"local polynomial degree must be in [0, {MAX_DEGREE}], got {est.degree}")
    if est.family == "de1" and not 0 <= est.degree <= MAX_K:
        raise ConfigError(f"DE1-k degree must be in [0, {MAX_K}], got {est.degree}")
    if lam is not None:
        est = est.with_lambda(lam)
    return est
