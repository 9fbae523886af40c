"""Leading-order interior bias, variance and AMSE under exponential growth.

All formulas assume the true regression function satisfies
``g^(p)(x0) = lambda^p g(x0)`` and ``x0`` lies in the interior
``(a + h, b - h)``.

DE1-k bias, odd k::

    lambda^{k+1} g(x0) h^{k+1} mu_{k+1} / (k+1)!

DE1-k bias, even k::

    lambda^{k+1} g(x0) h^{k+2} mu_{k+2} (lambda/(k+2) + f'(x0)/f(x0)) / (k+1)!

DE1-k variance (any k)::

    sigma^2 R(K) / (n h f(x0))

The tabulated DE1-2 row of the source table carries a repeated ``mu_4`` and
the factor ``lambda + f'/f``; neither agrees with the general even-k
expression, which is the one implemented here.

The double-smoothing estimator's constants (``B(x0)``, ``V``, ``K*K``,
``L(u) = u K(u)``) are not implemented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .kernel import Kernel

__all__ = [
    "AsymptoticContext",
    "de1k_bias",
    "de1k_bias_theorem",
    "de1k_variance",
    "baseline_bias_variance",
    "amse",
    "BASELINE_METHODS",
]

BASELINE_METHODS = ("NW", "LL", "LQ", "LC")


@dataclass(frozen=True)
class AsymptoticContext:
    lam: float
    g_x0: float
    h: float
    n: int
    sigma2: float
    f_x0: float
    fprime_x0: float = 0.0
    kernel: Kernel = Kernel.GAUSSIAN

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h!r}")
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n!r}")
        if not self.f_x0 > 0:
            raise ValueError(f"f(x0) must be positive, got {self.f_x0!r}")
        if self.sigma2 < 0:
            raise ValueError(f"sigma2 must be nonnegative, got {self.sigma2!r}")

    @property
    def density_ratio(self) -> float:
        return self.fprime_x0 / self.f_x0

    def with_h(self, h: float) -> "AsymptoticContext":
        return AsymptoticContext(self.lam, self.g_x0, h, self.n, self.sigma2, self.f_x0, self.fprime_x0, self.kernel)


def de1k_bias(k: int, ctx: AsymptoticContext) -> float:
    """Leading interior bias of DE1-k.  ``k = 0`` is the Nadaraya-Watson case."""
    if int(k) != k or k < 0:
        raise ValueError(f"k must be a nonnegative integer, got {k!r}")
    k = int(k)
    mu = ctx.kernel.moment
    lead = ctx.lam ** (k + 1) * ctx.g_x0 / math.factorial(k + 1)
    if k % 2:
        return lead * ctx.h ** (k + 1) * mu(k + 1)
    return lead * ctx.h ** (k + 2) * mu(k + 2) * (ctx.lam / (k + 2) + ctx.density_ratio)


def de1k_bias_theorem(k: int, ctx: AsymptoticContext) -> float:
    """Same quantity written with the derivatives ``g^(p) = lambda^p g`` left explicit.

    Kept as an independent route for cross-checking :func:`de1k_bias`.
    """
    k = int(k)
    d = [ctx.lam**p * ctx.g_x0 for p in range(k + 3)]
    mu = ctx.kernel.moment
    if k % 2:
        return d[k + 1] / math.factorial(k + 1) * ctx.h ** (k + 1) * mu(k + 1)
    return (
        d[k + 2] / math.factorial(k + 2) + d[k + 1] / math.factorial(k + 1) * ctx.density_ratio
    ) * ctx.h ** (k + 2) * mu(k + 2)


def de1k_variance(ctx: AsymptoticContext) -> float:
    return ctx.sigma2 * ctx.kernel.roughness(0) / (ctx.n * ctx.h * ctx.f_x0)


def baseline_bias_variance(method: str, ctx: AsymptoticContext) -> tuple[float, float]:
    """Leading bias and variance of the NW, LL, LQ and LC estimators."""
    method = method.upper()
    K = ctx.kernel
    mu2, mu4, mu6 = K.moment(2), K.moment(4), K.moment(6)
    v0, v2, v4 = K.roughness(0), K.roughness(2), K.roughness(4)
    lam, g, h = ctx.lam, ctx.g_x0, ctx.h
    base_var = ctx.sigma2 / (ctx.n * h * ctx.f_x0)
    if method == "NW":
        bias = 0.5 * (lam**2 * g + 2.0 * lam * g * ctx.density_ratio) * h**2 * mu2
        return bias, base_var * v0
    if method == "LL":
        return 0.5 * lam**2 * g * h**2 * mu2, base_var * v0
    if method in ("LQ", "LC"):
        ratio = (mu2 * mu6 - mu4**2) / (mu2**2 - mu4)
        shape = lam**4 * g
        if method == "LQ":
            shape += 4.0 * lam**3 * g * ctx.density_ratio
        bias = ratio * shape * h**4 / 24.0
        var = base_var * (mu4**2 * v0 - 2.0 * mu2 * mu4 * v2 + mu2**2 * v4) / (mu2**2 - mu4) ** 2
        return bias, var
    raise ValueError(f"unknown baseline method {method!r}; expected one of {BASELINE_METHODS}")


def amse(k: int, ctx: AsymptoticContext) -> float:
    return de1k_bias(k, ctx) ** 2 + de1k_variance(ctx)
