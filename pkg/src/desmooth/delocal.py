"""Local estimators constrained by a first-order differential equation.

With ``g' = F(x, g)`` every Taylor coefficient of ``g`` about ``x0`` is a
function of the single local parameter ``alpha = g(x0)``, so the degree-k
Taylor polynomial ``g*_k(x; alpha)`` is fitted by kernel-weighted least
squares over ``alpha`` alone (the DE1-k estimator).

For linear equations ``g' = a(x) g + b(x)`` the derivatives are affine in
``alpha``::

    g^(p)(x0) = A_p * alpha + B_p
    A_{p+1} = sum_l C(p, l) a^(l)(x0) A_{p-l}
    B_{p+1} = sum_l C(p, l) a^(l)(x0) B_{p-l} + b^(p)(x0)

and the minimiser has the closed form
``sum (y - T) S K_h / sum S^2 K_h`` with ``S = sum_p A_p dx^p / p!`` and
``T = sum_p B_p dx^p / p!``.  Nonlinear ``F`` is handled by a bracketed
scalar search (degree 1 or 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .data import Dataset, Fit
from .errors import ConfigError, MissingDerivativeError, OptimizerFailureError
from .kernel import Kernel, eval_scaled
from .localpoly import DEGENERATE, OK, WEIGHT_FLOOR, _bandwidth_record, kernel_matrix

__all__ = [
    "ExponentialDE",
    "LinearFirstOrderDE",
    "GeneralFirstOrderDE",
    "DerivativeFunction",
    "AffineApproximant",
    "SolverOptions",
    "affine_coeffs",
    "de1k_exponential",
    "de1k_linear",
    "de11_general",
    "local_objective",
    "exponential_approximant",
    "linear_approximant",
    "general_approximant",
    "MAX_K",
]

MAX_K = 7


# ---------------------------------------------------------------------------
# DE descriptions


@dataclass(frozen=True)
class ExponentialDE:
    """``g' = lambda * g``."""

    lam: float

    def __post_init__(self):
        if not math.isfinite(self.lam):
            raise ConfigError(f"lambda must be finite, got {self.lam!r}")

    def as_linear(self) -> "LinearFirstOrderDE":
        return LinearFirstOrderDE(DerivativeFunction.constant(self.lam), DerivativeFunction.constant(0.0))


class DerivativeFunction:
    """A function together with its derivatives: ``f(x, order)``.

    Build one from a list of callables (``[f, f', f'', ...]``), from a
    constant, or from polynomial coefficients.  Requesting an order that was
    not supplied raises :class:`MissingDerivativeError`.
    """

    def __init__(self, derivatives: Sequence[Callable], name: str = "f", max_order: Optional[int] = None):
        self._derivs = list(derivatives)
        self.name = name
        self.max_order = len(self._derivs) - 1 if max_order is None else max_order

    @classmethod
    def constant(cls, c: float, name: str = "const"):
        c = float(c)

        def const(x):
            return np.full(np.shape(x), c) if np.ndim(x) else c

        return _Infinite(lambda x, order: const(x) if order == 0 else const(x) * 0.0, name)

    @classmethod
    def polynomial(cls, coeffs: Sequence[float], name: str = "poly"):
        """Polynomial with coefficients in increasing powers."""
        base = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))

        def ev(x, order):
            return base.deriv(order)(x) if order else base(x)

        return _Infinite(ev, name)

    def __call__(self, x, order: int = 0):
        if order < 0 or order > self.max_order:
            raise MissingDerivativeError(self.name, order)
        return self._derivs[order](x)


class _Infinite(DerivativeFunction):
    def __init__(self, fn, name):
        self._fn = fn
        self.name = name
        self.max_order = math.inf

    def __call__(self, x, order: int = 0):
        if order < 0:
            raise MissingDerivativeError(self.name, order)
        return self._fn(x, order)


def _as_derivative_function(f, name) -> DerivativeFunction:
    if isinstance(f, DerivativeFunction):
        return f
    if isinstance(f, (int, float)):
        return DerivativeFunction.constant(f, name)
    if callable(f):
        return DerivativeFunction([f], name)
    return DerivativeFunction(list(f), name)


@dataclass(frozen=True)
class LinearFirstOrderDE:
    """``g' = a(x) g + b(x)`` with derivative-providing coefficients."""

    a: DerivativeFunction
    b: DerivativeFunction

    def __post_init__(self):
        object.__setattr__(self, "a", _as_derivative_function(self.a, "a"))
        object.__setattr__(self, "b", _as_derivative_function(self.b, "b"))


@dataclass(frozen=True)
class GeneralFirstOrderDE:
    """``g' = F(x, g)`` with optional partials ``F1 = dF/dx`` and ``F2 = dF/dg``.

    A finite-difference Lipschitz spot check in ``g`` is run on construction
    over ``probe_x x probe_g``.
    """

    F: Callable
    F1: Optional[Callable] = None
    F2: Optional[Callable] = None
    probe_x: tuple = (0.0, 1.0)
    probe_g: tuple = (-2.0, 2.0)
    lipschitz_bound: float = 1e6

    def __post_init__(self):
        xs = np.linspace(*self.probe_x, 11)
        gs = np.linspace(*self.probe_g, 21)
        X, G = np.meshgrid(xs, gs)
        delta = 1e-6 * max(1.0, float(np.max(np.abs(gs))))
        with np.errstate(all="ignore"):
            f0 = np.asarray(self.F(X, G), dtype=float)
            f1 = np.asarray(self.F(X, G + delta), dtype=float)
            q = np.abs(f1 - f0) / delta
        if not np.all(np.isfinite(q)) or np.max(q) > self.lipschitz_bound:
            raise ConfigError("F failed the Lipschitz spot check in g over the probe grid")

    def g2(self, x, g):
        """Second derivative ``F1 + F2 * F`` along a solution."""
        if self.F1 is None or self.F2 is None:
            raise MissingDerivativeError("F", 1)
        return self.F1(x, g) + self.F2(x, g) * self.F(x, g)


@dataclass(frozen=True)
class AffineApproximant:
    """Taylor coefficients ``g^(p)(x0) = A[p] * g(x0) + B[p]``, ``p = 0..k``."""

    A: np.ndarray
    B: np.ndarray

    @property
    def k(self) -> int:
        return self.A.size - 1

    def basis(self, dx):
        """Return ``(S, T)``: the Taylor sums of ``A`` and ``B`` at offsets ``dx``."""
        return _taylor_sum(self.A, dx), _taylor_sum(self.B, dx)

    def predict(self, dx, alpha):
        S, T = self.basis(dx)
        return alpha * S + T


def _taylor_sum(coeffs, dx):
    """``sum_p coeffs[p] dx^p / p!`` evaluated without forming factorials."""
    dx = np.asarray(dx, dtype=float)
    out = np.zeros_like(dx)
    term = np.ones_like(dx)
    for p, c in enumerate(coeffs):
        if p:
            term = term * dx / p
        if c != 0.0:
            out = out + c * term
    return out


# ---------------------------------------------------------------------------
# closed forms


def _check_k(k, lo=1):
    if int(k) != k or not lo <= k <= MAX_K:
        raise ConfigError(f"Taylor degree must be an integer in [{lo}, {MAX_K}], got {k!r}")
    return int(k)


def affine_coeffs(de: LinearFirstOrderDE, x0: float, k: int) -> AffineApproximant:
    """Affine Taylor coefficients of the solution of a linear DE about ``x0``.

    The ``a^l`` in the derivative recursion is the l-th derivative of ``a``;
    under ``a = lambda`` this gives ``g^(p) = lambda^p g``.
    """
    k = _check_k(k, lo=0)
    a = [float(de.a(x0, l)) for l in range(k)]
    b = [float(de.b(x0, l)) for l in range(k)]
    A = np.zeros(k + 1)
    B = np.zeros(k + 1)
    A[0] = 1.0
    for p in range(k):
        acc_a = 0.0
        acc_b = b[p]
        for l in range(p + 1):
            c = math.comb(p, l) * a[l]
            acc_a += c * A[p - l]
            acc_b += c * B[p - l]
        A[p + 1] = acc_a
        B[p + 1] = acc_b
    return AffineApproximant(A, B)


def _affine_core(S, T, W, ys):
    """Closed-form single-parameter fit.

    ``S``, ``T`` have shape ``(m, n)``; ``W`` shape ``(..., m, n)``.
    Returns ``(values, weight_sums, status)``.
    """
    wsum = W.sum(axis=-1)
    SW = S * W
    den = np.sum(SW * S, axis=-1)
    num = np.sum(SW * (ys - T), axis=-1)
    status = np.where((den < WEIGHT_FLOOR) | (wsum < WEIGHT_FLOOR), DEGENERATE, OK)
    with np.errstate(invalid="ignore", divide="ignore"):
        values = np.where(status == OK, num / den, np.nan)
    return values, wsum, status


def _grid_or_design(data, grid):
    return data.xs.copy() if grid is None else np.atleast_1d(np.asarray(grid, dtype=float))


def exponential_basis(lam: float, k: int, dx):
    """``S = sum_{p<=k} (lam dx)^p / p!``."""
    return _taylor_sum(np.ones(k + 1), lam * np.asarray(dx, dtype=float))


def de1k_exponential(data: Dataset, de, k: int, kernel: Kernel = Kernel.GAUSSIAN, h=None, grid=None) -> Fit:
    """DE1-k estimator for exponential growth ``g' = lambda g``.

    ``de`` is an :class:`ExponentialDE` or a bare rate.  ``k = 0`` gives the
    Nadaraya-Watson estimator.
    """
    lam = de.lam if isinstance(de, ExponentialDE) else float(de)
    k = _check_k(k, lo=0)
    if h is None:
        raise ConfigError("a bandwidth is required")
    grid = _grid_or_design(data, grid)
    dx, W, _ = kernel_matrix(kernel, grid, data.xs, h)
    S = exponential_basis(lam, k, dx)
    values, wsum, status = _affine_core(S, 0.0, W, data.ys)
    return Fit(grid, values, f"DE1-{k}", _bandwidth_record(h), wsum, status == DEGENERATE)


def linear_basis(de: LinearFirstOrderDE, k: int, grid, dx):
    S = np.empty_like(dx)
    T = np.empty_like(dx)
    for j, x0 in enumerate(grid):
        S[j], T[j] = affine_coeffs(de, float(x0), k).basis(dx[j])
    return S, T


def de1k_linear(data: Dataset, de: LinearFirstOrderDE, k: int, kernel: Kernel = Kernel.GAUSSIAN, h=None, grid=None) -> Fit:
    """DE1-k estimator for ``g' = a(x) g + b(x)``."""
    k = _check_k(k, lo=0)
    if h is None:
        raise ConfigError("a bandwidth is required")
    grid = _grid_or_design(data, grid)
    dx, W, _ = kernel_matrix(kernel, grid, data.xs, h)
    S, T = linear_basis(de, k, grid, dx)
    values, wsum, status = _affine_core(S, T, W, data.ys)
    return Fit(grid, values, f"DE1-{k}", _bandwidth_record(h), wsum, status == DEGENERATE)


# ---------------------------------------------------------------------------
# general F: scalar search


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_expansions: int = 60
    max_iter: int = 500


_GOLD = 0.5 * (3.0 - math.sqrt(5.0))


def local_objective(data: Dataset, alpha: float, x0: float, approximant: Callable, kernel: Kernel = Kernel.GAUSSIAN, h=None) -> float:
    """Kernel-weighted residual sum of squares of a one-parameter local fit.

    ``approximant(xs, alpha)`` returns the predictions at the design points.
    """
    w = eval_scaled(kernel, data.xs - x0, h)
    r = data.ys - approximant(data.xs, alpha)
    return float(np.sum(r * r * w))


def exponential_approximant(lam: float, k: int, x0: float) -> Callable:
    def predict(xs, alpha):
        return alpha * exponential_basis(lam, k, np.asarray(xs) - x0)

    return predict


def linear_approximant(de: LinearFirstOrderDE, k: int, x0: float) -> Callable:
    coeffs = affine_coeffs(de, x0, k)

    def predict(xs, alpha):
        return coeffs.predict(np.asarray(xs) - x0, alpha)

    return predict


def general_approximant(de: GeneralFirstOrderDE, degree: int, x0: float) -> Callable:
    def predict(xs, alpha):
        dx = np.asarray(xs) - x0
        out = alpha + dx * de.F(x0, alpha)
        if degree == 2:
            out = out + 0.5 * dx * dx * de.g2(x0, alpha)
        return out

    return predict


def _bracket(f, x0, step, max_expansions, where):
    """Expand downhill from ``(x0, x0 + step)`` until a minimum is bracketed."""
    a, b = x0, x0 + step
    fa, fb = f(a), f(b)
    if fb > fa:
        a, b, fa, fb = b, a, fb, fa
    growth = 1.0 + (1.0 + math.sqrt(5.0)) / 2.0
    c = b + growth * (b - a)
    fc = f(c)
    n = 0
    while not fc > fb:
        if n >= max_expansions or not math.isfinite(fc):
            raise OptimizerFailureError(where)
        a, fa, b, fb = b, fb, c, fc
        c = b + growth * (b - a)
        fc = f(c)
        n += 1
    return (a, b, c) if a < c else (c, b, a)


def _golden(f, lo, mid, hi, tol, max_iter, where):
    fm = f(mid)
    it = 0
    while hi - lo > tol * (1.0 + abs(mid)):
        if it >= max_iter:
            raise OptimizerFailureError(where, "golden-section search did not converge")
        it += 1
        if hi - mid > mid - lo:
            x = mid + _GOLD * (hi - mid)
            fx = f(x)
            if fx < fm:
                lo, mid, fm = mid, x, fx
            else:
                hi = x
        else:
            x = mid - _GOLD * (mid - lo)
            fx = f(x)
            if fx < fm:
                hi, mid, fm = mid, x, fx
            else:
                lo = x
    return mid, fm


def _polish(f, alpha, fa, scale):
    # one parabolic step through alpha +/- d; recovers digits lost to a flat minimum
    d = 1e-4 * max(scale, 1e-12)
    fl, fr = f(alpha - d), f(alpha + d)
    curv = fl - 2.0 * fa + fr
    if curv <= 0 or not math.isfinite(curv):
        return alpha
    cand = alpha - 0.5 * d * (fr - fl) / curv
    return cand if f(cand) <= fa else alpha


def de11_general(
    data: Dataset,
    de: GeneralFirstOrderDE,
    degree: int = 1,
    kernel: Kernel = Kernel.GAUSSIAN,
    h=None,
    grid=None,
    opts: SolverOptions = SolverOptions(),
) -> Fit:
    """DE1-1 / DE1-2 estimator for a general ``g' = F(x, g)``.

    Each grid point is a scalar minimisation of :func:`local_objective`,
    bracketed around the Nadaraya-Watson value at that point.
    """
    if degree not in (1, 2):
        raise ConfigError(f"degree must be 1 or 2, got {degree!r}")
    if degree == 2 and (de.F1 is None or de.F2 is None):
        raise ConfigError("degree 2 requires the partial derivatives F1 and F2")
    if h is None:
        raise ConfigError("a bandwidth is required")
    grid = _grid_or_design(data, grid)
    dx, W, _ = kernel_matrix(kernel, grid, data.xs, h)
    wsum = W.sum(axis=-1)
    values = np.full(grid.size, np.nan)
    degenerate = wsum < WEIGHT_FLOOR
    yscale = float(np.max(np.abs(data.ys))) or 1.0
    for j, x0 in enumerate(grid):
        if degenerate[j]:
            continue
        x0 = float(x0)
        w = W[j]
        d = dx[j]
        start = float(w @ data.ys / wsum[j])

        def objective(alpha, d=d, w=w, x0=x0):
            pred = alpha + d * de.F(x0, alpha)
            if degree == 2:
                pred = pred + 0.5 * d * d * de.g2(x0, alpha)
            r = data.ys - pred
            return float(np.sum(r * r * w))

        step = 0.1 * max(abs(start), 0.1 * yscale, 1e-8)
        lo, mid, hi = _bracket(objective, start, step, opts.max_expansions, x0)
        alpha, fa = _golden(objective, lo, mid, hi, opts.tol, opts.max_iter, x0)
        values[j] = _polish(objective, alpha, fa, hi - lo if hi > lo else abs(alpha))
    return Fit(grid, values, f"DE1-{degree}", _bandwidth_record(h), wsum, degenerate)
