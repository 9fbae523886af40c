"""Symmetric second-order kernels with their moment and roughness constants.

Conventions
-----------
``K(u)`` is the unscaled density, ``K_h(u) = K(u / h) / h`` the scaled one.

    mu_k = int u^k K(u) du          (moment)
    R_k  = int u^k K(u)^2 du        (roughness; R(K) = R_0)

The constants are tabulated as exact rationals (times ``1/(2 sqrt(pi))`` for
the Gaussian roughness) instead of being integrated at run time.
"""

from __future__ import annotations

import enum
import math
from fractions import Fraction

import numpy as np

from .errors import InvalidBandwidthError, UnsupportedMomentError

__all__ = ["Kernel", "eval_scaled", "moment", "roughness", "MAX_MOMENT"]

MAX_MOMENT = 6

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_GAUSS_R0 = 1.0 / (2.0 * math.sqrt(math.pi))


def _double_factorial(m: int) -> int:
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


def _gauss_moment(k: int) -> float:
    # E[Z^k] for Z ~ N(0, 1)
    return 0.0 if k % 2 else float(_double_factorial(k - 1))


def _gauss_roughness(k: int) -> float:
    # phi(u)^2 = N(0, 1/2) density / (2 sqrt(pi)), so R_k = R_0 * E[W^k], W ~ N(0, 1/2)
    if k % 2:
        return 0.0
    return _GAUSS_R0 * _double_factorial(k - 1) / 2 ** (k // 2)


def _epan_moment(k: int) -> float:
    if k % 2:
        return 0.0
    return float(Fraction(3, 2) * (Fraction(1, k + 1) - Fraction(1, k + 3)))


def _epan_roughness(k: int) -> float:
    if k % 2:
        return 0.0
    return float(
        Fraction(9, 8) * (Fraction(1, k + 1) - Fraction(2, k + 3) + Fraction(1, k + 5))
    )


class Kernel(enum.Enum):
    GAUSSIAN = "gaussian"
    EPANECHNIKOV = "epanechnikov"

    @classmethod
    def parse(cls, name: "str | Kernel") -> "Kernel":
        if isinstance(name, Kernel):
            return name
        key = str(name).strip().lower()
        aliases = {"gauss": "gaussian", "normal": "gaussian", "epan": "epanechnikov"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(f"unknown kernel {name!r}") from None

    def __call__(self, u):
        """Unscaled kernel density evaluated elementwise."""
        u = np.asarray(u, dtype=float)
        if self is Kernel.GAUSSIAN:
            return _INV_SQRT_2PI * np.exp(-0.5 * u * u)
        return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)

    @property
    def support(self) -> float:
        """Half-width of the support of ``K`` (``inf`` for the Gaussian)."""
        return math.inf if self is Kernel.GAUSSIAN else 1.0

    def scaled(self, u, h):
        return eval_scaled(self, u, h)

    def moment(self, k: int) -> float:
        return moment(self, k)

    def roughness(self, k: int = 0) -> float:
        return roughness(self, k)


def _check_order(k) -> int:
    if int(k) != k or k < 0:
        raise UnsupportedMomentError(f"moment order must be a nonnegative integer, got {k!r}")
    if k > MAX_MOMENT:
        raise UnsupportedMomentError(f"moments are tabulated up to order {MAX_MOMENT}, got {k}")
    return int(k)


def eval_scaled(kernel: Kernel, u, h):
    """Return ``K_h(u) = K(u / h) / h``.

    ``h`` may be an array broadcastable against ``u``.
    """
    h_arr = np.asarray(h, dtype=float)
    if not np.all(np.isfinite(h_arr)) or np.any(h_arr <= 0):
        raise InvalidBandwidthError(f"bandwidth must be positive and finite, got {h!r}")
    out = kernel(np.asarray(u, dtype=float) / h_arr) / h_arr
    return out if np.ndim(out) else float(out)


def moment(kernel: Kernel, k: int) -> float:
    k = _check_order(k)
    return _gauss_moment(k) if kernel is Kernel.GAUSSIAN else _epan_moment(k)


def roughness(kernel: Kernel, k: int = 0) -> float:
    k = _check_order(k)
    return _gauss_roughness(k) if kernel is Kernel.GAUSSIAN else _epan_roughness(k)
