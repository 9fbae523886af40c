"""Conventional local polynomial regression (NW, LL, LQ, LC, degree p).

At each evaluation point ``x0`` the estimate is the intercept of the
kernel-weighted least-squares fit of ``y`` on the centred, bandwidth-scaled
monomials ``((x - x0) / h)^j``, ``j = 0..p``.  The solve goes through a
QR factorisation of the square-root-weighted design, never the normal
equations.

Points whose total kernel weight is below ``WEIGHT_FLOOR`` are flagged
degenerate (value NaN) instead of aborting the fit.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset, Fit
from .errors import ConfigError, RankDeficiencyError
from .kernel import Kernel, eval_scaled

__all__ = ["fit_local_poly", "nadaraya_watson", "WEIGHT_FLOOR", "MAX_DEGREE", "METHOD_NAMES"]

WEIGHT_FLOOR = 1e-12
MAX_DEGREE = 5
RCOND = 1e-10

METHOD_NAMES = {0: "NW", 1: "LL", 2: "LQ", 3: "LC"}

# status codes shared with the DE estimators and the LOOCV engine
OK, DEGENERATE, SINGULAR = 0, 1, 2


def bandwidth_column(h, m: int):
    """Shape ``h`` so it broadcasts against ``(m, n)`` row-wise."""
    h = np.asarray(h, dtype=float)
    if h.ndim == 1:
        if h.size != m:
            raise ConfigError(f"expected one bandwidth per grid point ({m}), got {h.size}")
        return h[:, None]
    return h


def kernel_matrix(kernel: Kernel, grid, xs, h):
    """Return ``(dx, W, hcol)`` with ``dx[j, i] = xs[i] - grid[j]``, ``W = K_h(dx)``.

    ``h`` is a scalar, one bandwidth per grid point (shape ``(m,)``) or any
    array already broadcastable against ``(..., m, 1)``.
    """
    grid = np.asarray(grid, dtype=float)
    dx = np.asarray(xs, dtype=float)[None, :] - grid[:, None]
    hcol = bandwidth_column(h, grid.size)
    return dx, eval_scaled(kernel, dx, hcol), hcol


def _local_poly_core(dx, W, ys, degree: int, h):
    """Local polynomial intercepts for a stack of weight matrices.

    ``W`` has shape ``(..., m, n)``; ``h`` broadcasts against ``(..., m, 1)``.
    Returns ``(values, weight_sums, status)`` each of shape ``(..., m)``.
    """
    W = np.asarray(W, dtype=float)
    ys = np.asarray(ys, dtype=float)
    wsum = W.sum(axis=-1)
    status = np.where(wsum < WEIGHT_FLOOR, DEGENERATE, OK)
    ok = status == OK

    if degree == 0:
        with np.errstate(invalid="ignore", divide="ignore"):
            values = (W @ ys) / wsum
        values = np.where(ok, values, np.nan)
        return values, wsum, status

    # rescale each row to max weight 1: the solution is unchanged, conditioning is not
    wmax = W.max(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        sw = np.sqrt(np.where(wmax > 0, W / wmax, 0.0))
    u = np.broadcast_to(dx / np.asarray(h, dtype=float), W.shape)
    # columns sw * u^j by repeated multiplication (much cheaper than a power ufunc)
    A = np.empty(W.shape + (degree + 1,))
    A[..., 0] = sw
    for j in range(1, degree + 1):
        np.multiply(A[..., j - 1], u, out=A[..., j])
    b = ys * sw

    if A.shape[-2] < degree + 1:
        status = np.where(ok, SINGULAR, status)
        return np.full(wsum.shape, np.nan), wsum, status

    Q, R = np.linalg.qr(A)
    qtb = np.einsum("...ij,...i->...j", Q, b)
    diag = np.abs(np.diagonal(R, axis1=-2, axis2=-1))
    singular = ok & ~(diag.min(axis=-1) > RCOND * diag.max(axis=-1))
    status = np.where(singular, SINGULAR, status)

    good = status == OK
    eye = np.eye(degree + 1)
    R_safe = np.where(good[..., None, None], R, eye)
    coef = np.linalg.solve(R_safe, qtb[..., None])[..., 0]
    values = np.where(good, coef[..., 0], np.nan)
    return values, wsum, status


def fit_local_poly(data: Dataset, degree: int, kernel: Kernel = Kernel.GAUSSIAN, h=None, grid=None) -> Fit:
    """Local polynomial fit of the given degree.

    Parameters
    ----------
    data : Dataset
    degree : int
        0 (Nadaraya-Watson) .. 5.
    kernel : Kernel
    h : float or array of shape (len(grid),)
        Bandwidth, or one bandwidth per evaluation point.
    grid : array-like, optional
        Evaluation points; defaults to the design points.

    Raises
    ------
    RankDeficiencyError
        If the weighted design is numerically singular at a non-degenerate
        evaluation point.
    """
    if int(degree) != degree or not 0 <= degree <= MAX_DEGREE:
        raise ConfigError(f"degree must be an integer in [0, {MAX_DEGREE}], got {degree!r}")
    degree = int(degree)
    if h is None:
        raise ConfigError("a bandwidth is required")
    if data.n < degree + 1:
        raise ConfigError(f"degree {degree} needs at least {degree + 1} observations, got {data.n}")
    grid = data.xs.copy() if grid is None else np.atleast_1d(np.asarray(grid, dtype=float))
    dx, W, hcol = kernel_matrix(kernel, grid, data.xs, h)
    values, wsum, status = _local_poly_core(dx, W, data.ys, degree, hcol)
    bad = np.flatnonzero(status == SINGULAR)
    if bad.size:
        raise RankDeficiencyError(float(grid[bad[0]]))
    name = METHOD_NAMES.get(degree, f"LP{degree}")
    return Fit(grid, values, name, _bandwidth_record(h), wsum, status == DEGENERATE)


def _bandwidth_record(h):
    h = np.asarray(h, dtype=float)
    return float(h) if h.ndim == 0 else h.copy()


def nadaraya_watson(data: Dataset, kernel: Kernel = Kernel.GAUSSIAN, h=None, grid=None) -> Fit:
    return fit_local_poly(data, 0, kernel, h, grid)
