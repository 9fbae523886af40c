"""Parametric fits of the exponential solution ``g(x) = g(a) exp(lambda (x - a))``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import DegenerateDesignError, NonPositiveResponseError

__all__ = ["ExponentialFit", "fit_exponential_nls", "fit_loglinear", "exponential_curve"]


@dataclass
class ExponentialFit:
    g_a: float
    lam: float
    rss: float
    iterations: int
    converged: bool
    a: float = 0.0
    rss_trace: list = field(default_factory=list)

    def predict(self, x):
        return exponential_curve(x, self.g_a, self.lam, self.a)


def exponential_curve(x, g_a, lam, a=0.0):
    return g_a * np.exp(lam * (np.asarray(x, dtype=float) - a))


def _check_design(data: Dataset):
    if data.n < 2:
        raise DegenerateDesignError("need at least two observations")
    if np.ptp(data.xs) == 0:
        raise DegenerateDesignError("all x values are equal")


def fit_loglinear(data: Dataset) -> tuple[float, float]:
    """OLS of ``log y`` on ``x - a``; returns ``(log g(a), lambda)``."""
    _check_design(data)
    if np.any(data.ys <= 0):
        raise NonPositiveResponseError("log-linear fit needs strictly positive responses")
    t = data.xs - data.interval[0]
    z = np.log(data.ys)
    tc = t - t.mean()
    slope = float(np.dot(tc, z - z.mean()) / np.dot(tc, tc))
    intercept = float(z.mean() - slope * t.mean())
    return intercept, slope


def fit_exponential_nls(data: Dataset, init=None, max_iter: int = 200, lam=None) -> ExponentialFit:
    """Nonlinear least squares for ``(g(a), lambda)`` by damped Gauss-Newton.

    Passing ``lam`` holds the rate fixed and fits ``g(a)`` alone.

    A step is accepted only if it strictly lowers the residual sum of
    squares; otherwise the damping is increased (Levenberg-Marquardt style).
    Stops when the relative RSS change of an accepted step drops below 1e-12
    or the gradient norm below 1e-10.  The iteration runs on ``y / max|y|``
    so both tests, and hence the fit, are equivariant under rescaling of
    ``y``.  Hitting ``max_iter`` returns a result with ``converged=False``.
    """
    _check_design(data)
    a = data.interval[0]
    t = data.xs - a
    scale = float(np.max(np.abs(data.ys))) or 1.0
    y = data.ys / scale
    if init is None:
        if np.all(y > 0):
            log_ga, lam0 = fit_loglinear(data)
            init = (float(np.exp(log_ga)), lam0)
        else:
            init = (float(np.mean(data.ys)), 0.0)
    theta = np.array(init, dtype=float)
    theta[0] /= scale
    free = slice(0, 2)
    if lam is not None:
        theta[1] = float(lam)
        free = slice(0, 1)

    def residuals(th):
        return y - th[0] * np.exp(th[1] * t)

    r = residuals(theta)
    rss = float(r @ r)
    trace = [rss]
    mu = 1e-3
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        e = np.exp(theta[1] * t)
        J = np.column_stack([e, theta[0] * t * e])[:, free]  # d(model)/d(theta)
        grad = J.T @ r
        if np.linalg.norm(grad) < 1e-10:
            converged = True
            break
        JTJ = J.T @ J
        accepted = False
        while mu < 1e16:
            damped = JTJ + mu * np.diag(np.diag(JTJ) + 1e-12 * np.trace(JTJ) + 1e-300)
            try:
                step = np.linalg.solve(damped, grad)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            cand = theta.copy()
            cand[free] += step
            with np.errstate(over="ignore", invalid="ignore"):
                r_new = residuals(cand)
                rss_new = float(r_new @ r_new)
            if np.isfinite(rss_new) and rss_new < rss:
                accepted = True
                break
            mu *= 10.0
        if not accepted:
            # no descent direction left at machine precision
            converged = True
            break
        change = (rss - rss_new) / max(rss, 1e-300)
        theta, r, rss = cand, r_new, rss_new
        trace.append(rss)
        mu = max(mu / 10.0, 1e-12)
        if change < 1e-12:
            converged = True
            break
    s2 = scale * scale
    return ExponentialFit(float(theta[0] * scale), float(theta[1]), rss * s2, it, converged, a, [v * s2 for v in trace])
