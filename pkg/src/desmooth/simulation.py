"""Monte-Carlo studies: design and noise generation, MAD tables, pointwise
MSE curves and the DE1-1 / NW variance-ratio study.

Replication ``r`` draws from its own generator seeded by ``(seed, r)``, so a
study gives identical results whether replications run serially or in a
process pool.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy import stats

from .bandwidth import (
    BandwidthGrid,
    OptimalBandwidthInputs,
    baseline_optimal_bandwidth,
    default_cv_grid,
    loocv_select,
    optimal_bandwidth,
)
from .data import Dataset, bandwidth_heuristic
from .delocal import exponential_basis
from .errors import (
    ConfigError,
    DesmoothError,
    EmptyDatasetError,
    UndefinedMADError,
)
from .estimators import Estimator, parse_method
from .kernel import Kernel, eval_scaled

__all__ = [
    "UniformRandom",
    "BetaRandom",
    "BetaQuantile",
    "Gapped",
    "Normal",
    "StudentT",
    "Laplace",
    "ExponentialTruth",
    "LOOCV",
    "FixedBandwidth",
    "CorollaryOptimal",
    "SimConfig",
    "SimReport",
    "MseCurve",
    "stream",
    "generate_dataset",
    "mad",
    "run_mad_study",
    "run_mse_curve",
    "variance_ratio_study",
    "resolve_workers",
]



def stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for replication ``index`` of a study seeded ``seed``."""
    if seed < 0 or index < 0:
        raise ConfigError("seed and stream index must be nonnegative")
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


# ---------------------------------------------------------------------------
# designs


@dataclass(frozen=True)
class UniformRandom:
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if not self.a < self.b:
            raise ConfigError(f"uniform design needs a < b, got [{self.a}, {self.b}]")

    @property
    def interval(self):
        return (self.a, self.b)

    def sample(self, n, rng):
        return rng.uniform(self.a, self.b, n)

    def density(self, x):
        return np.where((np.asarray(x) >= self.a) & (np.asarray(x) <= self.b), 1.0 / (self.b - self.a), 0.0)

    def density_derivative(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class BetaRandom:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ConfigError("beta shape parameters must be positive")

    @property
    def interval(self):
        return (0.0, 1.0)

    def sample(self, n, rng):
        return rng.beta(self.alpha, self.beta, n)

    def density(self, x):
        return stats.beta.pdf(x, self.alpha, self.beta)

    def density_derivative(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.density(x) * ((self.alpha - 1.0) / x - (self.beta - 1.0) / (1.0 - x))


@dataclass(frozen=True)
class BetaQuantile(BetaRandom):
    """Deterministic design at the Beta quantiles ``i / (n + 1)``."""

    def sample(self, n, rng):
        return stats.beta.ppf(np.arange(1, n + 1) / (n + 1.0), self.alpha, self.beta)


@dataclass(frozen=True)
class Gapped:
    """A base design with every point inside the open interval ``gap`` removed."""

    base: Union[UniformRandom, BetaRandom, BetaQuantile]
    gap: tuple

    def __post_init__(self):
        lo, hi = self.gap
        a, b = self.base.interval
        if not (a <= lo < hi <= b):
            raise ConfigError(f"gap {self.gap} must lie inside {self.base.interval}")

    @property
    def interval(self):
        return self.base.interval

    def sample(self, n, rng):
        x = self.base.sample(n, rng)
        lo, hi = self.gap
        return x[(x <= lo) | (x >= hi)]

    def density(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.gap
        outside = (x <= lo) | (x >= hi)
        return np.where(outside, self.base.density(x), 0.0) / (1.0 - self._gap_mass())

    def density_derivative(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.gap
        outside = (x <= lo) | (x >= hi)
        return np.where(outside, self.base.density_derivative(x), 0.0) / (1.0 - self._gap_mass())

    def _gap_mass(self):
        from scipy import integrate

        lo, hi = self.gap
        return integrate.quad(lambda t: float(self.base.density(t)), lo, hi)[0]


# ---------------------------------------------------------------------------
# noise and truth


@dataclass(frozen=True)
class Normal:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError("normal noise needs sigma > 0")

    def draw(self, n, rng):
        return rng.normal(0.0, self.sigma, n)

    @property
    def variance(self):
        return self.sigma**2


@dataclass(frozen=True)
class StudentT:
    df: float

    def __post_init__(self):
        if not self.df > 2:
            raise ConfigError("Student-t noise needs df > 2")

    def draw(self, n, rng):
        return rng.standard_t(self.df, n)

    @property
    def variance(self):
        return self.df / (self.df - 2.0)


@dataclass(frozen=True)
class Laplace:
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ConfigError("Laplace noise needs scale > 0")

    def draw(self, n, rng):
        return rng.laplace(self.loc, self.scale, n)

    @property
    def variance(self):
        return 2.0 * self.scale**2


@dataclass(frozen=True)
class ExponentialTruth:
    g0: float = 1.0
    lam: float = 1.0

    def __call__(self, x):
        return self.g0 * np.exp(self.lam * np.asarray(x, dtype=float))


def generate_dataset(design, truth, noise, n: int, rng: np.random.Generator) -> Dataset:
    if n < 1:
        raise ConfigError(f"sample size must be at least 1, got {n}")
    xs = np.asarray(design.sample(n, rng), dtype=float)
    if xs.size == 0:
        raise EmptyDatasetError("design produced no points (gap covers every draw)")
    ys = truth(xs) + noise.draw(xs.size, rng)
    return Dataset(xs, ys, design.interval)


def mad(true_values, fitted) -> float:
    """Median absolute deviation between fitted and true values.

    Non-finite fitted values are skipped; even counts average the middle two.
    """
    true_values = np.asarray(true_values, dtype=float)
    fitted = np.asarray(fitted, dtype=float)
    if true_values.shape != fitted.shape:
        raise ValueError("true and fitted values differ in length")
    keep = np.isfinite(fitted)
    if not np.any(keep):
        raise UndefinedMADError("every fitted value is degenerate")
    return float(np.median(np.abs(true_values[keep] - fitted[keep])))


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class LOOCV:
    grid: Optional[tuple] = None  # explicit bandwidths; None -> default_cv_grid

    def bandwidth_grid(self, xs):
        return default_cv_grid(xs) if self.grid is None else BandwidthGrid(np.asarray(self.grid))


@dataclass(frozen=True)
class FixedBandwidth:
    h: float

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigError("fixed bandwidth must be positive")


@dataclass(frozen=True)
class CorollaryOptimal:
    """Pointwise oracle bandwidths from the true lambda, design density and noise variance."""


@dataclass(frozen=True)
class SimConfig:
    truth: ExponentialTruth
    design: object
    noise: object
    n: int
    reps: int
    methods: tuple
    seed: int = 0
    bandwidth_policy: object = field(default_factory=LOOCV)
    kernel: Kernel = Kernel.GAUSSIAN

    def __post_init__(self):
        if self.reps < 1:
            raise ConfigError("reps must be at least 1")
        if not self.methods:
            raise ConfigError("at least one method is required")
        if self.n < 1:
            raise ConfigError("n must be at least 1")
        object.__setattr__(self, "methods", tuple(str(m) for m in self.methods))
        object.__setattr__(self, "kernel", Kernel.parse(self.kernel))
        for name in self.methods:
            parse_method(name)

    def estimators(self) -> list[Estimator]:
        return [parse_method(m, lam=self.truth.lam, kernel=self.kernel) for m in self.methods]

    def describe(self) -> dict:
        def enc(obj):
            if hasattr(obj, "__dataclass_fields__"):
                d = {"kind": type(obj).__name__}
                for k in obj.__dataclass_fields__:
                    d[k] = enc(getattr(obj, k))
                return d
            if isinstance(obj, Kernel):
                return obj.value
            if isinstance(obj, (list, tuple)):
                return [enc(v) for v in obj]
            return obj

        return enc(self)


def _corollary_bandwidths(est: Estimator, config: SimConfig, n: int, points) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    f = np.atleast_1d(config.design.density(points))
    fp = np.atleast_1d(config.design.density_derivative(points))
    out = np.empty(points.size)
    for j, x0 in enumerate(points):
        inputs = OptimalBandwidthInputs(
            config.noise.variance, n, float(f[j]), config.truth.lam, float(x0),
            config.truth.g0, float(fp[j]), config.kernel,
        )
        if est.family == "de1":
            out[j] = optimal_bandwidth(est.degree, inputs)
        elif est.family == "lp" and est.degree <= 3:
            out[j] = baseline_optimal_bandwidth(est.label, inputs)
        else:
            raise ConfigError(f"no asymptotic bandwidth formula for {est.label}")
    return out


def _choose_bandwidth(est: Estimator, config: SimConfig, data: Dataset, points):
    policy = config.bandwidth_policy
    if isinstance(policy, FixedBandwidth):
        return policy.h
    if isinstance(policy, CorollaryOptimal):
        return _corollary_bandwidths(est, config, data.n, points)
    h, _ = loocv_select(data, est, policy.bandwidth_grid(data.xs))
    return h


def _fit_one(est: Estimator, config: SimConfig, data: Dataset, points):
    """Fitted values at ``points`` or a failure tag."""
    try:
        if est.needs_bandwidth:
            h = _choose_bandwidth(est, config, data, points)
            fit = est.fit(data, h, points)
        else:
            fit = est.fit(data, None, points)
    except DesmoothError:
        return None, "degenerate", None
    if not fit.converged:
        return None, "nonconverged", None
    h = fit.bandwidth
    return fit.values, "ok", (float(np.median(h)) if h is not None else None)


# ---------------------------------------------------------------------------
# MAD study


@dataclass
class SimReport:
    methods: list
    mads: dict  # label -> ndarray (NaN where excluded)
    degenerate: dict
    nonconverged: dict
    bandwidths: dict  # label -> ndarray of median bandwidth per replication
    seed: int
    config: dict

    @property
    def reps(self) -> int:
        return len(next(iter(self.mads.values())))

    def mean(self, method) -> float:
        v = self.mads[method]
        v = v[np.isfinite(v)]
        return float(np.mean(v)) if v.size else math.nan

    def se(self, method) -> float:
        v = self.mads[method]
        v = v[np.isfinite(v)]
        return float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan

    def rows(self):
        for m in self.methods:
            yield m, 1000.0 * self.mean(m), 1000.0 * self.se(m), self.degenerate[m], self.nonconverged[m]

    def to_csv(self) -> str:
        lines = ["method,mean_mad_x1000,se_x1000,degenerate_count"]
        for m, mean, se, deg, nonconv in self.rows():
            lines.append(f"{m},{mean:.17g},{se:.17g},{deg + nonconv}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "reps": self.reps,
            "config": self.config,
            "methods": [
                {
                    "method": m,
                    "mean_mad": self.mean(m),
                    "se_mad": self.se(m),
                    "mean_mad_x1000": 1000.0 * self.mean(m),
                    "se_x1000": 1000.0 * self.se(m),
                    "degenerate_count": self.degenerate[m],
                    "nonconverged_count": self.nonconverged[m],
                    "mad": [None if not np.isfinite(v) else float(v) for v in self.mads[m]],
                    "bandwidth": [None if not np.isfinite(v) else float(v) for v in self.bandwidths[m]],
                }
                for m in self.methods
            ],
        }

    def format_table(self) -> str:
        width = max(len(m) for m in self.methods)
        out = [f"{'':<{width}}  Mean (SE), MAD x 1000"]
        for m, mean, se, deg, nonconv in self.rows():
            flag = f"  [{deg} degenerate, {nonconv} nonconverged]" if deg or nonconv else ""
            out.append(f"{m:<{width}}  {mean:.2f} ({se:.2f}){flag}")
        return "\n".join(out)


def _mad_replication(config: SimConfig, r: int):
    rng = stream(config.seed, r)
    data = generate_dataset(config.design, config.truth, config.noise, config.n, rng)
    truth = config.truth(data.xs)
    out = []
    for est in config.estimators():
        values, tag, h = _fit_one(est, config, data, data.xs)
        if tag == "ok":
            try:
                out.append((mad(truth, values), tag, h))
            except UndefinedMADError:
                out.append((math.nan, "degenerate", h))
        else:
            out.append((math.nan, tag, h))
    return out


def _mad_chunk(args):
    config, indices = args
    return [_mad_replication(config, r) for r in indices]


def resolve_workers(workers: Optional[int] = None) -> int:
    """Worker count: explicit value, else ``DESMOOTH_THREADS`` (0 = all CPUs)."""
    if workers is None:
        try:
            workers = int(os.environ.get("DESMOOTH_THREADS", "0"))
        except ValueError:
            raise ConfigError("DESMOOTH_THREADS must be an integer") from None
    if workers < 0:
        raise ConfigError("worker count must be nonnegative")
    return workers or (os.cpu_count() or 1)


def _run_indexed(fn, config, reps, workers):
    workers = min(resolve_workers(workers), reps)
    indices = list(range(reps))
    if workers <= 1:
        return fn((config, indices))
    size = math.ceil(reps / (4 * workers))
    chunks = [indices[i:i + size] for i in range(0, reps, size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(fn, [(config, c) for c in chunks]))
    return [item for part in parts for item in part]


def run_mad_study(config: SimConfig, workers: Optional[int] = None) -> SimReport:
    """Replicate the MAD comparison; failures are counted, never raised."""
    labels = [e.label for e in config.estimators()]
    results = _run_indexed(_mad_chunk, config, config.reps, workers)
    mads = {m: np.full(config.reps, np.nan) for m in labels}
    bws = {m: np.full(config.reps, np.nan) for m in labels}
    degenerate = {m: 0 for m in labels}
    nonconverged = {m: 0 for m in labels}
    for r, rep in enumerate(results):
        for m, (value, tag, h) in zip(labels, rep):
            mads[m][r] = value
            if h is not None:
                bws[m][r] = h
            if tag == "degenerate":
                degenerate[m] += 1
            elif tag == "nonconverged":
                nonconverged[m] += 1
    return SimReport(labels, mads, degenerate, nonconverged, bws, config.seed, config.describe())


# ---------------------------------------------------------------------------
# pointwise MSE curves


@dataclass
class MseCurve:
    grid: np.ndarray
    log_mse: dict  # label -> ndarray over grid
    counts: dict  # label -> ndarray of replications used at each grid point
    seed: int

    def to_csv(self) -> str:
        labels = list(self.log_mse)
        lines = ["x0," + ",".join(labels)]
        for j, x0 in enumerate(self.grid):
            lines.append(",".join([f"{x0:.17g}"] + [f"{self.log_mse[m][j]:.17g}" for m in labels]))
        return "\n".join(lines) + "\n"


def _mse_chunk(args):
    (config, grid), indices = args
    labels = [e.label for e in config.estimators()]
    sq = {m: np.zeros(grid.size) for m in labels}
    cnt = {m: np.zeros(grid.size, dtype=int) for m in labels}
    truth = config.truth(grid)
    for r in indices:
        rng = stream(config.seed, r)
        data = generate_dataset(config.design, config.truth, config.noise, config.n, rng)
        for est, m in zip(config.estimators(), labels):
            values, tag, _ = _fit_one(est, config, data, grid)
            if tag != "ok":
                continue
            ok = np.isfinite(values)
            sq[m][ok] += (values[ok] - truth[ok]) ** 2
            cnt[m][ok] += 1
    return [(sq, cnt)]


def run_mse_curve(config: SimConfig, eval_grid: Sequence[float], workers: Optional[int] = None) -> MseCurve:
    """Natural log of the Monte-Carlo MSE of each method at every grid point."""
    grid = np.atleast_1d(np.asarray(eval_grid, dtype=float))
    a, b = config.design.interval
    if np.any(grid < a) or np.any(grid > b):
        raise ConfigError(f"evaluation grid must lie inside [{a}, {b}]")
    labels = [e.label for e in config.estimators()]
    parts = _run_indexed(_mse_chunk, (config, grid), config.reps, workers)
    sq = {m: np.zeros(grid.size) for m in labels}
    cnt = {m: np.zeros(grid.size, dtype=int) for m in labels}
    # summation order is fixed by replication chunk order
    for part_sq, part_cnt in parts:
        for m in labels:
            sq[m] += part_sq[m]
            cnt[m] += part_cnt[m]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_mse = {m: np.log(sq[m] / cnt[m]) for m in labels}
    return MseCurve(grid, log_mse, cnt, config.seed)


# ---------------------------------------------------------------------------
# variance ratio


def variance_ratio_study(n: int = 10, lam: float = 1.0, seed: int = 0, h: Optional[float] = None,
                         kernel: Kernel = Kernel.GAUSSIAN, stream_index: int = 0):
    """Ratio of the exact conditional variances of DE1-1 and NW at each design point.

    With smoother weights ``w`` the conditional variance is ``sigma^2 sum w_i^2``,
    so ``sigma^2`` cancels.  The design is ``n`` uniform draws on ``[0, 1]``;
    ``h`` defaults to half the median spacing of the drawn design.

    Returns ``(mean_ratio, min_ratio, max_ratio)``.
    """
    if n < 2:
        raise ConfigError("variance ratio study needs n >= 2")
    xs = np.sort(stream(seed, stream_index).uniform(0.0, 1.0, n))
    h = bandwidth_heuristic(xs) if h is None else float(h)
    ratios = variance_ratios(xs, lam, h, kernel)
    return float(np.mean(ratios)), float(np.min(ratios)), float(np.max(ratios))


def variance_ratios(xs, lam: float, h: float, kernel: Kernel = Kernel.GAUSSIAN) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    dx = xs[None, :] - xs[:, None]
    K = eval_scaled(kernel, dx, h)
    w_nw = K / K.sum(axis=1, keepdims=True)
    S = exponential_basis(lam, 1, dx)
    w_de = S * K / np.sum(S * S * K, axis=1, keepdims=True)
    return np.sum(w_de**2, axis=1) / np.sum(w_nw**2, axis=1)
