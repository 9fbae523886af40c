"""Kernel smoothing under first-order differential-equation constraints.

The DE1-k estimators fit a single local parameter ``g(x0)`` through a degree-k
Taylor approximant whose derivatives are supplied by a known first-order ODE
``g' = F(x, g)``; the classical local polynomial fits (NW, LL, LQ, LC), an
exponential-curve least-squares fit, bandwidth selection, asymptotic formulas
and a Monte-Carlo harness are provided alongside.
"""

from .bandwidth import (
    BandwidthGrid,
    OptimalBandwidthInputs,
    bandwidth_recursion,
    baseline_optimal_bandwidth,
    default_cv_grid,
    loocv_select,
    optimal_bandwidth,
)
from .data import Dataset, Fit, bandwidth_heuristic, load_mouse, parse_csv
from .delocal import (
    ExponentialDE,
    GeneralFirstOrderDE,
    LinearFirstOrderDE,
    affine_coeffs,
    de1k_exponential,
    de1k_linear,
    de11_general,
    local_objective,
)
from .errors import ConfigError, DataError, DesmoothError, NumericalError
from .estimators import Estimator, parse_method
from .kernel import Kernel
from .localpoly import fit_local_poly, nadaraya_watson
from .parametric import ExponentialFit, fit_exponential_nls, fit_loglinear

__version__ = "0.1.0"

__all__ = [
    "BandwidthGrid",
    "OptimalBandwidthInputs",
    "bandwidth_recursion",
    "baseline_optimal_bandwidth",
    "default_cv_grid",
    "loocv_select",
    "optimal_bandwidth",
    "Dataset",
    "Fit",
    "bandwidth_heuristic",
    "load_mouse",
    "parse_csv",
    "ExponentialDE",
    "GeneralFirstOrderDE",
    "LinearFirstOrderDE",
    "affine_coeffs",
    "de1k_exponential",
    "de1k_linear",
    "de11_general",
    "local_objective",
    "ConfigError",
    "DataError",
    "DesmoothError",
    "NumericalError",
    "Estimator",
    "parse_method",
    "Kernel",
    "fit_local_poly",
    "nadaraya_watson",
    "ExponentialFit",
    "fit_exponential_nls",
    "fit_loglinear",
]
