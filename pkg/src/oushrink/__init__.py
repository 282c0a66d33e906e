"""Shrinkage estimation for regression with pulse-type Ornstein-Uhlenbeck noise."""

from ._kernels import BACKEND
from .condgauss import CondGaussModel, james_stein_estimate, ls_estimate, shrink_estimate
from .oulevy import NoiseParams, TrigBasis
from .special import gamma_p, risk_at_zero_rp

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CondGaussModel",
    "NoiseParams",
    "TrigBasis",
    "gamma_p",
    "james_stein_estimate",
    "ls_estimate",
    "risk_at_zero_rp",
    "shrink_estimate",
    "__version__",
]
