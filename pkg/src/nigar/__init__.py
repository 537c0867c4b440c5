"""First-order autoregression with normal inverse Gaussian innovations.

Simulation, EM estimation, Bessel-function numerics and the diagnostics
used to check a fitted model.
"""

__version__ = "0.1.0"

from .distributions import (  # noqa: E402
    IgParams,
    NigParams,
    RngStream,
    gig_cond_moments,
    ig_pdf,
    ig_sample,
    nig_logpdf,
    nig_moments,
    nig_pdf,
    nig_sample,
)
from .errors import NigarError  # noqa: E402
from .estimation import Criterion, EmConfig, FitReport, Mode, StopReason, cls_rho, em_fit  # noqa: E402
from .model import NigArModel, TimeSeries, residuals, simulate_path, theoretical_moments  # noqa: E402
from .special import bessel_k, bessel_ke, log_bessel_k  # noqa: E402

__all__ = [
    "IgParams",
    "NigParams",
    "RngStream",
    "NigArModel",
    "TimeSeries",
    "EmConfig",
    "FitReport",
    "Criterion",
    "Mode",
    "StopReason",
    "NigarError",
    "bessel_k",
    "bessel_ke",
    "log_bessel_k",
    "ig_pdf",
    "ig_sample",
    "nig_pdf",
    "nig_logpdf",
    "nig_sample",
    "nig_moments",
    "gig_cond_moments",
    "simulate_path",
    "residuals",
    "theoretical_moments",
    "cls_rho",
    "em_fit",
]
