"""Certified numerics for coherence quantifiers: max- and min-relative-entropy
coherence, their smoothed and one-shot variants, channel classes, and
subchannel discrimination games."""

__version__ = "0.1.0"

from .linalg import DimensionCapError, ValidationError
from .measures import c_l1, c_max, c_min, c_r, coherence_report, roc, smooth_c_max, smooth_c_min
from .sdp import SolverError

__all__ = [
    "__version__", "DimensionCapError", "ValidationError", "SolverError",
    "c_l1", "c_max", "c_min", "c_r", "coherence_report", "roc", "smooth_c_max", "smooth_c_min",
]
