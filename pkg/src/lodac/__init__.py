"""Ground-truth parameter-control benchmarks on LeadingOnes for dynamic algorithm configuration."""
from lodac.core import (
    Instance,
    flip_radius,
    improvement_probability,
    leading_ones,
    leading_ones_general,
    optimal_radius_full,
    prefers_larger,
)
from lodac.kernels import BACKEND

__version__ = "0.1.0"
