"""Periodic points, invariant varieties and Julia sets of two rational maps."""

from .maps import LV3D, MOEBIUS2D, SingularEvaluation, evaluate, get_family
from .periodic import (IvppDetected, PeriodicOrbit, enumerate_dspp,
                       find_periodic_points)

__version__ = "0.1.0"

__all__ = [
    "LV3D", "MOEBIUS2D", "SingularEvaluation", "evaluate", "get_family",
    "IvppDetected", "PeriodicOrbit", "enumerate_dspp", "find_periodic_points",
]
