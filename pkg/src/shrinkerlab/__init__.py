"""Numerical laboratory for corotational shrinkers of the harmonic map heat flow.

The package builds rotationally symmetric targets whose warping function admits
an explicit self-similar shrinking profile, checks the spectral structure of the
linearization around it, and evolves perturbations in similarity variables.
"""

__version__ = "0.1.0"

from .geometry import TargetGeometry, check_compactness_condition, make_geometry
from .shrinker import ShrinkerProfile, make_shrinker

__all__ = [
    "__version__",
    "TargetGeometry",
    "ShrinkerProfile",
    "check_compactness_condition",
    "make_geometry",
    "make_shrinker",
]
