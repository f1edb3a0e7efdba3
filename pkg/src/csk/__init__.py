"""Numerical toolkit for conformal fractional Laplacians on the cylinder and singular solutions."""
from .symbols import ProblemParams

__version__ = "0.1.0"
__all__ = ["ProblemParams", "__version__"]
