"""Numerical toolkit for the barycenter projection on rank-one symmetric spaces of noncompact type."""

from .spaces import SUPPORTED, Point, get_space

__all__ = ["SUPPORTED", "Point", "get_space"]
__version__ = "0.1.0"
