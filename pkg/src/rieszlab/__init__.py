"""Riesz products on the circle and on the unit sphere of C^n."""

__version__ = "0.1.0"
