"""Numerical toolkit for the complexified K-energy and the scalar curvature equation with B-field."""

__version__ = "0.1.0"
