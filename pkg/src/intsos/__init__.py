"""Certify 1-D quadratic integral inequalities and PDE stability with SOS programs."""

__version__ = "0.1.0"
