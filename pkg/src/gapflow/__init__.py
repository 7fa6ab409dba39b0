"""Finite- and infinite-gap tools for the defocusing NLS / Dirac spectral problem."""

from ._backend import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
