"""Decay-rate laboratory for the compressible Navier-Stokes-Poisson system."""

__version__ = "0.1.0"

from .symbol import FluidParams, OriginExcludedError  # noqa: E402

__all__ = ["FluidParams", "OriginExcludedError", "__version__"]
