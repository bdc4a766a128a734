"""Poisson point processes, thinnings, and (ideal) Poisson Voronoi tessellations
of the hyperbolic plane, with statistical harnesses for their defining identities."""

__version__ = "0.1.0"

from .measure import (  # noqa: F401
    BoundaryHeights,
    Configuration,
    EuclideanBox,
    HyperbolicDisk,
    IntensityMeasure,
    SeedStream,
    count_in,
    mass,
    poisson_pmf,
    sample_poisson,
)
