"""Precision Kolmogorov complexity, effective dimension and line-reconstruction experiments."""

from __future__ import annotations

__version__ = "0.1.0"

from dimlab.core import Ball, DyadicPoint, lattice_point_in_ball, truncate
from dimlab.errors import DimlabError

__all__ = ["Ball", "DimlabError", "DyadicPoint", "__version__", "lattice_point_in_ball", "truncate"]
