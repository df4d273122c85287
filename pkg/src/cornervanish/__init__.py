"""Numerical toolkit for corner vanishing of conductive transmission eigenfunctions."""

__version__ = "0.1.0"

from .geometry import Sector, TruncatedSector, build_quadrature, corner_ball_measure, delta_w  # noqa: E402
from .eigensolver import Disk, EtaSpec, Medium, Pacman, refine_and_extract, scan  # noqa: E402
from .herglotz import Density, admissibility_scan, herglotz_eval  # noqa: E402

__all__ = ["__version__", "Sector", "TruncatedSector", "build_quadrature", "corner_ball_measure", "delta_w",
           "Disk", "EtaSpec", "Medium", "Pacman", "refine_and_extract", "scan",
           "Density", "admissibility_scan", "herglotz_eval"]
