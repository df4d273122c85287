"""Corner geometry: sectors, truncated sectors and quadrature rules on their pieces.

The corner sits at the origin. A sector is the set of points with polar angle in
``[theta_m, theta_M]``; a truncated sector additionally has ``|x| < h``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

REGIONS = ("sector_area", "boundary_ray_plus", "boundary_ray_minus", "arc")


@dataclass(frozen=True)
class Sector:
    theta_m: float
    theta_M: float

    def __post_init__(self):
        if not (-np.pi < self.theta_m <= self.theta_M < np.pi):
            raise ValueError(
                f"sector angles must satisfy -pi < theta_m <= theta_M < pi, "
                f"got ({self.theta_m}, {self.theta_M})"
            )

    @property
    def opening(self) -> float:
        return self.theta_M - self.theta_m

    @property
    def degenerate_opening(self) -> bool:
        """True when the opening is a straight angle (the corner is flat)."""
        return abs(self.opening - np.pi) < 1e-12

    @property
    def empty(self) -> bool:
        return self.theta_M == self.theta_m

    def contains_angle(self, theta) -> np.ndarray:
        theta = np.asarray(theta)
        return (theta >= self.theta_m) & (theta <= self.theta_M)


@dataclass(frozen=True)
class TruncatedSector:
    sector: Sector
    h: float

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"truncation radius must be positive, got {self.h}")

    @property
    def area(self) -> float:
        return 0.5 * self.h**2 * self.sector.opening

    @property
    def arc_length(self) -> float:
        return self.h * self.sector.opening

    @property
    def diameter(self) -> float:
        phi = self.sector.opening
        if phi >= np.pi:
            return 2.0 * self.h
        return max(self.h, 2.0 * self.h * np.sin(phi / 2))


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    target_region: str

    def integrate(self, values) -> complex:
        return np.sum(self.weights * np.asarray(values))

    def __len__(self):
        return len(self.weights)


def delta_w(sector: Sector) -> float:
    """Smallest decay rate cos(theta/2) of the CGO solution over the sector."""
    # cos(theta/2) is unimodal on (-pi, pi), so the minimum is at an endpoint
    val = min(np.cos(sector.theta_m / 2), np.cos(sector.theta_M / 2))
    if val <= 0:
        raise ValueError("sector too wide: the CGO solution does not decay on it")
    return float(val)


def corner_ball_measure(sector: Sector, rho: float, h: float) -> float:
    """Area of the intersection of the ball of radius rho at the corner with S_h."""
    if not rho > 0:
        if rho == 0:
            return 0.0
        raise ValueError("rho must be nonnegative")
    # the ball and the truncation disk share the centre, so the intersection
    # is the smaller of the two circular sectors
    r = min(rho, h)
    return 0.5 * r * r * sector.opening


@lru_cache(maxsize=64)
def _gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_interval(a: float, b: float, n: int):
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = _gauss_legendre(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def graded_interval(a: float, b: float, n: int, panels: int = 12, ratio: float = 0.25):
    """Composite Gauss rule on [a, b] with panels shrinking geometrically towards a.

    Panel breakpoints are a + (b-a)*ratio**i for i = 0..panels-1, plus a itself.
    """
    if panels <= 1:
        return gauss_interval(a, b, n)
    L = b - a
    edges = [a] + [a + L * ratio**i for i in range(panels - 1, -1, -1)]
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, w = gauss_interval(lo, hi, n)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def radial_rule(r0: float, r1: float, order: int, graded: bool = False,
                panels: int = 12, ratio: float = 0.25):
    if graded:
        return graded_interval(r0, r1, order, panels, ratio)
    return gauss_interval(r0, r1, order)


def polar_rule(sector: Sector, r0: float, r1: float, order: int, *, graded: bool = False,
               angular_order: int | None = None, panels: int = 12,
               ratio: float = 0.25) -> QuadratureRule:
    """Tensor rule on the annular sector r0 < r < r1 including the Jacobian r."""
    r, wr = radial_rule(r0, r1, order, graded, panels, ratio)
    t, wt = gauss_interval(sector.theta_m, sector.theta_M, angular_order or order)
    R, T = np.meshgrid(r, t, indexing="ij")
    W = np.outer(wr * r, wt)
    nodes = np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])
    return QuadratureRule(nodes, W.ravel(), "sector_area")


def build_quadrature(tsector: TruncatedSector, region: str, order: int, *,
                     graded: bool = False, panels: int = 12,
                     ratio: float = 0.25) -> QuadratureRule:
    """Gauss-Legendre rule on one piece of the truncated sector.

    ``region`` is one of ``sector_area`` (S_h), ``boundary_ray_plus`` (the ray at
    theta_M), ``boundary_ray_minus`` (the ray at theta_m) or ``arc`` (|x| = h).
    With ``graded=True`` the radial direction uses geometric panels towards the
    corner, which suits integrands behaving like exp(-sqrt(s r)).
    """
    if order < 1:
        raise ValueError("quadrature order must be >= 1")
    sec, h = tsector.sector, tsector.h
    if region == "sector_area":
        return polar_rule(sec, 0.0, h, order, graded=graded, panels=panels, ratio=ratio)
    if region in ("boundary_ray_plus", "boundary_ray_minus"):
        th = sec.theta_M if region == "boundary_ray_plus" else sec.theta_m
        r, w = radial_rule(0.0, h, order, graded, panels, ratio)
        nodes = np.column_stack([r * np.cos(th), r * np.sin(th)])
        return QuadratureRule(nodes, w, region)
    if region == "arc":
        t, w = gauss_interval(sec.theta_m, sec.theta_M, order)
        nodes = np.column_stack([h * np.cos(t), h * np.sin(t)])
        return QuadratureRule(nodes, h * w, region)
    raise ValueError(f"unknown region kind {region!r}; expected one of {REGIONS}")


def outward_normal(tsector: TruncatedSector, region: str) -> np.ndarray:
    """Constant unit outward normal on a ray; for the arc use ``arc_normals``."""
    sec = tsector.sector
    if region == "boundary_ray_plus":
        t = sec.theta_M
        return np.array([-np.sin(t), np.cos(t)])
    if region == "boundary_ray_minus":
        t = sec.theta_m
        return np.array([np.sin(t), -np.cos(t)])
    raise ValueError(f"no constant normal on region {region!r}")


def arc_normals(nodes: np.ndarray) -> np.ndarray:
    return nodes / np.linalg.norm(nodes, axis=1, keepdims=True)
