"""The planar CGO solution u0(s x) = exp(-sqrt(s) sqrt(x1 + i x2)) and its estimates.

u0 is harmonic away from the branch cut on the negative x1 axis and decays like
exp(-sqrt(s r) cos(theta/2)) inside sectors that avoid the cut.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (Sector, TruncatedSector, build_quadrature, delta_w,
                       gauss_interval, graded_interval, arc_normals)

CUT_TOL = 1e-14
# exp(-37) ~ 8.5e-17: the CGO integrand is negligible beyond delta*sqrt(s R) = 37
TAIL_EXPONENT = 37.0


@dataclass(frozen=True)
class CgoScale:
    s: float

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError(f"CGO scale must be positive, got {self.s}")


def _as_scale(scale) -> float:
    return scale.s if isinstance(scale, CgoScale) else CgoScale(float(scale)).s


def u0(points, s: float) -> np.ndarray:
    """Vectorised u0(s x) for an (n, 2) array of points (no branch-cut check)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    z = pts[:, 0] + 1j * pts[:, 1]
    return np.exp(-np.sqrt(s) * np.sqrt(z))


def u0_grad(points, s: float):
    """Gradient (d/dx1, d/dx2) of u0(s x); singular at the origin."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    z = pts[:, 0] + 1j * pts[:, 1]
    sz = np.sqrt(z)
    val = np.exp(-np.sqrt(s) * sz)
    d = -np.sqrt(s) / (2 * sz) * val
    return d, 1j * d


def u0_eval(x, scale) -> complex:
    """u0(s x) at a single point, rejecting points on the branch cut."""
    s = _as_scale(scale)
    x1, x2 = float(x[0]), float(x[1])
    r = math.hypot(x1, x2)
    if r == 0:
        return 1.0 + 0j
    if x1 < 0 and abs(x2) <= CUT_TOL * max(1.0, r):
        raise ValueError(f"point {tuple(x)} lies on the branch cut of u0")
    theta = math.atan2(x2, x1)
    rho = math.sqrt(s * r)
    phase = theta / 2 + math.pi
    return complex(np.exp(rho * complex(math.cos(phase), math.sin(phase))))


def decay_radius(sector: Sector, s: float) -> float:
    """Radius beyond which |u0(s x)| < 1e-16 throughout the sector."""
    return (TAIL_EXPONENT / delta_w(sector)) ** 2 / s


def sector_integral_closed(sector: Sector, scale) -> complex:
    """Exact value of the integral of u0(s x) over the infinite sector."""
    s = _as_scale(scale)
    tm, tM = sector.theta_m, sector.theta_M
    return 6j * (np.exp(-2j * tM) - np.exp(-2j * tm)) / s**2


def sector_integral_quadrature(sector: Sector, scale, order: int = 20,
                               r_min: float = 0.0, r_max: float | None = None,
                               func=None) -> complex:
    """Polar quadrature of func(u0) |x|-weighted over r_min < r < r_max.

    Default is the plain integral of u0 over the whole sector, truncated where
    the integrand is below 1e-16.
    """
    s = _as_scale(scale)
    if sector.empty:
        return 0j
    if r_max is None:
        r_max = decay_radius(sector, s)
    if r_max <= r_min:
        return 0j
    if r_min == 0:
        r, wr = graded_interval(0.0, r_max, order)
    else:
        r, wr = _log_graded(r_min, r_max, order)
    t, wt = gauss_interval(sector.theta_m, sector.theta_M, order)
    R, T = np.meshgrid(r, t, indexing="ij")
    pts = np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])
    vals = u0(pts, s)
    if func is not None:
        vals = func(vals, pts)
    W = np.outer(wr * r, wt).ravel()
    return complex(np.sum(W * vals))


def _log_graded(a: float, b: float, order: int, panels: int = 16):
    # panels equally spaced in sqrt(r), matching the exp(-c sqrt(r)) decay scale
    edges = np.linspace(np.sqrt(a), np.sqrt(b), panels + 1) ** 2
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, w = gauss_interval(lo, hi, order)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


@dataclass(frozen=True)
class BoundCheck:
    quantity: str
    bound: float
    value: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.bound)


@dataclass
class CgoBoundsReport:
    s: float
    h: float
    alpha: float
    l2_area: BoundCheck
    l2_arc: BoundCheck
    normal_deriv_arc: BoundCheck
    tangential_deriv_arc: BoundCheck
    weighted_l2: BoundCheck
    weighted_l1_sector: BoundCheck
    tail_l1: BoundCheck
    info: dict = field(default_factory=dict)

    @property
    def l2_area_bound(self):
        return self.l2_area.bound

    @property
    def l2_arc_bound(self):
        return self.l2_arc.bound

    @property
    def normal_deriv_arc_bound(self):
        return self.normal_deriv_arc.bound

    @property
    def tangential_deriv_arc_bound(self):
        return self.tangential_deriv_arc.bound

    @property
    def weighted_l2_bound(self):
        return self.weighted_l2.bound

    def five_l2_checks(self) -> list[BoundCheck]:
        return [self.l2_area, self.l2_arc, self.normal_deriv_arc,
                self.tangential_deriv_arc, self.weighted_l2]

    def all_checks(self) -> list[BoundCheck]:
        return self.five_l2_checks() + [self.weighted_l1_sector, self.tail_l1]

    @property
    def l2_pass(self) -> bool:
        return all(c.passed for c in self.five_l2_checks())

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.all_checks())


def cgo_bounds(tsector: TruncatedSector, scale, alpha: float = 0.0,
               order: int = 24) -> CgoBoundsReport:
    """Evaluate the L2, trace and weighted estimates for u0 against quadrature.

    The mean-value radius in the area bound is taken at 0, which gives the
    largest admissible right-hand side.
    """
    s = _as_scale(scale)
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    sec, h = tsector.sector, tsector.h
    dw = delta_w(sec)
    dth = sec.opening
    decay = math.exp(-dw * math.sqrt(s * h))

    area = build_quadrature(tsector, "sector_area", order, graded=True)
    ua = u0(area.nodes, s)
    rad = np.linalg.norm(area.nodes, axis=1)
    q_area = float(np.sum(area.weights * np.abs(ua) ** 2))
    q_weighted = float(np.sum(area.weights * rad ** (2 * alpha) * np.abs(ua) ** 2))

    arc = build_quadrature(tsector, "arc", 2 * order)
    uarc = u0(arc.nodes, s)
    gx, gy = u0_grad(arc.nodes, s)
    nrm = arc_normals(arc.nodes)
    dnu = gx * nrm[:, 0] + gy * nrm[:, 1]
    dth_u = -arc.nodes[:, 1] * gx + arc.nodes[:, 0] * gy
    q_arc = math.sqrt(np.sum(arc.weights * np.abs(uarc) ** 2))
    q_dn = math.sqrt(np.sum(arc.weights * np.abs(dnu) ** 2))
    q_dt = math.sqrt(np.sum(arc.weights * np.abs(dth_u) ** 2))

    q_w1 = sector_integral_quadrature(sec, s, order,
                                      func=lambda v, p: np.abs(v) * np.linalg.norm(p, axis=1) ** alpha).real
    R = decay_radius(sec, s)
    q_tail = sector_integral_quadrature(sec, s, order, r_min=h, r_max=max(R, 2 * h),
                                        func=lambda v, p: np.abs(v)).real

    sq = math.sqrt(dth)
    report = CgoBoundsReport(
        s=s, h=h, alpha=alpha,
        l2_area=BoundCheck("l2_area_sq", dth * h * h / 2, q_area),
        l2_arc=BoundCheck("l2_arc", math.sqrt(h) * decay * sq, q_arc),
        normal_deriv_arc=BoundCheck("normal_deriv_arc", 0.5 * math.sqrt(s) * decay * sq, q_dn),
        tangential_deriv_arc=BoundCheck("tangential_deriv_arc", 0.5 * math.sqrt(s) * h * h * decay * sq, q_dt),
        weighted_l2=BoundCheck(
            "weighted_l2_sq",
            s ** (-(2 * alpha + 2)) * 2 * dth * math.gamma(4 * alpha + 4) / (4 * dw * dw) ** (2 * alpha + 2),
            q_weighted),
        weighted_l1_sector=BoundCheck(
            "weighted_l1_sector",
            2 * dth * math.gamma(2 * alpha + 4) / dw ** (2 * alpha + 4) * s ** (-alpha - 2),
            q_w1),
        tail_l1=BoundCheck("tail_l1", 6 * dth / dw**4 * s**-2 * math.exp(-dw * math.sqrt(h * s) / 2), q_tail),
    )
    # the pointwise tangential estimate integrates to a single power of h
    report.info["tangential_deriv_arc_linear_h_bound"] = 0.5 * math.sqrt(s) * h * decay * sq
    return report


def cgo_bounds_grid(sector: Sector, s_values, h_values, alphas, order: int = 24,
                    mapper=map) -> list[CgoBoundsReport]:
    cells = [(s, h, a) for s in s_values for h in h_values for a in alphas]
    return list(mapper(lambda c: cgo_bounds(TruncatedSector(sector, c[1]), c[0], c[2], order), cells))
