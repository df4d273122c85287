"""Corner-ball averages of fields and their decay as the ball shrinks.

For a corner at ``x_c`` with sector ``W`` the average of a field psi over
``B(x_c, rho) ∩ (x_c + W)`` is

    A(rho) = (1 / m(B ∩ W)) * integral |psi| dx,

and vanishing at the corner means ``A(rho) -> 0``. Fitting log A against log rho
gives an empirical rate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Sector, corner_ball_measure, polar_rule

AVERAGE_FLOOR = 1e-14
VANISHING_RATE = 0.1


def _ball_rule(corner, rho: float, sector: Sector, order: int):
    # radially graded: corner fields behave like r^nu with fractional nu
    rule = polar_rule(sector, 0.0, rho, order, graded=True, angular_order=order)
    return rule.nodes + np.asarray(corner, dtype=float), rule.weights


def local_average(field_fn, corner, rho: float, sector: Sector, order: int = 24,
                  h: float | None = None) -> float:
    """Mean of |field| over the corner ball of radius rho inside the sector.

    ``h`` is the radius of the corner neighbourhood the sector is truncated at;
    balls larger than it are clipped.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    r = rho if h is None else min(rho, h)
    pts, w = _ball_rule(corner, r, sector, order)
    total = float(np.sum(w * np.abs(field_fn(pts))))
    return total / corner_ball_measure(sector, r, r)


def signed_average(field_fn, corner, rho: float, sector: Sector, order: int = 24) -> complex:
    pts, w = _ball_rule(corner, rho, sector, order)
    return complex(np.sum(w * field_fn(pts))) / corner_ball_measure(sector, rho, rho)


@dataclass
class DecayCurve:
    rhos: np.ndarray
    averages: np.ndarray
    fitted_rate: float
    corner: tuple
    fit_points: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def vanishing(self) -> bool:
        return bool(self.fitted_rate > VANISHING_RATE)


def fit_rate(rhos, values, floor: float = AVERAGE_FLOOR):
    """Least-squares slope of log values against log rho, above the floor."""
    rhos = np.asarray(rhos, dtype=float)
    values = np.abs(np.asarray(values))
    ok = values > floor
    if ok.sum() < 2:
        return float("nan"), int(ok.sum())
    slope, _ = np.polyfit(np.log(rhos[ok]), np.log(values[ok]), 1)
    return float(slope), int(ok.sum())


def geometric_schedule(h: float, n: int = 7, first: int = 1) -> np.ndarray:
    """rho_i = h / 2**i for i = first .. first+n-1 (strictly decreasing)."""
    return h / 2.0 ** np.arange(first, first + n)


def decay_curve(field_fn, corner, rho_schedule, sector: Sector, order: int = 24,
                mapper=map) -> DecayCurve:
    rhos = np.asarray(rho_schedule, dtype=float)
    if len(rhos) < 5:
        raise ValueError("decay_curve needs at least 5 radii")
    if np.any(np.diff(rhos) >= 0):
        raise ValueError("rho schedule must be strictly decreasing")
    avgs = np.array(list(mapper(lambda r: local_average(field_fn, corner, r, sector, order), rhos)))
    rate, used = fit_rate(rhos, avgs)
    return DecayCurve(rhos, avgs, rate, tuple(map(float, corner)), used,
                      {"vanishing_threshold": VANISHING_RATE, "floor": AVERAGE_FLOOR})


def vw_average(pair, V, corner, rho: float, sector: Sector | None = None, order: int = 24) -> complex:
    """Signed corner-ball average of V w for an eigenpair (V constant)."""
    sector = sector or pair.domain.sector
    if V == 0:
        return 0j
    return V * signed_average(pair.w, corner, rho, sector, order)


def is_decreasing(values) -> bool:
    a = np.abs(np.asarray(values))
    return bool(np.all(np.diff(a) < 0))


def modulus_of_continuity_rate(field_fn, corner, rho_schedule, sector: Sector, order: int = 24):
    """Slope of |average - field(corner)| against rho; about 1 for smooth fields."""
    c = complex(np.asarray(field_fn(np.atleast_2d(corner)))[0])
    devs = [abs(signed_average(field_fn, corner, r, sector, order) - c) for r in rho_schedule]
    return fit_rate(rho_schedule, devs)[0], devs


__all__ = ["DecayCurve", "local_average", "signed_average", "decay_curve", "vw_average",
           "geometric_schedule", "fit_rate", "is_decreasing", "modulus_of_continuity_rate",
           "VANISHING_RATE", "AVERAGE_FLOOR"]
