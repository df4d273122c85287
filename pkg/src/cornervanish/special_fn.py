"""Bessel, spherical Bessel and Legendre functions from their power series.

For moderate arguments the alternating power series loses digits to
cancellation, so above ``EXACT_SUM_FROM`` the partial sums are accumulated in
exact rational arithmetic and rounded once. Beyond ``INTEGRAL_FROM`` an
integral representation is used instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

EXACT_SUM_FROM = 8.0
INTEGRAL_FROM = 20.0


class SeriesConvergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SeriesTruncation:
    max_terms: int = 200
    tail_tolerance: float = 1e-14

    def __post_init__(self):
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if not self.tail_tolerance > 0:
            raise ValueError("tail_tolerance must be positive")


DEFAULT_TRUNCATION = SeriesTruncation()


@dataclass(frozen=True)
class SeriesValue:
    value: float
    terms: int
    converged: bool


def double_factorial(n: int) -> int:
    if n < -1:
        raise ValueError("double factorial defined for n >= -1")
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def gamma(x: float) -> float:
    return math.gamma(x)


def n_factor(ell: int, l: int) -> int:
    """N_{ell,l} = (2 ell + 3)(2 ell + 5)...(2 ell + 2 l + 1), empty product 1."""
    out = 1
    for i in range(1, l + 1):
        out *= 2 * ell + 2 * i + 1
    return out


def _sum_series(first, ratio, t, trunc: SeriesTruncation) -> SeriesValue:
    """Sum first * prod(ratio(l)) for l = 1, 2, ...; ratio gets the exact argument."""
    tol = trunc.tail_tolerance
    total = first
    term = first
    for l in range(1, trunc.max_terms + 1):
        term = term * ratio(l)
        total = total + term
        if abs(term) <= tol * abs(total) or term == 0:
            return SeriesValue(float(total), l + 1, True)
    return SeriesValue(float(total), trunc.max_terms + 1, False)


def bessel_j_series(p: int, t: float, trunc: SeriesTruncation = DEFAULT_TRUNCATION) -> SeriesValue:
    """J_p(t) = (t/2)^p / p! * sum_l (-t^2/4)^l p! / (l! (l+p)!)."""
    if p < 0 or int(p) != p:
        raise ValueError("order must be a nonnegative integer")
    if t < 0:
        raise ValueError("argument must be nonnegative")
    p = int(p)
    if t == 0:
        return SeriesValue(1.0 if p == 0 else 0.0, 1, True)
    if t <= EXACT_SUM_FROM:
        x = 0.25 * t * t
        first = (0.5 * t) ** p / math.factorial(p)
        return _sum_series(first, lambda l: -x / (l * (l + p)), t, trunc)
    q = Fraction(t)
    x = q * q / 4
    first = (q / 2) ** p / math.factorial(p)
    return _sum_series(first, lambda l: -x / (l * (l + p)), q, trunc)


def _bessel_j_integral(p: int, t: float) -> float:
    # (1/2pi) * periodic trapezoid of cos(p tau - t sin tau): spectrally accurate
    n = int(2 * (t + p) + 64)
    tau = 2 * np.pi * np.arange(n) / n
    return float(np.mean(np.cos(p * tau - t * np.sin(tau))))


def bessel_j(p: int, t: float, trunc: SeriesTruncation = DEFAULT_TRUNCATION) -> float:
    """Bessel function of the first kind of integer order p at t >= 0."""
    if t > INTEGRAL_FROM:
        if t < 0 or p < 0:
            raise ValueError("order and argument must be nonnegative")
        return _bessel_j_integral(int(p), float(t))
    res = bessel_j_series(p, t, trunc)
    if not res.converged:
        raise SeriesConvergenceError(f"J_{p}({t}) series did not converge in {trunc.max_terms} terms")
    return res.value


def bessel_j_prime(p: int, t: float) -> float:
    if p == 0:
        return -bessel_j(1, t)
    return 0.5 * (bessel_j(p - 1, t) - bessel_j(p + 1, t))


def bessel_j_orders(pmax: int, t: float) -> np.ndarray:
    """J_0(t) ... J_pmax(t) as an array."""
    return np.array([bessel_j(p, t) for p in range(pmax + 1)])


def spherical_j_series(ell: int, t: float, trunc: SeriesTruncation = DEFAULT_TRUNCATION) -> SeriesValue:
    """j_ell(t) = t^ell/(2 ell+1)!! * (1 + sum_l (-1)^l t^{2l} / (2^l l! N_{ell,l}))."""
    if ell < 0 or int(ell) != ell:
        raise ValueError("order must be a nonnegative integer")
    if t < 0:
        raise ValueError("argument must be nonnegative")
    ell = int(ell)
    if t == 0:
        return SeriesValue(1.0 if ell == 0 else 0.0, 1, True)
    df = double_factorial(2 * ell + 1)
    if t <= EXACT_SUM_FROM:
        x = t * t
        first = t**ell / df
        return _sum_series(first, lambda l: -x / (2 * l * (2 * ell + 2 * l + 1)), t, trunc)
    q = Fraction(t)
    x = q * q
    first = q**ell / df
    return _sum_series(first, lambda l: -x / (2 * l * (2 * ell + 2 * l + 1)), q, trunc)


def _spherical_j_integral(ell: int, t: float) -> float:
    # j_ell(t) = 1/2 int_{-1}^{1} cos(t x - ell pi/2) P_ell(x) dx
    n = int(t + ell + 64)
    x, w = np.polynomial.legendre.leggauss(n)
    return float(0.5 * np.sum(w * np.cos(t * x - 0.5 * ell * np.pi) * legendre_p(ell, x)))


def spherical_j(ell: int, t: float, trunc: SeriesTruncation = DEFAULT_TRUNCATION) -> float:
    """Spherical Bessel function j_ell at t >= 0."""
    if t > INTEGRAL_FROM:
        return _spherical_j_integral(int(ell), float(t))
    res = spherical_j_series(ell, t, trunc)
    if not res.converged:
        raise SeriesConvergenceError(f"j_{ell}({t}) series did not converge in {trunc.max_terms} terms")
    return res.value


def spherical_j_closed(ell: int, t: float) -> float:
    """Trigonometric closed forms for ell <= 2 (t > 0)."""
    s, c = math.sin(t), math.cos(t)
    if ell == 0:
        return s / t
    if ell == 1:
        return s / t**2 - c / t
    if ell == 2:
        return (3 / t**2 - 1) * s / t - 3 * c / t**2
    raise ValueError("closed forms provided only for ell <= 2")


def spherical_j_orders(lmax: int, t: float) -> np.ndarray:
    return np.array([spherical_j(l, t) for l in range(lmax + 1)])


def legendre_p(ell: int, x):
    """Legendre polynomial P_ell by the three-term recurrence; vectorised in x."""
    if ell < 0:
        raise ValueError("degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1 + 1e-14):
        raise ValueError("legendre_p requires |x| <= 1")
    p0 = np.ones_like(x)
    if ell == 0:
        return p0 if p0.ndim else float(p0)
    p1 = x.copy()
    for n in range(1, ell):
        p0, p1 = p1, ((2 * n + 1) * x * p1 - n * p0) / (n + 1)
    return p1 if p1.ndim else float(p1)


def legendre_all(lmax: int, x) -> np.ndarray:
    """Array of shape (lmax+1, *x.shape) holding P_0(x) ... P_lmax(x)."""
    x = np.asarray(x, dtype=float)
    out = np.empty((lmax + 1,) + x.shape)
    out[0] = 1.0
    if lmax >= 1:
        out[1] = x
    for n in range(1, lmax):
        out[n + 1] = ((2 * n + 1) * x * out[n] - n * out[n - 1]) / (n + 1)
    return out
