"""Dimension reduction of edge-corner fields: x3-averages against a bump function.

For a nonnegative bump psi supported in (x3c - L, x3c + L),

    R(g)(x') = int psi(x3) g(x', x3) dx3.

Applied to the spherical Bessel functions j_l(k |x|) this gives the reduced
series whose mean-value forms are bracketed here, together with the constants
C(psi), C1(psi) and the C2 bracket used for the reduced corner coefficient.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import gauss_interval
from .herglotz import Density, legendre_moments
from .special_fn import double_factorial, spherical_j

BUMP_MAX = math.exp(-1.0)


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class BumpFunction:
    """amplitude * exp(-1 / (1 - t^2)) with t = (x3 - x3c) / L, zero for |t| >= 1."""
    x3c: float = 0.0
    L: float = 0.3
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("half width L must be positive")
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive (psi >= 0, psi != 0)")

    def __call__(self, x3):
        t = (np.asarray(x3, dtype=float) - self.x3c) / self.L
        inside = np.abs(t) < 1
        out = np.zeros_like(t)
        ti = t[inside]
        out[inside] = self.amplitude * np.exp(-1.0 / (1.0 - ti * ti))
        return out if out.ndim else float(out)

    @property
    def sup(self) -> float:
        return self.amplitude * BUMP_MAX

    @property
    def support(self):
        return self.x3c - self.L, self.x3c + self.L

    def scaled(self, factor: float) -> "BumpFunction":
        return BumpFunction(self.x3c, self.L, self.amplitude * factor)

    def fits_in(self, M: float) -> bool:
        a, b = self.support
        return -M < a and b < M


def _support_rule(psi: BumpFunction, order: int = 24, panels: int = 6):
    """Composite Gauss rule on the support, panels shrinking towards both ends."""
    a, b = psi.support
    c = 0.5 * (a + b)
    half = 0.5 * (b - a)
    # breakpoints at c +- half * (1 - 2^-i)
    offs = [half * (1 - 2.0 ** (-i)) for i in range(panels)] + [half]
    edges = sorted(set([c - o for o in offs] + [c + o for o in offs]))
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, w = gauss_interval(lo, hi, order)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def reduce(g, psi: BumpFunction, order: int = 24, panels: int = 6):
    """R(g) as a function of x' (an (n, 2) array or a single point).

    ``g`` takes an (m, 3) array of points and returns m values.
    """
    x3, w = _support_rule(psi, order, panels)
    pw = psi(x3) * w

    def Rg(xp):
        xp = np.asarray(xp, dtype=float)
        single = xp.ndim == 1
        xp = np.atleast_2d(xp)
        n, m = len(xp), len(x3)
        P = np.empty((n * m, 3))
        P[:, :2] = np.repeat(xp, m, axis=0)
        P[:, 2] = np.tile(x3, n)
        vals = np.asarray(g(P)).reshape(n, m)
        out = vals @ pw
        return out[0] if single else out

    return Rg


def c_psi(psi: BumpFunction, order: int = 24) -> float:
    x3, w = _support_rule(psi, order)
    return float(np.sum(w * psi(x3)))


def c1_psi(psi: BumpFunction, x_prime_norm: float, order: int = 48) -> float:
    """int psi(|x'| tan w) sec^3 w dw over |w| <= arctan(L / |x'|), corner at x3c = 0."""
    r = float(x_prime_norm)
    if not r > 0:
        raise ValueError("|x'| must be positive")
    lim = math.atan(psi.L / r)
    edges = np.linspace(-lim, lim, 9)
    parts = [gauss_interval(lo, hi, order) for lo, hi in zip(edges[:-1], edges[1:])]
    t = np.concatenate([p[0] for p in parts])
    w = np.concatenate([p[1] for p in parts])
    return float(np.sum(w * psi(psi.x3c + r * np.tan(t)) / np.cos(t) ** 3))


# ----------------------------------------------------------------------------
# reduced spherical Bessel functions

def _sph_j_vec(ell: int, t):
    t = np.asarray(t, dtype=float)
    return np.array([spherical_j(ell, float(x)) for x in t.ravel()]).reshape(t.shape)


def reduced_bessel(ell: int, k: float, psi: BumpFunction, x_prime, order: int = 24) -> float:
    """R(j_ell(k |.|))(x') with the edge point at the origin."""
    g = lambda P: _sph_j_vec(ell, k * np.linalg.norm(P, axis=1))
    return float(reduce(g, psi, order)(np.asarray(x_prime, dtype=float)))


def _series_terms(ell: int, k: float, rho2: float, lmax: int):
    """Terms (-1)^l k^{2l} rho2^l / (2^l l! N_{ell,l}), l = 1..lmax (signs as in j_ell)."""
    out = []
    term = 1.0
    for l in range(1, lmax + 1):
        term *= -k * k * rho2 / (2 * l * (2 * ell + 2 * l + 1))
        out.append(term)
    return np.array(out)


@dataclass
class BesselBracket:
    ell: int
    x_prime: tuple
    value: float
    lower: float
    upper: float
    C1: float

    @property
    def passed(self) -> bool:
        return bool(self.lower <= self.value <= self.upper)

    def as_tuple(self):
        return self.value, self.lower, self.upper, self.passed


def reduced_bessel_bracket(ell: int, k: float, psi: BumpFunction, x_prime, lmax: int = 40,
                           order: int = 24) -> BesselBracket:
    """Value of R(j_ell) and the bracket from its mean-value form.

    Each mean-value point a in [-L, L] enters through a^2 only and every series
    term is monotone in a^2, so evaluating each term at a = 0 and a = L and
    taking the smaller (larger) gives a lower (upper) bound. For ell >= 1 the
    positive factor (|x'|^2 + a^2)^((ell-1)/2) is bracketed the same way.
    """
    xp = np.asarray(x_prime, dtype=float)
    r2 = float(xp @ xp)
    L = psi.L
    if not (k * L < 1 and k * k * (r2 + L * L) < 1):
        raise PreconditionError("need kL < 1 and k^2 (|x'|^2 + L^2) < 1")
    value = reduced_bessel(ell, k, psi, xp, order)
    t0 = _series_terms(ell, k, r2, lmax)
    tL = _series_terms(ell, k, r2 + L * L, lmax)
    s_lo = 1.0 + np.sum(np.minimum(t0, tL))
    s_hi = 1.0 + np.sum(np.maximum(t0, tL))
    if ell == 0:
        C = c_psi(psi, order)
        return BesselBracket(0, tuple(xp), value, C * s_lo, C * s_hi, float("nan"))
    r = math.sqrt(r2)
    C1 = c1_psi(psi, r)
    pre = k**ell / double_factorial(2 * ell + 1) * C1 * r2
    a_lo = r2 ** ((ell - 1) / 2)
    a_hi = (r2 + L * L) ** ((ell - 1) / 2)
    return BesselBracket(ell, tuple(xp), value, pre * a_lo * s_lo, pre * a_hi * s_hi, C1)


# ----------------------------------------------------------------------------
# constants

@dataclass
class ReductionConstants:
    C_psi: float
    C1_psi: dict
    C2_minus: float
    C2_plus: float
    C2_lower: float
    C2_upper: float
    kL: float
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    @property
    def C1_range(self):
        v = list(self.C1_psi.values())
        return (min(v), max(v)) if v else (float("nan"), float("nan"))


def c2_bracket(C: float, kL: float):
    """Endpoints C(1 - 2(kL)^2)/(1 - (kL)^2) and C/(1 - (kL)^2)."""
    x = kL * kL
    if not x < 1:
        raise PreconditionError("need kL < 1")
    return C * (1 - 2 * x) / (1 - x), C / (1 - x)


def reduction_constants(psi: BumpFunction, k: float, x_prime_norms=(0.4, 0.5, 0.7),
                        sector=None, order: int = 24) -> ReductionConstants:
    """C(psi), C1(psi) at the given |x'|, and the C2 values with their bracket.

    C2 is the reduced j_0 at the corner, int psi(x3) j_0(k |x3 - 0|) dx3, which is
    the quantity the mean-value form C(psi)[1 + sum ...] stands for. With a
    sector given, the reduced corner coefficient C2- mu(theta_m)^-2 + C2+
    mu(theta_M)^-2 is checked to stay away from zero over the whole bracket.
    """
    kL = k * psi.L
    if not kL < 1:
        raise PreconditionError("need kL < 1")
    C = c_psi(psi, order)
    C1 = {float(r): c1_psi(psi, r) for r in x_prime_norms}
    x3, w = _support_rule(psi, order)
    C2 = float(np.sum(w * psi(x3) * _sph_j_vec(0, k * np.abs(x3))))
    lo, hi = c2_bracket(C, kL)
    checks = {"C_psi_positive": C > 0,
              "C2_in_bracket": lo <= C2 <= hi,
              "C2_lower_positive": lo > 0}
    bound = math.sqrt(2) * math.pi * psi.sup
    for r, v in C1.items():
        if r > psi.L:
            checks[f"C1_bound_at_{r:g}"] = 0 < v < bound
    rc = ReductionConstants(C, C1, C2, C2, lo, hi, kL, checks)
    if sector is not None:
        em, eM = np.exp(-1j * sector.theta_m), np.exp(-1j * sector.theta_M)
        a = np.linspace(lo, hi, 41)
        A, B = np.meshgrid(a, a)
        rc.checks["reduced_corner_coefficient_nonzero"] = bool(np.min(np.abs(A * em + B * eM)) > 1e-12 * hi)
    return rc


# ----------------------------------------------------------------------------
# Legendre moments of 3D kernels

@dataclass
class GammaReport:
    gammas: np.ndarray
    bound: float
    g_norm: float

    @property
    def passed(self) -> bool:
        return bool(np.all(np.abs(self.gammas) <= self.bound))

    @property
    def margin(self) -> float:
        m = np.max(np.abs(self.gammas))
        return self.bound / m if m > 0 else math.inf


def gamma_moment_bound(g: Density, l_max: int, xhat=(0.0, 0.0, 1.0)) -> GammaReport:
    """gamma_l = int g(d) P_l(xhat . d) dsigma for l <= l_max against 2 sqrt(pi) ||g||."""
    if g.dimension != 3:
        raise ValueError("gamma moments need a 3D density")
    gam = legendre_moments(g, np.asarray(xhat, dtype=float), l_max)
    nrm = g.l2_norm
    return GammaReport(np.asarray(gam), 2 * math.sqrt(math.pi) * nrm, nrm)


__all__ = ["BumpFunction", "reduce", "c_psi", "c1_psi", "reduced_bessel", "BesselBracket",
           "reduced_bessel_bracket", "ReductionConstants", "c2_bracket", "reduction_constants",
           "GammaReport", "gamma_moment_bound", "PreconditionError"]
