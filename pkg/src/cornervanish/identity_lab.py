"""Numerical audit of the corner integral identity behind the vanishing argument.

Testing the transmission problem against the CGO solution u0(s x) on a
truncated sector S_h and applying Green's formula gives, for any Herglotz
approximant v_j of v,

    I1 + Delta_j(s) = I3 - sum_pm (I2^pm + xi_j^pm(s)),

with
    I1       = int_{S_h} u0 (f1j - f2),      f1j = -k^2 v_j,  f2 = -k^2 q w,
    Delta_j  = -k^2 int_{S_h} (v - v_j) u0,
    I2^pm    = int_{Gamma^pm} eta u0 v_j,
    xi_j^pm  = int_{Gamma^pm} eta u0 (v - v_j),
    I3       = int_{Lambda_h} (u0 d_nu(v - w) - (v - w) d_nu u0).

Along a ray at angle theta, u0(s x) = exp(-sqrt(s r) mu(theta)) with
mu(theta) = exp(i theta / 2), and the ray integral of the constant part has a
closed form giving the leading s^{-1} behaviour of I2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cgo import u0, u0_grad
from .eigensolver import EtaSpec
from .geometry import Sector, TruncatedSector, build_quadrature, delta_w, graded_interval
from .herglotz import Density, herglotz_eval, herglotz_grad
from .special_fn import bessel_j

TREND_FACTOR = 0.5


class PreconditionError(ValueError):
    pass


class QuadratureNonConvergence(RuntimeError):
    pass


# ----------------------------------------------------------------------------
# mu / omega algebra

def omega(theta):
    return -np.cos(np.asarray(theta) / 2 + np.pi)


def mu(theta):
    t = np.asarray(theta) / 2 + np.pi
    return -np.cos(t) - 1j * np.sin(t)


def corner_coefficient(sector: Sector) -> complex:
    """mu(theta_m)^-2 + mu(theta_M)^-2, which equals exp(-i theta_m) + exp(-i theta_M)."""
    return complex(mu(sector.theta_m) ** -2 + mu(sector.theta_M) ** -2)


@dataclass(frozen=True)
class AsymptoticCoeffs:
    theta_m: float
    theta_M: float
    omega_m: float
    omega_M: float
    mu_m: complex
    mu_M: complex
    corner_coefficient: complex

    @classmethod
    def from_sector(cls, sector: Sector) -> "AsymptoticCoeffs":
        return cls(sector.theta_m, sector.theta_M, float(omega(sector.theta_m)), float(omega(sector.theta_M)),
                   complex(mu(sector.theta_m)), complex(mu(sector.theta_M)), corner_coefficient(sector))


def ray_leading_integral(theta: float, s: float, h: float) -> complex:
    """Closed form of int_0^h exp(-sqrt(s r) mu(theta)) dr."""
    m = complex(mu(theta))
    a = math.sqrt(s * h)
    e = np.exp(-a * m)
    return complex(2.0 / s * (m**-2 - m**-2 * e - a * e / m))


def ray_leading_quadrature(theta: float, s: float, h: float, order: int = 32) -> complex:
    r, w = graded_interval(0.0, h, order)
    return complex(np.sum(w * np.exp(-np.sqrt(s * r) * mu(theta))))


# ----------------------------------------------------------------------------
# fields

@dataclass
class FieldPair:
    """A (v, w) pair with analytic gradients, e.g. an eigenpair or a synthetic pair."""
    v: Callable
    w: Callable
    grad_v: Callable
    grad_w: Callable
    k: float
    q: complex

    @classmethod
    def from_eigenpair(cls, pair) -> "FieldPair":
        return cls(pair.v, pair.w, pair.grad_v, pair.grad_w, pair.k_star, pair.medium.q)


@dataclass
class Approximant:
    """A Herglotz wave v_j together with its gradient."""
    density: Density
    k: float

    def __call__(self, pts):
        return herglotz_eval(self.density, self.k, np.atleast_2d(pts))

    def grad(self, pts):
        return herglotz_grad(self.density, self.k, np.atleast_2d(pts))

    @property
    def at_corner(self) -> complex:
        return complex(np.sum(self.density.weights * self.density.samples))


def _as_field_pair(obj) -> FieldPair:
    return obj if isinstance(obj, FieldPair) else FieldPair.from_eigenpair(obj)


# ----------------------------------------------------------------------------
# identity terms

@dataclass
class IdentityTerms:
    s: float
    j: int
    I1: complex
    Delta_j: complex
    I2_plus: complex
    I2_minus: complex
    xi_plus: complex
    xi_minus: complex
    I3: complex
    lead_plus: complex
    lead_minus: complex
    I21_plus: complex
    I21_minus: complex
    I22_plus: complex
    I22_minus: complex
    I_eta_plus: complex
    I_eta_minus: complex
    vj0: complex
    eta0: float
    order: int
    f1: Callable | None = field(default=None, repr=False)
    f2: Callable | None = field(default=None, repr=False)
    f1j: Callable | None = field(default=None, repr=False)

    @property
    def lhs(self) -> complex:
        return self.I1 + self.Delta_j

    @property
    def rhs(self) -> complex:
        return self.I3 - self.I2_plus - self.I2_minus - self.xi_plus - self.xi_minus

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)

    def magnitudes(self) -> dict:
        names = ["I1", "Delta_j", "I2_plus", "I2_minus", "xi_plus", "xi_minus", "I3"]
        return {n: abs(getattr(self, n)) for n in names}

    @property
    def max_term(self) -> float:
        return max(self.magnitudes().values())

    @property
    def relative_residual(self) -> float:
        m = self.max_term
        return self.residual / m if m > 0 else 0.0

    @property
    def decomposition_residual(self) -> float:
        """How far I2 is from lead + v_j(0) eta(0) I21 + eta(0) I22 + I_eta on each ray."""
        d = 0.0
        for side in ("plus", "minus"):
            parts = (getattr(self, f"lead_{side}") + self.vj0 * self.eta0 * getattr(self, f"I21_{side}")
                     + self.eta0 * getattr(self, f"I22_{side}") + getattr(self, f"I_eta_{side}"))
            d = max(d, abs(getattr(self, f"I2_{side}") - parts))
        return d

    def to_dict(self) -> dict:
        out = {"s": self.s, "j": self.j, "order": self.order, "eta0": self.eta0,
               "residual": self.residual, "relative_residual": self.relative_residual}
        for n in ("I1", "Delta_j", "I2_plus", "I2_minus", "xi_plus", "xi_minus", "I3", "lead_plus",
                  "lead_minus", "I21_plus", "I21_minus", "I22_plus", "I22_minus", "I_eta_plus",
                  "I_eta_minus", "vj0"):
            z = complex(getattr(self, n))
            out[n] = [z.real, z.imag]
        return out


def _ray(tsector: TruncatedSector, side: str, order: int):
    region = "boundary_ray_plus" if side == "plus" else "boundary_ray_minus"
    rule = build_quadrature(tsector, region, order, graded=True)
    theta = tsector.sector.theta_M if side == "plus" else tsector.sector.theta_m
    return rule, theta


def assemble_identity_terms(pair, approximant: Approximant | Density, eta: EtaSpec,
                            tsector: TruncatedSector, s: float, order: int = 32, j: int = 0,
                            k: float | None = None) -> IdentityTerms:
    """All integrals entering the identity at CGO scale s, by graded Gauss quadrature.

    ``pair`` is an Eigenpair or FieldPair with the corner at the origin;
    ``approximant`` is v_j, given directly or as its Herglotz density.
    """
    fp = _as_field_pair(pair)
    k = fp.k if k is None else k
    vj = approximant if isinstance(approximant, Approximant) else Approximant(approximant, k)
    q = fp.q
    k2 = k * k
    eta = eta if isinstance(eta, EtaSpec) else EtaSpec(float(eta))
    f1 = lambda x: -k2 * fp.v(x)
    f2 = lambda x: -k2 * q * fp.w(x)
    f1j = lambda x: -k2 * vj(x)

    area = build_quadrature(tsector, "sector_area", order, graded=True)
    X = area.nodes
    U = u0(X, s)
    vX, wX, vjX = fp.v(X), fp.w(X), vj(X)
    I1 = complex(np.sum(area.weights * U * (-k2 * vjX + k2 * q * wX)))
    Delta = complex(-k2 * np.sum(area.weights * U * (vX - vjX)))

    eta0 = float(eta(np.zeros((1, 2)))[0])
    vj0 = vj.at_corner
    rays = {}
    for side in ("plus", "minus"):
        rule, theta = _ray(tsector, side, order)
        P, w = rule.nodes, rule.weights
        r = np.linalg.norm(P, axis=1)
        Ur = u0(P, s)
        e = eta(P)
        vjP, vP = vj(P), fp.v(P)
        J0 = np.array([bessel_j(0, k * ri) for ri in r])
        rays[side] = dict(
            I2=complex(np.sum(w * e * Ur * vjP)),
            xi=complex(np.sum(w * e * Ur * (vP - vjP))),
            lead=eta0 * vj0 * ray_leading_integral(theta, s, tsector.h),
            I21=complex(np.sum(w * (J0 - 1.0) * Ur)),
            I22=complex(np.sum(w * (vjP - vj0 * J0) * Ur)),
            I_eta=complex(np.sum(w * (e - eta0) * Ur * vjP)),
        )

    arc = build_quadrature(tsector, "arc", 2 * order)
    A = arc.nodes
    nrm = A / np.linalg.norm(A, axis=1, keepdims=True)
    Ua = u0(A, s)
    gx, gy = u0_grad(A, s)
    dn_u0 = gx * nrm[:, 0] + gy * nrm[:, 1]
    diff = fp.v(A) - fp.w(A)
    gd = fp.grad_v(A) - fp.grad_w(A)
    dn_diff = gd[:, 0] * nrm[:, 0] + gd[:, 1] * nrm[:, 1]
    I3 = complex(np.sum(arc.weights * (Ua * dn_diff - diff * dn_u0)))

    P_, M_ = rays["plus"], rays["minus"]
    return IdentityTerms(
        s=float(s), j=int(j), I1=I1, Delta_j=Delta,
        I2_plus=P_["I2"], I2_minus=M_["I2"], xi_plus=P_["xi"], xi_minus=M_["xi"], I3=I3,
        lead_plus=P_["lead"], lead_minus=M_["lead"], I21_plus=P_["I21"], I21_minus=M_["I21"],
        I22_plus=P_["I22"], I22_minus=M_["I22"], I_eta_plus=P_["I_eta"], I_eta_minus=M_["I_eta"],
        vj0=vj0, eta0=eta0, order=order, f1=f1, f2=f2, f1j=f1j)


def identity_refinement(pair, approximant, eta, tsector, s, orders=(8, 16, 32, 64), j: int = 0,
                        tol: float | None = None):
    """Identity terms at increasing quadrature orders; optionally demand convergence.

    With ``tol`` set, successive I1 values must agree to tol * max term at the
    finest order, otherwise QuadratureNonConvergence is raised.
    """
    out = [assemble_identity_terms(pair, approximant, eta, tsector, s, o, j) for o in orders]
    if tol is not None:
        a, b = out[-2], out[-1]
        scale = b.max_term or 1.0
        for n in b.magnitudes():
            if abs(getattr(a, n) - getattr(b, n)) > tol * scale:
                raise QuadratureNonConvergence(f"{n} changed by more than {tol:g} x max term")
    return out


# ----------------------------------------------------------------------------
# slopes and trends

def loglog_slope(x, y, floor: float = 1e-300) -> float:
    x = np.asarray(x, dtype=float)
    y = np.maximum(np.abs(np.asarray(y)), floor)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def trend_to_zero(seq, factor: float = TREND_FACTOR) -> dict:
    """Last-third geometric mean against first-third geometric mean, plus a fitted slope."""
    a = np.maximum(np.abs(np.asarray(seq)), 1e-300)
    n = len(a)
    t = max(1, n // 3)
    first = float(np.exp(np.mean(np.log(a[:t]))))
    last = float(np.exp(np.mean(np.log(a[-t:]))))
    slope = float(np.polyfit(np.arange(n), np.log(a), 1)[0]) if n >= 2 else 0.0
    return {"first_third": first, "last_third": last, "ratio": last / first,
            "slope": slope, "trend": bool(last <= factor * first and slope < 0)}


# ----------------------------------------------------------------------------
# I2 asymptotics

@dataclass
class I2AsymptoticReport:
    s_values: np.ndarray
    I2_plus: np.ndarray
    I2_minus: np.ndarray
    lead_plus: np.ndarray
    lead_minus: np.ndarray
    slope_plus: float
    slope_minus: float
    expected_slope: float
    leading_vanishes: bool

    @property
    def remainder_plus(self):
        return self.I2_plus - self.lead_plus

    @property
    def remainder_minus(self):
        return self.I2_minus - self.lead_minus

    @property
    def passed(self) -> bool:
        return bool(self.slope_plus <= self.expected_slope and self.slope_minus <= self.expected_slope)


def i2_asymptotic_check(eta: EtaSpec, g: Density, sector: Sector, s_schedule, k: float = 1.0,
                        h: float = 0.5, order: int = 32) -> I2AsymptoticReport:
    """Subtract the closed leading term from I2 on both rays and fit the remainder's decay.

    The remainder should fall like s^{-2} for constant eta and like s^{-1-alpha}
    when a Hoelder part eta(x) - eta(0) ~ |x|^alpha is present. When eta(0) = 0
    the leading term is zero and I2 itself is fitted.
    """
    eta = eta if isinstance(eta, EtaSpec) else EtaSpec(float(eta))
    if not (omega(sector.theta_m) > 0 and omega(sector.theta_M) > 0):
        raise PreconditionError("omega must be positive at both sector angles")
    vj = Approximant(g, k)
    vj0 = vj.at_corner
    eta0 = float(eta(np.zeros((1, 2)))[0])
    ts = TruncatedSector(sector, h)
    s_values = np.asarray(s_schedule, dtype=float)
    out = {"plus": ([], []), "minus": ([], [])}
    for side in ("plus", "minus"):
        rule, theta = _ray(ts, side, order)
        P, w = rule.nodes, rule.weights
        e, vjP = eta(P), vj(P)
        for s in s_values:
            out[side][0].append(complex(np.sum(w * e * u0(P, s) * vjP)))
            out[side][1].append(eta0 * vj0 * ray_leading_integral(theta, s, h))
    I2p, Lp = map(np.array, out["plus"])
    I2m, Lm = map(np.array, out["minus"])
    alpha = 1.0 if eta.constant else eta.alpha
    expected = -min(1 + alpha, 2.0) + 0.1
    return I2AsymptoticReport(s_values, I2p, I2m, Lp, Lm, loglog_slope(s_values, I2p - Lp),
                              loglog_slope(s_values, I2m - Lm), expected, eta0 == 0)


# ----------------------------------------------------------------------------
# xi bound

def probe_functions(k: float, n_modes: int = 6):
    """Fourier-Bessel modes J_m(k r) cos/sin(m theta) and their gradients about the corner."""
    from scipy.special import jv

    def mode(m, kind):
        def f(P):
            r = np.hypot(P[:, 0], P[:, 1])
            t = np.arctan2(P[:, 1], P[:, 0])
            return jv(m, k * r) * (np.cos(m * t) if kind == "c" else np.sin(m * t))

        def g(P):
            r = np.hypot(P[:, 0], P[:, 1])
            t = np.arctan2(P[:, 1], P[:, 0])
            ang = np.cos(m * t) if kind == "c" else np.sin(m * t)
            dang = -m * np.sin(m * t) if kind == "c" else m * np.cos(m * t)
            dr = 0.5 * k * (jv(m - 1, k * r) - jv(m + 1, k * r)) * ang
            with np.errstate(divide="ignore", invalid="ignore"):
                dt = np.where(r > 0, jv(m, k * r) / r, 0.5 * k * (m == 1)) * dang
            c, s_ = np.cos(t), np.sin(t)
            return np.column_stack([dr * c - dt * s_, dr * s_ + dt * c])
        return f, g

    out = [mode(0, "c")]
    for m in range(1, n_modes + 1):
        out += [mode(m, "c"), mode(m, "s")]
    return out


def h1_norm(fn, grad_fn, tsector: TruncatedSector, order: int = 24) -> float:
    rule = build_quadrature(tsector, "sector_area", order)
    v = fn(rule.nodes)
    g = grad_fn(rule.nodes)
    return math.sqrt(float(np.sum(rule.weights * (np.abs(v) ** 2 + np.sum(np.abs(g) ** 2, axis=1)))))


def trace_constant(tsector: TruncatedSector, probes, order: int = 24, safety: float = 2.0) -> float:
    """safety x max over probes of ||phi||_{L2(rays)} / ||phi||_{H1(S_h)}."""
    best = 0.0
    for f, g in probes:
        tr = 0.0
        for side in ("plus", "minus"):
            rule, _ = _ray(tsector, side, order)
            tr += float(np.sum(rule.weights * np.abs(f(rule.nodes)) ** 2))
        best = max(best, math.sqrt(tr) / h1_norm(f, g, tsector, order))
    return safety * best


@dataclass
class XiBoundReport:
    s: float
    xi_plus: complex
    xi_minus: complex
    bound: float
    C: float
    h1_diff: float

    @property
    def margin(self) -> float:
        m = max(abs(self.xi_plus), abs(self.xi_minus))
        return self.bound / m if m > 0 else math.inf

    @property
    def passed(self) -> bool:
        return bool(max(abs(self.xi_plus), abs(self.xi_minus)) <= self.bound)


def xi_bound(eta: EtaSpec, tsector: TruncatedSector, s: float, h1_diff: float, C: float) -> float:
    """Right-hand side of the xi estimate with the exponential factor taken at Theta = 0."""
    sec, h = tsector.sector, tsector.h
    dth = sec.opening
    dw = delta_w(sec)
    eta0 = abs(float(eta(np.zeros((1, 2)))[0]))
    a = 1.0 if eta.constant else eta.alpha
    hn = eta.holder_norm(tsector.diameter)
    t1 = eta0 * math.sqrt(dth) * h / math.sqrt(2)
    t2 = hn * s ** (-(a + 1)) * math.sqrt(2 * dth * math.gamma(4 * a + 4)) / (2 * dw) ** (2 * a + 2)
    return C * (t1 + t2) * h1_diff


def xi_bound_check(v, v_j, eta: EtaSpec, tsector: TruncatedSector, s: float, *, grad_v=None, grad_vj=None,
                   C: float | None = None, k: float = 1.0, order: int = 32) -> XiBoundReport:
    """Compare |xi^pm(s)| with the H1-based estimate.

    v and v_j are callables on (n, 2) point arrays; their gradients are needed
    for the H1 norm of the difference. C defaults to the empirical trace constant.
    """
    eta = eta if isinstance(eta, EtaSpec) else EtaSpec(float(eta))
    xi = {}
    for side in ("plus", "minus"):
        rule, _ = _ray(tsector, side, order)
        P = rule.nodes
        xi[side] = complex(np.sum(rule.weights * eta(P) * u0(P, s) * (v(P) - v_j(P))))
    if grad_v is None or grad_vj is None:
        raise ValueError("gradients of v and v_j are required for the H1 norm")
    hd = h1_norm(lambda P: v(P) - v_j(P), lambda P: grad_v(P) - grad_vj(P), tsector)
    if C is None:
        C = trace_constant(tsector, probe_functions(k))
    return XiBoundReport(float(s), xi["plus"], xi["minus"], xi_bound(eta, tsector, s, hd, C), C, hd)


# ----------------------------------------------------------------------------
# limits along an admissibility schedule

@dataclass
class LimitReport:
    js: list
    s_values: list
    sequence: np.ndarray
    vj0: np.ndarray
    target: np.ndarray
    beta: float
    window: tuple
    trend: dict
    degenerate_opening: bool
    corner_coefficient: complex
    terms: list = field(default_factory=list, repr=False)
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.trend["trend"])


def _fits(report):
    fits = getattr(report, "fits", None)
    if not fits:
        raise PreconditionError("admissibility report carries no fitted kernels")
    return fits


def master_limit_check(pair, report, beta: float, tsector: TruncatedSector, eta: EtaSpec | None = None,
                       order: int = 32, mapper=map) -> LimitReport:
    """s * [I3 - I1 - Delta_j - sum(I2 - lead) - sum xi] along s = j^beta.

    This product equals 2 eta(0) v_j(0) times the bracketed ray sums up to the
    identity residual, so with eta(0) != 0 it must co-trend with v_j(0).
    """
    ups, rho = report.Upsilon_hat, report.varrho_hat
    lo, hi = max(rho, 0.0), ups
    if not lo < beta < hi:
        raise PreconditionError(f"beta={beta} outside the admissible window ({lo:.4g}, {hi:.4g})")
    fits = _fits(report)
    if eta is None:
        eta = pair.medium.eta
    fp = _as_field_pair(pair)

    def one(f):
        s = float(f.j_index) ** beta
        return assemble_identity_terms(fp, f.density, eta, tsector, s, order, f.j_index)

    terms = list(mapper(one, fits))
    seq = np.array([t.s * (t.I3 - t.I1 - t.Delta_j - (t.I2_plus - t.lead_plus) - (t.I2_minus - t.lead_minus)
                           - t.xi_plus - t.xi_minus) for t in terms])
    vj0 = np.array([t.vj0 for t in terms])
    cc = corner_coefficient(tsector.sector)
    target = np.array([t.eta0 * cc * t.vj0 for t in terms])
    tr = trend_to_zero(seq)
    tr["vj0"] = trend_to_zero(vj0)
    return LimitReport([t.j for t in terms], [t.s for t in terms], seq, vj0, target, beta, (lo, hi), tr,
                       tsector.sector.degenerate_opening, cc, terms,
                       {"eta0": terms[0].eta0 if terms else None})


def eta_zero_limit_check(pair, report, beta: float, tsector: TruncatedSector, alpha: float = 0.9,
                         order: int = 32, mapper=map, corner=(0.0, 0.0)) -> LimitReport:
    """For eta = 0 follow v_j(0) against -f2(0)/k^2 = q w(0) along s = j^beta.

    The sequence reported is |v_j(0) - q w(0)|; s^2 times the identity
    imbalance is kept in ``meta``.
    """
    if len(getattr(report, "schedule", [])) < 4:
        raise PreconditionError("schedule needs at least 4 entries")
    ups, rho = report.Upsilon_hat, report.varrho_hat
    lo, hi = max(rho / alpha, 0.0), ups / 2
    if not lo < beta < hi:
        raise PreconditionError(f"beta={beta} outside the admissible window ({lo:.4g}, {hi:.4g})")
    fp = _as_field_pair(pair)
    eta = getattr(getattr(pair, "medium", None), "eta", EtaSpec(0.0))
    if not (eta.constant and eta.eta0 == 0):
        raise PreconditionError("eta must vanish identically")
    fits = _fits(report)
    c = np.atleast_2d(np.asarray(corner, dtype=float))
    qw0 = complex(fp.q * fp.w(c)[0])

    def one(f):
        s = float(f.j_index) ** beta
        return assemble_identity_terms(fp, f.density, eta, tsector, s, order, f.j_index)

    terms = list(mapper(one, fits))
    vj0 = np.array([t.vj0 for t in terms])
    seq = np.abs(vj0 - qw0)
    tr = trend_to_zero(seq)
    imbalance = [t.s**2 * (t.lhs - t.rhs) for t in terms]
    return LimitReport([t.j for t in terms], [t.s for t in terms], seq, vj0, np.full(len(terms), qw0), beta,
                       (lo, hi), tr, tsector.sector.degenerate_opening, corner_coefficient(tsector.sector), terms,
                       {"qw0": [qw0.real, qw0.imag], "alpha": alpha,
                        "s2_imbalance": [abs(x) for x in imbalance]})


__all__ = ["omega", "mu", "corner_coefficient", "AsymptoticCoeffs", "ray_leading_integral",
           "ray_leading_quadrature", "FieldPair", "Approximant", "IdentityTerms", "assemble_identity_terms",
           "identity_refinement", "loglog_slope", "trend_to_zero", "I2AsymptoticReport", "i2_asymptotic_check",
           "probe_functions", "h1_norm", "trace_constant", "XiBoundReport", "xi_bound", "xi_bound_check",
           "LimitReport", "master_limit_check", "eta_zero_limit_check", "PreconditionError",
           "QuadratureNonConvergence"]
