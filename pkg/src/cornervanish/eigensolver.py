"""Conductive transmission eigenpairs by boundary collocation.

Find k > 0 and a nontrivial pair (w, v) with

    (Delta + k^2 (1+V)) w = 0,  (Delta + k^2) v = 0   in the domain,
    w = v,  d_nu w = d_nu v + eta v                    on the boundary.

Both fields are expanded in particular solutions (Fourier-Bessel functions or
fundamental solutions), so only the two boundary conditions are collocated.
Eigenvalues show up as dips of the smallest singular value of the collocation
matrix as a function of k.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import hankel1, jv

from .geometry import Sector, TruncatedSector, QuadratureRule, gauss_interval, polar_rule
from .special_fn import bessel_j, bessel_j_prime

GOLDEN = (math.sqrt(5) - 1) / 2


# ----------------------------------------------------------------------------
# medium

@dataclass(frozen=True)
class EtaSpec:
    """eta(x) = eta0 + c |x - center|^alpha (constant when c == 0)."""
    eta0: float = 0.0
    c: float = 0.0
    alpha: float | None = None
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.c != 0:
            if self.alpha is None or not (0 < self.alpha < 1):
                raise ValueError("Hoelder exponent alpha must lie in (0, 1)")

    @property
    def constant(self) -> bool:
        return self.c == 0

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.full(len(pts), self.eta0, dtype=float)
        if self.c != 0:
            d = np.linalg.norm(pts - np.asarray(self.center), axis=1)
            out = out + self.c * d**self.alpha
        return out

    def holder_norm(self, diameter: float) -> float:
        """sup |eta| + Hoelder seminorm on a set of the given diameter."""
        if self.c == 0:
            return abs(self.eta0)
        return abs(self.eta0) + abs(self.c) * diameter**self.alpha + abs(self.c)

    def to_dict(self):
        return {"eta0": self.eta0, "c": self.c, "alpha": self.alpha, "center": list(self.center)}


@dataclass(frozen=True)
class Medium:
    V: complex = 3.0
    eta: EtaSpec = field(default_factory=EtaSpec)

    def __post_init__(self):
        if not isinstance(self.eta, EtaSpec):
            object.__setattr__(self, "eta", EtaSpec(float(self.eta)))
        if 1 + self.V == 0:
            raise ValueError("1 + V must be nonzero")

    @property
    def q(self) -> complex:
        return 1 + self.V

    @property
    def sqrt_q(self):
        r = np.sqrt(complex(self.q))
        return r.real if r.imag == 0 else r

    @property
    def alpha(self):
        return self.eta.alpha


# ----------------------------------------------------------------------------
# domains

def _cheb_interior(n: int) -> np.ndarray:
    """Chebyshev-Gauss points on (0, 1), clustered at both ends."""
    return 0.5 * (1 - np.cos(np.pi * (np.arange(n) + 0.5) / n))


def _cheb_interlaced(n: int) -> np.ndarray:
    return 0.5 * (1 - np.cos(np.pi * np.arange(1, n) / n))


@dataclass(frozen=True)
class Disk:
    radius: float = 1.0
    center: tuple = (0.0, 0.0)

    def scaled(self, c: float) -> "Disk":
        return Disk(self.radius * c, tuple(c * np.asarray(self.center)))

    def _circle(self, t):
        c = np.asarray(self.center)
        nrm = np.column_stack([np.cos(t), np.sin(t)])
        return c + self.radius * nrm, nrm

    def boundary(self, m: int):
        t = 2 * np.pi * np.arange(m) / m
        return self._circle(t)

    def check_points(self, m: int):
        t = 2 * np.pi * (np.arange(m) + 0.5) / m
        return self._circle(t)

    def interior_rule(self, order: int = 12) -> QuadratureRule:
        return self.area_rule(order)

    def area_rule(self, order: int = 32) -> QuadratureRule:
        r, wr = gauss_interval(0.0, self.radius, order)
        n = 2 * order
        t = 2 * np.pi * np.arange(n) / n
        R, T = np.meshgrid(r, t, indexing="ij")
        W = np.outer(wr * r, np.full(n, 2 * np.pi / n))
        pts = np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()]) + np.asarray(self.center)
        return QuadratureRule(pts, W.ravel(), "sector_area")

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    @property
    def diameter(self) -> float:
        return 2 * self.radius

    def to_dict(self):
        return {"kind": "disk", "radius": self.radius, "center": list(self.center)}


@dataclass(frozen=True)
class Pacman:
    """Truncated sector S_h with its corner at the origin, closed by an arc."""
    theta_m: float
    theta_M: float
    radius: float = 1.0

    def __post_init__(self):
        Sector(self.theta_m, self.theta_M)
        if self.theta_M <= self.theta_m:
            raise ValueError("pacman opening must be positive")

    @classmethod
    def symmetric(cls, opening: float, radius: float = 1.0) -> "Pacman":
        return cls(-opening / 2, opening / 2, radius)

    @property
    def sector(self) -> Sector:
        return Sector(self.theta_m, self.theta_M)

    @property
    def tsector(self) -> TruncatedSector:
        return TruncatedSector(self.sector, self.radius)

    @property
    def opening(self) -> float:
        return self.theta_M - self.theta_m

    def scaled(self, c: float) -> "Pacman":
        return Pacman(self.theta_m, self.theta_M, self.radius * c)

    def _pieces(self, t):
        h, tm, tM = self.radius, self.theta_m, self.theta_M
        pts, nrm = [], []
        for th, n in ((tm, np.array([np.sin(tm), -np.cos(tm)])),
                      (tM, np.array([-np.sin(tM), np.cos(tM)]))):
            pts.append(np.outer(h * t, [np.cos(th), np.sin(th)]))
            nrm.append(np.tile(n, (len(t), 1)))
        a = tm + (tM - tm) * t
        u = np.column_stack([np.cos(a), np.sin(a)])
        pts.append(h * u)
        nrm.append(u)
        return np.vstack(pts), np.vstack(nrm)

    def boundary(self, m: int):
        return self._pieces(_cheb_interior(max(1, math.ceil(m / 3))))

    def check_points(self, m: int):
        return self._pieces(_cheb_interlaced(max(2, math.ceil(m / 3)) + 1))

    def interior_rule(self, order: int = 12) -> QuadratureRule:
        return polar_rule(self.sector, 0.0, self.radius, order)

    def area_rule(self, order: int = 24) -> QuadratureRule:
        return polar_rule(self.sector, 0.0, self.radius, order, graded=True, panels=8)

    @property
    def area(self) -> float:
        return self.tsector.area

    @property
    def diameter(self) -> float:
        return self.tsector.diameter

    def to_dict(self):
        return {"kind": "pacman", "theta_m": self.theta_m, "theta_M": self.theta_M, "radius": self.radius}


@dataclass(frozen=True)
class ConvexPolygon:
    vertices: tuple

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("polygon needs at least three 2D vertices")
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if not np.all(cross > 0):
            raise ValueError("vertices must be listed counter-clockwise and form a convex polygon")
        object.__setattr__(self, "vertices", tuple(map(tuple, v)))

    @property
    def _v(self):
        return np.asarray(self.vertices)

    def scaled(self, c: float) -> "ConvexPolygon":
        return ConvexPolygon(tuple(map(tuple, c * self._v)))

    def _edges(self, t):
        v = self._v
        pts, nrm = [], []
        for a, b in zip(v, np.roll(v, -1, axis=0)):
            e = b - a
            n = np.array([e[1], -e[0]]) / np.linalg.norm(e)
            pts.append(a + np.outer(t, e))
            nrm.append(np.tile(n, (len(t), 1)))
        return np.vstack(pts), np.vstack(nrm)

    def boundary(self, m: int):
        return self._edges(_cheb_interior(max(1, math.ceil(m / len(self._v)))))

    def check_points(self, m: int):
        return self._edges(_cheb_interlaced(max(2, math.ceil(m / len(self._v))) + 1))

    def interior_rule(self, order: int = 12) -> QuadratureRule:
        return self.area_rule(max(2, order // 2))

    def area_rule(self, order: int = 16) -> QuadratureRule:
        # fan of triangles from the centroid, each mapped from the unit square
        v = self._v
        c = v.mean(axis=0)
        x, w = gauss_interval(0.0, 1.0, order)
        U, Wv = np.meshgrid(x, x, indexing="ij")
        WW = np.outer(w, w)
        pts, wts = [], []
        for a, b in zip(v, np.roll(v, -1, axis=0)):
            jac = abs(np.cross(a - c, b - c))
            P = c + np.multiply.outer(U, a - c) + np.multiply.outer(U * Wv, b - a)
            pts.append(P.reshape(-1, 2))
            wts.append((WW * U * jac).ravel())
        return QuadratureRule(np.vstack(pts), np.concatenate(wts), "sector_area")

    @property
    def area(self) -> float:
        v = self._v
        return 0.5 * abs(np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1]))

    @property
    def diameter(self) -> float:
        v = self._v
        return float(np.max(np.linalg.norm(v[:, None] - v[None], axis=2)))

    def to_dict(self):
        return {"kind": "polygon", "vertices": [list(p) for p in self.vertices]}


def domain_from_dict(d: dict):
    kind = d["kind"]
    if kind == "disk":
        return Disk(d.get("radius", 1.0), tuple(d.get("center", (0.0, 0.0))))
    if kind == "pacman":
        return Pacman(d["theta_m"], d["theta_M"], d.get("radius", 1.0))
    if kind == "polygon":
        return ConvexPolygon(tuple(map(tuple, d["vertices"])))
    raise ValueError(f"unknown domain kind {kind!r}")


# ----------------------------------------------------------------------------
# bases

@dataclass(frozen=True)
class CollocationBasis:
    """Particular-solution basis shared by w and v (with their own wavenumbers).

    fourier_bessel: J_nu(kappa r) cos(nu phi), J_nu(kappa r) sin(nu phi) with
    r, phi polar coordinates about ``origin`` and phi measured from
    ``angle_ref``. ``orders`` lists (nu, 'c' | 's') pairs.
    fundamental_solutions: H0^(1)(kappa |x - y_j|) for exterior charges y_j.
    """
    kind: str = "fourier_bessel"
    N: int = 16
    orders: tuple = ()
    origin: tuple = (0.0, 0.0)
    angle_ref: float = 0.0
    charge_points: tuple = ()

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("empty basis: N must be positive")
        if self.N < 4:
            raise ValueError("basis needs N >= 4")
        if self.kind == "fourier_bessel":
            if not self.orders:
                object.__setattr__(self, "orders", integer_orders(self.N))
        elif self.kind == "fundamental_solutions":
            if len(self.charge_points) == 0:
                raise ValueError("fundamental solutions need charge points")
        else:
            raise ValueError(f"unknown basis kind {self.kind!r}")

    @property
    def size(self) -> int:
        return len(self.orders) if self.kind == "fourier_bessel" else len(self.charge_points)

    def evaluate(self, kappa, pts: np.ndarray):
        """Values and gradient components of all basis functions, each (n, size)."""
        if self.kind == "fourier_bessel":
            return _fb_eval(self.orders, kappa, pts - np.asarray(self.origin), self.angle_ref)
        return _mfs_eval(np.asarray(self.charge_points), kappa, pts)

    def to_dict(self):
        return {"kind": self.kind, "N": self.N, "orders": [[float(nu), t] for nu, t in self.orders],
                "origin": list(self.origin), "angle_ref": self.angle_ref,
                "charge_points": [list(p) for p in self.charge_points]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], d["N"], tuple((nu, t) for nu, t in d.get("orders", [])),
                   tuple(d.get("origin", (0.0, 0.0))), d.get("angle_ref", 0.0),
                   tuple(map(tuple, d.get("charge_points", []))))


def integer_orders(N: int) -> tuple:
    return ((0.0, "c"),) + tuple((float(m), t) for m in range(1, N + 1) for t in ("c", "s"))


def corner_orders(N: int, opening: float) -> tuple:
    """Integer orders plus the non-integer multiples of pi/opening up to N."""
    orders = list(integer_orders(N))
    n = 1
    while n * math.pi / opening <= N + 1e-12:
        nu = n * math.pi / opening
        if abs(nu - round(nu)) > 1e-9:
            orders += [(nu, "s"), (nu, "c")]
        n += 1
    return tuple(orders)


DEFAULT_N = {"Disk": 10, "Pacman": 36, "ConvexPolygon": 40}


def default_basis(domain, N: int | None = None) -> CollocationBasis:
    """Fourier-Bessel about the centre (disk) or the corner (pacman); MFS for polygons.

    Disk expansions stay small: for large orders the w and v columns of a mode
    become nearly parallel and mask the dips.
    """
    N = N or DEFAULT_N.get(type(domain).__name__, 16)
    if isinstance(domain, Disk):
        return CollocationBasis("fourier_bessel", N, origin=tuple(domain.center))
    if isinstance(domain, Pacman):
        return CollocationBasis("fourier_bessel", N, corner_orders(N, domain.opening),
                                (0.0, 0.0), domain.theta_m)
    if isinstance(domain, ConvexPolygon):
        v = np.asarray(domain.vertices)
        c = v.mean(axis=0)
        R = np.max(np.linalg.norm(v - c, axis=1)) + 0.5 * domain.diameter
        t = 2 * np.pi * np.arange(2 * N) / (2 * N)
        charges = c + R * np.column_stack([np.cos(t), np.sin(t)])
        return CollocationBasis("fundamental_solutions", N, charge_points=tuple(map(tuple, charges)))
    raise TypeError(f"no default basis for {type(domain).__name__}")


def _fb_eval(orders, kappa, rel, angle_ref):
    r = np.hypot(rel[:, 0], rel[:, 1])
    th = np.arctan2(rel[:, 1], rel[:, 0])
    ph = th - angle_ref
    nus = np.array([o[0] for o in orders])
    is_cos = np.array([o[1] == "c" for o in orders])
    # radii repeat heavily (arcs, circles), so evaluate Bessel functions once per radius
    ur, inv = np.unique(r, return_inverse=True)
    kr = np.multiply.outer(kappa * ur, np.ones_like(nus))
    Jm, J0, Jp = jv(nus - 1, kr), jv(nus, kr), jv(nus + 1, kr)
    J = J0[inv]
    dJ = (0.5 * kappa * (Jm - Jp))[inv]
    A = np.where(is_cos, np.cos(np.outer(ph, nus)), np.sin(np.outer(ph, nus)))
    dA = np.where(is_cos, -nus * np.sin(np.outer(ph, nus)), nus * np.cos(np.outer(ph, nus)))
    with np.errstate(divide="ignore", invalid="ignore"):
        Jr = J / r[:, None]
    at0 = r == 0
    if np.any(at0):
        # limit of J_nu(kappa r)/r at r = 0
        lim = np.where(nus == 1, kappa / 2, np.where(nus > 1, 0.0, np.inf))
        Jr[at0] = lim
    gr = dJ * A
    with np.errstate(invalid="ignore"):
        gt = np.where(dA == 0, 0.0, Jr * dA)
    c, s = np.cos(th)[:, None], np.sin(th)[:, None]
    return J * A, gr * c - gt * s, gr * s + gt * c


def _mfs_eval(charges, kappa, pts):
    d = pts[:, None, :] - charges[None, :, :]
    rho = np.linalg.norm(d, axis=2)
    H0 = hankel1(0, kappa * rho)
    dH = -kappa * hankel1(1, kappa * rho) / rho
    return H0, dH * d[:, :, 0], dH * d[:, :, 1]


# ----------------------------------------------------------------------------
# assembly and singular values

def _points_for(basis: CollocationBasis, oversample: float) -> int:
    return int(math.ceil(oversample * basis.size))


def assemble_raw(k: float, domain, medium: Medium, basis: CollocationBasis,
                 oversample: float = 2.0, points=None):
    """Unscaled collocation matrix [[W, -V], [d_nu W, -(d_nu V + eta V)]]."""
    if not k > 0:
        raise ValueError("wavenumber must be positive")
    if points is None:
        points = domain.boundary(_points_for(basis, oversample))
    P, Nv = points
    kw = k * medium.sqrt_q
    if not np.isfinite(kw):
        raise ValueError("k sqrt(1+V) is not finite")
    Aw, gxw, gyw = basis.evaluate(kw, P)
    Av, gxv, gyv = basis.evaluate(k, P)
    nx, ny = Nv[:, [0]], Nv[:, [1]]
    dnw = gxw * nx + gyw * ny
    dnv = gxv * nx + gyv * ny
    eta = medium.eta(P)[:, None]
    return np.block([[Aw, -Av], [dnw, -(dnv + eta * Av)]])


def assemble(k: float, domain, medium: Medium, basis: CollocationBasis, oversample: float = 2.0):
    """Collocation matrix with unit-norm columns (rows: the two transmission conditions)."""
    B = assemble_raw(k, domain, medium, basis, oversample)
    return B / np.linalg.norm(B, axis=0)


def _interior_block(k, domain, medium, basis, rule):
    sw = np.sqrt(rule.weights)[:, None]
    Iw = basis.evaluate(k * medium.sqrt_q, rule.nodes)[0] * sw
    Iv = basis.evaluate(k, rule.nodes)[0] * sw
    Z = np.zeros_like(Iw)
    return np.block([[Iw, Z], [Z, Iv]])


@dataclass
class SigmaEvaluator:
    """Smallest singular values of the collocation problem as a function of k.

    method 'plain' uses the column-scaled boundary matrix directly. Method
    'subspace' first orthonormalises the basis against interior samples and
    then takes singular values of the boundary rows; this removes the
    near-redundancy of corner-centred expansions, whose plain singular values
    are tiny for every k.
    """
    domain: object
    medium: Medium
    basis: CollocationBasis
    method: str = "auto"
    oversample: float = 2.0
    interior_order: int = 12
    rank_tol: float = 1e-13

    def __post_init__(self):
        if self.method == "auto":
            plain = isinstance(self.domain, Disk) and self.basis.kind == "fourier_bessel"
            self.method = "plain" if plain else "subspace"
        if self.method not in ("plain", "subspace"):
            raise ValueError(f"unknown sigma method {self.method!r}")
        self._points = self.domain.boundary(_points_for(self.basis, self.oversample))
        self._rule = self.domain.interior_rule(self.interior_order) if self.method == "subspace" else None

    def _decompose(self, k):
        B = assemble_raw(k, self.domain, self.medium, self.basis, points=self._points)
        if self.method == "plain":
            sc = np.linalg.norm(B, axis=0)
            U, s, Vh = np.linalg.svd(B / sc, full_matrices=False)
            return dict(sc=sc, s=s, Vh=Vh)
        A = np.vstack([B, _interior_block(k, self.domain, self.medium, self.basis, self._rule)])
        sc = np.linalg.norm(A, axis=0)
        U, s, Vh = np.linalg.svd(A / sc, full_matrices=False)
        keep = s > self.rank_tol * s[0]
        Ub = U[: B.shape[0], keep]
        _, sb, Qh = np.linalg.svd(Ub, full_matrices=False)
        return dict(sc=sc, s=sb, Qh=Qh, S=s[keep], Vh=Vh[keep])

    def smallest(self, k: float, count: int = 1) -> np.ndarray:
        s = self._decompose(k)["s"]
        return s[::-1][:count]

    def __call__(self, k: float) -> float:
        return float(self.smallest(k, 1)[0])

    def null_vector(self, k: float) -> np.ndarray:
        """Unscaled coefficient vector (w then v) attaining the smallest singular value."""
        d = self._decompose(k)
        if self.method == "plain":
            c = d["Vh"][-1].conj()
        else:
            y = d["Qh"][-1].conj()
            c = d["Vh"].conj().T @ (y / d["S"])
        return c / d["sc"]


# ----------------------------------------------------------------------------
# scanning and refinement

@dataclass
class EigenScanResult:
    k_grid: np.ndarray
    sigma_min: np.ndarray
    detected_minima: list
    median: float = float("nan")
    dip_threshold: float = 1e-3
    method: str = "plain"
    sigma_curves: np.ndarray | None = None


class BracketError(RuntimeError):
    pass


def golden_section(f, a: float, b: float, tol: float = 1e-10, max_iter: int = 200):
    """Minimise a unimodal f on [a, b]; returns (x, f(x))."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def _parallel_map(fn, items, threads: int):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def scan(k_lo: float, k_hi: float, n_steps: int, domain, medium: Medium,
         basis: CollocationBasis | None = None, *, dip_threshold: float = 1e-3,
         method: str = "auto", curves: int = 3, threads: int = 1,
         oversample: float = 2.0) -> EigenScanResult:
    """Smallest singular values on a uniform k grid and the dips among them.

    Candidates are strict grid minima of any of the ``curves`` smallest
    singular values; each is refined by golden section on that singular value
    within its neighbouring cells. A candidate is accepted when the smallest
    singular value at the refined k is below dip_threshold * median. Watching
    several singular values keeps an eigenvalue visible when a nearby one
    dominates the smallest.
    """
    if not 0 < k_lo <= k_hi:
        raise ValueError("scan range must satisfy 0 < k_lo <= k_hi")
    basis = basis or default_basis(domain)
    ev = SigmaEvaluator(domain, medium, basis, method, oversample)
    if k_lo == k_hi or n_steps < 2:
        ks = np.array([k_lo])
    else:
        ks = np.linspace(k_lo, k_hi, n_steps)
    S = np.array(_parallel_map(lambda k: ev.smallest(k, curves), ks, threads))
    if S.ndim == 1:
        S = S[:, None]
    smin = S[:, 0]
    med = float(np.median(smin))
    res = EigenScanResult(ks, smin, [], med, dip_threshold, ev.method, S.T)
    if len(ks) < 3:
        return res
    cands = []
    for i in range(S.shape[1]):
        s = S[:, i]
        for j in range(1, len(ks) - 1):
            if s[j] < s[j - 1] and s[j] < s[j + 1]:
                cands.append((i, j))

    def refine(c):
        i, j = c
        f = lambda k: float(ev.smallest(k, i + 1)[i])
        kc, _ = golden_section(f, ks[j - 1], ks[j + 1], tol=1e-11)
        return kc, ev(kc)

    refined = _parallel_map(refine, cands, threads)
    step = ks[1] - ks[0]
    found = []
    for kc, sc in sorted(refined):
        if sc >= dip_threshold * med:
            continue
        if found and abs(kc - found[-1][0]) < 1e-3 * step:
            if sc < found[-1][1]:
                found[-1] = (kc, sc)
            continue
        found.append((kc, sc))
    res.detected_minima = [(float(k), float(s)) for k, s in found]
    return res


# ----------------------------------------------------------------------------
# eigenpairs

@dataclass
class Eigenpair:
    k_star: float
    coeffs_w: np.ndarray
    coeffs_v: np.ndarray
    domain: object
    medium: Medium
    basis: CollocationBasis
    sigma: float = float("nan")
    residual: float = float("nan")
    field_scale: float = float("nan")

    @property
    def kw(self):
        return self.k_star * self.medium.sqrt_q

    def _eval(self, which, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        kappa, c = (self.kw, self.coeffs_w) if which == "w" else (self.k_star, self.coeffs_v)
        A, gx, gy = self.basis.evaluate(kappa, pts)
        return A @ c, gx @ c, gy @ c

    def v(self, pts):
        return self._eval("v", pts)[0]

    def w(self, pts):
        return self._eval("w", pts)[0]

    def grad_v(self, pts):
        _, gx, gy = self._eval("v", pts)
        return np.column_stack([gx, gy])

    def grad_w(self, pts):
        _, gx, gy = self._eval("w", pts)
        return np.column_stack([gx, gy])

    def boundary_defect(self, m: int | None = None):
        """(max defect, field scale) at points interlaced with the collocation nodes."""
        m = m or _points_for(self.basis, 2.0)
        P, Nv = self.domain.check_points(m)
        v, vx, vy = self._eval("v", P)
        w, wx, wy = self._eval("w", P)
        dnv = vx * Nv[:, 0] + vy * Nv[:, 1]
        dnw = wx * Nv[:, 0] + wy * Nv[:, 1]
        eta = self.medium.eta(P)
        d1 = np.abs(w - v)
        d2 = np.abs(dnw - dnv - eta * v)
        scale = max(np.max(np.abs(v)), np.max(np.abs(w)),
                    np.max(np.hypot(np.abs(vx), np.abs(vy))), np.max(np.hypot(np.abs(wx), np.abs(wy))))
        return float(max(d1.max(), d2.max())), float(scale)

    @property
    def passes(self) -> bool:
        return self.residual <= 1e-4 * self.field_scale

    def truncated(self, max_order: float) -> "Eigenpair":
        """Copy keeping only basis terms of order <= max_order (Fourier-Bessel bases)."""
        if self.basis.kind != "fourier_bessel":
            raise ValueError("truncation needs a Fourier-Bessel basis")
        keep = np.array([o[0] <= max_order + 1e-12 for o in self.basis.orders])
        return Eigenpair(self.k_star, np.where(keep, self.coeffs_w, 0), np.where(keep, self.coeffs_v, 0),
                         self.domain, self.medium, self.basis, self.sigma, self.residual, self.field_scale)

    def to_json(self) -> str:
        def cplx(a):
            a = np.asarray(a)
            return {"re": a.real.tolist(), "im": a.imag.tolist()}
        V = complex(self.medium.V)
        return json.dumps({
            "k_star": self.k_star, "sigma": self.sigma, "residual": self.residual,
            "field_scale": self.field_scale,
            "coeffs_w": cplx(self.coeffs_w), "coeffs_v": cplx(self.coeffs_v),
            "basis": self.basis.to_dict(), "domain": self.domain.to_dict(),
            "medium": {"V": [V.real, V.imag], "eta": self.medium.eta.to_dict()},
        }, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Eigenpair":
        d = json.loads(text)
        V = complex(*d["medium"]["V"])
        e = d["medium"]["eta"]
        med = Medium(V.real if V.imag == 0 else V,
                     EtaSpec(e["eta0"], e["c"], e["alpha"], tuple(e["center"])))
        c = lambda x: np.asarray(x["re"]) + 1j * np.asarray(x["im"])
        return cls(d["k_star"], c(d["coeffs_w"]), c(d["coeffs_v"]), domain_from_dict(d["domain"]),
                   med, CollocationBasis.from_dict(d["basis"]), d["sigma"], d["residual"], d["field_scale"])


def refine_and_extract(k0: float, domain, medium: Medium, basis: CollocationBasis | None = None, *,
                       step: float | None = None, bracket: tuple | None = None, method: str = "auto",
                       oversample: float = 2.0, tol: float = 1e-11, norm_order: int = 32) -> Eigenpair:
    """Golden-section refinement of a dip and extraction of the eigenpair.

    The search interval is ``bracket`` or k0 +- step. The fields are normalised
    so that ||v||_{L2(domain)} = 1.
    """
    basis = basis or default_basis(domain)
    ev = SigmaEvaluator(domain, medium, basis, method, oversample)
    if bracket is None:
        step = step or 1e-2
        bracket = (k0 - step, k0 + step)
    a, b = bracket
    kc, sc = golden_section(ev, a, b, tol=tol)
    edge = 10 * tol + 1e-9 * (b - a)
    if min(kc - a, b - kc) <= edge:
        raise BracketError(f"minimum at bracket edge near k={kc:.10g}; widen the bracket")
    s0 = ev(k0) if a < k0 < b else np.inf
    if s0 < sc:
        kc, sc = k0, s0
    c = ev.null_vector(kc)
    n = basis.size
    cw, cv = c[:n], c[n:]
    rule = domain.area_rule(norm_order)
    A = basis.evaluate(kc, rule.nodes)[0]
    vnorm = math.sqrt(float(np.sum(rule.weights * np.abs(A @ cv) ** 2)))
    j = int(np.argmax(np.abs(cv)))
    phase = cv[j] / abs(cv[j])
    cw, cv = cw / (vnorm * phase), cv / (vnorm * phase)
    if np.all(np.isreal(A)) and np.isrealobj(medium.V) and np.max(np.abs(cv.imag)) < 1e-12 * np.max(np.abs(cv)):
        cw, cv = cw.real.astype(complex), cv.real.astype(complex)
    pair = Eigenpair(float(kc), cw, cv, domain, medium, basis, float(sc))
    pair.residual, pair.field_scale = pair.boundary_defect()
    return pair


def l2_norm(pair: Eigenpair, which: str = "v", order: int = 32) -> float:
    rule = pair.domain.area_rule(order)
    vals = pair.v(rule.nodes) if which == "v" else pair.w(rule.nodes)
    return math.sqrt(float(np.sum(rule.weights * np.abs(vals) ** 2)))


# ----------------------------------------------------------------------------
# disk oracle

def oracle_degenerate(V, eta) -> bool:
    """With V = 0 and eta = 0 any w = v solves the problem, so every k is an eigenvalue."""
    return V == 0 and eta == 0


def disk_oracle(m: int, k: float, V: float, eta_const: float) -> float:
    """Determinant of the separated 2x2 system for angular mode m on the unit disk."""
    if np.iscomplexobj(V) and np.imag(V) != 0:
        raise ValueError("the disk oracle handles real contrast only")
    q = 1 + float(np.real(V))
    if q <= 0:
        raise ValueError("the disk oracle needs 1 + V > 0")
    kw = k * math.sqrt(q)
    a11 = bessel_j(m, kw)
    a12 = -bessel_j(m, k)
    a21 = kw * bessel_j_prime(m, kw)
    a22 = -(k * bessel_j_prime(m, k) + eta_const * bessel_j(m, k))
    return a11 * a22 - a12 * a21


def disk_oracle_null_vector(m: int, k: float, V: float, eta_const: float):
    """Coefficients (a, b) of w = a J_m(k sqrt(q) r), v = b J_m(k r) at a root."""
    kw = k * math.sqrt(1 + V)
    a11, a12 = bessel_j(m, kw), -bessel_j(m, k)
    if abs(a11) + abs(a12) == 0:
        return 1.0, 0.0
    return -a12, a11


def bisect(f, a: float, b: float, tol: float = 1e-14, max_iter: int = 200) -> float:
    fa = f(a)
    for _ in range(max_iter):
        c = 0.5 * (a + b)
        fc = f(c)
        if fc == 0 or b - a < tol:
            return c
        if (fa < 0) == (fc < 0):
            a, fa = c, fc
        else:
            b = c
    return 0.5 * (a + b)


def disk_oracle_roots(m_max: int, k_lo: float, k_hi: float, V: float, eta_const: float,
                      n_grid: int = 4000) -> list:
    """Sign-change roots of the mode determinants for m = 0..m_max, as (k, m)."""
    ks = np.linspace(k_lo, k_hi, n_grid)
    roots = []
    for m in range(m_max + 1):
        f = lambda k, m=m: disk_oracle(m, k, V, eta_const)
        vals = np.array([f(k) for k in ks])
        for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
            roots.append((bisect(f, ks[i], ks[i + 1]), m))
    return sorted(roots)
