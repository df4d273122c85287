"""Herglotz waves, their Jacobi-Anger expansions, and regularised kernel recovery.

A Herglotz wave with kernel g is v(x) = int_{S^{n-1}} exp(i k xi.x) g(xi) dsigma(xi).
Kernels are stored as samples on a fixed angular grid together with the
quadrature weights of that grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .special_fn import bessel_j_orders, legendre_all, spherical_j_orders


@dataclass(frozen=True)
class Density:
    """Kernel samples on the unit circle (2D) or a Gauss x uniform sphere grid (3D)."""
    dimension: int
    samples: np.ndarray
    n_polar: int = 0
    n_azimuth: int = 0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex).ravel()
        object.__setattr__(self, "samples", s)
        if self.dimension == 2:
            object.__setattr__(self, "n_azimuth", len(s))
        elif self.dimension == 3:
            if self.n_polar * self.n_azimuth != len(s):
                raise ValueError("3D density needs n_polar * n_azimuth samples")
        else:
            raise ValueError("dimension must be 2 or 3")

    @classmethod
    def circle(cls, samples) -> "Density":
        return cls(2, samples)

    @classmethod
    def sphere(cls, samples, n_polar: int, n_azimuth: int) -> "Density":
        return cls(3, samples, n_polar, n_azimuth)

    @classmethod
    def from_function(cls, func: Callable, dimension: int, n: int, n_azimuth: int | None = None):
        """Sample func(directions) on the default grid with n (polar) nodes."""
        if dimension == 2:
            d, _ = circle_grid(n)
            return cls.circle(func(d))
        na = n_azimuth or 2 * n
        d, _ = sphere_grid(n, na)
        return cls.sphere(func(d), n, na)

    @property
    def directions(self) -> np.ndarray:
        if self.dimension == 2:
            return circle_grid(self.n_azimuth)[0]
        return sphere_grid(self.n_polar, self.n_azimuth)[0]

    @property
    def weights(self) -> np.ndarray:
        if self.dimension == 2:
            return circle_grid(self.n_azimuth)[1]
        return sphere_grid(self.n_polar, self.n_azimuth)[1]

    @property
    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.weights * np.abs(self.samples) ** 2)))

    def with_samples(self, samples) -> "Density":
        return Density(self.dimension, samples, self.n_polar, self.n_azimuth)


def circle_grid(n: int):
    phi = 2 * np.pi * np.arange(n) / n
    return np.column_stack([np.cos(phi), np.sin(phi)]), np.full(n, 2 * np.pi / n)


def sphere_grid(n_polar: int, n_azimuth: int):
    """Gauss nodes in cos(polar angle) times a uniform azimuthal grid."""
    c, wc = np.polynomial.legendre.leggauss(n_polar)
    lam = 2 * np.pi * np.arange(n_azimuth) / n_azimuth
    C, L = np.meshgrid(c, lam, indexing="ij")
    S = np.sqrt(1 - C**2)
    d = np.column_stack([(S * np.cos(L)).ravel(), (S * np.sin(L)).ravel(), C.ravel()])
    w = np.outer(wc, np.full(n_azimuth, 2 * np.pi / n_azimuth)).ravel()
    return d, w


def _points(x, dim):
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != dim:
        raise ValueError(f"points must have {dim} coordinates")
    return pts, single


def herglotz_matrix(g: Density, k: float, pts: np.ndarray) -> np.ndarray:
    """Plane-wave matrix exp(i k xi_l . x_i) times grid weights."""
    return np.exp(1j * k * pts @ g.directions.T) * g.weights


def herglotz_eval(g: Density, k: float, x):
    """Quadrature of the Herglotz integral at one point or an (n, dim) array."""
    if not k > 0:
        raise ValueError("wavenumber must be positive")
    pts, single = _points(x, g.dimension)
    out = herglotz_matrix(g, k, pts) @ g.samples
    return complex(out[0]) if single else out


def herglotz_grad(g: Density, k: float, x) -> np.ndarray:
    """Analytic gradient, shape (n, dim): each plane wave contributes i k xi."""
    pts, _ = _points(x, g.dimension)
    E = herglotz_matrix(g, k, pts) * g.samples
    return 1j * k * E @ g.directions


def jacobi_anger_eval(g: Density, k: float, x, P: int = 40):
    """Herglotz wave from its Bessel expansion truncated after order P.

    2D: v = J_0(kr) gamma_0 + 2 sum_p i^p J_p(kr) gamma_p with cosine moments
    gamma_p = int g(xi) cos(p(phi_x - phi_xi)).
    3D: v = sum_l i^l (2l+1) j_l(kr) gamma_l with gamma_l = int g(d) P_l(xhat.d).
    """
    if P < 0:
        raise ValueError("truncation order must be nonnegative")
    pts, single = _points(x, g.dimension)
    out = np.empty(len(pts), dtype=complex)
    for i, p in enumerate(pts):
        r = float(np.linalg.norm(p))
        if g.dimension == 2:
            gam = cosine_moments(g, math.atan2(p[1], p[0]), P)
            J = bessel_j_orders(P, k * r)
            ip = 1j ** np.arange(P + 1)
            c = 2 * ip * J
            c[0] = J[0]
        else:
            xhat = p / r if r > 0 else np.array([0.0, 0.0, 1.0])
            gam = legendre_moments(g, xhat, P)
            ell = np.arange(P + 1)
            c = (1j ** ell) * (2 * ell + 1) * spherical_j_orders(P, k * r)
        out[i] = np.sum(c * gam)
    return complex(out[0]) if single else out


def cosine_moments(g: Density, phi: float, P: int) -> np.ndarray:
    psi = np.arctan2(g.directions[:, 1], g.directions[:, 0])
    C = np.cos(np.outer(np.arange(P + 1), phi - psi))
    return C @ (g.weights * g.samples)


def legendre_moments(g: Density, xhat, P: int) -> np.ndarray:
    """gamma_l = int g(d) P_l(xhat . d) dsigma(d) for l = 0..P."""
    xhat = np.asarray(xhat, dtype=float)
    xhat = xhat / np.linalg.norm(xhat)
    t = np.clip(g.directions @ xhat, -1.0, 1.0)
    return legendre_all(P, t) @ (g.weights * g.samples)


def c1_bound_check(g: Density, k: float, points) -> dict:
    """Compare sup|v| + sup|grad v| on the points with sqrt(2 pi)(1+k)||g||."""
    if g.dimension != 2:
        raise ValueError("the C1 estimate is stated for planar Herglotz waves")
    pts, _ = _points(points, 2)
    v = herglotz_eval(g, k, pts)
    dv = herglotz_grad(g, k, pts)
    c1 = float(np.max(np.abs(v)) + np.max(np.linalg.norm(dv, axis=1)))
    bound = math.sqrt(2 * math.pi) * (1 + k) * g.l2_norm
    return {"c1_norm": c1, "bound": bound, "passed": c1 <= bound * (1 + 1e-12)}


@dataclass(frozen=True)
class FieldSamples:
    """Field values and gradients at quadrature nodes of the fitting region."""
    points: np.ndarray
    values: np.ndarray
    grads: np.ndarray
    weights: np.ndarray

    def h1_norm(self) -> float:
        return float(np.sqrt(np.sum(self.weights * (np.abs(self.values) ** 2
                                                    + np.sum(np.abs(self.grads) ** 2, axis=1)))))


def sample_field(rule, value_fn, grad_fn) -> FieldSamples:
    """Evaluate value_fn/grad_fn on the nodes of a geometry QuadratureRule."""
    pts = rule.nodes
    return FieldSamples(pts, np.asarray(value_fn(pts), dtype=complex),
                        np.asarray(grad_fn(pts), dtype=complex), rule.weights)


class RankDeficientError(np.linalg.LinAlgError):
    pass


@dataclass
class FitResult:
    density: Density
    residual: float
    reg_lambda: float
    j_index: int = 0

    @property
    def norm(self) -> float:
        return self.density.l2_norm


class HerglotzFitter:
    """Caches the SVD of the weighted H1 plane-wave system for a sample set."""

    def __init__(self, samples: FieldSamples, k: float, grid_size: int):
        if not k > 0:
            raise ValueError("wavenumber must be positive")
        self.k, self.grid_size = k, grid_size
        proto = Density.circle(np.zeros(grid_size))
        self.proto = proto
        sq = np.sqrt(samples.weights)[:, None]
        H = herglotz_matrix(proto, k, samples.points)
        d = proto.directions
        # unknowns are y = sqrt(w) g so that ||y||_2 equals the L2 norm of g
        colscale = np.sqrt(proto.weights)
        A = np.vstack([sq * H, sq * (1j * k * d[:, 0]) * H, sq * (1j * k * d[:, 1]) * H]) / colscale
        self.colscale = colscale
        self.A = A
        self.U, self.sig, self.Vh = np.linalg.svd(A, full_matrices=False)
        self.samples = samples

    def rhs(self, samples: FieldSamples | None = None) -> np.ndarray:
        s = samples or self.samples
        sq = np.sqrt(s.weights)
        return np.concatenate([sq * s.values, sq * s.grads[:, 0], sq * s.grads[:, 1]])

    def fit(self, reg_lambda: float, samples: FieldSamples | None = None, j_index: int = 0) -> FitResult:
        if reg_lambda < 0:
            raise ValueError("reg_lambda must be nonnegative")
        b = self.rhs(samples)
        beta = self.U.conj().T @ b
        sig = self.sig
        if reg_lambda == 0:
            tol = sig[0] * max(self.A.shape) * np.finfo(float).eps
            if sig[-1] <= tol:
                raise RankDeficientError("normal system is singular; use reg_lambda > 0")
            filt = 1.0 / sig
        else:
            filt = sig / (sig**2 + reg_lambda)
        y = self.Vh.conj().T @ (filt * beta)
        residual = float(np.linalg.norm(self.A @ y - b))
        g = self.proto.with_samples(y / self.colscale)
        return FitResult(g, residual, reg_lambda, j_index)


def fit_density(samples: FieldSamples, k: float, grid_size: int, reg_lambda: float) -> FitResult:
    """Tikhonov fit of a Herglotz kernel to field values and gradients.

    Minimises the discrete H1 misfit plus reg_lambda * ||g||^2_{L2(S^1)}.
    """
    return HerglotzFitter(samples, k, grid_size).fit(reg_lambda)


def lambda_schedule(js: Sequence[int], tau: float = 4.0) -> list[float]:
    return [float(j) ** (-tau) for j in js]


@dataclass
class AdmissibilityReport:
    schedule: list  # (j, residual_j, norm_j, reg_lambda_j)
    Upsilon_hat: float
    varrho_hat: float
    admissible: bool
    strict_admissible: bool
    unreliable_fit: bool
    fit_min_j: int
    fits: list = field(default_factory=list, repr=False)
    meta: dict = field(default_factory=dict)


def _slope(x, y) -> float:
    return float(np.polyfit(x, y, 1)[0])


def admissibility_scan(samples: FieldSamples, k: float, schedule: Sequence, grid_size: int = 64,
                       tau: float = 4.0, min_fit_j: int = 8, mapper=map) -> AdmissibilityReport:
    """Fit Herglotz kernels along a j schedule and estimate the growth exponents.

    ``schedule`` holds either indices j (then reg_lambda = j**-tau) or pairs
    (j, reg_lambda). Upsilon_hat is the slope of -log(residual) against log j
    and varrho_hat the slope of log ||g_j||; both use points with j >= min_fit_j
    when at least four such points exist.
    """
    if len(schedule) < 4:
        raise ValueError("admissibility scan needs at least 4 schedule entries")
    pairs = [(int(e[0]), float(e[1])) if isinstance(e, (tuple, list)) else (int(e), float(e) ** (-tau))
             for e in schedule]
    js = [p[0] for p in pairs]
    if any(b <= a for a, b in zip(js, js[1:])):
        raise ValueError("schedule indices must be increasing")
    fitter = HerglotzFitter(samples, k, grid_size)
    fits = list(mapper(lambda p: fitter.fit(p[1], j_index=p[0]), pairs))
    res = np.array([f.residual for f in fits])
    nrm = np.array([f.norm for f in fits])
    logj = np.log(np.array(js, dtype=float))
    use = np.array(js) >= min_fit_j
    if use.sum() < 4:
        use[:] = True
    floor = 1e-300
    ups = -_slope(logj[use], np.log(np.maximum(res[use], floor)))
    rho = _slope(logj[use], np.log(np.maximum(nrm[use], floor)))
    unreliable = bool(np.any(np.diff(res) > 1e-12 * res[:-1]))
    admissible = bool(ups > 0 and rho < ups)
    # stricter variant: residual <= j^{-1-Y} with Y > 0 and kernel growth below j^1
    strict = bool(ups > 1 and rho < 1)
    return AdmissibilityReport(
        schedule=[(j, float(r), float(n), f.reg_lambda) for j, r, n, f in zip(js, res, nrm, fits)],
        Upsilon_hat=ups, varrho_hat=rho, admissible=admissible, strict_admissible=strict,
        unreliable_fit=unreliable, fit_min_j=int(min(np.array(js)[use])), fits=fits,
        meta={"lambda_rule": f"j^-{tau:g}" if not isinstance(schedule[0], (tuple, list)) else "explicit",
              "grid_size": grid_size, "k": k})
