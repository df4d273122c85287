import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from cornervanish.special_fn import (SeriesConvergenceError, SeriesTruncation, bessel_j, bessel_j_series,
                                     double_factorial, gamma, legendre_p, n_factor, spherical_j,
                                     spherical_j_closed)


def bessel_oracle(p, t):
    # (1/pi) int_0^pi cos(p tau - t sin tau) d tau by adaptive quadrature
    val, _ = integrate.quad(lambda tau: math.cos(p * tau - t * math.sin(tau)), 0, math.pi,
                            epsabs=1e-13, epsrel=1e-12, limit=400)
    return val / math.pi


def test_bessel_examples():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0
    assert bessel_j(0, 1.0) == pytest.approx(0.7651976865579666, abs=1e-15)


@pytest.mark.parametrize("p", [0, 1, 2, 5, 11, 20, 30])
@pytest.mark.parametrize("t", [0.3, 1.0, 4.7, 9.5, 15.0, 20.0, 27.0])
def test_bessel_matches_integral_oracle(p, t):
    assert bessel_j(p, t) == pytest.approx(bessel_oracle(p, t), abs=1e-10)


def test_bessel_series_flags_nonconvergence():
    assert not bessel_j_series(0, 5.0, SeriesTruncation(max_terms=3)).converged
    with pytest.raises(SeriesConvergenceError):
        bessel_j(0, 5.0, SeriesTruncation(max_terms=3))


def test_spherical_examples():
    assert spherical_j(0, 0.0) == 1.0
    assert spherical_j(0, math.pi) == pytest.approx(0.0, abs=1e-15)
    assert spherical_j(1, 1.0) == pytest.approx(0.30116867893975674, abs=1e-15)


@pytest.mark.parametrize("ell", [0, 1, 2])
@pytest.mark.parametrize("t", [0.1, 1.0, 3.3, 7.9, 12.0, 19.0, 25.0])
def test_spherical_matches_closed_forms(ell, t):
    assert spherical_j(ell, t) == pytest.approx(spherical_j_closed(ell, t), abs=1e-12)


def test_legendre_examples():
    assert legendre_p(0, 0.3) == 1.0
    assert legendre_p(1, -0.7) == -0.7
    assert legendre_p(3, 0.5) == pytest.approx(-0.4375, abs=1e-16)
    with pytest.raises(ValueError):
        legendre_p(2, 1.5)


@given(st.integers(0, 60), st.floats(-1, 1))
def test_legendre_bounded(ell, x):
    assert abs(legendre_p(ell, x)) <= 1 + 1e-12


@given(st.floats(0, 10), st.floats(0, 2 * math.pi))
def test_jacobi_anger_partial_sum(t, phi):
    P = 40
    s = bessel_j(0, t) + 2 * sum((1j) ** p * bessel_j(p, t) * math.cos(p * phi) for p in range(1, P + 1))
    assert abs(s - np.exp(1j * t * math.cos(phi))) < 1e-10


@pytest.mark.parametrize("n", range(0, 15))
def test_factorial_identities(n):
    assert gamma(n + 1) == pytest.approx(math.factorial(n), rel=1e-13)
    assert double_factorial(2 * n + 1) * 2**n * math.factorial(n) == math.factorial(2 * n + 1)


def test_n_factor():
    assert n_factor(0, 0) == 1
    assert n_factor(1, 2) == 5 * 7
    assert n_factor(2, 3) == 7 * 9 * 11


@given(st.floats(0.0, 0.95))
def test_geometric_series_bound(kL):
    x = kL * kL
    s = sum(x**l for l in range(1, 2000))
    assert s <= x / (1 - x) * (1 + 1e-12) + 1e-300
