import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cornervanish.geometry import Sector, TruncatedSector, build_quadrature
from cornervanish.herglotz import HerglotzFitter, herglotz_eval, sample_field
from cornervanish.vanishing import (VANISHING_RATE, decay_curve, fit_rate, geometric_schedule, is_decreasing,
                                    local_average, modulus_of_continuity_rate, signed_average, vw_average)

SEC = Sector(-math.pi / 4, math.pi / 4)
ORIGIN = (0.0, 0.0)


def radial_power(a):
    return lambda p: np.linalg.norm(p, axis=1) ** a


def test_constant_field_average():
    for rho in (0.5, 0.1, 1e-3):
        assert local_average(lambda p: np.full(len(p), -2.5), ORIGIN, rho, SEC) == pytest.approx(2.5, rel=1e-13)


@given(st.floats(0.01, 2.0), st.floats(0.05, 0.95))
def test_power_law_average_closed_form(rho, a):
    assert local_average(radial_power(a), ORIGIN, rho, SEC) == pytest.approx(2 * rho**a / (a + 2), rel=1e-10)


def test_average_clipped_at_h():
    f = radial_power(0.5)
    assert local_average(f, ORIGIN, 2.0, SEC, h=0.5) == local_average(f, ORIGIN, 0.5, SEC)


def test_disk_eigenfunction_average_at_smooth_boundary_point():
    from cornervanish.eigensolver import Disk, EtaSpec, Medium, refine_and_extract
    pair = refine_and_extract(3.3842, Disk(), Medium(3.0, EtaSpec(0.0)), step=0.01)
    x0 = np.array([-1.0, 0.0])
    half = Sector(-math.pi / 2, math.pi / 2)  # inward half plane at (-1, 0)
    target = abs(pair.v(x0[None])[0])
    errs = [abs(local_average(pair.v, x0, r, half) - target) for r in (0.1, 0.05, 0.025, 0.0125)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 0.02 * target


def test_decay_curve_power_law_and_constant():
    rhos = geometric_schedule(0.5, 7)
    assert decay_curve(radial_power(0.5), ORIGIN, rhos, SEC).fitted_rate == pytest.approx(0.5, abs=0.01)
    const = decay_curve(lambda p: np.ones(len(p)), ORIGIN, rhos, SEC)
    assert const.fitted_rate == pytest.approx(0.0, abs=0.01)
    assert not const.vanishing


def test_decay_curve_floor_and_preconditions():
    rhos = geometric_schedule(0.5, 7)
    dc = decay_curve(lambda p: np.where(np.linalg.norm(p, axis=1) < 0.05, 0.0, 1.0), ORIGIN, rhos, SEC)
    assert dc.fit_points < len(rhos)
    with pytest.raises(ValueError):
        decay_curve(radial_power(1), ORIGIN, rhos[:4], SEC)
    with pytest.raises(ValueError):
        decay_curve(radial_power(1), ORIGIN, rhos[::-1], SEC)
    assert dc.meta["vanishing_threshold"] == VANISHING_RATE


def test_geometric_schedule():
    assert np.allclose(geometric_schedule(0.5, 3), [0.25, 0.125, 0.0625])


def test_fit_rate_needs_two_points():
    rate, n = fit_rate([1, 0.5], [0.0, 0.0])
    assert math.isnan(rate) and n == 0


@given(st.integers(0, 2**31), st.floats(0.01, 1.0))
@settings(max_examples=30)
def test_domination_monotone(seed, rho):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(3)
    f = lambda p: c[0] * np.sin(3 * p[:, 0]) + c[1] * p[:, 1]
    g = lambda p: np.abs(f(p)) + np.abs(c[2])
    assert local_average(f, ORIGIN, rho, SEC) <= local_average(g, ORIGIN, rho, SEC) + 1e-15


def test_triangle_inequality_along_admissibility_fits(pair_eta1):
    ts = TruncatedSector(pair_eta1.domain.sector, 0.5)
    fs = sample_field(build_quadrature(ts, "sector_area", 12), pair_eta1.v, pair_eta1.grad_v)
    fitter = HerglotzFitter(fs, pair_eta1.k_star, 48)
    sec = pair_eta1.domain.sector
    for j in (2, 4, 8, 16, 32):
        g = fitter.fit(float(j) ** -4).density
        vj = lambda p: herglotz_eval(g, pair_eta1.k_star, p)
        for rho in (0.25, 0.03):
            lhs = local_average(pair_eta1.v, ORIGIN, rho, sec)
            rhs = local_average(lambda p: pair_eta1.v(p) - vj(p), ORIGIN, rho, sec) + local_average(vj, ORIGIN, rho, sec)
            assert lhs <= rhs + 1e-12


def test_consistency_with_modulus_of_continuity():
    f = lambda p: np.cos(2 * p[:, 0]) + 0.5 * p[:, 1] + 3.0
    rate, devs = modulus_of_continuity_rate(f, (0.1, 0.2), geometric_schedule(0.05, 6), SEC)
    assert rate == pytest.approx(1.0, abs=0.1)
    assert devs[-1] < devs[0]


def test_vw_average_linear_and_zero(pair_eta0):
    sec = pair_eta0.domain.sector
    assert vw_average(pair_eta0, 0.0, ORIGIN, 0.1) == 0
    a = vw_average(pair_eta0, 3.0, ORIGIN, 0.1)
    assert abs(a - 3.0 * signed_average(pair_eta0.w, ORIGIN, 0.1, sec)) <= 1e-12 * max(1, abs(a))


def test_pacman_eta1_vanishes(pair_eta1):
    dc = decay_curve(pair_eta1.v, ORIGIN, geometric_schedule(0.5, 7), pair_eta1.domain.sector)
    assert dc.fitted_rate > 0
    assert dc.vanishing


def test_pacman_eta0_vw_average_decreasing(pair_eta0):
    vals = [vw_average(pair_eta0, 3.0, ORIGIN, r) for r in geometric_schedule(0.5, 7)]
    assert is_decreasing(vals), np.abs(vals)
