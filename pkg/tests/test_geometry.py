import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cornervanish.geometry import (REGIONS, Sector, TruncatedSector, build_quadrature, corner_ball_measure,
                                   delta_w, graded_interval)

angles = st.floats(-3.1, 3.1)


def test_sector_rejects_bad_order():
    with pytest.raises(ValueError):
        Sector(0.5, 0.1)
    with pytest.raises(ValueError):
        Sector(0.0, math.pi)


def test_degenerate_opening_is_flagged_not_rejected():
    s = Sector(-math.pi / 2, math.pi / 2)
    assert s.degenerate_opening
    assert not Sector(-math.pi / 4, math.pi / 4).degenerate_opening


@pytest.mark.parametrize("sector, expected", [
    ((-math.pi / 2, math.pi / 2), 0.7071067811865476),
    ((-math.pi / 4, math.pi / 4), 0.9238795325112867),
    ((0.0, math.pi / 2), 0.7071067811865476),
])
def test_delta_w_examples(sector, expected):
    assert delta_w(Sector(*sector)) == pytest.approx(expected, abs=1e-15)


def test_delta_w_matches_dense_minimisation():
    # independent oracle: brute-force minimum of cos(theta/2) on a fine grid
    for a, b in [(-2.0, 1.0), (-0.3, 2.9), (0.1, 0.2)]:
        th = np.linspace(a, b, 200001)
        assert delta_w(Sector(a, b)) == pytest.approx(np.cos(th / 2).min(), abs=1e-12)


@given(angles, angles)
def test_delta_w_reflection_symmetry(a, b):
    a, b = min(a, b), max(a, b)
    if a == b:
        return
    assert delta_w(Sector(a, b)) == pytest.approx(delta_w(Sector(-b, -a)), abs=1e-15)


def test_corner_ball_measure_examples():
    s = Sector(-math.pi / 4, math.pi / 4)
    assert corner_ball_measure(s, 1.0, 1.0) == pytest.approx(0.7853981633974483, rel=1e-15)
    assert corner_ball_measure(s, 1e-9, 1.0) < 1e-17
    assert corner_ball_measure(s, 0.0, 1.0) == 0.0


def test_corner_ball_measure_clipped_at_h_monte_carlo():
    # the straight-angle sector (0, pi) of the example is outside the admissible range;
    # its rotation (-pi/2, pi/2) has the same area
    s = Sector(-math.pi / 2, math.pi / 2)
    rng = np.random.default_rng(1)
    n = 10**7
    pts = rng.uniform(-2, 2, size=(n, 2))
    r = np.hypot(pts[:, 0], pts[:, 1])
    inside = (r < 2) & (r < 1) & (pts[:, 0] > 0)
    p = inside.mean()
    est, sd = 16 * p, 16 * math.sqrt(p * (1 - p) / n)
    val = corner_ball_measure(s, 2.0, 1.0)
    assert val == pytest.approx(math.pi / 2, rel=1e-15)
    assert abs(est - val) <= 3 * sd


@given(st.floats(0.01, 5.0), st.floats(0.01, 5.0))
def test_corner_ball_measure_monotone_and_quadratic(rho, h):
    s = Sector(-1.0, 0.7)
    assert corner_ball_measure(s, rho * 1.1, h) >= corner_ball_measure(s, rho, h)
    if rho <= h:
        assert corner_ball_measure(s, rho, h) / corner_ball_measure(s, rho / 2, h) == pytest.approx(4, abs=1e-12)


def test_truncated_sector_area_and_arc():
    ts = TruncatedSector(Sector(-0.4, 1.3), 0.7)
    assert ts.area == pytest.approx(0.7**2 * 1.7 / 2, rel=1e-15)
    assert ts.arc_length == pytest.approx(0.7 * 1.7, rel=1e-15)


def test_quadrature_examples():
    ts = TruncatedSector(Sector(-math.pi / 4, math.pi / 4), 1.0)
    area = build_quadrature(ts, "sector_area", 8)
    assert area.weights.sum() == pytest.approx(math.pi / 4, abs=1e-12)
    ray = build_quadrature(ts, "boundary_ray_minus", 8)
    assert np.sum(ray.weights * np.linalg.norm(ray.nodes, axis=1)) == pytest.approx(0.5, abs=1e-12)
    half = TruncatedSector(Sector(-math.pi / 2, math.pi / 2), 1.0)
    q = build_quadrature(half, "sector_area", 8)
    assert np.sum(q.weights * q.nodes[:, 0]) == pytest.approx(2 / 3, abs=1e-12)


@pytest.mark.parametrize("region", REGIONS)
@pytest.mark.parametrize("graded", [False, True])
def test_quadrature_weights_positive_and_measure(region, graded):
    ts = TruncatedSector(Sector(-0.9, 0.5), 0.8)
    q = build_quadrature(ts, region, 10, graded=graded)
    assert np.all(q.weights > 0)
    target = {"sector_area": ts.area, "arc": ts.arc_length}.get(region, ts.h)
    assert q.weights.sum() == pytest.approx(target, rel=1e-12)


def test_quadrature_unknown_region():
    with pytest.raises(ValueError):
        build_quadrature(TruncatedSector(Sector(0, 1), 1), "disk", 4)
    with pytest.raises(ValueError):
        build_quadrature(TruncatedSector(Sector(0, 1), 1), "arc", 0)


def test_graded_rule_converges_on_sqrt_exponential():
    exact = 2 - 4 / math.e  # int_0^1 exp(-sqrt(r)) dr
    errs = []
    for n in (2, 4, 8, 16):
        x, w = graded_interval(0.0, 1.0, n)
        errs.append(abs(np.sum(w * np.exp(-np.sqrt(x))) - exact))
    for e0, e1 in zip(errs, errs[1:]):
        assert e1 < 1e-13 or e0 / e1 > 2
