import math

import numpy as np
import pytest

from cornervanish.eigensolver import (CollocationBasis, Disk, EtaSpec, Eigenpair, Medium, Pacman, SigmaEvaluator,
                                      assemble, assemble_raw, bisect, default_basis, disk_oracle,
                                      disk_oracle_null_vector, disk_oracle_roots, l2_norm, oracle_degenerate,
                                      refine_and_extract, scan)

V3 = Medium(3.0, EtaSpec(0.0))
DISK = Disk()


def test_empty_basis_and_bad_inputs():
    with pytest.raises(ValueError):
        CollocationBasis("fourier_bessel", 0)
    with pytest.raises(ValueError):
        Medium(-1.0)
    with pytest.raises(ValueError):
        EtaSpec(1.0, 0.5, 1.5)


def test_disk_matrix_block_diagonal_by_mode():
    b = default_basis(DISK)
    A = assemble(3.1, DISK, V3, b)
    G = A.conj().T @ A
    modes = np.array([int(nu) * (1 if t == "c" else -1) for nu, t in b.orders] * 2)
    off = modes[:, None] != modes[None, :]
    assert np.max(np.abs(G[off])) <= 1e-12


@pytest.mark.parametrize("m, eta", [(0, 0.0), (1, 0.0), (2, 1.0), (3, 1.0)])
def test_oracle_null_vector_annihilated(m, eta):
    med = Medium(3.0, EtaSpec(eta))
    k = [r for r, mm in disk_oracle_roots(8, 1, 6, 3.0, eta) if mm == m][0]
    a, bcoef = disk_oracle_null_vector(m, k, 3.0, eta)
    b = default_basis(DISK)
    B = assemble_raw(k, DISK, med, b)
    c = np.zeros(2 * b.size)
    j = b.orders.index((float(m), "c"))
    c[j], c[b.size + j] = a, bcoef
    assert np.linalg.norm(B @ c) / np.linalg.norm(B[:, [j, b.size + j]] @ [abs(a), abs(bcoef)]) <= 1e-8


def test_oracle_examples():
    assert oracle_degenerate(0, 0)
    assert disk_oracle(2, 1.7, 0.0, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert disk_oracle(0, 1.5, 3.0, 0.0) * disk_oracle(0, 3.5, 3.0, 0.0) < 0
    r = bisect(lambda k: disk_oracle(0, k, 3.0, 0.0), 1.5, 3.5)
    assert abs(disk_oracle(0, r, 3.0, 0.0)) < 1e-12


def test_scan_disk_finds_lowest_roots():
    res = scan(1, 4, 301, DISK, V3)
    step = res.k_grid[1] - res.k_grid[0]
    roots = disk_oracle_roots(8, 1, 4, 3.0, 0.0)
    dips = [k for k, _ in res.detected_minima]
    assert abs(dips[0] - roots[0][0]) <= 2 * step
    k_m0 = min(r for r, m in roots if m == 0)
    assert min(abs(d - k_m0) for d in dips) <= 2 * step


def test_scan_empty_range():
    res = scan(2.0, 2.0, 10, DISK, V3)
    assert len(res.k_grid) == 1 and res.detected_minima == []


def test_refine_matches_bisection_and_normalises():
    roots = disk_oracle_roots(8, 1, 4, 3.0, 0.0)
    k_m0 = min(r for r, m in roots if m == 0)
    ev = SigmaEvaluator(DISK, V3, default_basis(DISK))
    k0 = k_m0 + 3e-3
    pair = refine_and_extract(k0, DISK, V3, step=0.008)
    assert abs(pair.k_star - k_m0) <= 1e-6
    assert pair.sigma <= ev(k0)
    assert l2_norm(pair, "v") == pytest.approx(1.0, abs=1e-10)
    assert pair.passes


def test_eigenpair_json_round_trip():
    pair = refine_and_extract(2.9026, DISK, V3, step=0.005)
    back = Eigenpair.from_json(pair.to_json())
    pts = np.array([[0.1, 0.2], [-0.5, 0.3]])
    assert np.array_equal(back.v(pts), pair.v(pts))
    assert np.array_equal(back.w(pts), pair.w(pts))


def test_fields_solve_helmholtz(pair_eta1):
    p = pair_eta1
    pts = np.array([[0.4, 0.1], [0.6, -0.2], [0.5, 0.3]])
    errs = []
    for h in (2e-3, 1e-3):
        for f, kk in ((p.v, p.k_star), (p.w, p.kw)):
            lap = (f(pts + [h, 0]) + f(pts - [h, 0]) + f(pts + [0, h]) + f(pts - [0, h]) - 4 * f(pts)) / h**2
            errs.append(np.max(np.abs(lap + kk**2 * f(pts))) / (kk**2 * np.max(np.abs(f(pts)))))
    assert max(errs[2:]) < max(errs[:2])
    assert max(errs[2:]) < 1e-5


def test_disk_oracle_agreement_both_ways():
    for eta in (0.0, 1.0):
        med = Medium(3.0, EtaSpec(eta))
        res = scan(1, 6, 500, DISK, med)
        dips = [k for k, _ in res.detected_minima]
        roots = [r for r, _ in disk_oracle_roots(8, 1, 6, 3.0, eta)]
        assert max(min(abs(d - r) for r in roots) for d in dips) <= 1e-4
        assert max(min(abs(d - r) for d in dips) for r in roots) <= 1e-4


def test_scaling_covariance():
    k1 = refine_and_extract(3.3842, DISK, V3, step=0.01).k_star
    k2 = refine_and_extract(3.3842 / 2, DISK.scaled(2.0), V3, step=0.005).k_star
    assert abs(k2 - k1 / 2) <= 1e-5


def test_eta_continuity():
    k0 = refine_and_extract(3.3842, DISK, V3, step=0.01).k_star
    k1 = refine_and_extract(3.3842, DISK, Medium(3.0, EtaSpec(1e-3)), step=0.01).k_star
    assert abs(k1 - k0) <= 1e-2


def test_quarter_pacman_eigenpair(pair_eta1, pair_eta0):
    assert pair_eta1.k_star == pytest.approx(5.986643, abs=2e-6)
    assert pair_eta0.k_star == pytest.approx(6.120329, abs=2e-6)
    assert pair_eta1.passes and pair_eta0.passes


def test_three_quarter_pacman_has_a_dip():
    # opening 3 pi / 2 capped by the unit arc, V = 3, eta = 1
    dom = Pacman.symmetric(3 * math.pi / 2, 1.0)
    med = Medium(3.0, EtaSpec(1.0))
    res = scan(1, 6, 101, dom, med, threads=4)
    assert res.detected_minima, "no sigma_min dip in [1, 6]"
    pair = refine_and_extract(res.detected_minima[0][0], dom, med, step=0.05)
    assert pair.passes
