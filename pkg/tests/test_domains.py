import math

import numpy as np
import pytest

from nbesov.domains import (
    build_fd_basis,
    build_interval_basis,
    build_rectangle_basis,
    load_basis,
    lp_norm,
    lshape_domain,
    save_basis,
    weyl_count_estimate,
)
from nbesov.spectral import GridFunction


def test_interval_grid_layout():
    basis = build_interval_basis(math.pi, 8, N=16)
    g = basis.grid
    h = math.pi / 16
    np.testing.assert_allclose(g.points[:, 0], h * (np.arange(16) + 0.5))
    np.testing.assert_allclose(g.weights, h)
    assert g.domain.volume == pytest.approx(math.pi)


def test_interval_eigenvalues_closed_form():
    L = 2.5
    basis = build_interval_basis(L, 12, N=128)
    k = np.arange(12)
    np.testing.assert_allclose(basis.eigenvalues, (k * math.pi / L) ** 2,
                               rtol=1e-14, atol=1e-14)


def test_interval_gram_identity():
    basis = build_interval_basis(math.pi, 64, N=512)
    E, w = basis.functions, basis.grid.weights
    gram = E @ (w[:, None] * E.T)
    np.testing.assert_allclose(gram, np.eye(64), atol=2e-14)


def test_interval_mode_sup_norm():
    """Second mode on [0, pi] peaks at sqrt(2/pi); the midpoint grid sits
    h/2 away from the boundary max, costing (h/2)^2/2 in relative terms."""
    basis = build_interval_basis(math.pi, 4, N=1024)
    assert np.max(np.abs(basis.functions[1])) == pytest.approx(
        math.sqrt(2.0 / math.pi), rel=3e-6)


def test_interval_resolution_limit():
    # The top mode must stay below the per-axis sampling cutoff.
    with pytest.raises(ValueError):
        build_interval_basis(1.0, 130, N=256)
    build_interval_basis(1.0, 129, N=256)


def test_rectangle_sorted_with_lex_tie_break():
    basis = build_rectangle_basis(math.pi, math.pi, 10, Nx=32, Ny=32)
    lam = basis.eigenvalues
    assert np.all(np.diff(lam) >= -1e-12)
    # Degenerate level lambda = 1: (0,1) is listed before (1,0), so the
    # first of the pair is constant along x.
    np.testing.assert_allclose(lam[1:3], 1.0, atol=1e-12)
    e2 = basis.functions[1].reshape(32, 32)
    assert np.ptp(e2, axis=0).max() < 1e-12   # no x-variation
    e3 = basis.functions[2].reshape(32, 32)
    assert np.ptp(e3, axis=1).max() < 1e-12   # no y-variation


def test_rectangle_gram_identity():
    basis = build_rectangle_basis(1.0, 2.0, 60, Nx=24, Ny=48)
    E, w = basis.functions, basis.grid.weights
    gram = E @ (w[:, None] * E.T)
    np.testing.assert_allclose(gram, np.eye(60), atol=5e-14)


def test_lshape_basis():
    basis = build_fd_basis(lshape_domain(), 0.1, 12)
    assert basis.eigenvalues[0] < 1e-8
    # Ground mode is the constant 1/sqrt(area), area 3.
    np.testing.assert_allclose(np.abs(basis.functions[0]),
                               1.0 / math.sqrt(3.0), rtol=1e-8)
    assert basis.eigenvalues[1] > 0.1


def test_lshape_eigenvalue_convergence():
    coarse = build_fd_basis(lshape_domain(), 0.1, 6)
    fine = build_fd_basis(lshape_domain(), 0.05, 6)
    np.testing.assert_allclose(coarse.eigenvalues[1:],
                               fine.eigenvalues[1:], rtol=0.02)


def test_weyl_count_two_dimensional():
    """Leading-order count at the 200th rectangle eigenvalue is within a
    modest factor; boundary corrections die off slowly in 2-D."""
    basis = build_rectangle_basis(1.0, 2.0, 200, Nx=48, Ny=96)
    lam = float(basis.eigenvalues[-1])
    ratio = 200.0 / weyl_count_estimate(basis.domain, lam)
    assert 1.0 < ratio < 1.2


def test_save_load_round_trip(tmp_path):
    basis = build_interval_basis(math.pi, 32, N=128)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_basis(basis, str(p1))
    loaded = load_basis(str(p1))
    np.testing.assert_array_equal(loaded.eigenvalues, basis.eigenvalues)
    np.testing.assert_array_equal(loaded.functions, basis.functions)
    np.testing.assert_array_equal(loaded.grid.points, basis.grid.points)
    save_basis(loaded, str(p2))
    assert p1.read_bytes() == p2.read_bytes()


def test_load_rejects_foreign_file(tmp_path):
    p = tmp_path / "x.json"
    p.write_text('{"format": "something-else"}')
    with pytest.raises(ValueError):
        load_basis(str(p))


def test_lp_norm_of_constant():
    basis = build_interval_basis(2.0, 4, N=64)
    f = GridFunction.constant(basis.grid, 3.0)
    assert lp_norm(f, 1.0) == pytest.approx(6.0, rel=1e-14)
    assert lp_norm(f, 2.0) == pytest.approx(3.0 * math.sqrt(2.0), rel=1e-14)
    assert lp_norm(f, np.inf) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        lp_norm(f, 0.5)
