import math

import numpy as np
import pytest

from nbesov.domains import build_interval_basis, build_rectangle_basis
from nbesov.littlewood_paley import make_partition
from nbesov.spectral import (
    GridFunction,
    QuadratureWarning,
    analyze,
    apply_kernel,
    block_symbol,
    endpoint_norms,
    gradient_kernels,
    heat_kernel,
    heat_symbol,
    load_kernel,
    multiplier_kernel,
    resolvent_gamma,
    resolvent_symbol,
    save_kernel,
    synthesize,
)


@pytest.fixture(scope="module")
def basis():
    return build_interval_basis(math.pi, 64, N=256)


def _image_sum_heat(x, y, t, L, n_images=3):
    """Reference Neumann heat kernel on [0, L] by reflected free kernels.

    Independent of the eigenbasis route: K_t(x, y) =
    sum_m G_t(x - y - 2Lm) + G_t(x + y - 2Lm), truncated where the
    Gaussian underflows.
    """
    X, Y = np.meshgrid(x, y, indexing="ij")
    out = np.zeros_like(X)
    pref = 1.0 / math.sqrt(4.0 * math.pi * t)
    for m in range(-n_images, n_images + 1):
        out += np.exp(-((X - Y - 2 * L * m) ** 2) / (4 * t))
        out += np.exp(-((X + Y - 2 * L * m) ** 2) / (4 * t))
    return pref * out


def test_heat_kernel_matches_image_sum(basis):
    t = 0.05
    ker = heat_kernel(t, basis)
    x = basis.grid.points[:, 0]
    ref = _image_sum_heat(x, x, t, math.pi)
    np.testing.assert_allclose(ker.matrix, ref, atol=1e-10, rtol=0)


def test_heat_kernel_conserves_mass(basis):
    ker = heat_kernel(0.3, basis)
    row_integrals = ker.matrix @ basis.grid.weights
    np.testing.assert_allclose(row_integrals, 1.0, atol=1e-12)


def test_heat_semigroup_property(basis):
    w = basis.grid.weights
    k1 = heat_kernel(0.2, basis).matrix
    k2 = heat_kernel(0.5, basis).matrix
    k3 = heat_kernel(0.7, basis).matrix
    np.testing.assert_allclose(k1 @ (w[:, None] * k2), k3, atol=1e-12)


def test_endpoint_norms_against_direct_sums(basis):
    ker = heat_kernel(0.3, basis)
    norms = endpoint_norms(ker)
    K, w = ker.matrix, basis.grid.weights
    assert norms["1->inf"] == pytest.approx(np.max(np.abs(K)), rel=1e-12)
    assert norms["1->1"] == pytest.approx(np.max(w @ np.abs(K)), rel=1e-12)
    assert norms["inf->inf"] == pytest.approx(np.max(np.abs(K) @ w), rel=1e-12)
    sw = np.sqrt(w)
    sig = np.linalg.svd(sw[:, None] * K * sw[None, :], compute_uv=False)[0]
    assert norms["2->2"] == pytest.approx(sig, rel=1e-10)
    # The 2->2 value is available exactly from the symbol.
    assert norms["2->2"] == pytest.approx(1.0, rel=1e-12)


def test_resolvent_gamma_matches_direct_multiplier(basis):
    rng = np.random.default_rng(3)
    c = rng.standard_normal(basis.K) * np.exp(-0.05 * np.arange(basis.K))
    f = GridFunction(basis.functions.T @ c, basis.grid)
    w = basis.grid.weights
    for beta, M in [(0.5, 1.0), (1.0, 0.5), (2.0, 2.0)]:
        via_gamma = resolvent_gamma(beta, M, f, basis)
        direct = apply_kernel(multiplier_kernel(resolvent_symbol(beta, M), basis), f)
        err = math.sqrt(w @ (via_gamma.values - direct.values) ** 2)
        ref = math.sqrt(w @ direct.values**2)
        assert err / ref < 1e-9


def test_resolvent_gamma_reports_unmet_tolerance(basis):
    f = GridFunction.constant(basis.grid, 1.0)
    with pytest.warns(QuadratureWarning):
        resolvent_gamma(1.0, 1.0, f, basis, rtol=1e-16)


def test_gradient_kernel_on_single_mode(basis):
    sym = heat_symbol(0.1)
    grad = gradient_kernels(sym, basis)
    e2 = basis.functions[1]
    w = basis.grid.weights
    out = grad.components[0] @ (w * e2)
    x = basis.grid.points[:, 0]
    expect = -math.exp(-0.1) * math.sqrt(2.0 / math.pi) * np.sin(x)
    np.testing.assert_allclose(out, expect, atol=2e-4)


def test_gradient_annihilates_constants(basis):
    grad = gradient_kernels(heat_symbol(0.5), basis)
    ones = np.ones(basis.grid.n_nodes)
    out = grad.components[0] @ (basis.grid.weights * ones)
    assert np.max(np.abs(out)) < 1e-12


def test_block_symbol_tail_is_zero_in_band(basis):
    pou = make_partition("standard")
    ker = multiplier_kernel(block_symbol(pou, 3), basis)
    assert ker.tail_bound == 0.0


def test_non_finite_symbol_rejected(basis):
    # (lambda + 0)^-1 blows up on the zero mode.
    bad = resolvent_symbol(1.0, 0.0)
    with np.errstate(divide="ignore"), pytest.raises(ValueError, match="finite"):
        multiplier_kernel(bad, basis)


def test_apply_kernel_is_weighted_contraction(basis):
    ker = heat_kernel(0.2, basis)
    rng = np.random.default_rng(11)
    f = GridFunction(rng.standard_normal(basis.grid.n_nodes), basis.grid)
    out = apply_kernel(ker, f)
    expect = ker.matrix @ (basis.grid.weights * f.values)
    np.testing.assert_array_equal(out.values, expect)


def test_analyze_synthesize_round_trip(basis):
    rng = np.random.default_rng(5)
    c = np.zeros(basis.K)
    c[:40] = rng.standard_normal(40)
    f = GridFunction(basis.functions.T @ c, basis.grid)
    coeffs = analyze(f, basis)
    np.testing.assert_allclose(coeffs.values, c, atol=1e-13)
    back = synthesize(coeffs)
    np.testing.assert_allclose(back.values, f.values, atol=1e-13)
    assert coeffs.parseval_defect(f) == pytest.approx(0.0, abs=1e-12)


def test_kernel_save_load_round_trip(tmp_path, basis):
    ker = heat_kernel(0.4, basis)
    p1 = tmp_path / "k.npz"
    save_kernel(ker, str(p1))
    loaded = load_kernel(str(p1), basis.grid)
    np.testing.assert_array_equal(loaded.matrix, ker.matrix)
    assert loaded.tag == ker.tag

    other = build_rectangle_basis(1.0, 1.0, 9, Nx=8, Ny=8)
    with pytest.raises(ValueError):
        load_kernel(str(p1), other.grid)
