import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial import hermite_e

from gaussflow.measure import (ConvexityError, Grid1D, GridFunction, GridMismatchError,
                               apply_OU, build_custom, build_gaussian, build_scaled_gaussian,
                               conservative_OU, derivative, flux_divergence, integrate,
                               second_derivative, staggered_gradient, values_on)


def test_grid_nodes_symmetric_and_spaced():
    g = Grid1D(10.0, 101)
    y = g.nodes
    assert y[0] == -10.0 and y[-1] == 10.0
    assert np.allclose(np.diff(y), g.spacing, rtol=0, atol=1e-13)
    assert np.allclose(y, -y[::-1], atol=1e-13)


@pytest.mark.parametrize("L, N", [(0.0, 64), (-1.0, 64), (5.0, 8), (5.0, 20.5)])
def test_grid_rejects_bad_sizes(L, N):
    with pytest.raises(ValueError):
        Grid1D(L, N)


def test_gaussian_rejects_narrow_window():
    with pytest.raises(ValueError):
        build_gaussian(5.0, 512)


@pytest.mark.parametrize("k, moment", [(0, 1.0), (2, 1.0), (4, 3.0), (6, 15.0), (8, 105.0)])
def test_gaussian_moments(gauss, k, moment):
    assert integrate(gauss.nodes ** k, gauss) == pytest.approx(moment, rel=1e-12)


def test_odd_moments_vanish(gauss):
    for k in (1, 3, 5):
        assert abs(integrate(gauss.nodes ** k, gauss)) < 1e-13


def test_weights_sum_to_one(gauss, cosine):
    assert np.sum(gauss.weights) == 1.0
    assert np.sum(cosine.weights) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("a", [0.5, 2.0, 3.0])
def test_scaled_gaussian_variance(a):
    mu = build_scaled_gaussian(a, 10.0, 1024)
    assert integrate(mu.nodes ** 2, mu) == pytest.approx(1 / a, rel=1e-10)
    assert mu.lambda_star == a


def test_derivatives_fourth_order():
    errs = []
    for N in (129, 257):
        g = Grid1D(3.0, N)
        f = g.sample(np.sin)
        errs.append(np.max(np.abs(derivative(f).values - np.cos(g.nodes))))
        d2 = second_derivative(f).values
        assert np.max(np.abs(d2 + np.sin(g.nodes))) < 1e-3
    assert errs[0] / errs[1] > 12  # ~16 for fourth order


@pytest.mark.parametrize("k", range(1, 7))
def test_ou_eigenfunctions(gauss, k):
    c = np.zeros(k + 1)
    c[k] = 1.0
    he = hermite_e.hermeval(gauss.nodes, c)
    res = apply_OU(he, gauss) + k * he
    # relative to ||He_k|| = sqrt(k!); fourth-order truncation is exact only for k <= 4
    assert np.sqrt(integrate(res ** 2, gauss) / integrate(he ** 2, gauss)) < 1e-6


def test_conservative_ou_matches_ou(gauss):
    f = gauss.nodes ** 2 - 1.0
    res = conservative_OU(f, gauss) + 2.0 * f
    assert np.sqrt(integrate(res ** 2, gauss)) < 1e-6


def test_flux_divergence_telescopes(rng):
    F = rng.normal(size=200)
    assert abs(np.sum(flux_divergence(F, 0.1))) < 1e-10


def test_conservative_ou_preserves_mass(gauss, rng):
    g = 1 + 0.3 * np.exp(-gauss.nodes ** 2) * rng.normal(size=gauss.grid.point_count)
    # sum(trapezoid * rho * Lg) vanishes up to the boundary trapezoid halves
    assert abs(integrate(conservative_OU(np.convolve(g, np.ones(9) / 9, "same"), gauss), gauss)) < 1e-8


def test_staggered_gradient_exact_on_cubics():
    g = Grid1D(2.0, 64)
    v = g.nodes ** 3 - g.nodes
    exact = 3 * g.midpoints ** 2 - 1
    assert np.max(np.abs(staggered_gradient(v, g.spacing) - exact)) < 1e-10


def test_custom_measure_convexity():
    g = Grid1D(8.0, 512)
    y = g.nodes
    mu = build_custom(0.25 * y ** 4 + 0.5 * y ** 2, 1.0, g)
    assert mu.lambda_star == 1.0
    with pytest.raises(ConvexityError):
        build_custom(0.5 * y ** 2, 2.0, g)
    with pytest.raises(ValueError):
        build_custom(0.5 * y ** 2, -1.0, g)


def test_custom_gaussian_is_recognized():
    g = Grid1D(10.0, 256)
    mu = build_custom(0.5 * g.nodes ** 2, 1.0, g)
    assert mu.is_gaussian


def test_grid_function_mismatch(gauss):
    other = Grid1D(10.0, 512)
    f = other.sample(np.cos)
    with pytest.raises(GridMismatchError):
        values_on(f, gauss.grid)
    with pytest.raises(GridMismatchError):
        f + gauss.grid.sample(np.cos)
    with pytest.raises(GridMismatchError):
        GridFunction(other, np.zeros(3))


def test_constant_broadcast(gauss):
    assert integrate(2.5, gauss) == pytest.approx(2.5, rel=1e-15)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_integral_linear(a, b):
    mu = build_gaussian(10.0, 256)
    f, g = np.cos(mu.nodes), mu.nodes ** 2
    assert integrate(a * f + b * g, mu) == pytest.approx(
        a * integrate(f, mu) + b * integrate(g, mu), abs=1e-12)
