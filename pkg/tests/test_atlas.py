import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaussflow import atlas

ps = st.floats(1.01, 1.99)


@pytest.mark.parametrize("d", [3, 5, 10, 50])
def test_sphere_endpoints_exact(d):
    assert atlas.m_pm_sphere(d, 1) == (1.0, 1.0)
    star = atlas.m_pm_sphere(d, atlas.sobolev_exponent(d))
    assert star[0] == pytest.approx((d - 1) / d, abs=1e-15)
    assert star[1] == pytest.approx((d - 1) / d, abs=1e-15)
    assert atlas.m_pm_sphere(d, atlas.sharp_hash_exponent(d))[1] == pytest.approx(1.0, abs=1e-15)


def test_fig_point_d5():
    lo, hi = atlas.m_pm_sphere(5, Fraction(10, 3))
    assert lo == hi == pytest.approx(0.8, abs=1e-15)


def test_gaussian_interval():
    assert atlas.m_pm_gauss(Fraction(3, 2)) == pytest.approx((1 / 3, 5 / 3), abs=1e-15)
    assert atlas.m_pm_gauss(1) == (1.0, 1.0)
    assert atlas.m_pm_gauss(2) == (1.0, 1.0)
    with pytest.raises(ValueError):
        atlas.m_pm_gauss(2.5)


def test_beta_pm_values():
    bm, bp = atlas.beta_pm(1.5)
    assert bm == pytest.approx(2 / 3, abs=1e-15) and bp == pytest.approx(2.0, abs=1e-15)


@pytest.mark.parametrize("d", [5.0, 20.0])
def test_sphere_rejects_supercritical(d):
    with pytest.raises(ValueError):
        atlas.m_pm_sphere(d, 2 * d / (d - 2) + 0.1)


def test_exponent_helpers():
    assert atlas.sobolev_exponent(3) == 6
    assert atlas.sharp_hash_exponent(3) == Fraction(19, 4)
    with pytest.raises(ValueError):
        atlas.sobolev_exponent(2)
    with pytest.raises(ValueError):
        atlas.sharp_hash_exponent(1)


@given(ps)
def test_large_dimension_limit(p):
    g = np.array(atlas.m_pm_gauss(p))
    assert np.max(np.abs(np.array(atlas.m_pm_sphere(1e9, p)) - g)) < 1e-7


@given(ps)
def test_beta_interval_matches_m_interval(p):
    lo, hi = atlas.m_pm_gauss(p)
    bm, bp = atlas.beta_pm(p)
    # beta is decreasing in m
    assert atlas.beta_from_m(p, lo) == pytest.approx(bp, rel=1e-10)
    assert atlas.beta_from_m(p, hi) == pytest.approx(bm, rel=1e-10)


@given(ps, st.floats(0.05, 3.0))
def test_m_beta_roundtrip(p, m):
    if abs(2 - p * (1 - m)) < 1e-3:
        return
    assert atlas.m_from_beta(p, atlas.beta_from_m(p, m)) == pytest.approx(m, rel=1e-12, abs=1e-12)


@given(ps, st.floats(0.3, 5.0))
def test_delta_factorization(p, beta):
    assert atlas.delta(p, beta) == pytest.approx(atlas.delta_factored(p, beta), abs=1e-11)


@given(ps)
def test_delta_sign(p):
    bm, bp = atlas.beta_pm(p)
    assert abs(atlas.delta(p, bm)) < 1e-12 and abs(atlas.delta(p, bp)) < 1e-12
    assert atlas.delta(p, 0.5 * (bm + bp)) > 0
    assert atlas.delta(p, bp + 0.5) < 0


@pytest.mark.parametrize("p", [1.1, 1.5, 1.9])
def test_theta(p):
    assert atlas.theta_of_beta(p, 1.0) == pytest.approx(p - 1, abs=1e-14)
    for b in atlas.beta_pm(p):
        assert atlas.theta_of_beta(p, b) == pytest.approx(1.0, abs=1e-12)


def test_parameter_point():
    pt = atlas.ParameterPoint(1, 1.5, 1.0)
    assert pt.beta == 1.0 and pt.kappa == pytest.approx(0.5) and pt.admissible
    assert not atlas.ParameterPoint(1, 1.5, 2.0).admissible
    assert atlas.ParameterPoint.from_beta(1, 1.5, 2.0).m == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        atlas.ParameterPoint(1, 1.5, -1.0)


def test_lambda_combined():
    assert atlas.lambda_combined(1.0, 1.3, 0.9) == pytest.approx(1.3)
    assert atlas.lambda_combined(1.5, 1.0, 1.0) == 1.0
    with pytest.raises(ValueError):
        atlas.lambda_combined(1.5, 0.5, 0.9)


@given(ps, st.floats(1e-8, 1e4))
def test_phi_inverse_roundtrip(p, t):
    s = atlas.phi_inverse(p, t)
    assert atlas.phi_func(p, s) == pytest.approx(t, rel=1e-12)


@pytest.mark.parametrize("p", [1.2, 1.7])
def test_phi_inverse_negative_branch(p):
    s_min = (p - 1) ** (1 / (2 - p)) - 1
    t = 0.5 * atlas.phi_func(p, s_min)
    s = atlas.phi_inverse(p, t)
    assert s_min <= s <= 0 and atlas.phi_func(p, s) == pytest.approx(t, rel=1e-12)
    with pytest.raises(atlas.InversionError):
        atlas.phi_inverse(p, 2 * atlas.phi_func(p, s_min))


@given(ps, st.floats(1e-6, 50.0))
def test_phi_bounds(p, s):
    # (2-p) s <= phi(s) <= s
    v = atlas.phi_func(p, s)
    assert (2 - p) * s * (1 - 1e-12) <= v <= s


@pytest.mark.parametrize("p", [1.1, 1.5, 1.9])
def test_psi_second_derivative(p):
    assert atlas.psi_second_difference(p) == pytest.approx(
        atlas.psi_second_derivative_zero(p), rel=1e-4)


@pytest.mark.parametrize("p", [1.1, 1.3, 1.5])
def test_psi_linear_growth(p):
    assert atlas.psi_func(p, 1e6) / 1e6 == pytest.approx(p - 1, abs=1e-3)


@pytest.mark.xfail(strict=True, reason="psi(t)/t - (p-1) ~ -(2-p) t^(p-2) exceeds 1e-3 at t = 1e6")
@pytest.mark.parametrize("p", [1.7, 1.9])
def test_psi_linear_growth_slow_for_large_p(p):
    assert atlas.psi_func(p, 1e6) / 1e6 == pytest.approx(p - 1, abs=1e-3)


@pytest.mark.parametrize("p", [1.1, 1.5, 1.7, 1.9])
def test_psi_linear_growth_rate(p):
    t = 1e6
    ratio = (atlas.psi_func(p, t) / t - (p - 1)) / (-(2 - p) * t ** (p - 2))
    assert 0.5 < ratio < 2.0


@given(ps, st.floats(1e-4, 1e3))
def test_psi_between_linear_bounds(p, t):
    v = atlas.psi_func(p, t)
    assert 0 <= v <= (p - 1) * t * (1 + 1e-9)


@pytest.mark.parametrize("p", [1.1, 1.5, 1.9])
def test_kappa_const(p):
    k = atlas.kappa_const(p)
    assert 0 < k <= 0.5 * atlas.psi_second_derivative_zero(p) + 1e-15
    assert abs(atlas.kappa_const(p, 1201) - k) <= 1e-8 * k
    ts = np.logspace(-3, 3, 50)
    assert all((1 + t) * atlas.psi_func(p, t) / t ** 2 >= k * (1 - 1e-9) for t in ts)


@given(ps)
def test_chi_at_beta_plus_is_identity(p):
    bp = atlas.beta_pm(p)[1]
    assert abs(atlas.b_of_beta(p, bp, 1.0)) < 1e-12
    assert atlas.chi_beta(p, bp, 1.0, 0.37) == pytest.approx(0.37, rel=1e-9)


def test_chi_rejects_b_above_one():
    with pytest.raises(ValueError):
        atlas.chi_beta(1.5, 1.0, 0.01, 1.0)


@pytest.mark.parametrize("p", [1.1, 1.5, 1.9])
def test_c_np_recipe(p):
    c, r = atlas.c_np(1, p)
    assert c == min(r.kappa_star, r.c1_branch, r.c2_branch) > 0
    assert r.theta == 0.5 and not r.n_dependent
    assert atlas.c_np(3, p)[0] == c
    with pytest.raises(ValueError):
        atlas.c_np(1, p, t=10.0)
    with pytest.raises(ValueError):
        atlas.c_np(1, 2.0)


def test_region_tables():
    rows = atlas.region_sample("gauss", 11)
    assert rows[0][0] == 1.0 and rows[-1][0] == 2.0
    assert all(r[1] <= 1 <= r[2] for r in rows)
    sphere = atlas.region_sample(5, 51)
    assert sphere[-1][0] == pytest.approx(10 / 3)
    assert sphere[-1][1] == pytest.approx(0.8) and sphere[-1][2] == pytest.approx(0.8)
    with pytest.raises(ValueError):
        atlas.region_sample("torus")
