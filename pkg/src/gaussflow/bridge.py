"""Finite-dimensional sphere functionals and their Gaussian limit.

A function ``v`` of ``n`` variables is lifted to ``R^d`` (constant in the
remaining ``d - n`` variables).  The transverse integrals against powers of
``1 + |x|^2/d`` are done in closed form with log-Gamma functions, leaving
one-dimensional ``y``-integrals on the grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as sp_integrate
from scipy.special import gammaln

from .functionals import deficit, logsob_deficit
from .measure import ArrayLike, Grid1D, MeasureSpec, _derivative_values, build_gaussian, values_on

PRE_ASYMPTOTIC_D = 100.0


class SupportError(ValueError):
    pass


def log_sphere_area(k: float) -> float:
    """``log |S^{k-1}| = log(2 pi^{k/2} / Gamma(k/2))``."""
    return math.log(2.0) + 0.5 * k * math.log(math.pi) - gammaln(0.5 * k)


def log_zeta_integral(a: float, b: float, d: float) -> float:
    """``log int_{R^a} (1 + |z|^2/d)^{-b} dz`` for ``0 < a < 2b``."""
    if not 0 < a < 2 * b:
        raise ValueError(f"need 0 < a < 2b, got a={a}, b={b}")
    return 0.5 * a * math.log(d * math.pi) + gammaln(b - 0.5 * a) - gammaln(b)


def zeta_integral(a: float, b: float, d: float) -> float:
    return math.exp(log_zeta_integral(a, b, d))


def zeta_integral_quadrature(a: float, b: float, d: float) -> float:
    """Brute-force radial quadrature of the same integral (small ``a`` only)."""
    if not 0 < a < 2 * b:
        raise ValueError(f"need 0 < a < 2b, got a={a}, b={b}")
    # integrand peaks near r^2 = d (a-1)/(2b-a+1); split there for quad
    r_peak = math.sqrt(max(d * (a - 1.0) / (2.0 * b - a + 1.0), 1e-12))
    log_peak = (a - 1.0) * math.log(r_peak) - b * math.log1p(r_peak ** 2 / d) if a > 1 else 0.0

    def f(r):
        if r == 0.0:
            return 1.0 if a == 1 else 0.0
        return math.exp((a - 1.0) * math.log(r) - b * math.log1p(r * r / d) - log_peak)

    pts = [0.0, r_peak, 4.0 * r_peak + 1.0]
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        total += sp_integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-13, limit=400)[0]
    total += sp_integrate.quad(f, pts[-1], math.inf, epsabs=0.0, epsrel=1e-13, limit=400)[0]
    return math.exp(log_sphere_area(a) + log_peak) * total


def log_c_d(d: float) -> float:
    """``log c_d``, ``c_d = (d pi)^{d/2} Gamma(d/2)/Gamma(d) = int_{R^d} (1+|x|^2/d)^{-d} dx``."""
    return 0.5 * d * math.log(d * math.pi) + gammaln(0.5 * d) - gammaln(d)


def log_lp_constant(d: float, p: float) -> float:
    """``log( C_{d,p} d^{d(p-2)/(2p)} / (4 d c_d) )`` with
    ``C_{d,p} = 2^{delta/p} d |S^d|^{1-2/p}`` and ``delta = 2d - p(d-2)``."""
    dlt = 2.0 * d - p * (d - 2.0)
    log_C = dlt / p * math.log(2.0) + math.log(d) + (1.0 - 2.0 / p) * log_sphere_area(d + 1.0)
    return log_C + d * (p - 2.0) / (2.0 * p) * math.log(d) - math.log(4.0 * d) - log_c_d(d)


@dataclass(frozen=True)
class BridgeEvaluation:
    d: float
    p: float
    gradient_term: float
    l2_term: float
    lp_term: float
    gaussian_target: float
    pre_asymptotic: bool

    @property
    def combined(self) -> float:
        return self.gradient_term + (self.lp_term - self.l2_term) / (2.0 - self.p)

    @property
    def abs_error(self) -> float:
        return abs(self.combined - self.gaussian_target)

    def row(self) -> tuple[float, ...]:
        return (self.d, self.gradient_term, self.l2_term, self.lp_term, self.combined,
                self.gaussian_target, self.abs_error)

    COLUMNS = ("d", "gradient_term", "l2_term", "lp_term", "combined", "gaussian_target",
               "abs_error")


def _check_support(v: np.ndarray) -> None:
    if np.max(np.abs(v[:4])) >= 1e-14 or np.max(np.abs(v[-4:])) >= 1e-14:
        raise SupportError("v must vanish (below 1e-14) on the four outermost nodes")


def _trapezoid(grid: Grid1D) -> np.ndarray:
    w = np.full(grid.point_count, grid.spacing)
    w[0] = w[-1] = 0.5 * grid.spacing
    return w


def _terms(v: np.ndarray, grid: Grid1D, d: float, p: float, n: int = 1) -> tuple[float, float, float]:
    if not d > max(n, 3):
        raise ValueError(f"need d > max(n, 3), got d={d}")
    y = grid.nodes
    tw = _trapezoid(grid)
    dv = _derivative_values(v, grid.spacing)
    log_base = np.log1p(y * y / d)
    w_grad = np.exp((2.0 - 0.5 * (d + n)) * log_base)
    w_mass = np.exp(-0.5 * (d + n) * log_base)
    k = d - n
    lcd = log_c_d(d)
    Yg = float(np.sum(tw * dv * dv * w_grad))
    Y2 = float(np.sum(tw * v * v * w_mass))
    Yp = float(np.sum(tw * np.abs(v) ** p * w_mass))
    grad = 0.25 * Yg * math.exp(log_zeta_integral(k, d - 2.0, d) - lcd)
    l2 = Y2 * math.exp(log_zeta_integral(k, d, d) - lcd)
    if Yp == 0.0:
        lp = 0.0
    else:
        lp = math.exp(log_lp_constant(d, p)
                      + 2.0 / p * (math.log(Yp) + log_zeta_integral(k, d, d)))
    return grad, l2, lp


def _gaussian_on(grid: Grid1D, mu: MeasureSpec | None) -> MeasureSpec:
    if mu is None:
        return build_gaussian(grid.half_width, grid.point_count)
    if mu.grid != grid or not mu.is_gaussian:
        raise ValueError("the target measure must be the Gaussian on the same grid")
    return mu


def sphere_functionals(v: ArrayLike, grid: Grid1D, d: float, p: float, n: int = 1,
                       mu: MeasureSpec | None = None) -> BridgeEvaluation:
    """The three reduced sphere integrals at finite ``d`` and the Gaussian deficit."""
    if not 1.0 <= p < 2.0:
        raise ValueError("p must lie in [1, 2)")
    if n != 1:
        raise NotImplementedError("grid quadrature is one-dimensional (n = 1)")
    vals = values_on(v, grid)
    _check_support(vals)
    grad, l2, lp = _terms(vals, grid, d, p, n)
    target = deficit(vals, p, 1.0, _gaussian_on(grid, mu)).slack if np.any(vals) else 0.0
    return BridgeEvaluation(float(d), float(p), grad, l2, lp, target, d < PRE_ASYMPTOTIC_D)


def logsob_bridge(v: ArrayLike, grid: Grid1D, d: float, p_d: float | None = None,
                  mu: MeasureSpec | None = None) -> BridgeEvaluation:
    """Reduced sphere quantity at ``(d, p_d)`` against the Gaussian log-Sobolev deficit."""
    p_d = 2.0 - 1.0 / d if p_d is None else p_d
    if not 1.0 < p_d < 2.0:
        raise ValueError("p_d must lie in (1, 2)")
    vals = values_on(v, grid)
    _check_support(vals)
    grad, l2, lp = _terms(vals, grid, d, p_d)
    target = logsob_deficit(vals, _gaussian_on(grid, mu)).slack if np.any(vals) else 0.0
    return BridgeEvaluation(float(d), float(p_d), grad, l2, lp, target, d < PRE_ASYMPTOTIC_D)


def entropy_limit_gap(f: ArrayLike, p: float, mu: MeasureSpec) -> tuple[float, float]:
    """``((||f||_p^2 - ||f||_2^2)/(p-2), (1/2) int f^2 log(f^2/||f||_2^2))``."""
    from .functionals import log_entropy, lp_norm_sq
    left = (lp_norm_sq(f, p, mu) - lp_norm_sq(f, 2.0, mu)) / (p - 2.0)
    return left, 0.5 * log_entropy(np.abs(values_on(f, mu.grid)), mu)
