"""Closed-form parameter curves, scalar auxiliary functions and constants.

Exponents are accepted either as floats or as :class:`fractions.Fraction`;
with rational input the discriminants below are evaluated exactly, which
matters at tangency points where the square root is ill-conditioned.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.optimize import minimize_scalar

Real = Union[float, int, Fraction]


def sobolev_exponent(d: Real) -> Real:
    """Critical exponent ``2* = 2d/(d-2)``, exact for integer ``d``."""
    if not d > 2:
        raise ValueError("2* is only defined for d > 2")
    if isinstance(d, (int, Fraction)):
        return Fraction(2 * d) / (d - 2)
    return 2.0 * d / (d - 2.0)


def sharp_hash_exponent(d: Real) -> Real:
    """``2# = (2d^2 + 1)/(d - 1)^2``, the last exponent for which m = 1 is admissible."""
    if d == 1:
        raise ValueError("2# is undefined at d = 1")
    if isinstance(d, (int, Fraction)):
        return Fraction(2 * d * d + 1) / (d - 1) ** 2
    return (2.0 * d * d + 1.0) / (d - 1.0) ** 2


def _sqrt(x: Real) -> float:
    """Square root that is exact on rational perfect squares."""
    if isinstance(x, Fraction) and x >= 0:
        rn, rd = math.isqrt(x.numerator), math.isqrt(x.denominator)
        if rn * rn == x.numerator and rd * rd == x.denominator:
            return rn / rd
    return math.sqrt(float(x))


def _clip_discriminant(disc: Real, scale: float) -> Real:
    if disc >= 0:
        return disc
    if float(disc) > -1e-12 * max(scale, 1.0):
        return 0
    raise ValueError(f"negative discriminant {float(disc):.3e}: parameters outside the admissible range")


def m_pm_sphere(d: Real, p: Real) -> tuple[float, float]:
    """Endpoints of the admissible interval of ``m`` on the sphere ``S^d``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if p < 1:
        raise ValueError("p must be >= 1")
    if d > 2 and p > sobolev_exponent(d):
        raise ValueError("p exceeds the critical exponent 2d/(d-2)")
    disc = d * (p - 1) * (2 * d - (d - 2) * p)
    disc = _clip_discriminant(disc, float(d) ** 2 * float(p))
    centre, denom = d * p + 2, (d + 2) * p
    if isinstance(disc, Fraction) and _is_exact_root(disc):
        r = 2 * Fraction(math.isqrt(disc.numerator), math.isqrt(disc.denominator))
        return float((centre - r) / denom), float((centre + r) / denom)
    root = 2.0 * math.sqrt(float(disc))
    return (float(centre) - root) / float(denom), (float(centre) + root) / float(denom)


def _is_exact_root(x: Fraction) -> bool:
    return (math.isqrt(x.numerator) ** 2 == x.numerator
            and math.isqrt(x.denominator) ** 2 == x.denominator)


def m_pm_gauss(p: Real) -> tuple[float, float]:
    """Large-dimension limit of :func:`m_pm_sphere`, ``1 -+ 2 sqrt((p-1)(2-p))/p``."""
    if not 1 <= p <= 2:
        raise ValueError(f"p must lie in [1, 2], got {p}")
    s = _sqrt((p - 1) * (2 - p))
    return 1.0 - 2.0 * s / float(p), 1.0 + 2.0 * s / float(p)


def beta_pm(p: Real) -> tuple[float, float]:
    """Roots of ``delta(p, .)``: ``1/(1 +- sqrt((p-1)(2-p)))``."""
    if not 1 <= p <= 2:
        raise ValueError(f"p must lie in [1, 2], got {p}")
    s = _sqrt((p - 1) * (2 - p))
    return 1.0 / (1.0 + s), 1.0 / (1.0 - s)


def beta_from_m(p: float, m: float) -> float:
    denom = 2.0 - p * (1.0 - m)
    if denom == 0:
        raise ZeroDivisionError("beta is singular at p(1-m) = 2")
    return 2.0 / denom


def m_from_beta(p: float, beta: float) -> float:
    if beta == 0:
        raise ZeroDivisionError("beta must be nonzero")
    return 1.0 - (2.0 - 2.0 / beta) / p


def kappa_from_beta(p: float, beta: float) -> float:
    return beta * (p - 2.0) + 1.0


def delta(p: float, beta: float) -> float:
    """Coefficient of the quartic term in the sum-of-squares form of Q_beta."""
    k = kappa_from_beta(p, beta)
    return k * (beta - 1.0) + k + beta - 1.0 - (k + beta - 1.0) ** 2


def delta_factored(p: float, beta: float) -> float:
    bm, bp = beta_pm(p)
    return (1.0 - (p - 1.0) * (2.0 - p)) * (beta - bm) * (bp - beta)


def theta_of_beta(p: float, beta: float) -> float:
    den = (p - 2.0) * beta ** 2 + 2.0 * beta - 1.0
    if den == 0:
        raise ZeroDivisionError("theta(beta) has a pole here")
    return (p - 1.0) ** 2 * beta ** 2 / den


def lambda_combined(p: float, lambda1: float, lambda_star: float) -> float:
    if lambda1 < lambda_star - 1e-12 or lambda_star <= 0:
        raise ValueError("need lambda1 >= lambda_star > 0")
    return (2.0 - p) * lambda1 + (p - 1.0) * lambda_star


@dataclass(frozen=True)
class ParameterPoint:
    n: int
    p: float
    m: float
    d: float = math.inf

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.m > 0:
            raise ValueError("m must be positive")
        if self.d < 1:
            raise ValueError("d must be >= 1")

    @classmethod
    def from_beta(cls, n: int, p: float, beta: float, d: float = math.inf) -> "ParameterPoint":
        return cls(n, p, m_from_beta(p, beta), d)

    @property
    def beta(self) -> float:
        return beta_from_m(self.p, self.m)

    @property
    def kappa(self) -> float:
        return kappa_from_beta(self.p, self.beta)

    @property
    def admissible(self) -> bool:
        lo, hi = m_pm_gauss(self.p) if math.isinf(self.d) else m_pm_sphere(self.d, self.p)
        return lo - 1e-14 <= self.m <= hi + 1e-14


# ---------------------------------------------------------------- phi, chi, psi

def phi_func(p: float, s):
    """``1 + s - (1+s)^(p-1)``; accurate for small ``s``."""
    s = np.asarray(s, dtype=float)
    out = s - np.expm1((p - 1.0) * np.log1p(s))
    return out if out.ndim else float(out)


def phi_prime(p: float, s):
    s = np.asarray(s, dtype=float)
    out = 1.0 - (p - 1.0) * (1.0 + s) ** (p - 2.0)
    return out if out.ndim else float(out)


class InversionError(RuntimeError):
    pass


def phi_inverse(p: float, t: float, tol: float = 1e-15, max_iter: int = 200) -> float:
    """Solve ``phi(s) = t`` on the increasing branch of ``phi``.

    Newton iterations from the convex side, safeguarded by bisection.  Small
    negative ``t`` are allowed (down to the minimum of ``phi``).
    """
    if not 1 < p < 2:
        raise ValueError("phi is invertible for p in (1, 2)")
    if t == 0:
        return 0.0
    if t > 0:
        # (2-p) s <= phi(s) <= s
        lo, hi = t, t / (2.0 - p)
    else:
        s_min = (p - 1.0) ** (1.0 / (2.0 - p)) - 1.0
        if t < phi_func(p, s_min):
            raise InversionError(f"t={t} below the minimum of phi")
        lo, hi = s_min, 0.0
    s = hi
    for _ in range(max_iter):
        g = phi_func(p, s) - t
        if g > 0:
            hi = s
        else:
            lo = s
        if g == 0 or hi - lo <= tol * abs(s):
            return s
        dg = phi_prime(p, s)
        step = s - g / dg if dg > 0 else None
        s_new = step if step is not None and lo < step < hi else 0.5 * (lo + hi)
        if abs(s_new - s) <= tol * abs(s):
            return s_new
        s = s_new
    raise InversionError(f"phi inversion did not converge for t={t}, bracket [{lo}, {hi}]")


def psi_func(p: float, t: float) -> float:
    """``t - (2-p) phi^{-1}(t)``."""
    return t - (2.0 - p) * phi_inverse(p, t)


def psi_second_derivative_zero(p: float) -> float:
    return (p - 1.0) / (2.0 - p)


def psi_second_difference(p: float, t: float = 0.0, h: float = 1e-4) -> float:
    return (psi_func(p, t + h) - 2.0 * psi_func(p, t) + psi_func(p, t - h)) / h ** 2


def b_of_beta(p: float, beta: float, lambda_star: float) -> float:
    return delta(p, beta) / beta ** 2 * (2.0 - p) / lambda_star


def chi_beta(p: float, beta: float, lambda_star: float, s):
    b = b_of_beta(p, beta, lambda_star)
    if b >= 1:
        raise ValueError(f"b(beta) = {b} >= 1: chi_beta is not monotone")
    s = np.asarray(s, dtype=float)
    out = (1.0 - b) * (s - np.expm1(b * np.log1p(s)))
    return out if out.ndim else float(out)


def _kappa_objective(p: float, t: float) -> float:
    return (1.0 + t) * psi_func(p, t) / t ** 2


@lru_cache(maxsize=256)
def kappa_const(p: float, resolution: int = 601) -> float:
    """``inf_{t>0} (1+t) psi(t) / t^2``: log scan plus bounded Brent refinement."""
    if not 1 < p < 2:
        raise ValueError("kappa is defined for p in (1, 2)")
    ts = np.logspace(-6.0, 6.0, resolution)
    vals = np.array([_kappa_objective(p, t) for t in ts])
    i = int(np.argmin(vals))
    lo, hi = np.log(ts[max(i - 1, 0)]), np.log(ts[min(i + 1, resolution - 1)])
    res = minimize_scalar(lambda u: _kappa_objective(p, math.exp(u)), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-12})
    best = min(float(res.fun), float(vals[i]))
    return min(best, 0.5 * psi_second_derivative_zero(p), p - 1.0)


def kappa_star(p: float, theta: float) -> float:
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    return 0.5 * (2.0 - p) * psi_func(p, (2.0 - p) * theta) * theta


@dataclass(frozen=True)
class ConstantRecipe:
    theta: float
    lam: float
    t: float
    kappa_star: float
    c1_branch: float
    c2_branch: float
    n_dependent: bool = False
    notes: str = field(default="theta=1/2, lambda=1/32, t=min{1, sqrt(8(p-1)(5-2p)/3)}/2")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in sorted(self.__dataclass_fields__)}


def c_np(n: int, p: float, theta: float = 0.5, lam: float = 1.0 / 32.0,
         t: float | None = None) -> tuple[float, ConstantRecipe]:
    """Explicit stability constant and the parameter choice that produced it."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 1 < p < 2:
        raise ValueError("p must lie in (1, 2)")
    bound_t = math.sqrt(8.0 * (p - 1.0) * (5.0 - 2.0 * p) / 3.0)
    if t is None:
        t = 0.5 * min(1.0, bound_t)
    if not 0 < t < bound_t:
        raise ValueError("t must satisfy 0 < t^2 < 8(p-1)(5-2p)/3")
    if not 0 < lam < 1.0 / 16.0:
        raise ValueError("lambda must lie in (0, 1/16)")
    ks = kappa_star(p, theta)
    c1 = 0.25 * (2.0 - p) * (1.0 - theta) * min(t, 1.0)
    c2 = (1.0 - theta) * lam
    recipe = ConstantRecipe(theta, lam, t, ks, c1, c2)
    return min(ks, c1, c2), recipe


# ---------------------------------------------------------------- regions

REGION_COLUMNS = ("p", "m_minus", "m_plus", "beta_minus", "beta_plus")


def _safe_beta(p: float, m: float) -> float:
    try:
        return beta_from_m(p, m)
    except ZeroDivisionError:
        return math.inf


def region_sample(d: Real | str, resolution: int = 101) -> list[tuple[float, ...]]:
    """Rows ``(p, m-, m+, beta-, beta+)`` tracing the admissible region.

    ``d = "gauss"`` gives the Gaussian region on ``p in [1, 2]``; a numeric
    ``d`` gives the sphere region on ``[1, 2*]`` (``[1, 4]`` when d <= 2).
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    rows = []
    if isinstance(d, str):
        if d != "gauss":
            raise ValueError("d must be a number or 'gauss'")
        for k in range(resolution):
            p = Fraction(1) + Fraction(k, resolution - 1)
            mm, mp = m_pm_gauss(p)
            bm, bp = beta_pm(p)
            rows.append((float(p), mm, mp, bm, bp))
        return rows
    if isinstance(d, float) and d.is_integer():
        d = int(d)
    p_max = sobolev_exponent(d) if d > 2 else 4
    for k in range(resolution):
        p = 1 + (p_max - 1) * Fraction(k, resolution - 1) if not isinstance(p_max, float) \
            else 1.0 + (p_max - 1.0) * k / (resolution - 1)
        mm, mp = m_pm_sphere(d, p)
        pf = float(p)
        rows.append((pf, mm, mp, _safe_beta(pf, mm), _safe_beta(pf, mp)))
    return rows
