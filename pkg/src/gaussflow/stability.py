"""Improved inequalities, the Poincare constant and the stability estimate."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.special import erfc, gammaln

from . import atlas
from .functionals import DeficitReport, entropy, fisher, lp_norm_sq, pi1_coefficients
from .measure import (ArrayLike, MeasureSpec, _derivative_values, fd_weights, integrate,
                      values_on)


def _range_p(p: float) -> None:
    if not 1.0 < p < 2.0:
        raise ValueError(f"p must lie in (1, 2), got {p}")


def _lam(mu: MeasureSpec, lambda_star: float | None) -> float:
    return mu.lambda_star if lambda_star is None else float(lambda_star)


# ---------------------------------------------------------------- improved inequalities

def improved_gap_ad2005(f: ArrayLike, p: float, mu: MeasureSpec,
                        lambda_star: float | None = None) -> tuple[DeficitReport, DeficitReport]:
    """``I[f] >= lam/(2-p)^2 ||f||_p^2 phi((2-p) E[f] / ||f||_p^2)``.

    Returns the phi-form and the explicit-norms form
    ``||f||_2^2 - ||f||_2^{2(p-1)} ||f||_p^{2(2-p)}`` of the same bound.
    """
    _range_p(p)
    lam = _lam(mu, lambda_star)
    v = values_on(f, mu.grid)
    if not np.any(v):
        raise ValueError("f vanishes identically")
    I = fisher(v, mu)
    M = lp_norm_sq(v, p, mu)
    N2 = lp_norm_sq(v, 2.0, mu)
    s = (N2 - M) / M
    pref = lam / (2.0 - p) ** 2
    phi_rhs = pref * M * atlas.phi_func(p, s)
    norm_rhs = pref * (N2 - N2 ** (p - 1.0) * M ** (2.0 - p))
    return (DeficitReport(f"improved-phi(p={p:g})", I, phi_rhs),
            DeficitReport(f"improved-norms(p={p:g})", I, norm_rhs))


def improved_gap_chi(f: ArrayLike, p: float, beta: float, mu: MeasureSpec,
                     lambda_star: float | None = None) -> DeficitReport:
    """``I[f] >= ||f||_p^2 chi_beta((2-p) E[f] / ||f||_p^2)`` for ``beta in [1, beta_+]``."""
    _range_p(p)
    bm, bp = atlas.beta_pm(p)
    if not 1.0 <= beta <= bp + 1e-12:
        raise ValueError(f"beta must lie in [1, {bp}]")
    lam = _lam(mu, lambda_star)
    v = values_on(f, mu.grid)
    I = fisher(v, mu)
    M = lp_norm_sq(v, p, mu)
    s = (lp_norm_sq(v, 2.0, mu) - M) / M
    return DeficitReport(f"improved-chi(p={p:g},beta={beta:g})", I,
                         M * atlas.chi_beta(p, beta, lam, s))


@dataclass(frozen=True)
class FourthOrderReports:
    psi: DeficitReport
    kappa: DeficitReport


def fourth_order_bound(f: ArrayLike, p: float, mu: MeasureSpec,
                       lambda_star: float | None = None) -> FourthOrderReports:
    """Deficit against the psi-bound and the quartic kappa-bound."""
    _range_p(p)
    lam = _lam(mu, lambda_star)
    v = values_on(f, mu.grid)
    I = fisher(v, mu)
    M = lp_norm_sq(v, p, mu)
    N2 = lp_norm_sq(v, 2.0, mu)
    dfc = I - lam / (2.0 - p) * (N2 - M)
    psi_rhs = 0.0 if I == 0.0 else lam / (2.0 - p) * M * atlas.psi_func(p, (2.0 - p) * I / (lam * M))
    denom = I + lam / (2.0 - p) * N2
    kappa_rhs = 0.0 if I == 0.0 else atlas.kappa_const(p) * I * I / denom
    return FourthOrderReports(DeficitReport(f"psi-bound(p={p:g})", dfc, psi_rhs),
                              DeficitReport(f"kappa-bound(p={p:g})", dfc, kappa_rhs))


# ---------------------------------------------------------------- |v| reduction and Pi_1

@dataclass(frozen=True)
class _AbsParts:
    f: np.ndarray          # |v|
    grad: np.ndarray       # sign(v) v'
    a: float               # int f dgamma
    b: float               # int y f dgamma


def _abs_parts(v: ArrayLike, mu: MeasureSpec) -> _AbsParts:
    if not mu.is_gaussian:
        raise ValueError("stability computations are set on the Gaussian measure")
    vals = values_on(v, mu.grid)
    f = np.abs(vals)
    grad = np.sign(vals) * _derivative_values(vals, mu.grid.spacing)
    a, b = pi1_coefficients(f, mu)
    return _AbsParts(f, grad, a, b)


def _deficit_parts(parts: _AbsParts, p: float, mu: MeasureSpec) -> tuple[float, float, float]:
    I = integrate(parts.grad ** 2, mu)
    N2 = lp_norm_sq(parts.f, 2.0, mu)
    Mp = lp_norm_sq(parts.f, p, mu)
    return I, N2, I - (N2 - Mp) / (2.0 - p)


def orth_improvement(f: ArrayLike, p: float, mu: MeasureSpec) -> DeficitReport:
    """Gaussian deficit against ``(2-p)/2 ||grad (Id - Pi_1) f||^2``."""
    if not 1.0 <= p < 2.0:
        raise ValueError("p must lie in [1, 2)")
    parts = _abs_parts(f, mu)
    _, _, dfc = _deficit_parts(parts, p, mu)
    resid = integrate((parts.grad - parts.b) ** 2, mu)
    return DeficitReport(f"orthogonality(p={p:g})", dfc, 0.5 * (2.0 - p) * resid)


@dataclass(frozen=True)
class StabilityBreakdown:
    p: float
    c: float
    deficit: float
    fisher: float
    l2_sq: float
    residual_fisher: float
    pi1_fisher: float
    recipe: atlas.ConstantRecipe = field(repr=False)

    @property
    def rhs(self) -> float:
        if self.fisher + self.l2_sq == 0.0:
            return 0.0
        return self.c * (self.residual_fisher
                         + self.pi1_fisher ** 2 / (self.fisher + self.l2_sq))

    @property
    def slack(self) -> float:
        return self.deficit - self.rhs

    @property
    def split_error(self) -> float:
        return abs(self.residual_fisher + self.pi1_fisher - self.fisher)

    def report(self) -> DeficitReport:
        return DeficitReport(f"stability(p={self.p:g})", self.deficit, self.rhs)

    def to_dict(self) -> dict:
        return {"c": self.c, "deficit": self.deficit, "fisher": self.fisher, "l2_sq": self.l2_sq,
                "p": self.p, "pi1_fisher": self.pi1_fisher, "recipe": self.recipe.to_dict(),
                "residual_fisher": self.residual_fisher, "rhs": self.rhs, "slack": self.slack}


def stability_check(v: ArrayLike, p: float, mu: MeasureSpec, n: int = 1) -> StabilityBreakdown:
    """Deficit of ``f = |v|`` against the explicit stability lower bound."""
    _range_p(p)
    c, recipe = atlas.c_np(n, p)
    parts = _abs_parts(v, mu)
    I, N2, dfc = _deficit_parts(parts, p, mu)
    resid = integrate((parts.grad - parts.b) ** 2, mu)
    return StabilityBreakdown(p, c, dfc, I, N2, resid, parts.b ** 2, recipe)


# ---------------------------------------------------------------- Poincare constant

def _staggered_matrix(N: int, h: float) -> np.ndarray:
    G = np.zeros((N - 1, N))
    for j in range(1, N - 2):
        G[j, j - 1:j + 3] = np.array([1.0, -27.0, 27.0, -1.0]) / (24.0 * h)
    c = fd_weights((-0.5, 0.5, 1.5, 2.5), 1) / h
    G[0, :4] = c
    G[-1, -4:] = -c[::-1]
    return G


def poincare_lambda1(mu: MeasureSpec) -> float:
    """Second eigenvalue of ``int f' g' dmu`` against ``int f g dmu``."""
    N, h = mu.grid.point_count, mu.grid.spacing
    G = _staggered_matrix(N, h)
    K = G.T @ (h * np.asarray(mu.density_mid)[:, None] * G)
    M = np.asarray(mu.weights)
    # symmetric scaling instead of a generalized solve: the mass matrix is diagonal
    s = 1.0 / np.sqrt(M)
    A = s[:, None] * K * s[None, :]
    A = 0.5 * (A + A.T)
    try:
        vals = eigh(A, eigvals_only=True, subset_by_index=[0, 1], driver="evr")
    except Exception as exc:  # pragma: no cover - LAPACK failure
        raise np.linalg.LinAlgError(f"eigensolver failed: {exc}") from exc
    return float(vals[1])


@dataclass(frozen=True)
class Lemma37Result:
    lambda1: float
    lambda_star: float
    lam: float
    worst: DeficitReport
    count: int

    @property
    def min_slack(self) -> float:
        return self.worst.slack


def lemma37_check(mu: MeasureSpec, p: float, test_set, lambda1: float | None = None) -> Lemma37Result:
    """Interpolation inequality with ``lam = (2-p) lambda1 + (p-1) lambda_star`` on a test set."""
    if not 1.0 <= p < 2.0:
        raise ValueError("p must lie in [1, 2)")
    l1 = poincare_lambda1(mu) if lambda1 is None else lambda1
    lam = atlas.lambda_combined(p, l1, mu.lambda_star)
    worst = None
    count = 0
    for f in test_set:
        v = values_on(f, mu.grid)
        rep = DeficitReport(f"lemma37(p={p:g},lambda={lam:.6g})", fisher(v, mu),
                            lam * entropy(v, p, mu))
        count += 1
        if worst is None or rep.slack < worst.slack:
            worst = rep
    if worst is None:
        raise ValueError("empty test set")
    return Lemma37Result(l1, mu.lambda_star, lam, worst, count)


# ---------------------------------------------------------------- proof probes

def ball_complement_mass(eps: float, n: int = 1) -> float:
    """``gamma(|x| > 1/(2 eps))`` in dimension ``n``."""
    from scipy.special import gammaincc
    R = 1.0 / (2.0 * eps)
    if n == 1:
        return float(erfc(R / math.sqrt(2.0)))
    return float(gammaincc(0.5 * n, 0.5 * R * R))


def ball_complement_asymptotic(eps: float, n: int = 1) -> float:
    """``c_n eps^{2-n} e^{-1/(8 eps^2)}`` with ``c_n = 2^{3(2-n)/2} / Gamma(n/2)``."""
    log_cn = 1.5 * (2 - n) * math.log(2.0) - gammaln(0.5 * n)
    return math.exp(log_cn + (2 - n) * math.log(eps) - 1.0 / (8.0 * eps * eps))


@dataclass(frozen=True)
class ProbeRecord:
    branch: str               # "far", "near-orthogonal", "near-taylor"
    deficit: float
    bound: float
    holds: bool
    details: dict

    def to_dict(self) -> dict:
        return {"bound": self.bound, "branch": self.branch, "deficit": self.deficit,
                "details": dict(sorted(self.details.items())), "holds": self.holds}


def proof_probes(f: ArrayLike, p: float, mu: MeasureSpec, theta: float = 0.5,
                 t: float | None = None, tol: float = 1e-10) -> ProbeRecord:
    """Classify ``f`` by the branch of the stability proof and check that branch's bound."""
    _range_p(p)
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    if t is None:
        t = atlas.c_np(1, p, theta=theta)[1].t
    parts = _abs_parts(f, mu)
    if np.any(values_on(f, mu.grid) < 0):
        raise ValueError("proof probes expect a non-negative function")
    I, N2, dfc = _deficit_parts(parts, p, mu)
    if abs(N2 - 1.0) > tol:
        raise ValueError(f"f must be normalized in L^2(gamma): ||f||_2^2 = {N2}")
    if I >= theta:
        bound = atlas.kappa_star(p, theta) * I
        return ProbeRecord("far", dfc, bound, dfc >= bound - 1e-12, {"fisher": I, "theta": theta})
    mean = parts.a
    details = {"fisher": I, "theta": theta, "t": t, "mean": mean,
               "mean_lower": math.sqrt(1.0 - theta),
               "mean_in_range": math.sqrt(1.0 - theta) - 1e-12 <= mean <= 1.0 + 1e-12}
    # decomposition u_f = 1 + eps y + eta r with ||r'||_2 = 1
    u = parts.f / mean
    ug = parts.grad / mean
    eps = parts.b / mean
    rg = ug - eps
    eta = math.sqrt(integrate(rg * rg, mu))
    details.update(eps=eps, eta=eta)
    if eta > t * eps * eps:
        _, _, dfc_u = _deficit_parts(_AbsParts(u, ug, 1.0, eps), p, mu)
        l2_u = lp_norm_sq(u, 2.0, mu)
        bound_u = 0.25 * (2.0 - p) * (eta ** 2 + t * t * eps ** 4 / (1.0 + eps ** 2 + eta ** 2))
        resid = integrate((parts.grad - parts.b) ** 2, mu)
        bound = 0.25 * (2.0 - p) * (1.0 - theta) * (resid + t * t * parts.b ** 4 / (I + N2))
        details.update(deficit_u=dfc_u, bound_u=bound_u, l2_u=l2_u,
                       holds_u=dfc_u >= bound_u - 1e-12)
        return ProbeRecord("near-orthogonal", dfc, bound,
                           dfc >= bound - 1e-12 and dfc_u >= bound_u - 1e-12, details)
    # Taylor branch: lower bound for ||u_f||_p^2 up to an eps^4/log(1/eps) band
    y = mu.nodes
    r_eta = u - 1.0 - eps * y
    r2 = integrate(r_eta ** 2, mu)  # eta^2 ||r||^2
    x2r = integrate(y * y * r_eta, mu)  # eta int x^2 r
    lp = lp_norm_sq(u, p, mu)
    taylor = 1.0 + (p - 1.0) * (eps ** 2 + r2) + (p - 1.0) * (2.0 - p) * (0.5 * eps ** 4 + eps ** 2 * x2r)
    gap = lp - taylor
    band = eps ** 4 / math.log(1.0 / eps) if 0 < eps < 1 else math.nan
    details.update(lp_sq=lp, taylor_lower=taylor, taylor_gap=gap,
                   observed_band_constant=(-gap / band) if band and band == band and gap < 0 else 0.0)
    c, _ = atlas.c_np(1, p, theta=theta, t=t)
    resid = integrate((parts.grad - parts.b) ** 2, mu)
    bound = c * (resid + parts.b ** 4 / (I + N2))
    return ProbeRecord("near-taylor", dfc, bound, dfc >= bound - 1e-12, details)
