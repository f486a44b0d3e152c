"""Norms, entropy, Fisher information and inequality deficits."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .measure import (ArrayLike, GridFunction, MeasureSpec, _derivative_values,
                      integrate, values_on)

BORDERLINE_REL_TOL = 1e-8


@dataclass(frozen=True)
class DeficitReport:
    tag: str
    lhs: float
    rhs: float
    tol: float = BORDERLINE_REL_TOL

    @property
    def slack(self) -> float:
        return self.lhs - self.rhs

    @property
    def verdict(self) -> str:
        if abs(self.slack) < self.tol * (1.0 + abs(self.lhs)):
            return "borderline"
        return "holds" if self.slack > 0 else "fails"

    @property
    def ok(self) -> bool:
        return self.verdict != "fails"

    def to_dict(self) -> dict:
        return {"tag": self.tag, "lhs": self.lhs, "rhs": self.rhs,
                "slack": self.slack, "verdict": self.verdict}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _check_p_entropy(p: float) -> None:
    if not 1.0 <= p < 2.0:
        raise ValueError(f"exponent p must lie in [1, 2), got {p}")


def lp_norm(f: ArrayLike, p: float, mu: MeasureSpec) -> float:
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    v = np.abs(values_on(f, mu.grid))
    return integrate(v ** p, mu) ** (1.0 / p)


def lp_norm_sq(f: ArrayLike, p: float, mu: MeasureSpec) -> float:
    """``||f||_p^2`` without the intermediate root."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    v = np.abs(values_on(f, mu.grid))
    return integrate(v ** p, mu) ** (2.0 / p)


def gradient(f: ArrayLike, mu: MeasureSpec) -> np.ndarray:
    return _derivative_values(values_on(f, mu.grid), mu.grid.spacing)


def fisher(f: ArrayLike, mu: MeasureSpec) -> float:
    """``int |f'|^2 dmu``."""
    return integrate(gradient(f, mu) ** 2, mu)


def entropy(f: ArrayLike, p: float, mu: MeasureSpec) -> float:
    """``(||f||_2^2 - ||f||_p^2) / (2 - p)``."""
    _check_p_entropy(p)
    return (lp_norm_sq(f, 2.0, mu) - lp_norm_sq(f, p, mu)) / (2.0 - p)


def deficit(f: ArrayLike, p: float, lam: float, mu: MeasureSpec) -> DeficitReport:
    """Interpolation inequality ``I[f] >= lam E[f]``."""
    _check_p_entropy(p)
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return DeficitReport(f"interpolation(p={p:g},lambda={lam:g})",
                         fisher(f, mu), lam * entropy(f, p, mu))


def log_entropy(f: ArrayLike, mu: MeasureSpec) -> float:
    """``int f^2 log(f^2 / ||f||_2^2) dmu`` with ``0 log 0 = 0``."""
    v = values_on(f, mu.grid)
    sq = v * v
    norm = integrate(sq, mu)
    if norm == 0.0:
        return 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(sq > 0, sq * np.log(sq / norm), 0.0)
    return integrate(integrand, mu)


def logsob_deficit(f: ArrayLike, mu: MeasureSpec, lam: float = 1.0) -> DeficitReport:
    v = values_on(f, mu.grid)
    if np.any(v < 0):
        raise ValueError("log-Sobolev deficit expects a non-negative function")
    if not np.any(v > 0):
        raise ValueError("function vanishes identically")
    return DeficitReport(f"log-sobolev(lambda={lam:g})", fisher(v, mu),
                         0.5 * lam * log_entropy(v, mu))


def project_pi1(f: ArrayLike, mu: MeasureSpec) -> tuple[GridFunction, GridFunction]:
    """Split ``f`` into its component on ``span{1, y}`` and the L^2(gamma)
    orthogonal residual."""
    if not mu.is_gaussian:
        raise ValueError("the projection onto span{1, y} is defined for the Gaussian measure")
    v = values_on(f, mu.grid)
    y = mu.nodes
    a = integrate(v, mu)
    b = integrate(y * v, mu)
    pi = a + b * y
    return GridFunction(mu.grid, pi), GridFunction(mu.grid, v - pi)


def pi1_coefficients(f: ArrayLike, mu: MeasureSpec) -> tuple[float, float]:
    v = values_on(f, mu.grid)
    return integrate(v, mu), integrate(mu.nodes * v, mu)
