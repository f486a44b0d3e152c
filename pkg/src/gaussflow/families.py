"""Test-function families shared by tests, sweeps and the CLI."""
from __future__ import annotations

import math

import numpy as np
from numpy.polynomial import hermite_e

from .measure import Grid1D, MeasureSpec

DEFAULT_DEGREE = 8
DEFAULT_AMPLITUDE = 0.3
POSITIVE_MIN = 0.05


def _nodes(where: Grid1D | MeasureSpec) -> np.ndarray:
    return where.nodes


def hermite_series(y: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """``sum_k c_k He_k(y) / sqrt(k!)`` with ``coeffs[0]`` multiplying ``He_1``."""
    full = np.concatenate(([0.0], np.asarray(coeffs, dtype=float)))
    norms = np.array([math.sqrt(math.factorial(k)) for k in range(full.size)])
    return hermite_e.hermeval(y, full / norms)


def random_hermite(where: Grid1D | MeasureSpec, rng: np.random.Generator,
                   degree: int = DEFAULT_DEGREE, amplitude: float = DEFAULT_AMPLITUDE,
                   envelope: float = 0.125, positive: bool = True,
                   min_value: float = POSITIVE_MIN) -> np.ndarray:
    """``1 + e^{-envelope y^2} sum_{k=1}^{degree} c_k He_k / sqrt(k!)``, ``c_k ~ U[-a, a]``.

    With ``positive=True`` an overly negative perturbation is scaled down so
    that the minimum is ``min_value``; scaling instead of clipping keeps the
    function smooth.
    """
    y = _nodes(where)
    c = rng.uniform(-amplitude, amplitude, size=degree)
    pert = np.exp(-envelope * y * y) * hermite_series(y, c)
    if positive:
        low = float(np.min(pert))
        if 1.0 + low < min_value:
            pert *= (1.0 - min_value) / (-low)
    return 1.0 + pert


def random_hermite_set(where: Grid1D | MeasureSpec, count: int, seed: int = 0,
                       **kwargs) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [random_hermite(where, rng, **kwargs) for _ in range(count)]


def random_flow_datum(where: Grid1D | MeasureSpec, rng: np.random.Generator,
                      amplitude: float = 0.1) -> np.ndarray:
    """Smooth positive datum decaying to 1 well inside the grid (min >= 1/2)."""
    return random_hermite(where, rng, degree=6, amplitude=amplitude, envelope=0.5,
                          positive=True, min_value=0.5)


def linear_family(where: Grid1D | MeasureSpec, eps: float) -> np.ndarray:
    """``1 + eps y``."""
    return 1.0 + eps * _nodes(where)


def mixed_family(where: Grid1D | MeasureSpec, eps: float, eta: float) -> np.ndarray:
    """``1 + eps y + eta (y^2 - 1)``."""
    y = _nodes(where)
    return 1.0 + eps * y + eta * (y * y - 1.0)


def bump(where: Grid1D | MeasureSpec, center: float = 0.0, radius: float = 1.0) -> np.ndarray:
    """``exp(-1/(1 - s^2))`` for ``|s| < 1``, ``s = (y - center)/radius``; zero outside."""
    s = (_nodes(where) - center) / radius
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def flow_test_datum(where: Grid1D | MeasureSpec, amplitude: float = 0.1) -> np.ndarray:
    """``1 + amplitude e^{-y^2} cos(2y)``."""
    y = _nodes(where)
    return 1.0 + amplitude * np.exp(-y * y) * np.cos(2.0 * y)
