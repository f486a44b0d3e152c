"""Nonlinear diffusion flow in the w-formulation and its carre du champ checks.

The evolution ``w_t = w^{2-2beta} (L w + kappa |w'|^2 / w)`` is integrated in
the equivalent conservative variable ``rho = w^{beta p}``, for which it reads
``rho_t = (1/m) L(rho^m)``.  With the flux-form discretization of ``L`` and an
explicit Runge-Kutta scheme the discrete mass ``sum(weights * rho)`` is a
linear invariant and is conserved to rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import atlas
from ._kernels import rk4_advance
from .functionals import entropy, fisher
from .measure import (ArrayLike, Grid1D, GridFunction, MeasureSpec, _derivative_values,
                      _second_derivative_values, apply_OU, fd_weights, integrate,
                      staggered_gradient, values_on)


class PositivityError(RuntimeError):
    pass


class StepSizeError(RuntimeError):
    pass


@dataclass(frozen=True)
class FlowControls:
    safety: float = 0.2
    w_floor: float = 1e-10
    record_count: int = 101
    tol: float = 1e-6
    min_dt: float = 1e-14
    max_floored: int = 0  # abort once more nodes than this have been floored

    def __post_init__(self):
        if not 0 < self.safety <= 0.5:
            raise ValueError("safety must lie in (0, 0.5]")
        if self.record_count < 2:
            raise ValueError("record_count must be >= 2")


@dataclass
class FlowTrajectory:
    p: float
    m: float
    beta: float
    times: np.ndarray
    mass: np.ndarray
    entropy: np.ndarray
    fisher: np.ndarray
    deficit: np.ndarray
    q_beta: np.ndarray
    boundary_flux: np.ndarray
    dt_history: np.ndarray
    floored_nodes: int
    final_w: GridFunction = field(repr=False)

    COLUMNS = ("t", "mass", "entropy", "fisher", "deficit", "q_beta")

    @property
    def mass_drift(self) -> float:
        return float(np.max(np.abs(self.mass / self.mass[0] - 1.0)))

    @property
    def max_deficit_increase(self) -> float:
        if self.deficit.size < 2:
            return 0.0
        return float(max(0.0, np.max(np.diff(self.deficit))))

    def monotone(self, slack: float = 1e-8) -> bool:
        """Deficit non-increasing up to ``slack``; unavailable once nodes were floored."""
        return self.floored_nodes == 0 and self.max_deficit_increase <= slack

    def terminal_oscillation(self) -> float:
        w = self.final_w.values
        return float(np.max(w) - np.min(w))

    def rows(self) -> list[tuple[float, ...]]:
        return list(zip(self.times, self.mass, self.entropy, self.fisher,
                        self.deficit, self.q_beta))


def _check_positive(w: np.ndarray) -> None:
    if not np.all(w > 0):
        raise PositivityError(f"w must be positive; min value {np.min(w):.3e}")


def flow_rhs(w: ArrayLike, p: float, beta: float, mu: MeasureSpec) -> GridFunction:
    """``w^{2-2beta} (L w + kappa |w'|^2 / w)`` with nodal finite differences."""
    v = values_on(w, mu.grid)
    _check_positive(v)
    kappa = atlas.kappa_from_beta(p, beta)
    dw = _derivative_values(v, mu.grid.spacing)
    out = v ** (2.0 - 2.0 * beta) * (apply_OU(v, mu) + kappa * dw * dw / v)
    return GridFunction(mu.grid, out)


@dataclass(frozen=True)
class QBeta:
    expanded: float
    sum_of_squares: float | None
    curvature_excess: float
    delta: float

    @property
    def identity_gap(self) -> float:
        """expanded - (sum_of_squares + curvature_excess)."""
        if self.sum_of_squares is None:
            return math.nan
        return self.expanded - self.sum_of_squares - self.curvature_excess


def q_beta(w: ArrayLike, p: float, beta: float, mu: MeasureSpec) -> QBeta:
    """Expanded and sum-of-squares forms of the carre du champ remainder."""
    v = values_on(w, mu.grid)
    _check_positive(v)
    h = mu.grid.spacing
    kappa = atlas.kappa_from_beta(p, beta)
    c = kappa + beta - 1.0
    dw = _derivative_values(v, h)
    d2w = _second_derivative_values(v, h)
    Lw = d2w - mu.dphi() * dw
    g2 = dw * dw
    quart = integrate(g2 * g2 / (v * v), mu)
    expanded = (integrate(Lw * Lw, mu) + c * integrate(Lw * g2 / v, mu)
                + kappa * (beta - 1.0) * quart - mu.lambda_star * integrate(g2, mu))
    dlt = atlas.delta(p, beta)
    curv = integrate((mu.d2phi() - mu.lambda_star) * g2, mu)
    sos = None
    if dlt >= -1e-14:
        sos = integrate((d2w - c * g2 / v) ** 2, mu) + dlt * quart
    return QBeta(float(expanded), sos, float(curv), float(dlt))


def flow_deficit(w: np.ndarray, p: float, beta: float, mu: MeasureSpec) -> tuple[float, float, float]:
    """(entropy, fisher, deficit) evaluated on ``v = w^beta`` with ``lambda = lambda_star``."""
    v = w ** beta
    e = entropy(v, p, mu)
    i = fisher(v, mu)
    return e, i, i - mu.lambda_star * e


class _Integrator:
    """RK4 in the conservative variable rho = w^{beta p}."""

    def __init__(self, mu: MeasureSpec, p: float, m: float, controls: FlowControls):
        self.mu, self.p, self.m, self.controls = mu, p, m, controls
        self.beta = atlas.beta_from_m(p, m)
        self.exponent = self.beta * p
        self.h = mu.grid.spacing
        self.dm = np.ascontiguousarray(mu.density_mid, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            self.inv_dn = np.ascontiguousarray(1.0 / mu.density, dtype=float)
        if not np.all(np.isfinite(self.inv_dn)) or not np.all(mu.density_mid > 0):
            raise FloatingPointError("the density underflows on the grid; "
                                     "use a narrower window for this potential")
        self.cb = np.ascontiguousarray(fd_weights((-0.5, 0.5, 1.5, 2.5), 1), dtype=float)
        self.rho_floor = controls.w_floor ** self.exponent
        self.floored = 0

    def to_rho(self, w: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(w ** self.exponent, dtype=float)

    def to_w(self, rho: np.ndarray) -> np.ndarray:
        return rho ** (1.0 / self.exponent)

    def stable_dt(self, rho: np.ndarray) -> float:
        # diffusion coefficient of rho_t = (1/m) L rho^m is rho^{m-1} = w^{2-2 beta}
        D = float(np.max(rho ** (self.m - 1.0)))
        return self.controls.safety * self.h ** 2 / D

    def advance(self, rho: np.ndarray, duration: float, sign: float = 1.0) -> list[float]:
        """Advance in place by ``duration``; returns the step sizes used."""
        if duration <= 0:
            return []
        dt_max = self.stable_dt(rho)
        if dt_max < self.controls.min_dt:
            raise StepSizeError(f"stable step {dt_max:.3e} below minimum {self.controls.min_dt:.1e}")
        n = max(1, int(math.ceil(duration / dt_max - 1e-9)))
        dt = duration / n
        self.floored += int(rk4_advance(rho, sign * dt, n, self.m, self.dm, self.inv_dn,
                                        self.cb, self.h, self.rho_floor))
        if self.floored > self.controls.max_floored:
            raise PositivityError(
                f"{self.floored} node values floored at w = {self.controls.w_floor:g}")
        return [dt] * n

    def boundary_flux(self, rho: np.ndarray) -> float:
        """Largest weighted flux through the four outermost cells on each side."""
        F = self.dm * staggered_gradient(rho ** self.m, self.h) / self.m
        return float(max(np.max(np.abs(F[:4])), np.max(np.abs(F[-4:]))))


def run_flow(w0: ArrayLike, p: float, m: float, mu: MeasureSpec, T: float,
             controls: FlowControls | None = None) -> FlowTrajectory:
    """Integrate the flow on ``[0, T]`` recording functionals at evenly spaced times."""
    controls = controls or FlowControls()
    if not 1.0 <= p < 2.0:
        raise ValueError(f"p must lie in [1, 2), got {p}")
    if not T > 0:
        raise ValueError("final time must be positive")
    w = np.array(values_on(w0, mu.grid), dtype=float)
    if not np.min(w) >= controls.w_floor:
        raise PositivityError("initial datum must be bounded below by the positivity floor")
    integ = _Integrator(mu, p, m, controls)
    beta = integ.beta
    rho = integ.to_rho(w)
    times = np.linspace(0.0, T, controls.record_count)
    rec = {k: [] for k in ("mass", "entropy", "fisher", "deficit", "q", "flux")}
    dts: list[float] = []

    def record(r):
        wc = integ.to_w(r)
        e, i, dfc = flow_deficit(wc, p, beta, mu)
        rec["mass"].append(integrate(r, mu))
        rec["entropy"].append(e)
        rec["fisher"].append(i)
        rec["deficit"].append(dfc)
        rec["q"].append(q_beta(wc, p, beta, mu).expanded)
        rec["flux"].append(integ.boundary_flux(r))

    record(rho)
    for k in range(1, times.size):
        dts.extend(integ.advance(rho, times[k] - times[k - 1]))
        record(rho)
    return FlowTrajectory(p, m, beta, times, np.array(rec["mass"]), np.array(rec["entropy"]),
                          np.array(rec["fisher"]), np.array(rec["deficit"]), np.array(rec["q"]),
                          np.array(rec["flux"]), np.array(dts), integ.floored,
                          GridFunction(mu.grid, integ.to_w(rho)))


@dataclass(frozen=True)
class RateCheck:
    numeric_rate: float
    predicted_rate: float

    @property
    def relative_error(self) -> float:
        scale = max(abs(self.predicted_rate), abs(self.numeric_rate))
        if scale == 0.0:
            return 0.0
        return abs(self.numeric_rate - self.predicted_rate) / scale

    @property
    def absolute_error(self) -> float:
        return abs(self.numeric_rate - self.predicted_rate)


def deficit_rate_check(w0: ArrayLike, p: float, m: float, mu: MeasureSpec,
                       tau: float = 1e-4, controls: FlowControls | None = None) -> RateCheck:
    """Centered difference of the deficit over ``[-tau, tau]`` against ``-2 beta^2 Q_beta``."""
    controls = controls or FlowControls()
    w = np.array(values_on(w0, mu.grid), dtype=float)
    _check_positive(w)
    integ = _Integrator(mu, p, m, controls)
    beta = integ.beta
    fwd, bwd = integ.to_rho(w), integ.to_rho(w)
    integ.advance(fwd, tau)
    integ.advance(bwd, tau, sign=-1.0)
    d_plus = flow_deficit(integ.to_w(fwd), p, beta, mu)[2]
    d_minus = flow_deficit(integ.to_w(bwd), p, beta, mu)[2]
    numeric = (d_plus - d_minus) / (2.0 * tau)
    predicted = -2.0 * beta ** 2 * q_beta(w, p, beta, mu).expanded
    return RateCheck(float(numeric), float(predicted))


def initial_deficit_rate(w0: ArrayLike, p: float, m: float, mu: MeasureSpec) -> float:
    """Closed-form ``d/dt deficit`` at ``t = 0``."""
    beta = atlas.beta_from_m(p, m)
    return -2.0 * beta ** 2 * q_beta(w0, p, beta, mu).expanded


# ---------------------------------------------------------------- counterexamples

@dataclass(frozen=True)
class SearchResult:
    status: str  # "found", "not-found", "skipped"
    best_rate: float
    params: tuple[float, ...]
    evaluations: int
    message: str = ""
    best_datum: GridFunction | None = field(default=None, repr=False)

    @property
    def found(self) -> bool:
        return self.status == "found"


def hermite_bump_family(mu: MeasureSpec | Grid1D, a: float, b: float, depth: float = 0.0,
                        sigma: float = 1.0) -> np.ndarray:
    """``1 + (a h2 + b h3) e^{-y^2/4} - c e^{-y^2/(2 sigma^2)}`` with ``c = 1 - 10^-depth``.

    ``h2, h3`` are normalized Hermite polynomials.  The optional Gaussian dip
    (``depth = 0`` disables it) lets the datum come close to zero with a
    locally quadratic profile, which is what drives the quartic term of the
    remainder negative outside the admissible range.
    """
    c = 0.0 if depth <= 0 else 1.0 - 10.0 ** (-depth)
    y = mu.nodes
    env = np.exp(-0.25 * y * y)
    h2 = (y * y - 1.0) / math.sqrt(2.0)
    h3 = (y ** 3 - 3.0 * y) / math.sqrt(6.0)
    w = 1.0 + env * (a * h2 + b * h3)
    if c != 0.0:
        w = w - c * np.exp(-0.5 * (y / sigma) ** 2)
    return w


SEARCH_START = (0.0, 0.0, 2.0, 1.0)
SEARCH_STEPS = (0.2, 0.2, 0.5, 0.25)
# deeper dips are no longer resolved by the default grid
MAX_DEPTH = 4.0
MIN_DIP_CELLS = 8


def counterexample_search(p: float, m: float, mu: MeasureSpec, family_size: int = 200,
                          min_value: float = 1e-4, threshold: float = 1e-6,
                          start: tuple[float, ...] = SEARCH_START) -> SearchResult:
    """Coordinate search over ``hermite_bump_family`` maximizing the initial deficit rate.

    The search is compass-style: each axis is tried in both directions, the
    step is halved when no move improves, and at most ``family_size`` data
    are evaluated.
    """
    if family_size > 200:
        raise ValueError("evaluation budget is capped at 200")
    if p == 1.0:
        return SearchResult("skipped", math.nan, (), 0,
                            "p = 1: m_- = m_+ = 1, the admissible interval is degenerate")
    lo, hi = atlas.m_pm_gauss(p)
    inside = lo <= m <= hi
    evals = 0
    # a dip narrower than a few cells is not resolved by the difference stencils
    sigma_min = max(0.05, MIN_DIP_CELLS * mu.grid.spacing)
    fine = Grid1D(mu.grid.half_width, 8 * (mu.grid.point_count - 1) + 1)

    def score(x):
        nonlocal evals
        evals += 1
        if x[3] <= sigma_min or not 0.0 <= x[2] <= MAX_DEPTH:
            return -math.inf
        # positivity is checked on a finer sampling so that the minimum of the
        # analytic datum cannot fall between nodes
        if np.min(hermite_bump_family(fine, *x)) < min_value:
            return -math.inf
        w = hermite_bump_family(mu, *x)
        return initial_deficit_rate(w, p, m, mu)

    x = list(start)
    best = score(x)
    steps = list(SEARCH_STEPS)
    while evals < family_size and max(steps) > 1e-6:
        improved = False
        for axis in range(len(x)):
            for sgn in (1.0, -1.0):
                if evals >= family_size:
                    break
                trial = list(x)
                trial[axis] += sgn * steps[axis]
                val = score(trial)
                if val > best:
                    x, best, improved = trial, val, True
                    break
        if not improved:
            steps = [s * 0.5 for s in steps]
    status = "found" if best > threshold else "not-found"
    msg = "m inside the admissible interval" if inside else "m outside the admissible interval"
    return SearchResult(status, float(best), tuple(x), evals, msg,
                        GridFunction(mu.grid, hermite_bump_family(mu, *x)))
