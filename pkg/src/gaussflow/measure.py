"""One-dimensional grids, log-concave probability measures and the discrete
operators used throughout the package.

All numerics live on a uniform grid of ``[-L, L]``.  Integrals against a
measure ``e^{-phi}/Z dy`` use the trapezoid rule with the density folded into
the weights, so a single node set serves quadrature, differentiation and
time stepping.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Union

import numpy as np

ArrayLike = Union[np.ndarray, "GridFunction", float]

MIN_POINTS = 16
GAUSSIAN_MIN_HALF_WIDTH = 6.0


class GridMismatchError(ValueError):
    pass


class ConvexityError(ValueError):
    pass


@dataclass(frozen=True)
class Grid1D:
    half_width: float
    point_count: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if int(self.point_count) != self.point_count or self.point_count < MIN_POINTS:
            raise ValueError(f"point_count must be an integer >= {MIN_POINTS}, got {self.point_count}")
        object.__setattr__(self, "half_width", float(self.half_width))
        object.__setattr__(self, "point_count", int(self.point_count))

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.point_count - 1)

    @property
    def nodes(self) -> np.ndarray:
        return _nodes(self.half_width, self.point_count)

    @property
    def midpoints(self) -> np.ndarray:
        y = self.nodes
        return 0.5 * (y[1:] + y[:-1])

    def sample(self, func: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        values = np.asarray(func(self.nodes), dtype=float)
        if values.shape == ():
            values = np.full(self.point_count, float(values))
        return GridFunction(self, values)


@lru_cache(maxsize=64)
def _nodes(L: float, N: int) -> np.ndarray:
    y = -L + np.arange(N) * (2.0 * L / (N - 1))
    y[-1] = L
    y.setflags(write=False)
    return y


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real samples on the nodes of a grid."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.point_count,):
            raise GridMismatchError(
                f"expected {self.grid.point_count} values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function has non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return self.grid.point_count

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise GridMismatchError("grid functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / self._other(other))

    def __pow__(self, exponent):
        return GridFunction(self.grid, self.values ** exponent)

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __abs__(self):
        return GridFunction(self.grid, np.abs(self.values))

    def map(self, func: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return GridFunction(self.grid, func(self.values))


def values_on(f: ArrayLike, grid: Grid1D) -> np.ndarray:
    """Raw node values of ``f``, checked against ``grid``."""
    if isinstance(f, GridFunction):
        if f.grid != grid:
            raise GridMismatchError("grid function does not live on the measure's grid")
        return f.values
    v = np.asarray(f, dtype=float)
    if v.shape == ():
        return np.full(grid.point_count, float(v))
    if v.shape != (grid.point_count,):
        raise GridMismatchError(f"expected {grid.point_count} values, got shape {v.shape}")
    return v


@dataclass(frozen=True, eq=False)
class MeasureSpec:
    """Probability measure ``e^{-phi} dy / Z`` restricted to a grid.

    ``weights`` are trapezoid weights times the normalized density; they sum
    to one in floating point so that constants integrate exactly.
    """

    grid: Grid1D
    potential: np.ndarray
    lambda_star: float
    Z: float
    weights: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)
    potential_mid: np.ndarray = field(repr=False)
    density_mid: np.ndarray = field(repr=False)
    name: str = "custom"

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def is_gaussian(self) -> bool:
        return self.name == "gaussian"

    def sample(self, func: Callable[[np.ndarray], np.ndarray]) -> GridFunction:
        return self.grid.sample(func)

    def dphi(self) -> np.ndarray:
        return _derivative_values(self.potential, self.grid.spacing)

    def d2phi(self) -> np.ndarray:
        return _second_derivative_values(self.potential, self.grid.spacing)


def _trapezoid_weights(N: int, h: float) -> np.ndarray:
    w = np.full(N, h)
    w[0] = w[-1] = 0.5 * h
    return w


def _normalized(weights: np.ndarray) -> np.ndarray:
    w = weights / np.sum(weights)
    # push the rounding residue onto the heaviest node until the sum is exactly one
    k = int(np.argmax(w))
    for _ in range(8):
        residue = 1.0 - np.sum(w)
        if residue == 0.0:
            break
        w[k] += residue
    return w


def _midpoint_interpolate(values: np.ndarray) -> np.ndarray:
    """Fourth-order interpolation of node values onto the N-1 cell midpoints."""
    v = values
    mid = np.empty(v.size - 1)
    mid[1:-1] = (-v[:-3] + 9.0 * v[1:-2] + 9.0 * v[2:-1] - v[3:]) / 16.0
    mid[0] = (5.0 * v[0] + 15.0 * v[1] - 5.0 * v[2] + v[3]) / 16.0
    mid[-1] = (5.0 * v[-1] + 15.0 * v[-2] - 5.0 * v[-3] + v[-4]) / 16.0
    return mid


def _assemble(grid: Grid1D, phi: np.ndarray, lambda_star: float, name: str,
              phi_mid: np.ndarray | None = None) -> MeasureSpec:
    h = grid.spacing
    shift = float(np.min(phi))
    raw = np.exp(-(phi - shift))
    Zs = float(np.sum(_trapezoid_weights(grid.point_count, h) * raw))
    if not Zs > 0:
        raise ValueError("normalization constant is not positive")
    Z = Zs * np.exp(-shift)
    density = raw / Zs
    weights = _normalized(_trapezoid_weights(grid.point_count, h) * density)
    if phi_mid is None:
        phi_mid = _midpoint_interpolate(phi)
    density_mid = np.exp(-(phi_mid - shift)) / Zs
    for arr in (phi, weights, density, phi_mid, density_mid):
        arr.setflags(write=False)
    return MeasureSpec(grid, phi, float(lambda_star), Z, weights, density,
                       phi_mid, density_mid, name)


def build_gaussian(L: float = 10.0, N: int = 1024) -> MeasureSpec:
    """Standard Gaussian ``phi = y^2/2`` with ``lambda_star = 1``."""
    if L < GAUSSIAN_MIN_HALF_WIDTH:
        raise ValueError(
            f"half width {L} < {GAUSSIAN_MIN_HALF_WIDTH}: Gaussian tail mass too large"
        )
    grid = Grid1D(L, N)
    y = grid.nodes
    phi = 0.5 * y * y
    return _assemble(grid, phi, 1.0, "gaussian", phi_mid=0.5 * grid.midpoints ** 2)


def build_scaled_gaussian(a: float, L: float = 10.0, N: int = 1024) -> MeasureSpec:
    """Potential ``a y^2 / 2`` (curvature ``a``)."""
    grid = Grid1D(L, N)
    phi = 0.5 * a * grid.nodes ** 2
    return _assemble(grid, phi, a, "custom", phi_mid=0.5 * a * grid.midpoints ** 2)


def build_custom(phi_values: ArrayLike, lambda_star: float, grid: Grid1D,
                 tol: float = 1e-8, name: str = "custom") -> MeasureSpec:
    """Measure with sampled potential; rejects potentials whose discrete
    Hessian drops below ``lambda_star - tol`` at an interior node."""
    phi = np.array(values_on(phi_values, grid), dtype=float)
    if not np.all(np.isfinite(phi)):
        raise ValueError("potential must be finite on the grid")
    if not lambda_star > 0:
        raise ValueError("lambda_star must be positive")
    hess = _second_derivative_values(phi, grid.spacing)[2:-2]
    worst = int(np.argmin(hess))
    if hess[worst] < lambda_star - tol:
        node = worst + 2
        raise ConvexityError(
            f"discrete Hess phi = {hess[worst]:.6g} < lambda_star = {lambda_star} "
            f"at node {node} (y = {grid.nodes[node]:.6g})"
        )
    if np.allclose(phi, 0.5 * grid.nodes ** 2, rtol=0, atol=1e-14) and lambda_star == 1.0:
        return build_gaussian(grid.half_width, grid.point_count)
    return _assemble(grid, phi, lambda_star, name)


def build_perturbed_cosine(L: float = 10.0, N: int = 1024, amplitude: float = 0.1) -> MeasureSpec:
    """``phi = y^2/2 + amplitude cos y`` with ``lambda_star = 1 - amplitude``."""
    grid = Grid1D(L, N)
    phi = 0.5 * grid.nodes ** 2 + amplitude * np.cos(grid.nodes)
    m = grid.midpoints
    return _assemble(grid, phi, 1.0 - amplitude, "perturbed-cosine",
                     phi_mid=0.5 * m ** 2 + amplitude * np.cos(m))


def integrate(f: ArrayLike, mu: MeasureSpec) -> float:
    return float(np.sum(mu.weights * values_on(f, mu.grid)))


# -- finite differences -------------------------------------------------------

@lru_cache(maxsize=None)
def fd_weights(offsets: tuple[float, ...], order: int) -> np.ndarray:
    """Weights ``c`` with ``sum c_k f(x + s_k h) ~ h^order f^(order)(x)``."""
    s = np.asarray(offsets, dtype=float)
    n = s.size
    V = np.vander(s, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    c = np.linalg.solve(V, rhs)
    c.setflags(write=False)
    return c


def _apply_stencil(v: np.ndarray, h: float, order: int) -> np.ndarray:
    N = v.size
    if N < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} points")
    out = np.empty(N)
    if order == 1:
        out[2:-2] = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * h)
        width = 5
    else:
        out[2:-2] = (-v[:-4] + 16.0 * v[1:-3] - 30.0 * v[2:-2] + 16.0 * v[3:-1] - v[4:]) / (12.0 * h * h)
        width = 6
    for i in (0, 1):
        off = tuple(float(k - i) for k in range(width))
        c = fd_weights(off, order)
        out[i] = c @ v[:width] / h ** order
        # mirrored stencil; odd derivatives flip sign
        out[N - 1 - i] = (-1) ** order * (c @ v[::-1][:width]) / h ** order
    return out


def _derivative_values(v: np.ndarray, h: float) -> np.ndarray:
    return _apply_stencil(np.asarray(v, dtype=float), h, 1)


def _second_derivative_values(v: np.ndarray, h: float) -> np.ndarray:
    return _apply_stencil(np.asarray(v, dtype=float), h, 2)


def derivative(f: GridFunction) -> GridFunction:
    """Fourth-order first derivative (central inside, one-sided at the two
    outer layers on each side)."""
    return GridFunction(f.grid, _derivative_values(f.values, f.grid.spacing))


def second_derivative(f: GridFunction) -> GridFunction:
    return GridFunction(f.grid, _second_derivative_values(f.values, f.grid.spacing))


def apply_OU(f: ArrayLike, mu: MeasureSpec) -> np.ndarray:
    """Generalized Ornstein-Uhlenbeck operator ``f'' - phi' f'``."""
    v = values_on(f, mu.grid)
    h = mu.grid.spacing
    return _second_derivative_values(v, h) - mu.dphi() * _derivative_values(v, h)


# -- staggered (midpoint) operators -------------------------------------------

def staggered_gradient(v: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order derivative at the N-1 midpoints from node values."""
    N = v.size
    g = np.empty(N - 1)
    g[1:-1] = (v[:-3] - 27.0 * v[1:-2] + 27.0 * v[2:-1] - v[3:]) / (24.0 * h)
    c = fd_weights((-0.5, 0.5, 1.5, 2.5), 1)
    g[0] = c @ v[:4] / h
    g[-1] = -(c @ v[::-1][:4]) / h
    return g


def flux_divergence(F: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order node divergence of midpoint fluxes in telescoping form.

    Fluxes beyond the grid are zero, so ``sum(flux_divergence(F)) == 0`` up to
    rounding: the discrete operator is conservative for uniform weights.
    """
    M = F.size
    H = np.empty(M + 2)
    H[0] = H[-1] = 0.0
    Fp = np.concatenate(([0.0], F, [0.0]))
    H[1:-1] = (-Fp[:-2] + 26.0 * Fp[1:-1] - Fp[2:]) / 24.0
    return (H[1:] - H[:-1]) / h


def conservative_OU(g: np.ndarray, mu: MeasureSpec) -> np.ndarray:
    """``L g = e^{phi} (e^{-phi} g')'`` in flux form."""
    h = mu.grid.spacing
    F = mu.density_mid * staggered_gradient(g, h)
    return flux_divergence(F, h) / mu.density
