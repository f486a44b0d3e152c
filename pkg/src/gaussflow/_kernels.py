"""Compiled inner loops for the explicit flow integrator."""
from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True, fastmath=True)
def _conservative_rhs(rho, m, dm, inv_dn, cb, h, F, H, out):
    """out = (1/m) e^{phi} (e^{-phi} (rho^m)')' in telescoping flux form."""
    N = rho.size
    g = out  # reuse as scratch for rho^m
    if m == 1.0:
        for i in range(N):
            g[i] = rho[i]
    else:
        for i in range(N):
            g[i] = math.exp(m * math.log(rho[i]))
    inv24h = 1.0 / (24.0 * h)
    F[0] = dm[0] * (cb[0] * g[0] + cb[1] * g[1] + cb[2] * g[2] + cb[3] * g[3]) / h
    for j in range(1, N - 2):
        F[j] = dm[j] * (g[j - 1] - 27.0 * g[j] + 27.0 * g[j + 1] - g[j + 2]) * inv24h
    F[N - 2] = -dm[N - 2] * (cb[0] * g[N - 1] + cb[1] * g[N - 2] + cb[2] * g[N - 3]
                             + cb[3] * g[N - 4]) / h
    H[0] = 0.0
    H[N] = 0.0
    H[1] = (26.0 * F[0] - F[1]) / 24.0
    for k in range(2, N - 1):
        H[k] = (-F[k - 2] + 26.0 * F[k - 1] - F[k]) / 24.0
    H[N - 1] = (-F[N - 3] + 26.0 * F[N - 2]) / 24.0
    scale = 1.0 / (m * h)
    for i in range(N):
        out[i] = (H[i + 1] - H[i]) * inv_dn[i] * scale


@njit(cache=True, fastmath=True)
def rk4_advance(rho, dt, n_steps, m, dm, inv_dn, cb, h, rho_floor):
    """Advance ``rho`` in place by ``n_steps`` classical RK4 steps.

    Returns the number of node values raised to ``rho_floor``.
    """
    N = rho.size
    F = np.empty(N - 1)
    H = np.empty(N + 1)
    k1 = np.empty(N)
    k2 = np.empty(N)
    k3 = np.empty(N)
    k4 = np.empty(N)
    tmp = np.empty(N)
    floored = 0
    for _ in range(n_steps):
        _conservative_rhs(rho, m, dm, inv_dn, cb, h, F, H, k1)
        for i in range(N):
            tmp[i] = rho[i] + 0.5 * dt * k1[i]
        _conservative_rhs(tmp, m, dm, inv_dn, cb, h, F, H, k2)
        for i in range(N):
            tmp[i] = rho[i] + 0.5 * dt * k2[i]
        _conservative_rhs(tmp, m, dm, inv_dn, cb, h, F, H, k3)
        for i in range(N):
            tmp[i] = rho[i] + dt * k3[i]
        _conservative_rhs(tmp, m, dm, inv_dn, cb, h, F, H, k4)
        for i in range(N):
            rho[i] += dt * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0
            if not rho[i] > rho_floor:
                rho[i] = rho_floor
                floored += 1
    return floored
