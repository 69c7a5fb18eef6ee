"""Independent reference solvers.

None of these touch the semigroup, extrapolation or Dyson-Phillips code:
the transport PDE

    u_t = u_x + (int_0^1 u(t, y) dy) h(x),   u(t, 1) = 0,

is reduced to a scalar Volterra equation for the mass m(t) = int_0^1 u(t, y) dy,

    m(t) = a(t) + int_0^t k(t - s) m(s) ds,
    a(t) = int_t^1 u0,   k(r) = int_r^1 h,

and the state is then rebuilt along characteristics.  Resolvents are checked
against a first-order upwind discretization of d/dx.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .lattice import GridFunction, SpaceTag, grid, tail_integral


@dataclass
class VolterraSolution:
    times: np.ndarray
    mass: np.ndarray
    a_values: np.ndarray
    kernel_values: np.ndarray
    h_density: np.ndarray

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def mass_at(self, t):
        return np.interp(t, self.times, self.mass)


def volterra_mass(u0: GridFunction, h_density, T: float, dt: float) -> VolterraSolution:
    """Trapezoid product-integration solution of the mass equation on [0, T].

    ``h_density`` holds nodal samples of h (piecewise-linear between nodes).
    """
    if u0.space_tag is not SpaceTag.SHIFT:
        raise ValueError("the transport oracle lives on the shift space")
    h = np.asarray(h_density, dtype=float)
    if h.shape != u0.values.shape:
        raise ValueError("h_density must be sampled on the grid of u0")
    if dt <= 0 or T <= 0:
        raise ValueError("T and dt must be positive")
    n_t = int(np.ceil(T / dt - 1e-9))
    times = dt * np.arange(n_t + 1)
    a = tail_integral(u0.values, times)
    kern = tail_integral(h, times)
    m = np.empty(n_t + 1)
    m[0] = a[0]
    denom = 1.0 - 0.5 * dt * kern[0]
    for k in range(1, n_t + 1):
        # kern[k - l] for l = 0..k-1
        hist = kern[k:0:-1] @ m[:k] - 0.5 * kern[k] * m[0]
        m[k] = (a[k] + dt * hist) / denom
    return VolterraSolution(times, m, a, kern, h)


def characteristics_solution(u0: GridFunction, h_density, sol: VolterraSolution, t: float,
                             n_cells: int | None = None, chunk: int = 256) -> GridFunction:
    """u(t, x) = u0(x + t) [x + t <= 1] + int_{max(0, x+t-1)}^t m(s) h(x + t - s) ds."""
    if t < 0 or t > sol.times[-1] + 1e-12:
        raise ValueError(f"t={t} outside the Volterra horizon [0, {sol.times[-1]}]")
    h = np.asarray(h_density, dtype=float)
    n = u0.n_cells if n_cells is None else n_cells
    xh = grid(h.size - 1)
    x = grid(n)
    free = np.where(x + t <= 1.0, np.interp(np.minimum(x + t, 1.0), u0.x, u0.values), 0.0)
    dt = sol.dt
    k_end = int(round(t / dt))
    s = sol.times[: k_end + 1]
    if k_end == 0:
        forced = np.zeros_like(x)
    else:
        m = sol.mass[: k_end + 1]
        forced = np.empty_like(x)
        for start in range(0, x.size, chunk):
            xs = x[start: start + chunk, None]
            lo = np.maximum(0.0, xs + t - 1.0)                  # lower limit per row
            z = xs + t - s[None, :]
            vals = m[None, :] * np.interp(np.clip(z, 0.0, 1.0), xh, h)
            inside = s[None, :] >= lo - 1e-12
            vals = np.where(inside, vals, 0.0)
            # trapezoid over the full cells above the cut-off
            j = np.clip(np.ceil(lo[:, 0] / dt - 1e-9).astype(int), 0, k_end)
            full = dt * (vals[:, 1:] + vals[:, :-1]) / 2.0
            cells_inside = np.arange(k_end)[None, :] >= j[:, None]
            total = np.sum(np.where(cells_inside, full, 0.0), axis=1)
            # partial cell [lo, s_j]
            lo1 = lo[:, 0]
            gap = s[j] - lo1
            m_lo = np.interp(lo1, s, m)
            v_lo = m_lo * np.interp(np.clip(xs[:, 0] + t - lo1, 0.0, 1.0), xh, h)
            v_j = vals[np.arange(vals.shape[0]), j]
            total += 0.5 * gap * (v_lo + v_j)
            forced[start: start + chunk] = total
    values = free + forced
    values[-1] = 0.0   # x = 1: both terms vanish (the integration range is empty)
    return GridFunction(SpaceTag.SHIFT, values)


def upwind_matrix(n_cells: int, periodic: bool) -> sp.csr_matrix:
    """Forward difference (u_{i+1} - u_i) / dx on the unknown nodes."""
    dx = 1.0 / n_cells
    if periodic:
        m = n_cells
        D = sp.diags([-np.ones(m), np.ones(m - 1)], [0, 1], shape=(m, m), format="lil")
        D[m - 1, 0] = 1.0
        return (D / dx).tocsr()
    m = n_cells   # unknowns u_0..u_{n-1}; u_n = 0
    D = sp.diags([-np.ones(m), np.ones(m - 1)], [0, 1], shape=(m, m))
    return (D / dx).tocsr()


def discrete_resolvent_oracle(gen, lam: float, f: GridFunction, n_cells: int | None = None) -> GridFunction:
    """Solve (lam I - D) u = f with the upwind matrix D and the boundary condition of the space."""
    gen.check_function(f)
    periodic = f.space_tag is SpaceTag.PERIODIC
    if periodic and lam <= 0:
        raise ValueError("upwind rotation matrix is singular for lambda <= 0")
    n = f.n_cells if n_cells is None else n_cells
    rhs = np.interp(grid(n), f.x, f.values)
    D = upwind_matrix(n, periodic)
    A = (lam * sp.identity(n, format="csr") - D).tocsc()
    if periodic:
        u = spsolve(A, rhs[:n])
        values = np.append(u, u[0])
    else:
        u = sp.linalg.spsolve_triangular(A.tocsr(), rhs[:n], lower=False)
        values = np.append(u, 0.0)
    return GridFunction(f.space_tag, values)
