"""Closed-form reference quantities for the cosine-potential (pendulum) system.

For H(x,p) = p^2/2 + cos(2 pi x) - 1 on the unit circle the critical level
is 0 and everything of interest has a closed form obtained by elementary
quadrature of the stationary equation p = +/- 2 |sin(pi x)|:

* backward weak KAM solution  u(x) = (2/pi) (1 - cos(pi min(x, 1-x))),
* Peierls barrier             h(x, y) = u(x) + u(y)  (single Aubry point at 0),
* cut time                    tau(x) = -(1/(2 pi)) log tan(pi d(x, 0) / 2),

with the cut locus at x = 1/2 and the Aubry set at x = 0.  These functions
are the fixed, hand-checkable targets used by the verification suites.
"""

from __future__ import annotations

import numpy as np

from .grid import GridFunction, TorusGrid


def folded_distance(x):
    """Distance to the Aubry point 0 on the circle, min(x mod 1, 1 - x mod 1)."""
    x = np.mod(np.asarray(x, dtype=float), 1.0)
    return np.minimum(x, 1.0 - x)


def u_minus(x):
    """Backward weak KAM solution, normalized to 0 at the Aubry point."""
    return (2.0 / np.pi) * (1.0 - np.cos(np.pi * folded_distance(x)))


def u_plus(x):
    """Forward weak KAM solution of the pair, equal to -u_minus here."""
    return -u_minus(x)


def u_minus_slope(x):
    """Derivative of u_minus where it exists (x not at 0 or 1/2)."""
    x = np.mod(np.asarray(x, dtype=float), 1.0)
    s = 2.0 * np.sin(np.pi * np.minimum(x, 1.0 - x))
    return np.where(x <= 0.5, s, -s)


def peierls(x, y):
    """Peierls barrier h(x, y); routes through the single Aubry point."""
    return u_minus(x) + u_minus(y)


def cut_time(x):
    """Time for the calibrated curve from x to reach the cut point 1/2.

    Equals the quadrature of dx / (2 sin(pi x)) from x to 1/2; infinite at
    the Aubry point, zero at the cut point.
    """
    d = folded_distance(x)
    with np.errstate(divide="ignore"):
        out = -np.log(np.tan(0.5 * np.pi * d)) / (2.0 * np.pi)
    return np.where(d == 0.0, np.inf, np.maximum(out, 0.0))


def calibrated_velocity(x):
    """Forward calibrated velocity field dx/ds = Du(x) (runs into the cut)."""
    return u_minus_slope(x)


def u_minus_grid(grid: TorusGrid) -> GridFunction:
    coords = grid.coordinates()
    if grid.dim != 1:
        raise ValueError("pendulum reference solution is one-dimensional")
    return GridFunction(grid, u_minus(coords[:, 0]))


def u_plus_grid(grid: TorusGrid) -> GridFunction:
    coords = grid.coordinates()
    if grid.dim != 1:
        raise ValueError("pendulum reference solution is one-dimensional")
    return GridFunction(grid, u_plus(coords[:, 0]))


def peierls_matrix(grid: TorusGrid) -> np.ndarray:
    """h sampled on all node pairs, K[i][j] = h(x_i, x_j)."""
    if grid.dim != 1:
        raise ValueError("pendulum reference barrier is one-dimensional")
    u = u_minus(grid.axis_coordinates())
    return u[:, None] + u[None, :]
