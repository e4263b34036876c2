"""Periodic grids on the flat torus and real-valued grid functions.

Everything downstream computes on these two objects.  The circumference is
normalized to 1 per axis, node ``i`` sits at ``i / n``, and all indexing
wraps modulo ``n``.  Both classes are immutable after construction and all
operations are pure, so instances can be shared freely across workers.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError

MIN_RESOLUTION = 8


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid on the torus [0,1)^dim with dim in {1, 2}."""

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.n < MIN_RESOLUTION:
            raise ValueError(f"resolution must be >= {MIN_RESOLUTION}, got {self.n}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    @property
    def num_nodes(self) -> int:
        return self.n**self.dim

    def axis_coordinates(self) -> np.ndarray:
        return np.arange(self.n) / self.n

    def coordinates(self) -> np.ndarray:
        """Node coordinates as an (num_nodes, dim) array, row-major in 2D."""
        ax = self.axis_coordinates()
        if self.dim == 1:
            return ax[:, None]
        x1, x2 = np.meshgrid(ax, ax, indexing="ij")
        return np.column_stack([x1.ravel(), x2.ravel()])

    def node_index(self, multi) -> int:
        """Flatten a per-axis index tuple (wrapping modulo n)."""
        if self.dim == 1:
            return int(multi) % self.n
        i, j = multi
        return (int(i) % self.n) * self.n + (int(j) % self.n)

    def nearest_node(self, x) -> int:
        """Flat index of the node closest to coordinate ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.round(x * self.n).astype(int) % self.n
        if self.dim == 1:
            return int(idx[0])
        return int(idx[0]) * self.n + int(idx[1])

    def wrap(self, x):
        """Map coordinates into [0,1) componentwise."""
        return np.mod(x, 1.0)


def periodic_distance(a, b) -> float:
    """Flat-torus distance between coordinates ``a`` and ``b``.

    Componentwise the distance is at most 1/2; in 2D the Euclidean norm of
    the per-axis wrapped differences is returned.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    d = np.abs(a - b) % 1.0
    d = np.minimum(d, 1.0 - d)
    if d.size == 1:
        return float(d[0])
    return float(np.sqrt(np.sum(d * d)))


def signed_periodic_delta(a, b) -> np.ndarray:
    """Shortest signed displacement from ``a`` to ``b``, per axis in [-1/2, 1/2)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return (b - a + 0.5) % 1.0 - 0.5


@dataclass(frozen=True)
class GridFunction:
    """Real values sampled at the nodes of a :class:`TorusGrid`."""

    grid: TorusGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size != self.grid.num_nodes:
            raise ValueError(
                f"expected {self.grid.num_nodes} values, got {v.size}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: TorusGrid, fn) -> GridFunction:
        coords = grid.coordinates()
        if grid.dim == 1:
            vals = np.asarray([fn(float(c[0])) for c in coords], dtype=float)
        else:
            vals = np.asarray([fn(c) for c in coords], dtype=float)
        return cls(grid, vals)

    @classmethod
    def constant(cls, grid: TorusGrid, c: float) -> GridFunction:
        return cls(grid, np.full(grid.num_nodes, float(c)))

    def as_array(self) -> np.ndarray:
        if self.grid.dim == 1:
            return self.values
        return self.values.reshape(self.grid.n, self.grid.n)

    def shifted(self, c: float) -> GridFunction:
        return GridFunction(self.grid, self.values + float(c))

    def lipschitz_estimate(self) -> float:
        """Max one-sided difference quotient over grid edges."""
        dx = self.grid.spacing
        if self.grid.dim == 1:
            jumps = np.abs(np.diff(self.values, append=self.values[0]))
            return float(jumps.max() / dx)
        a = self.as_array()
        j1 = np.abs(np.roll(a, -1, axis=0) - a)
        j2 = np.abs(np.roll(a, -1, axis=1) - a)
        return float(max(j1.max(), j2.max()) / dx)

    # -- serialization ----------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        coords = self.grid.coordinates()
        if self.grid.dim == 1:
            buf.write("index,x,value\n")
            for i, v in enumerate(self.values):
                buf.write(f"{i},{coords[i, 0]:.17g},{v:.17g}\n")
        else:
            buf.write("index,x1,x2,value\n")
            for i, v in enumerate(self.values):
                buf.write(f"{i},{coords[i, 0]:.17g},{coords[i, 1]:.17g},{v:.17g}\n")
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "dim": self.grid.dim,
                "N": self.grid.n,
                "values": [float(v) for v in self.values],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> GridFunction:
        data = json.loads(text)
        grid = TorusGrid(int(data["dim"]), int(data["N"]))
        return cls(grid, np.asarray(data["values"], dtype=float))


def require_same_grid(f: GridFunction, g) -> None:
    other = g.grid if hasattr(g, "grid") else g
    if f.grid != other:
        raise GridMismatchError(f"grids differ: {f.grid} vs {other}")


def interpolate(f: GridFunction, x) -> float:
    """Periodic linear (1D) / bilinear (2D) interpolation of ``f`` at ``x``.

    Exact at nodes; O(dx^2) for C^2 data.  Linear interpolation never
    overshoots the surrounding node values, which keeps interpolated reads
    safe inside min/max reductions.
    """
    n = f.grid.n
    if f.grid.dim == 1:
        t = float(np.asarray(x).reshape(-1)[0]) * n
        i0 = int(np.floor(t))
        w = t - i0
        v = f.values
        return float((1.0 - w) * v[i0 % n] + w * v[(i0 + 1) % n])
    x = np.asarray(x, dtype=float).reshape(2)
    t1, t2 = x[0] * n, x[1] * n
    i0, j0 = int(np.floor(t1)), int(np.floor(t2))
    w1, w2 = t1 - i0, t2 - j0
    a = f.as_array()
    i1, j1 = (i0 + 1) % n, (j0 + 1) % n
    i0, j0 = i0 % n, j0 % n
    return float(
        (1 - w1) * (1 - w2) * a[i0, j0]
        + (1 - w1) * w2 * a[i0, j1]
        + w1 * (1 - w2) * a[i1, j0]
        + w1 * w2 * a[i1, j1]
    )


def sup_diff(f: GridFunction, g: GridFunction) -> float:
    """Sup norm of f - g over nodes; zero iff the values coincide."""
    require_same_grid(f, g)
    return float(np.max(np.abs(f.values - g.values)))
