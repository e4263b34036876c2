"""Discrete action kernels and their min-plus (tropical) algebra.

A kernel K_t approximates the fundamental solution A_t(x_i, x_j), the
minimal Lagrangian action (plus critical constant) over curves joining grid
nodes in time t.  Kernels form a semigroup under the min-plus matrix
product, and long times are reached by repeated squaring of a small-time
kernel.

Construction notes
------------------
Every kernel entry is the cost of an explicit piecewise-straight competitor
path, so composed kernels always sit above the true action up to segment
quadrature error.  Two segment cost rules are used:

* ``small_time_kernel``: one-point midpoint rule,
  delta * L(midpoint, displacement/delta); adequate at the base step.
* ``direct_kernel``: a single straight segment over the full duration with
  the potential averaged exactly (or by composite quadrature) along it.

Plain repeated squaring of a base kernel with step delta quantizes segment
velocities to multiples of spacing/delta, which stalls convergence once
delta falls below the grid spacing.  ``kernel_power`` therefore refreshes
each doubling level with the direct-segment competitor (elementwise min),
which removes the quantization floor while preserving the upper-bound
property; pass ``refresh_direct=False`` for the literal 2^m-th power.

Provenance of every entry (one-step wrap, direct segment, or relay node)
is recorded so discrete minimizers can be reconstructed by backtracking.
Ties in min-reductions resolve to the smallest index, deterministically.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError, PreconditionError, WeakKamError
from .grid import GridFunction, TorusGrid
from .hamiltonian import HamiltonianSpec, LagrangianView

DEFAULT_V_MAX = 8.0
DEFAULT_COST_CEILING = 1e6
DEFAULT_WINDING = 1
_COMPOSE_CHUNK_BYTES = 64 * 2**20

try:  # numba accelerates the O(N^3) min-plus product; numpy fallback below
    from numba import njit, prange

    @njit(parallel=True, cache=True)
    def _minplus_nb(a, bt):
        m = a.shape[0]
        out = np.empty((m, m))
        for i in prange(m):
            arow = a[i]
            for j in range(m):
                brow = bt[j]
                best = np.inf
                for k in range(m):
                    v = arow[k] + brow[k]
                    if v < best:
                        best = v
                out[i, j] = best
        return out

    _HAVE_NUMBA = True
except Exception:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False


# ---------------------------------------------------------------------------
# Provenance records for minimizer backtracking
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SegmentProvenance:
    """Every finite entry is one straight segment; cells[i,j] holds the signed
    node-cell displacement (per axis in 2D), rule is the cost quadrature used."""

    cells: np.ndarray = field(repr=False)
    rule: str = "midpoint"  # "midpoint" | "average"


@dataclass(frozen=True)
class RelayProvenance:
    """Parents of a composed kernel; relay nodes are recomputed on demand."""

    left: "ActionKernel"
    right: "ActionKernel"

    def relay_node(self, i: int, j: int) -> int:
        vals = self.left.matrix[i, :] + self.right.matrix[:, j]
        return int(np.argmin(vals))


@dataclass(frozen=True)
class HybridProvenance:
    """Relay composition overlaid with direct segments where those were cheaper."""

    relay: RelayProvenance
    direct: SegmentProvenance
    direct_mask: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class PathSegment:
    """One straight piece of a discrete minimizer, in lifted coordinates."""

    duration: float
    start: np.ndarray
    end: np.ndarray
    rule: str


# ---------------------------------------------------------------------------
# ActionKernel
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ActionKernel:
    """Dense matrix K[i][j] ~ A_t(x_i, x_j), tagged with its time."""

    grid: TorusGrid
    spec: HamiltonianSpec
    t: float
    matrix: np.ndarray = field(repr=False)
    base_step: float = 0.0
    winding: int = DEFAULT_WINDING
    provenance: object = None

    def __post_init__(self):
        m = self.matrix
        if m.shape != (self.grid.num_nodes, self.grid.num_nodes):
            raise ValueError("kernel matrix shape does not match the grid")

    def entry(self, i: int, j: int) -> float:
        return float(self.matrix[i, j])

    def to_csv(self) -> str:
        if self.grid.n > 64:
            raise WeakKamError("CSV kernel export is limited to N <= 64")
        buf = io.StringIO()
        buf.write(",".join(str(j) for j in range(self.grid.num_nodes)) + "\n")
        for row in self.matrix:
            buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
        return buf.getvalue()

    def sidecar_json(self) -> str:
        return json.dumps(
            {
                "N": self.grid.n,
                "dim": self.grid.dim,
                "t": self.t,
                "delta": self.base_step,
                "W": self.winding,
            }
        )


def identity_kernel(grid: TorusGrid, spec: HamiltonianSpec) -> ActionKernel:
    """Tropical identity: 0 on the diagonal, +inf elsewhere; time 0."""
    m = grid.num_nodes
    mat = np.full((m, m), np.inf)
    np.fill_diagonal(mat, 0.0)
    return ActionKernel(grid, spec, 0.0, mat, base_step=0.0)


# ---------------------------------------------------------------------------
# Straight-segment cost tables
# ---------------------------------------------------------------------------


def _axis_displacements(n: int, winding: int):
    """Candidate signed cell displacements per axis offset o in [0, n).

    For offset o the real displacements x_j - x_i + k with k in [-W, W]
    form exactly {o/n + k' : k' in [-(W+1), W]}; we enumerate the integer
    cell counts o + k' n.
    """
    wraps = range(-(winding + 1), winding + 1)
    return [[o + k * n for k in wraps] for o in range(n)]


def _segment_cost_1d(spec, x0, disp, duration, rule):
    """Cost of straight segments from x0 (array) over displacement disp."""
    v = disp / duration
    kinetic = 0.5 * v * v
    if rule == "midpoint":
        pot = spec.potential.value(np.mod(x0 + 0.5 * disp, 1.0))
    else:
        pot = spec.potential.segment_average(x0, disp)
    return duration * (kinetic - pot) + duration * spec.critical_value


def _build_segment_kernel_1d(spec, grid, duration, winding, v_max, ceiling, rule):
    n = grid.n
    xs = grid.axis_coordinates()
    rows = np.arange(n)
    mat = np.full((n, n), np.inf)
    cells = np.zeros((n, n), dtype=np.int32)
    for o in range(n):
        cols = (rows + o) % n
        best = np.full(n, np.inf)
        best_cells = np.zeros(n, dtype=np.int32)
        for c in _axis_displacements(n, winding)[o]:
            disp = c / n
            if abs(disp / duration) > v_max:
                continue
            cost = _segment_cost_1d(spec, xs, disp, duration, rule)
            cost = np.where(cost > ceiling, np.inf, cost)
            take = cost < best
            best = np.where(take, cost, best)
            best_cells = np.where(take, c, best_cells)
        mat[rows, cols] = best
        cells[rows, cols] = best_cells
    return mat, cells


def _build_segment_kernel_2d(spec, grid, duration, winding, v_max, ceiling, rule):
    n = grid.n
    ax = grid.axis_coordinates()
    i1, i2 = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    i1, i2 = i1.ravel(), i2.ravel()
    x0 = np.column_stack([ax[i1], ax[i2]])
    m = n * n
    mat = np.full((m, m), np.inf)
    cells = np.zeros((m, m, 2), dtype=np.int32)
    rows = np.arange(m)
    axis_cand = _axis_displacements(n, winding)
    for o1 in range(n):
        for o2 in range(n):
            cols = ((i1 + o1) % n) * n + (i2 + o2) % n
            best = np.full(m, np.inf)
            bc1 = np.zeros(m, dtype=np.int32)
            bc2 = np.zeros(m, dtype=np.int32)
            for c1 in axis_cand[o1]:
                for c2 in axis_cand[o2]:
                    d1, d2 = c1 / n, c2 / n
                    speed = math.hypot(d1, d2) / duration
                    if speed > v_max:
                        continue
                    disp = np.array([d1, d2])
                    kinetic = 0.5 * speed * speed
                    if rule == "midpoint":
                        mid = np.mod(x0 + 0.5 * disp, 1.0)
                        pot = spec.potential.value(mid)
                    else:
                        pot = spec.potential.segment_average(x0, np.broadcast_to(disp, x0.shape))
                    cost = duration * (kinetic - pot) + duration * spec.critical_value
                    cost = np.where(cost > ceiling, np.inf, cost)
                    take = cost < best
                    best = np.where(take, cost, best)
                    bc1 = np.where(take, c1, bc1)
                    bc2 = np.where(take, c2, bc2)
            mat[rows, cols] = best
            cells[rows, cols, 0] = bc1
            cells[rows, cols, 1] = bc2
    return mat, cells


def _segment_kernel(spec, grid, duration, winding, v_max, ceiling, rule):
    if not spec.normalized:
        raise PreconditionError(
            "kernel construction requires a normalized Hamiltonian (critical value 0)"
        )
    if duration <= 0:
        raise ValueError("segment duration must be positive")
    if v_max * duration < grid.spacing:
        raise WeakKamError(
            "no admissible one-step transition: v_max * step < grid spacing; "
            "increase the step, v_max, or coarsen the grid"
        )
    if grid.dim == 1:
        mat, cells = _build_segment_kernel_1d(spec, grid, duration, winding, v_max, ceiling, rule)
    else:
        mat, cells = _build_segment_kernel_2d(spec, grid, duration, winding, v_max, ceiling, rule)
    return mat, SegmentProvenance(cells=cells, rule=rule)


def small_time_kernel(
    spec: HamiltonianSpec,
    grid: TorusGrid,
    delta: float,
    winding: int = DEFAULT_WINDING,
    v_max: float = DEFAULT_V_MAX,
    cost_ceiling: float = DEFAULT_COST_CEILING,
) -> ActionKernel:
    """One-step kernel: K[i][j] = min over wraps of delta * L(midpoint, v).

    The midpoint rule is O(delta^2)-consistent without solving the
    Euler-Lagrange equation; wraps outside the velocity cap are excluded.
    """
    if not (0 < delta <= 0.1):
        raise ValueError(f"base step must lie in (0, 0.1], got {delta}")
    if winding < 1:
        raise ValueError("winding range must be >= 1")
    mat, prov = _segment_kernel(spec, grid, delta, winding, v_max, cost_ceiling, "midpoint")
    return ActionKernel(grid, spec, delta, mat, base_step=delta, winding=winding, provenance=prov)


def direct_kernel(
    spec: HamiltonianSpec,
    grid: TorusGrid,
    t: float,
    winding: int = DEFAULT_WINDING,
    v_max: float = DEFAULT_V_MAX,
    cost_ceiling: float = DEFAULT_COST_CEILING,
) -> ActionKernel:
    """Single straight segments over duration t with line-averaged potential.

    Upper-bounds the action of the straight competitor up to quadrature
    error that is exact for the closed-form potentials.
    """
    mat, prov = _segment_kernel(spec, grid, t, winding, v_max, cost_ceiling, "average")
    return ActionKernel(grid, spec, t, mat, base_step=t, winding=winding, provenance=prov)


# ---------------------------------------------------------------------------
# Min-plus product and powers
# ---------------------------------------------------------------------------


def _minplus_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if _HAVE_NUMBA:
        return _minplus_nb(np.ascontiguousarray(a), np.ascontiguousarray(b.T))
    m = a.shape[0]
    out = np.empty((m, m))
    block = max(1, _COMPOSE_CHUNK_BYTES // (m * m * 8))
    for r0 in range(0, m, block):
        r1 = min(m, r0 + block)
        out[r0:r1] = (a[r0:r1, :, None] + b[None, :, :]).min(axis=1)
    return out


def compose(k1: ActionKernel, k2: ActionKernel) -> ActionKernel:
    """Min-plus matrix product; the composed time is k1.t + k2.t.

    Entry [i][j] relays through the cheapest intermediate node reached at
    time k1.t from i (smallest node index on ties).
    """
    if k1.grid != k2.grid:
        raise GridMismatchError("cannot compose kernels on different grids")
    mat = _minplus_product(k1.matrix, k2.matrix)
    return ActionKernel(
        k1.grid,
        k1.spec,
        k1.t + k2.t,
        mat,
        base_step=min(k1.base_step, k2.base_step) or k1.base_step,
        winding=max(k1.winding, k2.winding),
        provenance=RelayProvenance(k1, k2),
    )


def _overlay_direct(kern: ActionKernel, v_max, ceiling) -> ActionKernel:
    direct = direct_kernel(kern.spec, kern.grid, kern.t, kern.winding, v_max, ceiling)
    mask = direct.matrix < kern.matrix
    if not mask.any():
        return kern
    mat = np.where(mask, direct.matrix, kern.matrix)
    prov = kern.provenance
    if isinstance(prov, RelayProvenance):
        prov = HybridProvenance(prov, direct.provenance, mask)
    else:
        prov = direct.provenance if prov is None else prov
    return ActionKernel(
        kern.grid, kern.spec, kern.t, mat, kern.base_step, kern.winding, prov
    )


def kernel_power(
    kern: ActionKernel,
    m: int,
    t_max: float = math.inf,
    refresh_direct: bool = True,
    v_max: float = DEFAULT_V_MAX,
    cost_ceiling: float = DEFAULT_COST_CEILING,
) -> ActionKernel:
    """2^m-th min-plus power by repeated squaring, reaching time 2^m * t.

    With ``refresh_direct`` each squaring is refreshed by the elementwise
    min with the straight-segment kernel of the doubled duration (see
    module notes); errors accumulate logarithmically either way.
    """
    if m < 0:
        raise ValueError("power exponent must be >= 0")
    if kern.t * 2**m > t_max:
        raise WeakKamError(
            f"kernel time {kern.t * 2 ** m} would exceed the configured horizon {t_max}"
        )
    out = kern
    for _ in range(m):
        out = compose(out, out)
        if refresh_direct:
            out = _overlay_direct(out, v_max, cost_ceiling)
    return out


# ---------------------------------------------------------------------------
# Doubling ladder
# ---------------------------------------------------------------------------


class KernelLadder:
    """Shared family K_{delta * 2^l} plus composition to any multiple of delta.

    All operator evaluations at time t reuse one ladder so that the exact
    tropical identities hold across a whole experiment.
    """

    def __init__(
        self,
        spec: HamiltonianSpec,
        grid: TorusGrid,
        delta: float,
        t_max: float = 64.0,
        winding: int = DEFAULT_WINDING,
        v_max: float = DEFAULT_V_MAX,
        cost_ceiling: float = DEFAULT_COST_CEILING,
        refresh_direct: bool = True,
    ):
        self.spec = spec
        self.grid = grid
        self.delta = float(delta)
        self.t_max = float(t_max)
        self.winding = winding
        self.v_max = v_max
        self.cost_ceiling = cost_ceiling
        self.refresh_direct = refresh_direct
        self._levels = [
            small_time_kernel(spec, grid, delta, winding, v_max, cost_ceiling)
        ]
        self._cache: dict[int, ActionKernel] = {1: self._levels[0]}

    def level(self, ell: int) -> ActionKernel:
        """Kernel at time delta * 2^ell."""
        while len(self._levels) <= ell:
            nxt = compose(self._levels[-1], self._levels[-1])
            if self.refresh_direct:
                nxt = _overlay_direct(nxt, self.v_max, self.cost_ceiling)
            self._levels.append(nxt)
            self._cache[2 ** (len(self._levels) - 1)] = nxt
        return self._levels[ell]

    def level_times(self, t_max: float | None = None):
        """Dyadic ladder times delta * 2^l up to t_max (default configured)."""
        horizon = self.t_max if t_max is None else t_max
        times = []
        ell = 0
        while self.delta * 2**ell <= horizon * (1 + 1e-12):
            times.append(self.delta * 2**ell)
            ell += 1
        return times

    def steps_of(self, t: float) -> int:
        steps = round(t / self.delta)
        if steps < 1 or abs(steps * self.delta - t) > 1e-9 * max(1.0, t):
            raise ValueError(
                f"time {t} is not a positive multiple of the base step {self.delta}"
            )
        return steps

    def kernel_at(self, t: float) -> ActionKernel:
        """Kernel at any positive multiple of the base step (binary compose)."""
        steps = self.steps_of(t)
        if steps in self._cache:
            return self._cache[steps]
        out = None
        bit = 0
        rem = steps
        while rem:
            if rem & 1:
                piece = self.level(bit)
                out = piece if out is None else compose(piece, out)
            rem >>= 1
            bit += 1
        self._cache[steps] = out
        return out

    def extend(self, base: ActionKernel, dt: float) -> ActionKernel:
        """Left-compose a short kernel onto ``base``: K_{dt+T} = K_dt . K_T.

        Growing a scan chain this way makes the commutator monotonicity
        in t hold exactly in the discrete algebra.
        """
        return compose(self.kernel_at(dt), base)


# ---------------------------------------------------------------------------
# Interpolated access and backtracking
# ---------------------------------------------------------------------------


def action_value(kern: ActionKernel, x, y) -> float:
    """A_t(x, y) by multilinear interpolation of the kernel in both slots."""
    grid = kern.grid
    n = grid.n

    def axis_weights(coord):
        tt = float(coord) * n
        i0 = int(np.floor(tt))
        w = tt - i0
        return [(i0 % n, 1.0 - w), ((i0 + 1) % n, w)]

    if grid.dim == 1:
        xw = axis_weights(np.asarray(x).reshape(-1)[0])
        yw = axis_weights(np.asarray(y).reshape(-1)[0])
        total = 0.0
        for i, wi in xw:
            for j, wj in yw:
                w = wi * wj
                if w == 0.0:
                    continue
                v = kern.matrix[i, j]
                if not np.isfinite(v):
                    return math.inf
                total += w * v
        return total

    x = np.asarray(x, dtype=float).reshape(2)
    y = np.asarray(y, dtype=float).reshape(2)
    corners_x = [
        (a[0] * n + b[0], a[1] * b[1])
        for a in axis_weights(x[0])
        for b in axis_weights(x[1])
    ]
    corners_y = [
        (a[0] * n + b[0], a[1] * b[1])
        for a in axis_weights(y[0])
        for b in axis_weights(y[1])
    ]
    total = 0.0
    for i, wi in corners_x:
        for j, wj in corners_y:
            w = wi * wj
            if w == 0.0:
                continue
            v = kern.matrix[i, j]
            if not np.isfinite(v):
                return math.inf
            total += w * v
    return total


def _node_coord(grid: TorusGrid, idx: int) -> np.ndarray:
    if grid.dim == 1:
        return np.array([idx / grid.n])
    return np.array([(idx // grid.n) / grid.n, (idx % grid.n) / grid.n])


def backtrack_segments(kern: ActionKernel, i: int, j: int, lift=None):
    """Reconstruct the discrete minimizer from node i to node j.

    Returns a list of :class:`PathSegment` in time order with endpoints in
    the universal cover (the lift accumulates wrap displacements).
    """
    if not np.isfinite(kern.matrix[i, j]):
        raise WeakKamError("no admissible discrete path between the requested nodes")
    if lift is None:
        lift = _node_coord(kern.grid, i)
    prov = kern.provenance
    if prov is None:
        raise WeakKamError("kernel carries no provenance; rebuild with argmin recording")
    if isinstance(prov, HybridProvenance):
        if prov.direct_mask[i, j]:
            prov = prov.direct
        else:
            prov = prov.relay
    if isinstance(prov, SegmentProvenance):
        cells = prov.cells[i, j]
        disp = np.atleast_1d(cells).astype(float) / kern.grid.n
        return [PathSegment(kern.t, lift, lift + disp, prov.rule)]
    mid = prov.relay_node(i, j)
    left = backtrack_segments(prov.left, i, mid, lift)
    right = backtrack_segments(prov.right, mid, j, left[-1].end)
    return left + right


def path_cost(segments, spec: HamiltonianSpec) -> float:
    """Re-evaluate the cost of a segment path with each segment's own rule."""
    lag = LagrangianView(spec)
    total = 0.0
    for seg in segments:
        disp = seg.end - seg.start
        v = disp / seg.duration
        if spec.kind == "mechanical":
            kin = 0.5 * float(np.dot(v, v))
            if seg.rule == "midpoint":
                mid = np.mod(seg.start + 0.5 * disp, 1.0)
                pot = float(np.sum(np.atleast_1d(spec.potential.value(mid if mid.size > 1 else mid[0]))))
            else:
                pot = float(np.sum(np.atleast_1d(spec.potential.segment_average(np.mod(seg.start, 1.0), disp))))
            total += seg.duration * (kin - pot)
        else:
            mid = np.mod(seg.start + 0.5 * disp, 1.0)
            total += seg.duration * float(lag.value(mid[0], float(v[0])))
        total += seg.duration * spec.critical_value
    return total


# ---------------------------------------------------------------------------
# Derivative cross-checks
# ---------------------------------------------------------------------------


@dataclass
class DerivativeReport:
    dy_error: float
    dx_error: float
    dt_error: float | None
    margin: float
    ambiguous: bool
    details: dict


def relay_margin(kern: ActionKernel, i: int, j: int) -> float:
    """Gap between the best and second-best relay for entry (i, j).

    Small margins signal a conjugate/cut configuration where the discrete
    minimizer is not unique.
    """
    prov = kern.provenance
    if isinstance(prov, HybridProvenance):
        prov = prov.relay
    if not isinstance(prov, RelayProvenance):
        return math.inf
    vals = prov.left.matrix[i, :] + prov.right.matrix[:, j]
    finite = np.sort(vals[np.isfinite(vals)])
    if finite.size < 2:
        return math.inf
    return float(finite[1] - finite[0])


def kernel_derivative_check(
    kern: ActionKernel,
    spec: HamiltonianSpec,
    x,
    y,
    k_before: ActionKernel | None = None,
    k_after: ActionKernel | None = None,
    fd_step: float | None = None,
    margin_tol: float = 1e-6,
) -> DerivativeReport:
    """Compare finite differences of interpolated A_t with the minimizer data.

    D_y A_t should match L_v at the arrival chord, D_x A_t should match
    -L_v at the departure chord, and (when neighbouring-time kernels are
    supplied) D_t A_t should match minus the energy along the minimizer.
    """
    grid = kern.grid
    if grid.dim != 1:
        raise PreconditionError("derivative check is implemented for dim = 1")
    h = fd_step if fd_step is not None else 2.0 * grid.spacing
    xf = float(np.asarray(x).reshape(-1)[0])
    yf = float(np.asarray(y).reshape(-1)[0])

    i = grid.nearest_node(xf)
    j = grid.nearest_node(yf)
    margin = relay_margin(kern, i, j)
    ambiguous = margin < margin_tol
    segments = backtrack_segments(kern, i, j)
    lag = LagrangianView(spec)

    v_end = float((segments[-1].end - segments[-1].start)[0] / segments[-1].duration)
    v_start = float((segments[0].end - segments[0].start)[0] / segments[0].duration)
    x_end = float(np.mod(segments[-1].end[0], 1.0))
    x_start = float(np.mod(segments[0].start[0], 1.0))

    dy_fd = (action_value(kern, xf, yf + h) - action_value(kern, xf, yf - h)) / (2 * h)
    dx_fd = (action_value(kern, xf + h, yf) - action_value(kern, xf - h, yf)) / (2 * h)
    dy_expect = float(lag.velocity_gradient(x_end, v_end))
    dx_expect = -float(lag.velocity_gradient(x_start, v_start))

    dt_error = None
    dt_fd = None
    energy_mid = None
    if k_before is not None and k_after is not None:
        dt = 0.5 * (k_after.t - k_before.t)
        dt_fd = (action_value(k_after, xf, yf) - action_value(k_before, xf, yf)) / (2 * dt)
        mid_seg = segments[len(segments) // 2]
        v_mid = float((mid_seg.end - mid_seg.start)[0] / mid_seg.duration)
        x_mid = float(np.mod(0.5 * (mid_seg.start + mid_seg.end)[0], 1.0))
        energy_mid = float(lag.energy(x_mid, v_mid))
        dt_error = abs(dt_fd - (-energy_mid))

    return DerivativeReport(
        dy_error=abs(dy_fd - dy_expect),
        dx_error=abs(dx_fd - dx_expect),
        dt_error=dt_error,
        margin=margin,
        ambiguous=ambiguous,
        details={
            "dy_fd": dy_fd,
            "dy_expected": dy_expect,
            "dx_fd": dx_fd,
            "dx_expected": dx_expect,
            "dt_fd": dt_fd,
            "energy": energy_mid,
            "segments": len(segments),
        },
    )


# ---------------------------------------------------------------------------
# Operator-facing helpers (kept here because they are pure matrix algebra)
# ---------------------------------------------------------------------------


def apply_minus(kern: ActionKernel, values: np.ndarray) -> np.ndarray:
    """out[j] = min_i values[i] + K[i][j]."""
    return np.min(values[:, None] + kern.matrix, axis=0)


def apply_plus(kern: ActionKernel, values: np.ndarray) -> np.ndarray:
    """out[i] = max_j values[j] - K[i][j]."""
    return np.max(values[None, :] - kern.matrix, axis=1)


def grid_function(kern: ActionKernel, values: np.ndarray) -> GridFunction:
    return GridFunction(kern.grid, values)
