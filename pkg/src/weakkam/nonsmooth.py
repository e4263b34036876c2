"""Discrete one-sided calculus: semiconcavity constants, superdifferentials,
reachable gradients, singular nodes, and the contact-set gradient check.

Everything here is exact only in one space dimension, where superdifferentials
are intervals bounded by the one-sided derivatives.  In 2D the constant
estimators fall back to a per-axis surrogate and the set-valued objects are
not computed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .grid import GridFunction, TorusGrid


@dataclass(frozen=True)
class SemiconcavityReport:
    """Largest centered second-difference quotient on the requested side."""

    constant_estimate: float
    direction: str
    threshold: float
    passed: bool


@dataclass(frozen=True)
class DifferentialData:
    """Per-node one-sided derivatives and the derived set-valued objects.

    ``left``/``right`` are O(dx^2) one-sided difference quotients.  Where
    right <= left the superdifferential is the interval [right, left]; the
    reachable gradients are its endpoints; nodes whose gap exceeds
    ``gap_tol`` are flagged singular.
    """

    grid: TorusGrid
    left: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)
    gap_tol: float = 0.0

    @property
    def gap(self) -> np.ndarray:
        return self.left - self.right

    @property
    def singular(self) -> np.ndarray:
        return self.gap > self.gap_tol

    def gradient(self) -> np.ndarray:
        """Single-valued gradient selection (average of the one-sided slopes)."""
        return 0.5 * (self.left + self.right)

    def superdifferential(self, i: int):
        """Interval [right, left] at node i (degenerate at smooth nodes)."""
        lo, hi = self.right[i], self.left[i]
        return (min(lo, hi), max(lo, hi))

    def reachable(self, i: int):
        """Reachable gradient set: endpoints at corners, singleton elsewhere."""
        if self.singular[i]:
            return (float(self.right[i]), float(self.left[i]))
        return (float(self.gradient()[i]),)

    def to_csv(self) -> str:
        lines = ["node,left,right,singular_flag"]
        for i in range(self.left.size):
            lines.append(
                f"{i},{self.left[i]:.17g},{self.right[i]:.17g},{int(self.singular[i])}"
            )
        return "\n".join(lines) + "\n"


def _second_differences(values: np.ndarray, dx: float) -> np.ndarray:
    return (np.roll(values, 1) - 2.0 * values + np.roll(values, -1)) / (dx * dx)


def semiconcavity_constant(
    phi: GridFunction, direction: str = "concave_side", threshold: float = np.inf
) -> SemiconcavityReport:
    """Discrete semiconcavity (or semiconvexity) constant of a grid function.

    The estimate is the largest centered second difference (sign-adjusted),
    clipped below at zero; exact for quadratics up to rounding.  In 2D the
    per-axis maximum is reported, an approximation documented as such.
    """
    if direction not in ("concave_side", "convex_side"):
        raise ValueError("direction must be 'concave_side' or 'convex_side'")
    dx = phi.grid.spacing
    if phi.grid.dim == 1:
        sec = _second_differences(phi.values, dx)
    else:
        a = phi.as_array()
        sec1 = (np.roll(a, 1, axis=0) - 2 * a + np.roll(a, -1, axis=0)) / (dx * dx)
        sec2 = (np.roll(a, 1, axis=1) - 2 * a + np.roll(a, -1, axis=1)) / (dx * dx)
        sec = np.concatenate([sec1.ravel(), sec2.ravel()])
    estimate = float(max(sec.max(), 0.0)) if direction == "concave_side" else float(
        max(-sec.min(), 0.0)
    )
    return SemiconcavityReport(
        constant_estimate=estimate,
        direction=direction,
        threshold=threshold,
        passed=bool(estimate <= threshold),
    )


def _offset_one_sided(v, dx, i, a, side):
    """Second-order one-sided slope at node i from a stencil shifted ``a``
    cells toward ``side``, extrapolated back to node i.

    Skipping stencils that straddle a kink keeps the estimate on one
    branch; the extrapolation error stays O((a dx)^2) on smooth branches.
    """
    n = v.size
    if side == "right":
        f0, f1, f2 = v[(i + a) % n], v[(i + a + 1) % n], v[(i + a + 2) % n]
        return (-(2 * a + 3) * f0 / 2 + (2 * a + 2) * f1 - (2 * a + 1) * f2 / 2) / dx
    f0, f1, f2 = v[(i - a) % n], v[(i - a - 1) % n], v[(i - a - 2) % n]
    return ((2 * a + 3) * f0 / 2 - (2 * a + 2) * f1 + (2 * a + 1) * f2 / 2) / dx


def differential_data(phi: GridFunction, gap_tol: float | None = None) -> DifferentialData:
    """One-sided derivatives by second-order one-sided stencils (1D only).

    Stencils never straddle a detected kink.  A kink strictly inside a cell
    is assigned to the nearest node, which receives branch-extrapolated
    one-sided slopes; smooth neighbours whose stencil would cross the kink
    reuse their clean side instead.  Kinks are assumed isolated (at least
    four cells apart).  The default corner threshold scales with the grid
    and a robust curvature estimate so discretization wiggle is not
    classified as singular.
    """
    if phi.grid.dim != 1:
        raise PreconditionError("differential data is only defined for dim = 1")
    dx = phi.grid.spacing
    n = phi.grid.n
    v = phi.values
    right = (-3.0 * v + 4.0 * np.roll(v, -1) - np.roll(v, -2)) / (2.0 * dx)
    left = (3.0 * v - 4.0 * np.roll(v, 1) + np.roll(v, 2)) / (2.0 * dx)
    if gap_tol is None:
        curvature = np.abs(_second_differences(v, dx))
        robust = float(np.percentile(curvature, 75))
        gap_tol = 10.0 * dx * max(robust, 1.0)
    gap_tol = float(gap_tol)

    # Cell slopes; a cell holding a kink differs from both neighbours.
    d = (np.roll(v, -1) - v) / dx
    jump_prev = np.abs(d - np.roll(d, 1))
    jump_next = np.abs(d - np.roll(d, -1))
    dirty = np.minimum(jump_prev, jump_next) > gap_tol

    right = right.copy()
    left = left.copy()
    for j in np.flatnonzero(dirty):
        s_left = d[(j - 1) % n]
        s_right = d[(j + 1) % n]
        denom = s_right - s_left
        theta = float((d[j] - s_left) / denom) if denom != 0 else 0.5
        carrier = j if theta <= 0.5 else (j + 1) % n
        other = (j + 1) % n if carrier == j else j
        if carrier == j:
            # kink just right of the carrier: right slope from the far branch
            right[carrier] = _offset_one_sided(v, dx, carrier, 1, "right")
            left[other] = _offset_one_sided(v, dx, other, 0, "right")
            right[other] = left[other]
            right[(carrier - 1) % n] = left[(carrier - 1) % n]
            left[(other + 1) % n] = _offset_one_sided(v, dx, (other + 1) % n, 1, "left")
        else:
            left[carrier] = _offset_one_sided(v, dx, carrier, 1, "left")
            right[other] = _offset_one_sided(v, dx, other, 0, "left")
            left[other] = right[other]
            left[(carrier + 1) % n] = right[(carrier + 1) % n]
            right[(other - 1) % n] = _offset_one_sided(v, dx, (other - 1) % n, 1, "right")

    # Node-aligned corners pollute only the crossing stencils of immediate
    # neighbours; their clean side is the branch value.
    singular = (left - right) > gap_tol
    for s in np.flatnonzero(singular):
        before, after = (s - 1) % n, (s + 1) % n
        if not singular[before] and not dirty[(before - 1) % n] and not dirty[before]:
            right[before] = left[before]
        if not singular[after] and not dirty[after] and not dirty[(after - 1) % n]:
            left[after] = right[after]
    singular = (left - right) > gap_tol

    return DifferentialData(grid=phi.grid, left=left, right=right, gap_tol=gap_tol)


def centered_gradient(phi: GridFunction) -> np.ndarray:
    if phi.grid.dim != 1:
        raise PreconditionError("centered gradient helper is 1D only")
    dx = phi.grid.spacing
    return (np.roll(phi.values, -1) - np.roll(phi.values, 1)) / (2.0 * dx)


@dataclass(frozen=True)
class ContactReport:
    contact_nodes: np.ndarray
    derivative_agreement: float
    lipschitz_constant: float
    lipschitz_bound: float
    worst_pair: tuple
    derivative_tol: float
    passed: bool


def contact_set_lipschitz_check(
    u: GridFunction,
    v: GridFunction,
    c_const: float,
    contact_tol: float | None = None,
    deriv_tol: float = 5e-2,
    order_slack: float = 1e-9,
) -> ContactReport:
    """On the contact set of a semiconcave/semiconvex ordered pair, the
    gradients agree and the shared gradient is 4C-Lipschitz (10% slack).

    ``u`` must dominate ``v`` up to ``order_slack``; violations raise.
    """
    if u.grid != v.grid or u.grid.dim != 1:
        raise PreconditionError("contact check needs two 1D functions on one grid")
    diff = u.values - v.values
    if float(diff.min()) < -order_slack:
        raise PreconditionError(
            f"ordering u >= v violated by {-float(diff.min()):.3e}"
        )
    if contact_tol is None:
        contact_tol = max(10.0 * u.grid.spacing * max(u.lipschitz_estimate(), 1.0), 1e-9)
    contact = np.flatnonzero(diff <= contact_tol)
    du = centered_gradient(u)
    dv = centered_gradient(v)
    agreement = float(np.max(np.abs(du[contact] - dv[contact]))) if contact.size else 0.0

    lip = 0.0
    worst = (int(contact[0]), int(contact[0])) if contact.size else (0, 0)
    if contact.size >= 2:
        xs = contact / u.grid.n
        g = du[contact]
        dxs = np.abs(xs[:, None] - xs[None, :]) % 1.0
        dxs = np.minimum(dxs, 1.0 - dxs)
        dg = np.abs(g[:, None] - g[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(dxs > 0, dg / dxs, 0.0)
        flat = int(np.argmax(ratios))
        lip = float(ratios.ravel()[flat])
        worst = (int(contact[flat // contact.size]), int(contact[flat % contact.size]))
    bound = 4.0 * c_const * 1.1
    return ContactReport(
        contact_nodes=contact,
        derivative_agreement=agreement,
        lipschitz_constant=lip,
        lipschitz_bound=bound,
        worst_pair=worst,
        derivative_tol=deriv_tol,
        passed=bool(agreement <= deriv_tol and lip <= bound),
    )


def corner_samples(data: DifferentialData, node: int, count: int = 16):
    """Interior samples of the superdifferential interval at a corner node."""
    lo, hi = data.superdifferential(node)
    if count <= 0 or hi <= lo:
        return []
    r = np.arange(1, count + 1) / (count + 1)
    return [float(lo + (hi - lo) * w) for w in r]
