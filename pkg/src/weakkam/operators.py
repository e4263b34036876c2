"""Backward/forward Lax-Oleinik operators, commutators, and long-time limits.

T_minus is inf-convolution against the action kernel, T_plus the dual
sup-deconvolution.  Acting with one shared kernel makes the adjunction
inequalities and the triple identities hold at machine precision, which is
what the verification suites assert.  Long-time limits give the weak KAM
projectors and the Peierls barrier; the commutator gap drives the
regularity horizon (tau_1) and reversibility horizon (tau_2) estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, PreconditionError
from .grid import GridFunction, require_same_grid, sup_diff
from .kernel import ActionKernel, KernelLadder, apply_minus, apply_plus, compose
from . import nonsmooth


@dataclass(frozen=True)
class SemigroupEvolution:
    """Snapshots of an operator family at increasing times."""

    times: tuple
    snapshots: tuple
    operator_tag: str

    def __post_init__(self):
        ts = tuple(float(t) for t in self.times)
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("evolution times must be strictly increasing")
        grids = {s.grid for s in self.snapshots}
        if len(grids) > 1:
            raise ValueError("evolution snapshots must share one grid")
        object.__setattr__(self, "times", ts)
        object.__setattr__(self, "snapshots", tuple(self.snapshots))

    def to_csv(self) -> str:
        lines = ["t,node,value"]
        for t, snap in zip(self.times, self.snapshots):
            for i, v in enumerate(snap.values):
                lines.append(f"{t:.17g},{i},{v:.17g}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class KantorovichPair:
    """Admissible dual pair: phi = T_minus_t psi and psi = T_plus_t phi."""

    phi: GridFunction
    psi: GridFunction
    t: float
    eps_pair: float


def t_minus(phi: GridFunction, kern: ActionKernel) -> GridFunction:
    """(T^-_t phi)(x) = min_y phi(y) + A_t(y, x)."""
    require_same_grid(phi, kern)
    return GridFunction(phi.grid, apply_minus(kern, phi.values))


def t_plus(phi: GridFunction, kern: ActionKernel) -> GridFunction:
    """(T^+_t phi)(x) = max_y phi(y) - A_t(x, y)."""
    require_same_grid(phi, kern)
    return GridFunction(phi.grid, apply_plus(kern, phi.values))


def commutator_gap(phi: GridFunction, kern: ActionKernel):
    """Both one-sided commutator gaps, nonnegative by tropical adjunction.

    Returns (T^-T^+ phi - phi, phi - T^+T^- phi).
    """
    require_same_grid(phi, kern)
    first = t_minus(t_plus(phi, kern), kern).values - phi.values
    second = phi.values - t_plus(t_minus(phi, kern), kern).values
    return GridFunction(phi.grid, first), GridFunction(phi.grid, second)


def triple_identity_check(phi: GridFunction, kern: ActionKernel) -> float:
    """Residual of T^+T^-T^+ = T^+ and T^-T^+T^- = T^- (0 up to rounding)."""
    up = t_plus(phi, kern)
    down = t_minus(phi, kern)
    r1 = sup_diff(t_plus(t_minus(up, kern), kern), up)
    r2 = sup_diff(t_minus(t_plus(down, kern), kern), down)
    return max(r1, r2)


# ---------------------------------------------------------------------------
# Long-time limits
# ---------------------------------------------------------------------------


def weak_kam_limit(
    phi: GridFunction,
    ladder: KernelLadder,
    direction: str = "minus",
    tol: float = 1e-3,
    t_max: float | None = None,
) -> GridFunction:
    """Long-time projector S^- phi (or S^+ phi) by doubling the time.

    Stops when consecutive doubled snapshots differ by at most ``tol`` in
    sup norm; raises with the residual history if the horizon is hit first
    (a symptom of a non-normalized Hamiltonian or a too-coarse grid).
    """
    if direction not in ("minus", "plus"):
        raise ValueError("direction must be 'minus' or 'plus'")
    horizon = ladder.t_max if t_max is None else t_max
    op = t_minus if direction == "minus" else t_plus
    previous = op(phi, ladder.level(0))
    residuals = []
    ell = 1
    while ladder.delta * 2**ell <= horizon * (1 + 1e-12):
        current = op(phi, ladder.level(ell))
        res = sup_diff(current, previous)
        residuals.append((ladder.delta * 2**ell, res))
        if res <= tol:
            return current
        previous = current
        ell += 1
    raise ConvergenceError(
        f"S^{'-' if direction == 'minus' else '+'} did not settle within t <= {horizon}",
        residuals,
    )


def peierls_barrier(
    ladder: KernelLadder, tol: float = 1e-3, t_max: float | None = None
) -> ActionKernel:
    """Limit kernel h(x, y) = lim A_t(x, y), tagged with t = +inf.

    Doubles the ladder until the entrywise change drops below ``tol``;
    requires every pair to be reachable (no +inf entries) at convergence.
    """
    horizon = ladder.t_max if t_max is None else t_max
    previous = ladder.level(0)
    residuals = []
    ell = 1
    while ladder.delta * 2**ell <= horizon * (1 + 1e-12):
        current = ladder.level(ell)
        both = np.isfinite(previous.matrix) & np.isfinite(current.matrix)
        if both.all():
            res = float(np.max(np.abs(current.matrix - previous.matrix)))
            residuals.append((current.t, res))
            if res <= tol:
                return ActionKernel(
                    current.grid,
                    current.spec,
                    math.inf,
                    current.matrix,
                    base_step=current.base_step,
                    winding=current.winding,
                    provenance=current.provenance,
                )
        previous = current
        ell += 1
    raise ConvergenceError(
        f"Peierls barrier did not settle within t <= {horizon}", residuals
    )


def limit_exchange_check(
    phi: GridFunction,
    ladder: KernelLadder,
    barrier_kernel: ActionKernel | None = None,
    tol: float = 1e-3,
) -> dict:
    """Cross-check the limit formulas for S^- and the exchanged double limit.

    (a) S^- phi should equal min_y { phi(y) + h(y, x) }.
    (b) lim_t T^-_t T^+_t phi should equal S^- S^+ phi.
    Report-only: returns the residuals alongside the tolerance used.
    """
    h = barrier_kernel if barrier_kernel is not None else peierls_barrier(ladder, tol)
    s_minus = weak_kam_limit(phi, ladder, "minus", tol)
    s_plus = weak_kam_limit(phi, ladder, "plus", tol)
    via_h = GridFunction(phi.grid, apply_minus(h, phi.values))
    res_formula = sup_diff(s_minus, via_h)

    s_minus_s_plus = GridFunction(phi.grid, apply_minus(h, s_plus.values))
    prev = None
    res_exchange = math.inf
    for ell in range(len(ladder.level_times())):
        kern = ladder.level(ell)
        current = t_minus(t_plus(phi, kern), kern)
        if prev is not None and sup_diff(current, prev) <= tol:
            res_exchange = sup_diff(current, s_minus_s_plus)
            break
        prev = current
    else:
        res_exchange = sup_diff(prev, s_minus_s_plus) if prev is not None else math.inf
    return {
        "s_minus_vs_barrier_formula": res_formula,
        "double_limit_vs_exchanged": res_exchange,
        "tolerance": tol,
    }


# ---------------------------------------------------------------------------
# Horizon estimators
# ---------------------------------------------------------------------------


def default_operator_tolerance(phi: GridFunction, factor: float = 10.0) -> float:
    """Grid-aware residual tolerance, factor * dx * Lip(phi)."""
    return factor * phi.grid.spacing * max(phi.lipschitz_estimate(), 1e-12)


def _monotone_chain(ladder: KernelLadder, t_grid):
    """Kernels along increasing times built by left-composition.

    K_{t2} = K_{t2-t1} . K_{t1} makes the commutator gap nondecreasing
    along the chain exactly, so scans can stop at the first failure.
    """
    times = sorted(float(t) for t in t_grid)
    kernels = []
    current = None
    prev_t = 0.0
    for t in times:
        if current is None:
            current = ladder.kernel_at(t)
        else:
            current = compose(ladder.kernel_at(t - prev_t), current)
        kernels.append(current)
        prev_t = t
    return times, kernels


def tau2_estimate(
    phi: GridFunction,
    ladder: KernelLadder,
    tol: float | None = None,
    t_grid=None,
    refine_bisections: int = 0,
) -> float:
    """Largest time with T^-_t T^+_t phi = phi within tolerance.

    Scans a monotone chain of increasing times (the commutator gap is
    nondecreasing along it) and stops at the first failure; +inf when the
    gap stays small through the horizon.  Optional bisection sharpens the
    passing/failing bracket on the base-step lattice.
    """
    if tol is None:
        tol = default_operator_tolerance(phi)
    if t_grid is None:
        t_grid = ladder.level_times()
    times, kernels = _monotone_chain(ladder, t_grid)
    last_pass = None
    first_fail = None
    for t, kern in zip(times, kernels):
        gap = float(np.max(commutator_gap(phi, kern)[0].values))
        if gap <= tol:
            last_pass = t
        else:
            first_fail = t
            break
    if first_fail is None:
        return math.inf
    if last_pass is None:
        return 0.0
    lo, hi = last_pass, first_fail
    for _ in range(refine_bisections):
        steps_mid = (ladder.steps_of(lo) + ladder.steps_of(hi)) // 2
        if steps_mid in (ladder.steps_of(lo), ladder.steps_of(hi)):
            break
        mid = steps_mid * ladder.delta
        gap = float(np.max(commutator_gap(phi, ladder.kernel_at(mid))[0].values))
        if gap <= tol:
            lo = mid
        else:
            hi = mid
    return lo


def tau1_estimate(
    phi: GridFunction,
    ladder: KernelLadder,
    c_bound: float,
    t_grid,
    semiconcavity_margin: float = 1e-6,
) -> float:
    """Largest tested time at which T^+_t phi still looks C^{1,1}.

    Passing means both discrete second-difference constants of T^+_t phi
    stay below ``c_bound``.  Regularization makes this positive for
    semiconcave data; the boundary classification at the last passing time
    is not claimed.
    """
    report = nonsmooth.semiconcavity_constant(phi)
    if not np.isfinite(report.constant_estimate):
        raise PreconditionError("tau1 estimation requires semiconcave input data")
    del semiconcavity_margin
    best = 0.0
    for t in sorted(float(t) for t in t_grid):
        psi = t_plus(phi, ladder.kernel_at(t))
        cave = nonsmooth.semiconcavity_constant(psi).constant_estimate
        vex = nonsmooth.semiconcavity_constant(psi, direction="convex_side").constant_estimate
        if cave <= c_bound and vex <= c_bound:
            best = t
    return best
