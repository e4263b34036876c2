"""Tonelli Hamiltonian/Lagrangian pairs on the torus.

The workhorse family is mechanical, H(x,p) = |p|^2/2 + V(x), whose Legendre
transform is closed-form and whose critical value is max V (stationary
solutions exist exactly at that level).  A quadratic-generic family with
x-dependent kinetic coefficients exercises the numerical Legendre transform
via Newton iteration.  After :func:`normalize_critical_value` the critical
value is 0, which every other module assumes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConvergenceError, PreconditionError
from .grid import TorusGrid

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 50


# ---------------------------------------------------------------------------
# Potentials (1D building blocks; 2D potentials are separable sums)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Potential:
    """Base class: V identically zero (free particle)."""

    offset: float = 0.0

    def value(self, x):
        return np.zeros_like(np.asarray(x, dtype=float)) + self.offset

    def grad(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def curvature(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def max_value(self) -> float:
        return self.offset

    def segment_average(self, x0, disp):
        """Average of V over the straight segment [x0, x0 + disp] in the cover."""
        del disp
        return self.value(x0)

    def shifted(self, c: float):
        return replace(self, offset=self.offset + float(c))


@dataclass(frozen=True)
class CosinePotential(Potential):
    """V(x) = amplitude * cos(2 pi k x) + offset."""

    amplitude: float = 1.0
    harmonic: int = 1

    def value(self, x):
        w = 2.0 * np.pi * self.harmonic
        return self.amplitude * np.cos(w * np.asarray(x, dtype=float)) + self.offset

    def grad(self, x):
        w = 2.0 * np.pi * self.harmonic
        return -self.amplitude * w * np.sin(w * np.asarray(x, dtype=float))

    def curvature(self, x):
        w = 2.0 * np.pi * self.harmonic
        return -self.amplitude * w * w * np.cos(w * np.asarray(x, dtype=float))

    def max_value(self) -> float:
        return abs(self.amplitude) + self.offset

    def segment_average(self, x0, disp):
        # (1/d) * int_0^d cos(w (x0+s)) ds = cos(w (x0+d/2)) * sinc(w d / 2)
        x0 = np.asarray(x0, dtype=float)
        disp = np.asarray(disp, dtype=float)
        w = 2.0 * np.pi * self.harmonic
        mid = x0 + 0.5 * disp
        half = 0.5 * w * disp
        sinc = np.where(np.abs(half) < 1e-12, 1.0, np.sin(half) / np.where(half == 0, 1.0, half))
        return self.amplitude * np.cos(w * mid) * sinc + self.offset


def pendulum_potential() -> CosinePotential:
    """The normalized cosine potential V(x) = cos(2 pi x) - 1 (max V = 0)."""
    return CosinePotential(offset=-1.0, amplitude=1.0, harmonic=1)


def double_well_potential(amplitude: float = 1.0) -> CosinePotential:
    """Two wells per period: V(x) = amplitude (cos(4 pi x) - 1)."""
    return CosinePotential(offset=-amplitude, amplitude=amplitude, harmonic=2)


@dataclass(frozen=True)
class GridPotential(Potential):
    """Potential sampled on a periodic 1D grid, read back by linear interpolation."""

    samples: tuple = ()

    def _array(self):
        return np.asarray(self.samples, dtype=float)

    def value(self, x):
        v = self._array()
        n = v.size
        t = np.asarray(x, dtype=float) * n
        i0 = np.floor(t).astype(int)
        w = t - i0
        return (1.0 - w) * v[i0 % n] + w * v[(i0 + 1) % n] + self.offset

    def grad(self, x):
        v = self._array()
        n = v.size
        slopes = (np.roll(v, -1) - v) * n
        i0 = np.floor(np.asarray(x, dtype=float) * n).astype(int)
        return slopes[i0 % n]

    def curvature(self, x):
        v = self._array()
        n = v.size
        sec = (np.roll(v, 1) - 2 * v + np.roll(v, -1)) * n * n
        i0 = np.round(np.asarray(x, dtype=float) * n).astype(int)
        return sec[i0 % n]

    def max_value(self) -> float:
        return float(self._array().max()) + self.offset

    def segment_average(self, x0, disp):
        x0 = np.asarray(x0, dtype=float)
        d = float(np.max(np.abs(disp))) if np.ndim(disp) else abs(float(disp))
        n = self._array().size
        r = max(1, int(np.ceil(d * n)))
        theta = (np.arange(r) + 0.5) / r
        acc = np.zeros_like(x0)
        for th in theta:
            acc = acc + self.value(x0 + np.asarray(disp) * th)
        return acc / r


@dataclass(frozen=True)
class SeparablePotential2D:
    """V(x1, x2) = V1(x1) + V2(x2); the only 2D potential family supported."""

    axis_potentials: tuple

    def value(self, points):
        p = np.asarray(points, dtype=float)
        return self.axis_potentials[0].value(p[..., 0]) + self.axis_potentials[1].value(p[..., 1])

    def grad(self, points):
        p = np.asarray(points, dtype=float)
        return np.stack(
            [self.axis_potentials[i].grad(p[..., i]) for i in range(2)], axis=-1
        )

    def max_value(self) -> float:
        return sum(pot.max_value() for pot in self.axis_potentials)

    def segment_average(self, x0, disp):
        x0 = np.asarray(x0, dtype=float)
        disp = np.asarray(disp, dtype=float)
        return self.axis_potentials[0].segment_average(x0[..., 0], disp[..., 0]) + self.axis_potentials[
            1
        ].segment_average(x0[..., 1], disp[..., 1])

    def shifted(self, c: float):
        return SeparablePotential2D(
            (self.axis_potentials[0].shifted(c), self.axis_potentials[1])
        )


# ---------------------------------------------------------------------------
# Hamiltonian specifications
# ---------------------------------------------------------------------------

MECHANICAL = "mechanical"
QUADRATIC_GENERIC = "quadratic_generic"


@dataclass(frozen=True)
class HamiltonianSpec:
    """A Tonelli Hamiltonian together with its normalization state.

    ``mechanical``: H(x,p) = |p|^2/2 + V(x).
    ``quadratic_generic``: H(x,p) = m(x) p^2 / 2 + b(x) p + V(x) with
    m(x) >= m_min > 0; its Legendre transform is evaluated numerically.
    """

    kind: str = MECHANICAL
    potential: object = None
    critical_value: float = 0.0
    normalized: bool = False
    mass_fn: object = None
    drift_fn: object = None

    def __post_init__(self):
        if self.kind not in (MECHANICAL, QUADRATIC_GENERIC):
            raise ValueError(f"unknown Hamiltonian kind {self.kind!r}")
        if self.potential is None:
            object.__setattr__(self, "potential", Potential())
        if self.kind == QUADRATIC_GENERIC:
            if self.mass_fn is None:
                object.__setattr__(self, "mass_fn", lambda x: np.ones_like(np.asarray(x, float)))
            if self.drift_fn is None:
                object.__setattr__(self, "drift_fn", lambda x: np.zeros_like(np.asarray(x, float)))

    # -- Hamiltonian side --------------------------------------------------

    def hamiltonian(self, x, p):
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        if self.kind == MECHANICAL:
            if x.ndim and x.shape[-1:] == (2,) and p.shape == x.shape:
                kin = 0.5 * np.sum(p * p, axis=-1)
            else:
                kin = 0.5 * p * p
            return kin + self.potential.value(x)
        return 0.5 * self.mass_fn(x) * p * p + self.drift_fn(x) * p + self.potential.value(x)

    def hamiltonian_p(self, x, p):
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        if self.kind == MECHANICAL:
            return p
        return self.mass_fn(x) * p + self.drift_fn(x)

    def hamiltonian_pp(self, x, p):
        del p
        x = np.asarray(x, dtype=float)
        if self.kind == MECHANICAL:
            return np.ones_like(x)
        return self.mass_fn(x)

    def hamiltonian_x_grad(self, x, p):
        """dH/dx for the flow; mechanical only needs V'."""
        if self.kind == MECHANICAL:
            return self.potential.grad(x)
        h = 1e-6
        return (self.hamiltonian(np.asarray(x) + h, p) - self.hamiltonian(np.asarray(x) - h, p)) / (2 * h)


def free_particle() -> HamiltonianSpec:
    return HamiltonianSpec(kind=MECHANICAL, potential=Potential(), critical_value=0.0, normalized=True)


def pendulum() -> HamiltonianSpec:
    """Mechanical Hamiltonian with V(x) = cos(2 pi x) - 1, already normalized."""
    return HamiltonianSpec(
        kind=MECHANICAL, potential=pendulum_potential(), critical_value=0.0, normalized=True
    )


def mechanical(potential) -> HamiltonianSpec:
    return HamiltonianSpec(kind=MECHANICAL, potential=potential, critical_value=potential.max_value())


def normalize_critical_value(spec: HamiltonianSpec) -> HamiltonianSpec:
    """Shift V by -max V so that the critical value becomes exactly 0.

    For mechanical Hamiltonians the critical value is max V: the stationary
    equation H(x, 0) = 0 then holds at every maximizer of V.  Idempotent.
    Other kinds are rejected; estimating the critical value of a generic
    Tonelli Hamiltonian is out of scope.
    """
    if spec.kind != MECHANICAL:
        raise PreconditionError(
            "critical-value normalization is only available for mechanical Hamiltonians"
        )
    if spec.normalized and abs(spec.potential.max_value()) <= 1e-12:
        return spec
    shift = spec.potential.max_value()
    return replace(
        spec,
        potential=spec.potential.shifted(-shift),
        critical_value=0.0,
        normalized=True,
    )


# ---------------------------------------------------------------------------
# Lagrangian side
# ---------------------------------------------------------------------------


def _newton_legendre(spec: HamiltonianSpec, x, v):
    """Solve H_p(x, p) = v for p by Newton; unique by strict convexity."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    p = np.zeros_like(v + np.zeros_like(x))
    for _ in range(NEWTON_MAX_ITER):
        res = spec.hamiltonian_p(x, p) - v
        if np.max(np.abs(res)) <= NEWTON_TOL:
            return p
        hess = spec.hamiltonian_pp(x, p)
        if np.min(hess) <= 0:
            break
        p = p - res / hess
    raise ConvergenceError(
        "Legendre-point Newton iteration did not converge; "
        "the Hamiltonian may not be Tonelli (non-convex in p)"
    )


@dataclass(frozen=True)
class LagrangianView:
    """Evaluation rules for L, L_v and the energy E of a Hamiltonian spec."""

    spec: HamiltonianSpec

    def value(self, x, v):
        """L(x, v) = sup_p { p.v - H(x, p) }."""
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.spec.kind == MECHANICAL:
            if x.ndim and x.shape[-1:] == (2,) and v.shape == x.shape:
                kin = 0.5 * np.sum(v * v, axis=-1)
            else:
                kin = 0.5 * v * v
            return kin - self.spec.potential.value(x)
        p = _newton_legendre(self.spec, x, v)
        return p * v - self.spec.hamiltonian(x, p)

    def velocity_gradient(self, x, v):
        """L_v(x, v); for mechanical systems this is just v."""
        if self.spec.kind == MECHANICAL:
            return np.asarray(v, dtype=float)
        return _newton_legendre(self.spec, x, v)

    def energy(self, x, v):
        """E(x, v) = L_v(x,v).v - L(x,v) = H(x, L_v(x,v))."""
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.spec.kind == MECHANICAL:
            if x.ndim and x.shape[-1:] == (2,) and v.shape == x.shape:
                kin = 0.5 * np.sum(v * v, axis=-1)
            else:
                kin = 0.5 * v * v
            return kin + self.spec.potential.value(x)
        p = self.velocity_gradient(x, v)
        return p * v - self.value(x, v)


def lagrangian_value(spec: HamiltonianSpec, x, v):
    return LagrangianView(spec).value(x, v)


def energy(spec: HamiltonianSpec, x, v):
    return LagrangianView(spec).energy(x, v)


def potential_on_grid(spec: HamiltonianSpec, grid: TorusGrid) -> np.ndarray:
    """V sampled at grid nodes (flat, row-major in 2D)."""
    coords = grid.coordinates()
    if grid.dim == 1:
        return np.asarray(spec.potential.value(coords[:, 0]), dtype=float)
    return np.asarray(spec.potential.value(coords), dtype=float)
