"""weakkam: numerical weak KAM toolkit on the flat torus.

Builds discrete action kernels in the min-plus algebra, applies the
backward/forward Lax-Oleinik operators and their commutators, and runs the
cut-locus and controllability diagnostics that characterize weak KAM
solutions.
"""

from .grid import GridFunction, TorusGrid, interpolate, periodic_distance, sup_diff
from .hamiltonian import (
    HamiltonianSpec,
    LagrangianView,
    energy,
    free_particle,
    lagrangian_value,
    mechanical,
    normalize_critical_value,
    pendulum,
)
from .kernel import (
    ActionKernel,
    KernelLadder,
    action_value,
    compose,
    direct_kernel,
    identity_kernel,
    kernel_power,
    small_time_kernel,
)

__all__ = [
    "ActionKernel",
    "GridFunction",
    "HamiltonianSpec",
    "KernelLadder",
    "LagrangianView",
    "TorusGrid",
    "action_value",
    "compose",
    "direct_kernel",
    "energy",
    "free_particle",
    "identity_kernel",
    "interpolate",
    "kernel_power",
    "lagrangian_value",
    "mechanical",
    "normalize_critical_value",
    "pendulum",
    "periodic_distance",
    "small_time_kernel",
    "sup_diff",
]

__version__ = "0.1.0"
