"""Deterministic evolution of the fluctuation correlation tensor.

The correlation tensor F = E[w (x) w] of the first-order fluctuation field is
transported by the mean flow and forced by the fixed noise fields,

    dF/dt + L_u F = sum_i xi_i (x) xi_i ,

stepped with classical RK4.  Symmetry of F is preserved bit-exactly by the
right-hand side; positive semidefiniteness is monitored (never projected), so
a violation beyond round-off points at a discretisation bug rather than being
silently clipped.  The canonical initial condition is F = 0, matching
fluctuations that start at the identity map.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .field_calculus import (
    GridSpec,
    Tensor2Field,
    VectorField,
    dealias,
    divergence,
    lie_deriv_tensor2,
    outer_product,
    random_div_free,
    sup_norm,
    zeros_tensor2,
)

PSD_TOL = 1e-8
CFL_FACTOR = 0.5


@dataclass
class NoiseBasis:
    """Divergence-free, time-constant noise fields xi_i."""

    xi: list  # list[VectorField]

    def __post_init__(self):
        if not self.xi:
            raise ValueError("noise basis must contain at least one field")
        grid = self.xi[0].grid
        for f in self.xi:
            if f.grid != grid:
                raise ValueError("all noise fields must share one grid")
            if sup_norm(divergence(f)) > 1e-10:
                raise ValueError("noise fields must be divergence-free (|div| <= 1e-10)")

    @property
    def grid(self) -> GridSpec:
        return self.xi[0].grid

    def __len__(self):
        return len(self.xi)


def make_noise_basis(grid: GridSpec, n_noise: int, seed: int, k_max: int = 2,
                     amplitude: float = 1.0) -> NoiseBasis:
    """Random band-limited solenoidal basis; k_max defaults well below n/4."""
    rng = np.random.default_rng(seed)
    fields = [random_div_free(grid, k_max, rng, amplitude) for _ in range(n_noise)]
    return NoiseBasis(fields)


@dataclass
class CorrelationState:
    F: Tensor2Field
    t: float

    def __post_init__(self):
        if not self.F.is_symmetric():
            raise ValueError("correlation tensor must be exactly symmetric")


def forcing(basis: NoiseBasis) -> Tensor2Field:
    """Noise injection tensor sum_i xi_i (x) xi_i (symmetric, pointwise PSD)."""
    out = zeros_tensor2(basis.grid)
    for f in basis.xi:
        out = out + outer_product(f, f)
    return out


def f_rhs(ubar: VectorField, F: Tensor2Field, basis: NoiseBasis | None) -> Tensor2Field:
    """Right-hand side -L_u F + forcing of the correlation transport equation."""
    rhs = -1.0 * lie_deriv_tensor2(ubar, F)
    if basis is not None:
        rhs = rhs + forcing(basis)
    return rhs


def min_eigenvalue(F: Tensor2Field) -> float:
    """Smallest pointwise eigenvalue of the symmetric 2x2 tensor field."""
    a = F.components[0, 0]
    b = F.components[0, 1]
    c = F.components[1, 1]
    half_tr = 0.5 * (a + c)
    rad = np.sqrt((0.5 * (a - c)) ** 2 + b * b)
    return float(np.min(half_tr - rad))


def psd_defect(F: Tensor2Field) -> float:
    """How far below zero the smallest eigenvalue dips, scaled by the field size."""
    lam = min_eigenvalue(F)
    scale = max(sup_norm(F), 1e-300)
    return max(0.0, -lam) / scale


def check_cfl(ubar: VectorField, dt: float):
    speed = sup_norm(ubar)
    limit = CFL_FACTOR * ubar.grid.spacing / max(speed, 1e-300)
    if dt > limit:
        raise ValueError(f"CFL violation: dt={dt:.3e} exceeds {limit:.3e}")


def step_f(state: CorrelationState, ubar_of_t: Callable[[float], VectorField],
           basis: NoiseBasis | None, dt: float) -> CorrelationState:
    """One classical RK4 step of the correlation equation."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    t, F = state.t, state.F
    u1 = ubar_of_t(t)
    check_cfl(u1, dt)
    k1 = f_rhs(u1, F, basis)
    u2 = ubar_of_t(t + 0.5 * dt)
    k2 = f_rhs(u2, F + (0.5 * dt) * k1, basis)
    k3 = f_rhs(u2, F + (0.5 * dt) * k2, basis)
    k4 = f_rhs(ubar_of_t(t + dt), F + dt * k3, basis)
    F_new = F + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return CorrelationState(F=F_new, t=t + dt)


def isotropic_tensor(grid: GridSpec, alpha_sq: float) -> Tensor2Field:
    comps = np.zeros((2, 2, grid.n, grid.n))
    comps[0, 0] = alpha_sq
    comps[1, 1] = alpha_sq
    return Tensor2Field(grid, comps)
