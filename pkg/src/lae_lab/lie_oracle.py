"""Matrix-Lie-group oracle for the second-order fluctuation expansion.

A near-identity flow factor ``Xi(eps, t)`` with prescribed first and second
eps-derivatives ``w(t)`` and ``chi(t)`` is realised through exact matrix
exponentials, and the eps-expansion of its composite velocity

    V(eps, t) = (d/dt Xi) Xi^-1 + Ad_Xi ubar,      Ad_g Y = g Y g^-1

is verified against the closed forms

    dV/deps|0   = wdot + ad_w ubar
    d2V/deps2|0 = chidot + ad_chi ubar - 2 (wdot + ad_w ubar) w

by central differences in eps over a geometric step ladder.  Here ``ad`` is
the plain matrix commutator (this module's convention; the vector-field
modules use the opposite sign) and the trailing product in the second-order
form is a matrix product with ``w`` on the right -- differentiating the
exponential directly fixes both the ordering and the generator

    Xi(eps, t) = expm(eps w + (eps^2/2) (chi - w w)),

since the quadratic generator coefficient is ``chi`` minus the matrix square
of ``w``.  The group is arbitrary (so(3) presets are provided because they
have closed-form exponentials to test against).
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .convergence import (
    DEFAULT_LEVELS,
    ConvergenceReport,
    make_report,
    richardson_extrapolate,
    step_ladder,
)

# AlgebraElement / GroupElement are plain (d, d) float arrays.

_EXPM_NORM_LIMIT = 300.0
_BERNOULLI_MAX = 20


def _check_square(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"square matrix expected, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("matrix entries must be finite")
    return X


def ad(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Matrix adjoint action, the commutator X Y - Y X."""
    X = _check_square(X)
    Y = _check_square(Y)
    if X.shape != Y.shape:
        raise ValueError(f"dimension mismatch: {X.shape} vs {Y.shape}")
    return X @ Y - Y @ X


def expm(X: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaled-and-squared Taylor summation.

    The argument is scaled so its Frobenius norm is at most 1/2, the series
    is summed to machine precision, and the result squared back up.
    """
    X = _check_square(X)
    norm = np.linalg.norm(X)
    if norm > _EXPM_NORM_LIMIT:
        raise OverflowError(f"expm norm {norm:.3e} exceeds limit {_EXPM_NORM_LIMIT}")
    squarings = max(0, int(np.ceil(np.log2(norm / 0.5)))) if norm > 0.5 else 0
    Y = X / (2.0 ** squarings)
    result = np.eye(X.shape[0]) + Y
    term = Y
    for k in range(2, 40):
        term = term @ Y / k
        result = result + term
        if np.linalg.norm(term) <= 1e-17 * np.linalg.norm(result):
            break
    for _ in range(squarings):
        result = result @ result
    return result


def bernoulli(k: int) -> float:
    """Bernoulli number B_k in the convention with B_1 = -1/2."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k > _BERNOULLI_MAX:
        raise ValueError(f"k={k} exceeds supported maximum {_BERNOULLI_MAX}")
    from fractions import Fraction
    from math import comb

    b = [Fraction(1)]
    for m in range(1, k + 1):
        acc = Fraction(0)
        for j in range(m):
            acc += comb(m + 1, j) * b[j]
        b.append(-acc / (m + 1))
    return float(b[k])


def dexp_rt(Omega: np.ndarray, dOmega: np.ndarray, K: int) -> np.ndarray:
    """Right-trivialised exponential derivative, sum_{k<=K} ad^k_Omega(dOmega)/(k+1)!."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    term = _check_square(dOmega).copy()
    result = term.copy()
    fact = 1.0
    for k in range(1, K + 1):
        term = ad(Omega, term)
        fact *= k + 1
        result = result + term / fact
    return result


def magnus_rhs(Omega: np.ndarray, V: np.ndarray, K: int) -> np.ndarray:
    """Generator velocity series, sum_{k<=K} (B_k/k!) ad^k_Omega(V)."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    term = _check_square(V).copy()
    result = term.copy()  # B_0 = 1
    fact = 1.0
    for k in range(1, K + 1):
        term = ad(Omega, term)
        fact *= k
        bk = bernoulli(k)
        if bk != 0.0:
            result = result + (bk / fact) * term
    return result


# ---------------------------------------------------------------------------
# Deterministic verification families
# ---------------------------------------------------------------------------


@dataclass
class FlowFamily:
    """Time-sampled (w, chi, ubar) paths on a uniform time grid."""

    w: np.ndarray       # (T, d, d)
    chi: np.ndarray     # (T, d, d)
    ubar: np.ndarray    # (T, d, d)
    t_grid: np.ndarray  # (T,), strictly increasing, uniform

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        self.chi = np.asarray(self.chi, dtype=float)
        self.ubar = np.asarray(self.ubar, dtype=float)
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        T = len(self.t_grid)
        for name, path in (("w", self.w), ("chi", self.chi), ("ubar", self.ubar)):
            if path.shape[0] != T or path.ndim != 3 or path.shape[1] != path.shape[2]:
                raise ValueError(f"path {name} has shape {path.shape}, expected ({T}, d, d)")
        dt = np.diff(self.t_grid)
        if T < 3 or np.any(dt <= 0):
            raise ValueError("t_grid must be strictly increasing with at least 3 samples")
        if not np.allclose(dt, dt[0], rtol=1e-12, atol=0):
            raise ValueError("t_grid must be uniform")

    @property
    def spacing(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0])

    @classmethod
    def from_callables(cls, w_fn: Callable, chi_fn: Callable, ubar_fn: Callable,
                       t_center: float, h_t: float, half_width: int = 2) -> "FlowFamily":
        """Sample smooth matrix paths on a stencil of spacing h_t around t_center."""
        t = t_center + h_t * np.arange(-half_width, half_width + 1)
        return cls(
            w=np.stack([np.asarray(w_fn(s), dtype=float) for s in t]),
            chi=np.stack([np.asarray(chi_fn(s), dtype=float) for s in t]),
            ubar=np.stack([np.asarray(ubar_fn(s), dtype=float) for s in t]),
            t_grid=t,
        )


def so3_generators() -> np.ndarray:
    """Basis e_1, e_2, e_3 of so(3) with (e_i)_jk = -eps_ijk, so [e_1, e_2] = e_3."""
    e = np.zeros((3, 3, 3))
    e[0, 1, 2], e[0, 2, 1] = -1.0, 1.0
    e[1, 2, 0], e[1, 0, 2] = -1.0, 1.0
    e[2, 0, 1], e[2, 1, 0] = -1.0, 1.0
    return e


def so3_element(axis) -> np.ndarray:
    """Antisymmetric matrix with rotation axis ``axis``."""
    a = np.asarray(axis, dtype=float)
    e = so3_generators()
    return a[0] * e[0] + a[1] * e[1] + a[2] * e[2]


def _fluctuation_generator(family: FlowFamily, eps: float, idx: int) -> np.ndarray:
    w = family.w[idx]
    chi = family.chi[idx]
    # Quadratic generator coefficient is chi - w@w so that the eps-derivatives
    # of expm at 0 are exactly (w, chi).
    return eps * w + 0.5 * eps * eps * (chi - w @ w)


def _stride_for(family: FlowFamily, h_t: float) -> int:
    spacing = family.spacing
    stride = int(round(h_t / spacing))
    if stride < 1 or abs(stride * spacing - h_t) > 1e-10 * max(1.0, h_t):
        raise ValueError(f"h_t={h_t} is not a multiple of the grid spacing {spacing}")
    return stride


def composite_velocity(family: FlowFamily, eps: float, t_index: int, h_t: float) -> np.ndarray:
    """Velocity of the composed flow, (d/dt Xi) Xi^-1 + Ad_Xi ubar.

    The time derivative is a central difference of the exact exponential with
    step ``h_t`` (which must be a multiple of the family's grid spacing).
    """
    stride = _stride_for(family, h_t)
    if t_index - stride < 0 or t_index + stride >= len(family.t_grid):
        raise IndexError("t_index too close to the boundary for the requested h_t")
    xi_minus = expm(_fluctuation_generator(family, eps, t_index - stride))
    xi_0 = expm(_fluctuation_generator(family, eps, t_index))
    xi_plus = expm(_fluctuation_generator(family, eps, t_index + stride))
    xi_0_inv = np.linalg.inv(xi_0)
    dxi_dt = (xi_plus - xi_minus) / (2.0 * h_t)
    return dxi_dt @ xi_0_inv + xi_0 @ family.ubar[t_index] @ xi_0_inv


def _time_derivative(path: np.ndarray, t_index: int, stride: int, h_t: float) -> np.ndarray:
    return (path[t_index + stride] - path[t_index - stride]) / (2.0 * h_t)


def verify_first_order(family: FlowFamily, h_eps: float = 1e-2, h_t: float | None = None,
                       t_index: int | None = None, levels: int = DEFAULT_LEVELS) -> ConvergenceReport:
    """Check dV/deps|0 against wdot + ad_w ubar over an h_eps ladder."""
    if t_index is None:
        t_index = len(family.t_grid) // 2
    if h_t is None:
        h_t = family.spacing
    stride = _stride_for(family, h_t)
    wdot = _time_derivative(family.w, t_index, stride, h_t)
    reference = wdot + ad(family.w[t_index], family.ubar[t_index])

    ladder = step_ladder(h_eps, levels)
    estimates = []
    for h in ladder:
        v_plus = composite_velocity(family, +h, t_index, h_t)
        v_minus = composite_velocity(family, -h, t_index, h_t)
        estimates.append((v_plus - v_minus) / (2.0 * h))
    residuals = [np.linalg.norm(d - reference) for d in estimates]
    best, _ = richardson_extrapolate(ladder, estimates)
    return make_report(ladder, residuals, np.linalg.norm(best - reference),
                       label="first-order fluctuation")


def verify_second_order(family: FlowFamily, h_eps: float = 1e-2, h_t: float | None = None,
                        t_index: int | None = None, levels: int = DEFAULT_LEVELS) -> ConvergenceReport:
    """Check d2V/deps2|0 against chidot + ad_chi ubar - 2 (wdot + ad_w ubar) w."""
    if t_index is None:
        t_index = len(family.t_grid) // 2
    if h_t is None:
        h_t = family.spacing
    stride = _stride_for(family, h_t)
    w = family.w[t_index]
    ubar = family.ubar[t_index]
    wdot = _time_derivative(family.w, t_index, stride, h_t)
    chidot = _time_derivative(family.chi, t_index, stride, h_t)
    v_prime = wdot + ad(w, ubar)
    reference = chidot + ad(family.chi[t_index], ubar) - 2.0 * v_prime @ w

    v_zero = composite_velocity(family, 0.0, t_index, h_t)
    ladder = step_ladder(h_eps, levels)
    estimates = []
    for h in ladder:
        v_plus = composite_velocity(family, +h, t_index, h_t)
        v_minus = composite_velocity(family, -h, t_index, h_t)
        estimates.append((v_plus - 2.0 * v_zero + v_minus) / (h * h))
    residuals = [np.linalg.norm(d - reference) for d in estimates]
    best, _ = richardson_extrapolate(ladder, estimates)
    return make_report(ladder, residuals, np.linalg.norm(best - reference),
                       label="second-order fluctuation")
