"""Convergence reporting for finite-difference verification ladders.

The verification routines in this package estimate derivatives with central
differences over a geometric step ladder (default 8 levels, ratio 1/2) and
compare against an analytic reference.  The report records the residual at
every rung, the pairwise observed orders, and a Richardson-extrapolated
residual obtained from a Neville tableau over the ladder (the tableau entry
with the smallest internal error estimate is used, which keeps round-off
dominated rungs from polluting the extrapolation).
"""

from dataclasses import dataclass, field

import numpy as np

DEFAULT_H0 = 1e-2
DEFAULT_LEVELS = 8
DEFAULT_RATIO = 0.5


@dataclass
class ConvergenceReport:
    """Residuals of a finite-difference check over a step ladder."""

    h_values: np.ndarray
    residuals: np.ndarray
    orders: np.ndarray                 # pairwise, length len(h_values) - 1
    observed_order: float              # median of the pairwise orders
    extrapolated_residual: float
    decreasing: bool                   # False flags a non-decreasing ladder
    label: str = ""
    extra: dict = field(default_factory=dict)

    def __str__(self):
        lines = [f"convergence report {self.label}".rstrip()]
        for h, r in zip(self.h_values, self.residuals):
            lines.append(f"  h={h:.6e}  residual={r:.6e}")
        lines.append(f"  observed order    {self.observed_order:.3f}")
        lines.append(f"  extrapolated res. {self.extrapolated_residual:.3e}")
        return "\n".join(lines)


def step_ladder(h0=DEFAULT_H0, levels=DEFAULT_LEVELS, ratio=DEFAULT_RATIO):
    if h0 <= 0 or not 0 < ratio < 1 or levels < 2:
        raise ValueError("ladder requires h0 > 0, 0 < ratio < 1, levels >= 2")
    return h0 * ratio ** np.arange(levels)


def pairwise_orders(h_values, residuals, floor=1e-15):
    """Observed order between consecutive rungs, log(r_i/r_{i+1})/log(h_i/h_{i+1})."""
    h = np.asarray(h_values, dtype=float)
    r = np.maximum(np.asarray(residuals, dtype=float), floor)
    return np.log(r[:-1] / r[1:]) / np.log(h[:-1] / h[1:])


def richardson_extrapolate(h_values, samples, power=2):
    """Extrapolate a sequence of central-difference estimates to h -> 0.

    ``samples`` is a list of arrays (one per rung, largest h first) whose
    error expands in powers of h**power.  Returns ``(best, err_estimate)``
    where ``best`` is the tableau entry with the smallest difference from its
    neighbours, a Ridders-style safeguard against round-off at small h.
    """
    h = np.asarray(h_values, dtype=float)
    if len(h) != len(samples):
        raise ValueError("one sample per ladder rung required")
    tableau = [np.asarray(s, dtype=float) for s in samples]
    best = tableau[0]
    best_err = np.inf
    prev_row = list(tableau)
    for j in range(1, len(samples)):
        row = []
        for i in range(len(samples) - j):
            factor = (h[i] / h[i + j]) ** power
            extrap = (factor * prev_row[i + 1] - prev_row[i]) / (factor - 1.0)
            err = np.linalg.norm(extrap - prev_row[i + 1]) + np.linalg.norm(
                extrap - prev_row[i]
            )
            if err < best_err:
                best, best_err = extrap, err
            row.append(extrap)
        prev_row = row
    return best, best_err


def make_report(h_values, residuals, extrapolated_residual, label="", extra=None):
    residuals = np.asarray(residuals, dtype=float)
    orders = pairwise_orders(h_values, residuals)
    return ConvergenceReport(
        h_values=np.asarray(h_values, dtype=float),
        residuals=residuals,
        orders=orders,
        observed_order=float(np.median(orders)),
        extrapolated_residual=float(extrapolated_residual),
        decreasing=bool(residuals.min() < residuals[0] or residuals[0] < 1e-14),
        label=label,
        extra=extra or {},
    )
