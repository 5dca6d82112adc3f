"""Finite-dimensional Wiener-chaos algebra with the Wick product.

Random variables are represented by finite chaos expansions over K Gaussian
coordinates,

    S(omega) = sum_alpha c_alpha H_alpha(omega),
    H_alpha(omega) = prod_i h_{alpha_i}(omega_i),

with probabilists' Hermite polynomials h_k (h_0 = 1, h_1 = x,
h_{k+1} = x h_k - k h_{k-1}), so E[H_alpha H_beta] = alpha! delta_{alpha,beta}.
The Wick product convolves coefficients over multi-index addition, which
makes the factorisation E[S o T] = E[S] E[T] an exact identity regardless of
dependence, and reduces to ordinary scalar multiplication when one factor is
deterministic.  These are exactly the algebraic rules that renormalise the
ill-defined squared-white-noise energy term: E[W o W] = 0 while E[W^2] = 1.
"""

from dataclasses import dataclass, field

import numpy as np

DEFAULT_MAX_ORDER = 24

# A multi-index is a tuple of nonnegative ints with trailing zeros stripped.


def normalize_index(alpha) -> tuple:
    alpha = tuple(int(a) for a in alpha)
    if any(a < 0 for a in alpha):
        raise ValueError("multi-index entries must be nonnegative")
    while alpha and alpha[-1] == 0:
        alpha = alpha[:-1]
    return alpha


def index_order(alpha) -> int:
    return sum(alpha)


def _add_indices(alpha, beta) -> tuple:
    if len(alpha) < len(beta):
        alpha, beta = beta, alpha
    return normalize_index(tuple(a + b for a, b in zip(alpha, beta)) + alpha[len(beta):])


@dataclass
class ChaosExpansion:
    """Finitely supported chaos expansion: coeffs maps multi-index -> real."""

    dim: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for alpha, c in self.coeffs.items():
            alpha = normalize_index(alpha)
            if len(alpha) > self.dim:
                raise ValueError(f"index {alpha} exceeds dimension {self.dim}")
            c = float(c)
            if c != 0.0:
                clean[alpha] = clean.get(alpha, 0.0) + c
        self.coeffs = clean

    @classmethod
    def deterministic(cls, value: float, dim: int = 1) -> "ChaosExpansion":
        return cls(dim, {(): float(value)})

    @classmethod
    def gaussian(cls, coordinate: int = 0, dim: int | None = None) -> "ChaosExpansion":
        """The coordinate Gaussian itself, H_1 in the given slot."""
        if dim is None:
            dim = coordinate + 1
        alpha = tuple(0 if i != coordinate else 1 for i in range(coordinate + 1))
        return cls(dim, {alpha: 1.0})

    def order(self) -> int:
        return max((index_order(a) for a in self.coeffs), default=0)

    def is_deterministic(self) -> bool:
        return all(a == () for a in self.coeffs)


def wick_product(S: ChaosExpansion, T: ChaosExpansion,
                 max_order: int = DEFAULT_MAX_ORDER) -> ChaosExpansion:
    """Coefficient convolution c_gamma = sum_{alpha+beta=gamma} c_alpha c~_beta."""
    if S.order() + T.order() > max_order:
        raise OverflowError(
            f"wick product order {S.order() + T.order()} exceeds bound {max_order}"
        )
    out: dict = {}
    for alpha, ca in S.coeffs.items():
        for beta, cb in T.coeffs.items():
            gamma = _add_indices(alpha, beta)
            out[gamma] = out.get(gamma, 0.0) + ca * cb
    return ChaosExpansion(max(S.dim, T.dim), out)


def expectation(S: ChaosExpansion) -> float:
    """The empty-index coefficient; all nondeterministic chaos modes are mean-zero."""
    return S.coeffs.get((), 0.0)


def hermite_values(max_degree: int, x: np.ndarray) -> np.ndarray:
    """Table of probabilists' Hermite values h_k(x) for k = 0..max_degree."""
    x = np.asarray(x, dtype=float)
    table = np.empty((max_degree + 1,) + x.shape)
    table[0] = 1.0
    if max_degree >= 1:
        table[1] = x
    for k in range(1, max_degree):
        table[k + 1] = x * table[k] - k * table[k - 1]
    return table


def sample(S: ChaosExpansion, gaussians) -> np.ndarray:
    """Pointwise evaluation of the expansion at Gaussian coordinates.

    ``gaussians`` has shape (..., K); a single draw may be passed as a flat
    length-K vector.
    """
    g = np.atleast_2d(np.asarray(gaussians, dtype=float))
    if g.shape[-1] < S.dim:
        raise ValueError(f"need {S.dim} Gaussian coordinates, got {g.shape[-1]}")
    herm = hermite_values(S.order(), g)  # (deg+1, batch, K)
    out = np.zeros(g.shape[:-1])
    for alpha, c in S.coeffs.items():
        term = np.full(g.shape[:-1], c)
        for i, a in enumerate(alpha):
            if a:
                term = term * herm[a, ..., i]
        out += term
    return out[0] if np.ndim(gaussians) == 1 else out


def mc_expectation(S: ChaosExpansion, n_samples: int, seed: int) -> tuple[float, float]:
    """Monte Carlo mean and standard error of the expansion under N(0, I)."""
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal((n_samples, max(S.dim, 1)))
    vals = sample(S, draws)
    mean = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / np.sqrt(n_samples))
    return mean, stderr


def random_expansion(rng, dim: int = 3, max_order: int = 4, n_terms: int = 6) -> ChaosExpansion:
    """Random finitely supported expansion for property checks."""
    coeffs: dict = {}
    for _ in range(n_terms):
        while True:
            alpha = tuple(int(a) for a in rng.integers(0, max_order + 1, size=dim))
            if index_order(alpha) <= max_order:
                break
        coeffs[normalize_index(alpha)] = float(rng.normal())
    return ChaosExpansion(dim, coeffs)
