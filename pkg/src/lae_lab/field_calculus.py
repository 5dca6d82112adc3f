"""Spectral differential geometry on the flat periodic square [0, L)^2.

All fields live on a uniform n-by-n collocation grid (n a power of two) and
all linear operators act in Fourier space through real transforms.  Products
are formed pointwise in physical space and are then truncated to the 2/3
band, the classical dealiasing rule; identities involving up-to-cubic
products therefore hold to round-off whenever the inputs keep every
intermediate inside the retained band.

Sign conventions used throughout the fluid modules:

    [X, Y]   = grad_X Y - grad_Y X        (Jacobi-Lie bracket)
    ad_X Y   = -[X, Y]
    (L_u m)_i  = u^j d_j m_i + (d_i u^j) m_j           for one-forms
    (L_u F)^ij = u^k d_k F^ij - F^kj d_k u^i - F^ik d_k u^j   for 2-tensors
    C(q)^i   = d_j (d_k q^i F^jk)         with symmetric F

The metric is the flat identity, so raising/lowering indices is the identity
on components and the curvature correction of the second-order fluctuation
identity vanishes; operations that would need curvature take a ``flat`` flag
and refuse anything else.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic collocation grid."""

    n: int
    length: float = TWO_PI

    def __post_init__(self):
        if self.n < 8 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"grid n must be a power of two >= 8, got {self.n}")
        if not self.length > 0:
            raise ValueError("grid length must be positive")

    @property
    def spacing(self) -> float:
        return self.length / self.n


@lru_cache(maxsize=32)
def _tables(grid: GridSpec):
    n = grid.n
    scale = TWO_PI / grid.length
    kx_int = np.rint(np.fft.fftfreq(n) * n).astype(int)[:, None]        # (n, 1)
    ky_int = np.arange(n // 2 + 1, dtype=int)[None, :]                  # (1, m)
    kx = kx_int * scale
    ky = ky_int * scale
    # Odd-derivative wavenumbers with the ambiguous Nyquist mode removed.
    kx_d = kx.astype(float).copy()
    kx_d[n // 2, 0] = 0.0
    ky_d = ky.astype(float).copy()
    ky_d[0, -1] = 0.0
    k2 = kx.astype(float) ** 2 + ky.astype(float) ** 2
    k2_safe = k2.copy()
    k2_safe[0, 0] = 1.0
    cut = n // 3
    mask = (np.abs(kx_int) <= cut) & (np.abs(ky_int) <= cut)
    return {"kx": kx_d, "ky": ky_d, "k2": k2, "k2_safe": k2_safe, "mask": mask}


def grid_points(grid: GridSpec):
    x = np.arange(grid.n) * grid.spacing
    return np.meshgrid(x, x, indexing="ij")


# ---------------------------------------------------------------------------
# Field containers
# ---------------------------------------------------------------------------


def _check_values(values, shape):
    values = np.asarray(values, dtype=float)
    if values.shape != shape:
        raise ValueError(f"expected component shape {shape}, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("field values must be finite")
    return values


class _Arithmetic:
    """Componentwise linear arithmetic shared by all field types."""

    _data_attr = "values"

    def _data(self):
        return getattr(self, self._data_attr)

    def _wrap(self, data):
        return type(self)(self.grid, data)

    def __add__(self, other):
        _same_grid(self, other)
        return self._wrap(self._data() + other._data())

    def __sub__(self, other):
        _same_grid(self, other)
        return self._wrap(self._data() - other._data())

    def __mul__(self, scalar):
        return self._wrap(self._data() * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return self._wrap(-self._data())


@dataclass(eq=False)
class ScalarField(_Arithmetic):
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = _check_values(self.values, (self.grid.n, self.grid.n))


@dataclass(eq=False)
class VectorField(_Arithmetic):
    grid: GridSpec
    components: np.ndarray  # (2, n, n)

    _data_attr = "components"

    def __post_init__(self):
        self.components = _check_values(self.components, (2, self.grid.n, self.grid.n))


@dataclass(eq=False)
class CovectorField(_Arithmetic):
    grid: GridSpec
    components: np.ndarray  # (2, n, n)

    _data_attr = "components"

    def __post_init__(self):
        self.components = _check_values(self.components, (2, self.grid.n, self.grid.n))


@dataclass(eq=False)
class Tensor2Field(_Arithmetic):
    grid: GridSpec
    components: np.ndarray  # (2, 2, n, n), components[i, j] = T^ij

    _data_attr = "components"

    def __post_init__(self):
        self.components = _check_values(self.components, (2, 2, self.grid.n, self.grid.n))

    def is_symmetric(self, tol=0.0):
        c = self.components
        return bool(np.max(np.abs(c[0, 1] - c[1, 0])) <= tol)


def zeros_scalar(grid):
    return ScalarField(grid, np.zeros((grid.n, grid.n)))


def zeros_vector(grid):
    return VectorField(grid, np.zeros((2, grid.n, grid.n)))


def zeros_tensor2(grid):
    return Tensor2Field(grid, np.zeros((2, 2, grid.n, grid.n)))


def _same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError("grid mismatch between field operands")


# ---------------------------------------------------------------------------
# Transforms, derivatives, dealiasing
# ---------------------------------------------------------------------------


def _deriv_values(values, grid, axis):
    t = _tables(grid)
    k = t["kx"] if axis == 0 else t["ky"]
    return sfft.irfft2(1j * k * sfft.rfft2(values), s=(grid.n, grid.n))


def dealias_values(values, grid):
    t = _tables(grid)
    return sfft.irfft2(t["mask"] * sfft.rfft2(values), s=(grid.n, grid.n))


def _mult(a, b, grid):
    """Pointwise product truncated to the 2/3 band (alias-free for banded input)."""
    return dealias_values(a * b, grid)


def partial(f: ScalarField, axis: int) -> ScalarField:
    """Fourier-collocation partial derivative along axis 0 (x) or 1 (y)."""
    if axis not in (0, 1):
        raise ValueError("axis must be 0 or 1")
    return ScalarField(f.grid, _deriv_values(f.values, f.grid, axis))


def gradient(f: ScalarField) -> VectorField:
    g = np.stack([_deriv_values(f.values, f.grid, 0), _deriv_values(f.values, f.grid, 1)])
    return VectorField(f.grid, g)


def jacobian(X: VectorField) -> Tensor2Field:
    """Velocity gradient as a 2-tensor, components[i, j] = d_j X^i."""
    n = X.grid.n
    J = np.empty((2, 2, n, n))
    for i in range(2):
        for j in range(2):
            J[i, j] = _deriv_values(X.components[i], X.grid, j)
    return Tensor2Field(X.grid, J)


def divergence(X: VectorField) -> ScalarField:
    v = _deriv_values(X.components[0], X.grid, 0) + _deriv_values(X.components[1], X.grid, 1)
    return ScalarField(X.grid, v)


def dealias(field):
    """Truncate a field to the 2/3 band, returning the same field type."""
    if isinstance(field, ScalarField):
        return ScalarField(field.grid, dealias_values(field.values, field.grid))
    data = field._data()
    out = np.stack([dealias_values(c, field.grid) for c in data.reshape(-1, *data.shape[-2:])])
    return type(field)(field.grid, out.reshape(data.shape))


# ---------------------------------------------------------------------------
# First-order operators
# ---------------------------------------------------------------------------


def advect_scalar(X: VectorField, f: ScalarField) -> ScalarField:
    """Directional derivative X . grad f."""
    _same_grid(X, f)
    out = np.zeros_like(f.values)
    for j in range(2):
        out += _mult(X.components[j], _deriv_values(f.values, f.grid, j), f.grid)
    return ScalarField(f.grid, out)


def directional_derivative(X: VectorField, Y: VectorField) -> VectorField:
    """Flat covariant derivative grad_X Y, components X^j d_j Y^i."""
    _same_grid(X, Y)
    n = X.grid.n
    out = np.zeros((2, n, n))
    for i in range(2):
        for j in range(2):
            out[i] += _mult(X.components[j], _deriv_values(Y.components[i], Y.grid, j), X.grid)
    return VectorField(X.grid, out)


def directional_derivative_tensor2(X: VectorField, T: Tensor2Field) -> Tensor2Field:
    """Componentwise advection X^m d_m T^jk."""
    _same_grid(X, T)
    n = X.grid.n
    out = np.zeros((2, 2, n, n))
    for j in range(2):
        for k in range(2):
            for m in range(2):
                out[j, k] += _mult(X.components[m],
                                   _deriv_values(T.components[j, k], T.grid, m), X.grid)
    return Tensor2Field(X.grid, out)


def jacobi_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y] = grad_X Y - grad_Y X."""
    return directional_derivative(X, Y) - directional_derivative(Y, X)


def ad_field(X: VectorField, Y: VectorField) -> VectorField:
    """Vector-field adjoint action ad_X Y = -[X, Y]."""
    return -jacobi_bracket(X, Y)


def lie_deriv_oneform(u: VectorField, m: CovectorField) -> CovectorField:
    """L_u m with components u^j d_j m_i + (d_i u^j) m_j."""
    _same_grid(u, m)
    n = u.grid.n
    out = np.zeros((2, n, n))
    for i in range(2):
        for j in range(2):
            out[i] += _mult(u.components[j], _deriv_values(m.components[i], m.grid, j), u.grid)
            out[i] += _mult(_deriv_values(u.components[j], u.grid, i), m.components[j], u.grid)
    return CovectorField(u.grid, out)


def lie_deriv_tensor2(u: VectorField, F: Tensor2Field) -> Tensor2Field:
    """L_u F with components u^k d_k F^ij - F^kj d_k u^i - F^ik d_k u^j.

    Symmetry of F is preserved bit-exactly: the two gradient terms are
    assembled as G + G^T before subtraction.
    """
    _same_grid(u, F)
    n = u.grid.n
    adv = np.zeros((2, 2, n, n))
    for i in range(2):
        for j in range(2):
            for k in range(2):
                adv[i, j] += _mult(u.components[k],
                                   _deriv_values(F.components[i, j], F.grid, k), u.grid)
    G = np.zeros((2, 2, n, n))
    du = np.empty((2, 2, n, n))  # du[i, k] = d_k u^i
    for i in range(2):
        for k in range(2):
            du[i, k] = _deriv_values(u.components[i], u.grid, k)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                G[i, j] += _mult(F.components[k, j], du[i, k], u.grid)
    sym = G + np.swapaxes(G, 0, 1)
    return Tensor2Field(u.grid, adv - sym)


def hessian_contract(u: VectorField, F: Tensor2Field) -> VectorField:
    """Flat Hessian contraction, components F^jk d_j d_k u^i."""
    _same_grid(u, F)
    n = u.grid.n
    out = np.zeros((2, n, n))
    for i in range(2):
        for j in range(2):
            for k in range(2):
                d2 = _deriv_values(_deriv_values(u.components[i], u.grid, j), u.grid, k)
                out[i] += _mult(F.components[j, k], d2, u.grid)
    return VectorField(u.grid, out)


def div_tensor(T: Tensor2Field) -> VectorField:
    """Covariant divergence contracting the first index, components d_j T^jk."""
    n = T.grid.n
    out = np.zeros((2, n, n))
    for k in range(2):
        for j in range(2):
            out[k] += _deriv_values(T.components[j, k], T.grid, j)
    return VectorField(T.grid, out)


def c_operator(q, F: Tensor2Field):
    """Anisotropic dissipation-like operator C(q)^i = d_j (d_k q^i F^jk).

    Self-adjoint and negative semidefinite with respect to the grid inner
    product whenever F is symmetric positive semidefinite; reduces to
    alpha^2 Laplacian for F = alpha^2 identity.
    """
    _same_grid(q, F)
    n = q.grid.n
    out = np.zeros((2, n, n))
    for i in range(2):
        for j in range(2):
            flux = np.zeros((n, n))
            for k in range(2):
                flux += _mult(_deriv_values(q.components[i], q.grid, k),
                              F.components[j, k], q.grid)
            out[i] += _deriv_values(flux, q.grid, j)
    return type(q)(q.grid, out)


def outer_product(X: VectorField, Y: VectorField) -> Tensor2Field:
    _same_grid(X, Y)
    comps = np.einsum("iab,jab->ijab", X.components, Y.components)
    return Tensor2Field(X.grid, comps)


def leray_project(X: VectorField) -> VectorField:
    """L2-orthogonal projection onto divergence-free fields, mode by mode.

    The zero mode is untouched (a constant mean flow is divergence-free).
    """
    t = _tables(X.grid)
    n = X.grid.n
    u_hat = sfft.rfft2(X.components[0])
    v_hat = sfft.rfft2(X.components[1])
    kx, ky, k2s = t["kx"], t["ky"], t["k2_safe"]
    k_dot = kx * u_hat + ky * v_hat
    u_hat = u_hat - kx * k_dot / k2s
    v_hat = v_hat - ky * k_dot / k2s
    out = np.stack([sfft.irfft2(u_hat, s=(n, n)), sfft.irfft2(v_hat, s=(n, n))])
    return VectorField(X.grid, out)


def poisson_solve(f: ScalarField) -> ScalarField:
    """Zero-mean solution of the Poisson problem (Laplacian phi = f)."""
    t = _tables(f.grid)
    f_hat = sfft.rfft2(f.values)
    phi_hat = -f_hat / t["k2_safe"]
    phi_hat[0, 0] = 0.0
    return ScalarField(f.grid, sfft.irfft2(phi_hat, s=(f.grid.n, f.grid.n)))


def inner_product(a, b) -> float:
    """Grid quadrature of the pointwise flat pairing of two fields.

    Trapezoidal quadrature on a uniform periodic grid, which is spectrally
    accurate.  Vector and covector operands pair naturally.
    """
    _same_grid(a, b)
    da, db = a._data(), b._data()
    if da.shape != db.shape:
        raise ValueError("operands must carry the same number of components")
    weight = (a.grid.length / a.grid.n) ** 2
    return float(np.sum(da * db) * weight)


def l2_norm(a) -> float:
    return float(np.sqrt(max(inner_product(a, a), 0.0)))


def sup_norm(a) -> float:
    return float(np.max(np.abs(a._data())))


# ---------------------------------------------------------------------------
# Second-order fluctuation identity and advected expansion
# ---------------------------------------------------------------------------


def lemma2_check(ubar: VectorField, w: VectorField, chi: VectorField,
                 wdot: VectorField, chidot: VectorField, flat: bool = True) -> float:
    """Sup-norm difference of the two equivalent second-order fluctuation forms.

    Deterministic substitutions replace the stochastic differentials by time
    derivatives.  The first form reads

        ad_w ad_w ubar + ad_{chi - grad_w w} ubar
          + d/dt (chi - grad_w w) + ad_w wdot

    and the second

        chidot + ad_chi ubar - Hess(ubar)(w, w) - 2 grad_w (wdot + ad_w ubar),

    where the curvature term of the second form vanishes on flat geometry
    (the only geometry supported).
    """
    if not flat:
        raise ValueError("curved geometry unsupported: curvature term not implemented")
    grad_w_w = directional_derivative(w, w)
    ddt_grad_w_w = directional_derivative(wdot, w) + directional_derivative(w, wdot)
    form_a = (
        ad_field(w, ad_field(w, ubar))
        + ad_field(chi - grad_w_w, ubar)
        + (chidot - ddt_grad_w_w)
        + ad_field(w, wdot)
    )
    v_prime = wdot + ad_field(w, ubar)
    form_b = (
        chidot
        + ad_field(chi, ubar)
        - hessian_contract(ubar, outer_product(w, w))
        - 2.0 * directional_derivative(w, v_prime)
    )
    return sup_norm(form_a - form_b)


def advected_expansion(abar: ScalarField, w: VectorField, chi: VectorField,
                       eps: float) -> ScalarField:
    """Second-order model of a scalar pushed forward by the fluctuation flow,

        abar - eps L_w abar + (eps^2/2) (-L_{chi - grad_w w} abar + L_w L_w abar),

    with L_X acting on scalars as X . grad.
    """
    first = advect_scalar(w, abar)
    second = (
        -advect_scalar(chi - directional_derivative(w, w), abar)
        + advect_scalar(w, advect_scalar(w, abar))
    )
    values = abar.values - eps * first.values + 0.5 * eps * eps * second.values
    return ScalarField(abar.grid, values)


def evaluate_at_points(f: ScalarField, x, y, tol=1e-13):
    """Exact trigonometric evaluation of a band-limited field off the grid.

    Sums the retained Fourier modes directly; cost scales with the number of
    significant modes, so keep fields banded when sampling many points.
    """
    n = f.grid.n
    scale = TWO_PI / f.grid.length
    c = sfft.rfft2(f.values) / (n * n)
    kx_int = np.rint(np.fft.fftfreq(n) * n).astype(int)
    weight = np.full(n // 2 + 1, 2.0)
    weight[0] = 1.0
    weight[-1] = 1.0
    sig = np.abs(c) > tol * max(np.max(np.abs(c)), 1e-300)
    ix, iy = np.nonzero(sig)
    if len(ix) == 0:
        return np.zeros(np.broadcast(x, y).shape)
    kx_sel = kx_int[ix] * scale
    ky_sel = iy * scale
    coef = c[ix, iy] * weight[iy]
    xf = np.asarray(x, dtype=float).ravel()
    yf = np.asarray(y, dtype=float).ravel()
    phases = np.exp(1j * (np.outer(xf, kx_sel) + np.outer(yf, ky_sel)))
    vals = (phases @ coef).real
    return vals.reshape(np.broadcast(x, y).shape)


# ---------------------------------------------------------------------------
# Band-limited random field constructors (shared by tests and experiments)
# ---------------------------------------------------------------------------


def random_scalar(grid: GridSpec, k_max: int, rng, amplitude: float = 1.0) -> ScalarField:
    """Random real field with spectrum confined to |k|_inf <= k_max."""
    if k_max < 1 or k_max > grid.n // 3:
        raise ValueError("k_max must lie in [1, n/3]")
    white = rng.standard_normal((grid.n, grid.n))
    t = _tables(grid)
    kx_int = np.rint(np.fft.fftfreq(grid.n) * grid.n).astype(int)[:, None]
    ky_int = np.arange(grid.n // 2 + 1)[None, :]
    band = (np.abs(kx_int) <= k_max) & (ky_int <= k_max)
    del t
    values = sfft.irfft2(band * sfft.rfft2(white), s=(grid.n, grid.n))
    peak = np.max(np.abs(values))
    if peak > 0:
        values = values * (amplitude / peak)
    return ScalarField(grid, values)


def random_vector(grid: GridSpec, k_max: int, rng, amplitude: float = 1.0) -> VectorField:
    comps = np.stack([random_scalar(grid, k_max, rng, amplitude).values for _ in range(2)])
    return VectorField(grid, comps)


def random_div_free(grid: GridSpec, k_max: int, rng, amplitude: float = 1.0) -> VectorField:
    X = leray_project(random_vector(grid, k_max, rng))
    peak = np.max(np.abs(X.components))
    if peak > 0:
        X = X * (amplitude / peak)
    return X


def random_symmetric_psd_tensor(grid: GridSpec, k_max: int, rng, terms: int = 2,
                                amplitude: float = 1.0) -> Tensor2Field:
    """Pointwise-PSD symmetric tensor sum_i a_i (x) a_i; band is 2 k_max."""
    out = zeros_tensor2(grid)
    for _ in range(terms):
        a = random_vector(grid, k_max, rng, amplitude)
        out = out + outer_product(a, a)
    return out
