"""Spectral exterior calculus for Lie-algebra-valued forms on a flat periodic grid.

Layout of a k-form's data: ``(C(d, k), n, *grid.shape)``.  The first axis runs
over increasing index tuples ``I = (i_1 < ... < i_k)`` in lexicographic order,
the second over Lie-algebra coefficients.  Real-valued forms are the u1 case
with ``n = 1``.

Differentiation is by FFT with the Nyquist wavenumber zeroed, which makes the
discrete derivative exactly skew-adjoint for the grid inner product.
Products are taken pointwise and, when ``grid.dealias`` is set, wrapped in the
2/3-rule projector on both inputs and the output.  The codifferential's bracket
term is the exact transpose of the one in :func:`cov_d`, so the adjointness
identity holds to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from math import comb, prod

import numpy as np
from scipy import ndimage

from chromofluid import kernels
from chromofluid.lie import LieAlgebra, make_algebra

# Sign of the pointwise gamma-adjoint of b -> [a, b].  Ad-invariance makes it -1;
# tests flip it to confirm the check suite notices.
_BRACKET_ADJOINT_SIGN = -1.0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on a flat torus."""

    n: tuple[int, ...]
    lengths: tuple[float, ...] = None
    dealias: bool = True

    def __post_init__(self):
        n = tuple(int(v) for v in self.n)
        if len(n) not in (2, 3):
            raise ValueError(f"grid dimension must be 2 or 3, got {len(n)}")
        for v in n:
            if v < 8 or v & (v - 1):
                raise ValueError(f"points per axis must be a power of two >= 8, got {v}")
        lengths = self.lengths
        if lengths is None:
            lengths = (2 * np.pi,) * len(n)
        lengths = tuple(float(v) for v in lengths)
        if len(lengths) != len(n) or any(v <= 0 for v in lengths):
            raise ValueError(f"bad lengths {lengths}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "lengths", lengths)

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / N for L, N in zip(self.lengths, self.n))

    @property
    def cell_volume(self) -> float:
        return float(prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(prod(self.lengths))

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.dim, 0))

    def with_dealias(self, flag: bool) -> "Grid":
        return Grid(self.n, self.lengths, flag)

    def coords(self) -> list[np.ndarray]:
        x1 = [np.arange(N) * h for N, h in zip(self.n, self.spacing)]
        return list(np.meshgrid(*x1, indexing="ij"))

    # -- spectral machinery (rfft over the trailing d axes) ------------------

    @cached_property
    def _mode_numbers(self) -> list[np.ndarray]:
        out = []
        for i, N in enumerate(self.n):
            if i == self.dim - 1:
                m = np.arange(N // 2 + 1, dtype=float)
            else:
                m = np.fft.fftfreq(N, 1.0 / N)
            shape = [1] * self.dim
            shape[i] = m.size
            out.append(m.reshape(shape))
        return out

    @cached_property
    def wavenumbers(self) -> list[np.ndarray]:
        """Derivative wavenumbers (Nyquist zeroed), broadcastable to rfft shape."""
        ks = []
        for m, N, L in zip(self._mode_numbers, self.n, self.lengths):
            k = m * (2 * np.pi / L)
            k = np.where(np.abs(m) == N // 2, 0.0, k)
            ks.append(k)
        return ks

    @cached_property
    def k_squared(self) -> np.ndarray:
        return sum(k**2 for k in self.wavenumbers)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        mask = np.ones((1,) * self.dim, dtype=bool)
        for m, N in zip(self._mode_numbers, self.n):
            mask = mask & (np.abs(m) < N / 3.0)
        return mask

    def fft(self, a: np.ndarray) -> np.ndarray:
        return np.fft.rfftn(a, axes=self.axes)

    def ifft(self, ah: np.ndarray) -> np.ndarray:
        return np.fft.irfftn(ah, s=self.n, axes=self.axes)

    def deriv(self, a: np.ndarray, axis: int) -> np.ndarray:
        return self.ifft(1j * self.wavenumbers[axis] * self.fft(a))

    def gradient(self, a: np.ndarray) -> np.ndarray:
        ah = self.fft(a)
        return np.stack([self.ifft(1j * k * ah) for k in self.wavenumbers])

    def project(self, a: np.ndarray) -> np.ndarray:
        """2/3-rule spectral truncation (identity when dealiasing is off)."""
        if not self.dealias:
            return a
        return self.ifft(self.fft(a) * self.dealias_mask)

    def integrate(self, a: np.ndarray) -> np.ndarray:
        return np.sum(a, axis=self.axes) * self.cell_volume


def components(d: int, k: int) -> list[tuple[int, ...]]:
    return list(combinations(range(d), k))


def _wedge_table(d: int, k: int) -> list[tuple[int, int, int, float]]:
    """Entries (j, src, dst, sign) with dx_j ^ dx_I(src) = sign dx_J(dst)."""
    src_list = components(d, k)
    dst_index = {J: i for i, J in enumerate(components(d, k + 1))}
    table = []
    for si, I in enumerate(src_list):
        for j in range(d):
            if j in I:
                continue
            J = tuple(sorted(I + (j,)))
            sign = (-1.0) ** sum(1 for i in I if i < j)
            table.append((j, si, dst_index[J], sign))
    return table


@dataclass(frozen=True, eq=False)
class GForm:
    """A Lie-algebra-valued differential form sampled on a periodic grid."""

    grid: Grid
    degree: int
    algebra: LieAlgebra
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = self.grid.dim
        if not 0 <= self.degree <= d:
            raise ValueError(f"degree {self.degree} out of range for dimension {d}")
        data = np.asarray(self.data, dtype=float)
        expected = (comb(d, self.degree), self.algebra.dim) + self.grid.shape
        if data.shape != expected:
            raise ValueError(f"GForm data shape {data.shape} != expected {expected}")
        if not np.all(np.isfinite(data)):
            raise ValueError("GForm data contains non-finite values")
        object.__setattr__(self, "data", data)

    @classmethod
    def zeros(cls, grid: Grid, degree: int, algebra: LieAlgebra) -> "GForm":
        shape = (comb(grid.dim, degree), algebra.dim) + grid.shape
        return cls(grid, degree, algebra, np.zeros(shape))

    @property
    def ncomp(self) -> int:
        return self.data.shape[0]

    def like(self, data: np.ndarray, degree: int | None = None) -> "GForm":
        return GForm(self.grid, self.degree if degree is None else degree, self.algebra, data)

    def _same(self, other: "GForm"):
        if not isinstance(other, GForm):
            raise TypeError(f"expected GForm, got {type(other).__name__}")
        if other.grid != self.grid or other.algebra != self.algebra:
            raise ValueError("forms live on different grids or algebras")

    def __add__(self, other):
        self._same(other)
        if other.degree != self.degree:
            raise ValueError("cannot add forms of different degree")
        return self.like(self.data + other.data)

    def __sub__(self, other):
        self._same(other)
        if other.degree != self.degree:
            raise ValueError("cannot subtract forms of different degree")
        return self.like(self.data - other.data)

    def __neg__(self):
        return self.like(-self.data)

    def __mul__(self, scalar):
        return self.like(self.data * float(scalar))

    __rmul__ = __mul__

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.data))) if self.data.size else 0.0

    def norm_l2(self) -> float:
        return float(np.sqrt(max(l2_inner(self, self), 0.0)))


def _require(cond: bool, msg: str):
    if not cond:
        raise ValueError(msg)


def _pair(A: GForm, w: GForm):
    A._same(w)
    _require(A.degree == 1, f"connection must be a 1-form, got degree {A.degree}")


def _bracket(grid: Grid, alg: LieAlgebra, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # x, y: (n, *shape), both already projected by the caller
    return alg.bracket_field(x, y)


# ---------------------------------------------------------------------------
# exterior derivative, covariant derivative, curvature, codifferential


def ext_d(w: GForm) -> GForm:
    """Exterior derivative (component-wise in the Lie index)."""
    g = w.grid
    _require(w.degree < g.dim, f"ext_d of a top-degree ({w.degree}) form")
    out = np.zeros((comb(g.dim, w.degree + 1), w.algebra.dim) + g.shape)
    if not w.data.any():
        return w.like(out, w.degree + 1)
    hat = g.fft(w.data)
    for j, si, di, sign in _wedge_table(g.dim, w.degree):
        out[di] += sign * g.ifft(1j * g.wavenumbers[j] * hat[si])
    return w.like(out, w.degree + 1)


def _bracket_wedge(A: GForm, w: GForm) -> np.ndarray:
    """Data of P([A ^ w]) with the left-multiplication sign convention."""
    g, alg = w.grid, w.algebra
    out = np.zeros((comb(g.dim, w.degree + 1), alg.dim) + g.shape)
    if alg.is_abelian:
        return out
    PA = g.project(A.data)
    Pw = g.project(w.data)
    for j, si, di, sign in _wedge_table(g.dim, w.degree):
        out[di] += sign * _bracket(g, alg, PA[j], Pw[si])
    return g.project(out)


def cov_d(A: GForm, w: GForm) -> GForm:
    """Covariant exterior derivative ``d^A w = dw + [A ^ w]``."""
    _pair(A, w)
    _require(w.degree < w.grid.dim, f"cov_d of a top-degree ({w.degree}) form")
    dw = ext_d(w)
    if w.algebra.is_abelian:
        return dw
    return dw.like(dw.data + _bracket_wedge(A, w))


def curvature(A: GForm) -> GForm:
    """``B(u, v) = dA(u, v) + [A(u), A(v)]``."""
    _require(A.degree == 1, f"curvature needs a 1-form, got degree {A.degree}")
    dA = ext_d(A)
    alg, g = A.algebra, A.grid
    if alg.is_abelian:
        return dA
    PA = g.project(A.data)
    out = dA.data.copy()
    extra = np.zeros_like(out)
    for ci, (i, j) in enumerate(components(g.dim, 2)):
        extra[ci] = _bracket(g, alg, PA[i], PA[j])
    return dA.like(out + g.project(extra))


def codiff(A: GForm, b: GForm) -> GForm:
    """Covariant codifferential, the grid-exact adjoint of :func:`cov_d`."""
    _pair(A, b)
    _require(b.degree >= 1, "codifferential of a 0-form")
    g, alg = b.grid, b.algebra
    k = b.degree - 1
    out = np.zeros((comb(g.dim, k), alg.dim) + g.shape)
    table = _wedge_table(g.dim, k)
    if b.data.any():
        hat = g.fft(b.data)
        for j, si, di, sign in table:
            # transpose of i k_j is -i k_j
            out[si] -= sign * g.ifft(1j * g.wavenumbers[j] * hat[di])
    if not alg.is_abelian:
        PA = g.project(A.data)
        Pb = g.project(b.data)
        extra = np.zeros_like(out)
        for j, si, di, sign in table:
            extra[si] += sign * _BRACKET_ADJOINT_SIGN * _bracket(g, alg, PA[j], Pb[di])
        out += g.project(extra)
    return b.like(out, k)


def ext_codiff(b: GForm) -> GForm:
    """Flat codifferential, adjoint of :func:`ext_d`."""
    return codiff(GForm.zeros(b.grid, 1, b.algebra), b)


# ---------------------------------------------------------------------------
# pairings and contractions


def l2_inner(a: GForm, b: GForm) -> float:
    """``<a, b> = integral of (g gamma)(a, b) mu`` (flat metric, orthonormal dx^I)."""
    a._same(b)
    if a.degree != b.degree:
        raise ValueError("l2_inner of forms of different degree")
    gb = np.einsum("pq,cq...->cp...", a.algebra.metric, b.data)
    return float(np.sum(a.data * gb) * a.grid.cell_volume)


def l2_inner_spectral(a: GForm, b: GForm) -> float:
    """Same pairing evaluated from Fourier coefficients (Parseval)."""
    a._same(b)
    g = a.grid
    ah = np.fft.fftn(a.data, axes=g.axes)
    bh = np.fft.fftn(b.data, axes=g.axes)
    gb = np.einsum("pq,cq...->cp...", a.algebra.metric, np.conj(bh))
    s = np.sum(ah * gb).real
    npts = prod(g.n)
    return float(s / npts * g.cell_volume)


def pointwise_inner(a: GForm, b: GForm) -> np.ndarray:
    """Pointwise ``(g gamma)(a, b)`` as a plain array on the grid."""
    a._same(b)
    return np.einsum("pq,cp...,cq...->...", a.algebra.metric, a.data, b.data)


def vector_field(grid: Grid, comps) -> GForm:
    """Wrap ``d`` real component arrays as a vector field (u1-valued 1-form)."""
    arr = np.asarray(comps, dtype=float)
    if arr.shape != (grid.dim,) + grid.shape:
        raise ValueError(f"vector field components must have shape {(grid.dim,) + grid.shape}")
    return GForm(grid, 1, make_algebra("u1"), arr[:, None])


def scalar_field(grid: Grid, values, algebra: LieAlgebra | None = None) -> GForm:
    """Wrap a real array (or ``(n, *shape)`` Lie-valued array) as a 0-form."""
    algebra = algebra or make_algebra("u1")
    arr = np.asarray(values, dtype=float)
    if arr.shape == grid.shape:
        arr = arr[None]
    return GForm(grid, 0, algebra, arr.reshape((1, algebra.dim) + grid.shape))


def _vec(v: GForm) -> np.ndarray:
    _require(v.degree == 1 and v.algebra.dim == 1, "expected a vector field (u1 1-form)")
    return v.data[:, 0]


def contract(a: GForm, v: GForm) -> GForm:
    """Evaluate a Lie-valued 1-form on a vector field: ``a(v)``, dealiased."""
    _require(a.degree == 1, "contract needs a 1-form")
    g = a.grid
    vv = g.project(_vec(v))
    pa = g.project(a.data)
    out = np.einsum("j...,jn...->n...", vv, pa)
    return a.like(g.project(out)[None], 0)


def interior_product(v: GForm, w: GForm) -> GForm:
    """``(i_v w)(u) = w(v, u)`` for a 2-form ``w``."""
    _require(w.degree == 2, f"interior_product needs a 2-form, got degree {w.degree}")
    g = w.grid
    d = g.dim
    vv = g.project(_vec(v))
    pw = g.project(w.data)
    out = np.zeros((d, w.algebra.dim) + g.shape)
    for ci, (i, j) in enumerate(components(d, 2)):
        # w(e_i, e_j) = pw[ci];  (i_v w)_j += v_i w_ij,  (i_v w)_i += v_j w_ji
        out[j] += vv[i] * pw[ci]
        out[i] -= vv[j] * pw[ci]
    return w.like(g.project(out), 1)


def leray_project(v: GForm) -> GForm:
    """L2-orthogonal projection onto divergence-free vector fields."""
    g = v.grid
    vv = _vec(v)
    hat = g.fft(vv)
    ks = g.wavenumbers
    k2 = g.k_squared
    kdotv = sum(k * hat[i] for i, k in enumerate(ks))
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(k2 > 0, kdotv / np.where(k2 > 0, k2, 1.0), 0.0)
    out = np.stack([g.ifft(hat[i] - ks[i] * phi) for i in range(g.dim)])
    return v.like(out[:, None])


def divergence(v: GForm) -> np.ndarray:
    g = v.grid
    vv = _vec(v)
    return sum(g.deriv(vv[i], i) for i in range(g.dim))


# ---------------------------------------------------------------------------
# gauge transformations


def gauge_transform(A: GForm, tau: np.ndarray) -> GForm:
    """``A -> Ad_{tau^-1} A + tau^-1 d tau`` for a group-valued field ``tau``.

    ``tau`` has shape ``(*grid.shape, r, r)`` in the defining representation.
    """
    g, alg = A.grid, A.algebra
    _require(A.degree == 1, "gauge_transform acts on connections (1-forms)")
    tau = np.asarray(tau, dtype=complex)
    r = alg.rep_dim
    if tau.shape != g.shape + (r, r):
        raise ValueError(f"tau must have shape {g.shape + (r, r)}, got {tau.shape}")
    tinv = np.conj(np.swapaxes(tau, -1, -2))
    # move matrix axes to the front for spectral differentiation
    tfront = np.moveaxis(tau, (-2, -1), (0, 1))
    out = np.zeros_like(A.data)
    for j in range(g.dim):
        dt = g.deriv(tfront.real, j) + 1j * g.deriv(tfront.imag, j)
        dt = np.moveaxis(dt, (0, 1), (-2, -1))
        Aj = np.moveaxis(A.data[j], 0, -1)  # (*shape, n)
        X = alg.to_matrix(Aj)
        Y = tinv @ X @ tau + tinv @ dt
        out[j] = np.moveaxis(alg.from_matrix(Y), -1, 0)
    return A.like(out)


def adjoint_action(tau_inv: np.ndarray, w: GForm) -> GForm:
    """Pointwise ``Ad_{tau_inv} w`` for any degree."""
    alg = w.algebra
    out = np.empty_like(w.data)
    for c in range(w.ncomp):
        X = alg.to_matrix(np.moveaxis(w.data[c], 0, -1))
        tau = np.conj(np.swapaxes(tau_inv, -1, -2))
        out[c] = np.moveaxis(alg.from_matrix(tau_inv @ X @ tau), -1, 0)
    return w.like(out)


# ---------------------------------------------------------------------------
# sampling and construction helpers


class FourierSampler:
    """Trigonometric interpolant of a stack of grid fields, evaluated at off-grid points.

    The Fourier coefficients are computed once; modes below ``rel_cutoff``
    times the largest coefficient (rounding noise for band-limited data) are
    dropped so repeated evaluation stays cheap.  Nyquist modes are discarded,
    matching the derivative convention.
    """

    def __init__(self, grid: Grid, fields: np.ndarray, rel_cutoff: float = 1e-15):
        fields = np.asarray(fields, dtype=float)
        if fields.shape[1:] != grid.shape:
            raise ValueError(f"fields must have shape (F, *{grid.shape}), got {fields.shape}")
        self.grid = grid
        self.nfields = fields.shape[0]
        hat = np.fft.fftn(fields, axes=grid.axes) / prod(grid.n)
        mode_m = []
        for i, N in enumerate(grid.n):
            m = np.fft.fftfreq(N, 1.0 / N).round().astype(np.int64)
            nyq = np.abs(m) == N // 2
            shape = [1] * grid.dim
            shape[i] = N
            hat = hat * np.where(nyq, 0.0, 1.0).reshape((1,) + tuple(shape))
            mode_m.append(m)
        mv = np.stack([m.ravel() for m in np.meshgrid(*mode_m, indexing="ij")], axis=1)
        coef = hat.reshape(self.nfields, -1)
        mag = np.max(np.abs(coef), axis=0)
        top = mag.max() if mag.size else 0.0
        keep = mag > rel_cutoff * top if top > 0 else np.zeros(mag.shape, bool)
        self.coef_re = np.ascontiguousarray(coef.real[:, keep])
        self.coef_im = np.ascontiguousarray(coef.imag[:, keep])
        self.modes = np.ascontiguousarray(mv[keep])
        self.base = np.array([2 * np.pi / L for L in grid.lengths])

    @property
    def kvecs(self) -> np.ndarray:
        return self.modes * self.base

    @property
    def nmodes(self) -> int:
        return self.modes.shape[0]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=float)))
        if points.shape[1] != self.grid.dim:
            raise ValueError(f"points must have shape (P, {self.grid.dim})")
        if self.nmodes == 0:
            return np.zeros((self.nfields, points.shape[0]))
        return kernels.fourier_eval(self.coef_re, self.coef_im, self.modes, self.base, points)


class CubicSampler:
    """Periodic cubic-spline interpolation (cheaper, not spectrally exact)."""

    def __init__(self, grid: Grid, fields: np.ndarray):
        fields = np.asarray(fields, dtype=float)
        if fields.shape[1:] != grid.shape:
            raise ValueError(f"fields must have shape (F, *{grid.shape}), got {fields.shape}")
        self.grid = grid
        self.nfields = fields.shape[0]
        self.coeffs = [ndimage.spline_filter(f, order=3, mode="grid-wrap") for f in fields]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        idx = (points / np.asarray(self.grid.spacing)).T
        return np.stack(
            [
                ndimage.map_coordinates(c, idx, order=3, mode="grid-wrap", prefilter=False)
                for c in self.coeffs
            ]
        )


def make_sampler(grid: Grid, fields: np.ndarray, method: str = "fourier"):
    if method == "fourier":
        return FourierSampler(grid, fields)
    if method == "cubic":
        return CubicSampler(grid, fields)
    raise ValueError(f"unknown interpolation method {method!r}")


def sample_at(grid: Grid, fields: np.ndarray, points: np.ndarray, method: str = "fourier") -> np.ndarray:
    """Evaluate grid fields at off-grid points.

    ``fields`` has shape ``(F, *grid.shape)``, ``points`` shape ``(P, d)``;
    returns ``(F, P)``.  ``method`` is ``"fourier"`` (trigonometric
    interpolation, exact for band-limited fields) or ``"cubic"``.
    """
    return make_sampler(grid, fields, method)(points)


def random_form(
    grid: Grid,
    degree: int,
    algebra: LieAlgebra,
    rng: np.random.Generator,
    kmax: int = 3,
    amplitude: float = 1.0,
) -> GForm:
    """Random real form whose Fourier support lies in ``|k_i| <= kmax``."""
    shape = (comb(grid.dim, degree), algebra.dim) + grid.shape
    hat = np.zeros(shape[:2] + tuple(grid.fft(np.zeros(grid.shape)).shape), dtype=complex)
    sel = np.ones(hat.shape[2:], dtype=bool)
    for m in grid._mode_numbers:
        sel = sel & (np.abs(m) <= kmax)
    noise = rng.standard_normal(hat.shape) + 1j * rng.standard_normal(hat.shape)
    hat = np.where(sel, noise, 0.0)
    data = grid.ifft(hat)
    scale = np.max(np.abs(data))
    if scale > 0:
        data *= amplitude / scale
    return GForm(grid, degree, algebra, data)
