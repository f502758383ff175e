"""Finite-dimensional Lie algebra kernel for the supported gauge groups.

Every algebra is given in a basis that is orthonormal for its Ad-invariant
inner product, so the metric matrix is the identity and raising/lowering Lie
indices is a no-op.  For compact algebras with Ad-invariant metric the
coadjoint action is then just ``ad*_xi mu = -[xi, mu]``; no separate
operation is needed for it.

Conventions (defining representation, ``X = sum_a x^a T_a``):

* u1:  ``T_1 = i``                       metric ``gamma(X, Y) = -Re tr(XY)``
* su2: ``T_a = -(i/2) sigma_a``          metric ``gamma(X, Y) = -2 Re tr(XY)``
* su3: ``T_a = -(i/2) lambda_a``         metric ``gamma(X, Y) = -2 Re tr(XY)``

so ``[e_a, e_b] = c^c_ab e_c`` with ``c = epsilon`` for su2 and the usual
Gell-Mann ``f_abc`` for su3.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from chromofluid import kernels

ALGEBRA_NAMES = ("u1", "su2", "su3")


def _pauli() -> np.ndarray:
    return np.array(
        [
            [[0, 1], [1, 0]],
            [[0, -1j], [1j, 0]],
            [[1, 0], [0, -1]],
        ],
        dtype=complex,
    )


def _gell_mann() -> np.ndarray:
    lam = np.zeros((8, 3, 3), dtype=complex)
    lam[0][0, 1] = lam[0][1, 0] = 1
    lam[1][0, 1], lam[1][1, 0] = -1j, 1j
    lam[2][0, 0], lam[2][1, 1] = 1, -1
    lam[3][0, 2] = lam[3][2, 0] = 1
    lam[4][0, 2], lam[4][2, 0] = -1j, 1j
    lam[5][1, 2] = lam[5][2, 1] = 1
    lam[6][1, 2], lam[6][2, 1] = -1j, 1j
    lam[7] = np.diag([1, 1, -2]) / np.sqrt(3)
    return lam


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    """A compact matrix Lie algebra with a gamma-orthonormal basis."""

    name: str
    structure_constants: np.ndarray  # c[a, b, c] : [e_a, e_b] = sum_c c[a,b,c] e_c
    metric: np.ndarray
    matrix_basis: np.ndarray  # (n, r, r) complex, anti-Hermitian
    trace_scale: float = field(default=2.0)  # gamma(X, Y) = -trace_scale * Re tr(XY)

    @property
    def dim(self) -> int:
        return self.structure_constants.shape[0]

    @property
    def rep_dim(self) -> int:
        return self.matrix_basis.shape[1]

    @property
    def is_abelian(self) -> bool:
        return not np.any(self.structure_constants)

    def __eq__(self, other):
        return isinstance(other, LieAlgebra) and other.name == self.name

    def __hash__(self):
        return hash(self.name)

    def __repr__(self):
        return f"LieAlgebra({self.name!r}, dim={self.dim})"

    @cached_property
    def sparse_constants(self):
        """Nonzero structure constants as (a, b, c, value) index arrays."""
        a, b, c = np.nonzero(self.structure_constants)
        return (
            a.astype(np.int64),
            b.astype(np.int64),
            c.astype(np.int64),
            self.structure_constants[a, b, c].astype(float),
        )

    # -- vector operations; the Lie index is the LAST axis -------------------

    def _check(self, *vecs):
        for v in vecs:
            if np.shape(v)[-1:] != (self.dim,):
                raise ValueError(
                    f"{self.name}: expected trailing dimension {self.dim}, got shape {np.shape(v)}"
                )

    def bracket(self, xi, eta) -> np.ndarray:
        xi, eta = np.asarray(xi, float), np.asarray(eta, float)
        self._check(xi, eta)
        return np.einsum("abc,...a,...b->...c", self.structure_constants, xi, eta)

    def inner(self, xi, eta) -> np.ndarray:
        xi, eta = np.asarray(xi, float), np.asarray(eta, float)
        self._check(xi, eta)
        return np.einsum("ab,...a,...b->...", self.metric, xi, eta)

    def ad_matrix(self, xi) -> np.ndarray:
        """Matrix of ``eta -> [xi, eta]`` acting on coefficient vectors."""
        xi = np.asarray(xi, float)
        self._check(xi)
        # [xi, eta]_c = sum_ab xi_a eta_b c_abc  ->  M[c, b]
        return np.einsum("abc,...a->...cb", self.structure_constants, xi)

    def to_matrix(self, xi) -> np.ndarray:
        xi = np.asarray(xi, float)
        self._check(xi)
        return np.einsum("...a,aij->...ij", xi, self.matrix_basis)

    def from_matrix(self, X) -> np.ndarray:
        """Coefficients of an algebra element by gamma-projection onto the basis."""
        X = np.asarray(X, complex)
        tr = np.einsum("...ij,aji->...a", X, self.matrix_basis)
        return -self.trace_scale * tr.real

    def exp(self, xi, t: float = 1.0) -> np.ndarray:
        """Group element ``exp(t xi)`` in the defining representation.

        Batched over leading axes of ``xi``.  Uses the eigen-decomposition of
        the Hermitian matrix ``i X`` so the result is unitary to rounding.
        """
        xi = np.asarray(xi, float)
        if not np.all(np.isfinite(xi)) or not np.isfinite(t):
            raise ValueError("exp of non-finite input")
        X = self.to_matrix(xi) * t
        H = 1j * X
        H = 0.5 * (H + np.conj(np.swapaxes(H, -1, -2)))
        w, V = np.linalg.eigh(H)
        phase = np.exp(-1j * w)
        return np.einsum("...ik,...k,...jk->...ij", V, phase, np.conj(V))

    def Ad(self, g, xi) -> np.ndarray:
        """``Ad_g xi = g X g^{-1}`` as coefficients."""
        g = np.asarray(g, complex)
        X = self.to_matrix(xi)
        ginv = np.conj(np.swapaxes(g, -1, -2))
        return self.from_matrix(g @ X @ ginv)

    def random(self, rng: np.random.Generator, size=()) -> np.ndarray:
        shape = tuple(np.atleast_1d(size)) if size != () else ()
        return rng.standard_normal(shape + (self.dim,))

    # -- field-level bracket: Lie index FIRST, points flattened after ---------

    def bracket_field(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Pointwise bracket of arrays shaped ``(n, *points)``."""
        if x.shape != y.shape or x.shape[0] != self.dim:
            raise ValueError(f"bracket_field shape mismatch {x.shape} vs {y.shape}")
        if self.is_abelian:
            return np.zeros_like(x)
        shape = x.shape
        a, b, c, val = self.sparse_constants
        out = kernels.bracket_points(
            a, b, c, val,
            np.ascontiguousarray(x.reshape(self.dim, -1), dtype=float),
            np.ascontiguousarray(y.reshape(self.dim, -1), dtype=float),
        )
        return out.reshape(shape)


def _constants_from_basis(T: np.ndarray, trace_scale: float) -> np.ndarray:
    n = T.shape[0]
    c = np.zeros((n, n, n))
    for a in range(n):
        for b in range(n):
            comm = T[a] @ T[b] - T[b] @ T[a]
            c[a, b] = -trace_scale * np.einsum("ij,cji->c", comm, T).real
    c[np.abs(c) < 1e-15] = 0.0
    return c


def _metric_from_basis(T: np.ndarray, trace_scale: float) -> np.ndarray:
    g = -trace_scale * np.einsum("aij,bji->ab", T, T).real
    g[np.abs(g) < 1e-15] = 0.0
    return g


def make_algebra(name: str) -> LieAlgebra:
    """Build one of the supported algebras: ``"u1"``, ``"su2"``, ``"su3"``."""
    if name == "u1":
        T = np.array([[[1j]]])
        scale = 1.0
    elif name == "su2":
        T = -0.5j * _pauli()
        scale = 2.0
    elif name == "su3":
        T = -0.5j * _gell_mann()
        scale = 2.0
    else:
        raise ValueError(f"unknown algebra {name!r}; expected one of {ALGEBRA_NAMES}")
    c = _constants_from_basis(T, scale)
    if name == "su2":
        # exact epsilon tensor; removes rounding from the trace projection
        c = np.round(c)
    metric = _metric_from_basis(T, scale)
    metric = np.round(metric, 14)
    for arr in (c, metric, T):
        arr.setflags(write=False)
    return LieAlgebra(name, c, metric, T, scale)


def jacobi_residual(alg: LieAlgebra, x, y, z) -> float:
    """max |[x,[y,z]] + [y,[z,x]] + [z,[x,y]]|."""
    br = alg.bracket
    r = br(x, br(y, z)) + br(y, br(z, x)) + br(z, br(x, y))
    return float(np.max(np.abs(r)))


def ad_invariance_residual(alg: LieAlgebra, zeta, xi, eta) -> float:
    r = alg.inner(alg.bracket(zeta, xi), eta) + alg.inner(xi, alg.bracket(zeta, eta))
    return float(np.max(np.abs(r)))
