"""Temporal-gauge Yang-Mills fields: right-hand side, Gauss law, initial data.

With ``A0 = 0`` the field equations are::

    dA/dt = -E
    dE/dt = codiff(A, B) - J          B = curvature(A)

where ``J = Q v`` is the fluid current (zero in vacuum).  The magnetic field is
always derived from ``A``, so ``dB/dt = -d^A E`` and the Bianchi identity hold
by construction.  The Gauss law ``codiff(A, E) = -Q`` is not enforced; it is
conserved by the flow and measured by :func:`gauss_residual`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from chromofluid.forms import GForm, codiff, cov_d, curvature, l2_inner


class ConstraintIncompatibleError(ValueError):
    """The charge density has a component in the kernel of the covariant Laplacian."""


class SolverError(RuntimeError):
    """Conjugate gradients did not reach the requested residual."""


@dataclass(frozen=True)
class GaugeState:
    A: GForm
    E: GForm

    def __post_init__(self):
        self.A._same(self.E)
        if self.A.degree != 1 or self.E.degree != 1:
            raise ValueError("A and E must both be 1-forms")

    @classmethod
    def zeros(cls, grid, algebra) -> "GaugeState":
        z = GForm.zeros(grid, 1, algebra)
        return cls(z, z)

    @property
    def B(self) -> GForm:
        return curvature(self.A)


def ym_rhs(gs: GaugeState, current: GForm | None = None) -> GaugeState:
    """Time derivative of ``(A, E)``; ``current`` is the 1-form ``Q v`` or None."""
    dE = codiff(gs.A, curvature(gs.A))
    if current is not None:
        gs.A._same(current)
        if current.degree != 1:
            raise ValueError("current must be a 1-form")
        dE = dE - current
    return GaugeState(-gs.E, dE)


def field_energy(gs: GaugeState) -> float:
    """``1/2 (|E|^2 + |B|^2)`` in the L2 pairing."""
    B = curvature(gs.A)
    return 0.5 * (l2_inner(gs.E, gs.E) + l2_inner(B, B))


def gauss_residual(gs: GaugeState, Q: GForm | None = None) -> GForm:
    """``codiff(A, E) + Q``; zero exactly when the Gauss law holds."""
    r = codiff(gs.A, gs.E)
    if Q is not None:
        r._same(Q)
        if Q.degree != 0:
            raise ValueError("charge density must be a 0-form")
        r = r + Q
    return r


def covariant_laplacian(A: GForm, phi: GForm) -> GForm:
    """``codiff(A, cov_d(A, phi))`` -- symmetric positive semidefinite."""
    return codiff(A, cov_d(A, phi))


def _kernel_is_constants(A: GForm) -> bool:
    return A.algebra.is_abelian or not np.any(A.data)


def solve_initial_E(
    A: GForm,
    Q: GForm,
    rtol: float = 1e-10,
    maxiter: int = 2000,
    atol: float = 0.0,
) -> GForm:
    """Gauss-consistent electric field ``E = cov_d(A, phi)`` with ``codiff(A, E) = -Q``.

    ``phi`` solves ``codiff(A, cov_d(A, phi)) = -Q`` by preconditioned CG.
    When the kernel of the covariant Laplacian is the constants (abelian
    algebra or ``A = 0``), ``Q`` must have zero mean in every Lie component.
    ``atol`` is an absolute floor on the residual norm, for right-hand sides
    that are already near roundoff.
    """
    A._same(Q)
    if Q.degree != 0:
        raise ValueError("charge density must be a 0-form")
    g, alg = Q.grid, Q.algebra
    qnorm = Q.norm_inf()
    if qnorm == 0.0:
        return GForm.zeros(g, 1, alg)
    if _kernel_is_constants(A):
        means = np.mean(Q.data, axis=g.axes)
        if np.max(np.abs(means)) > 1e-12 * qnorm:
            raise ConstraintIncompatibleError(
                f"charge density has nonzero mean {means.ravel()} (kernel of the "
                "covariant Laplacian is the constants)"
            )

    shape = Q.data.shape
    size = Q.data.size
    k2 = g.k_squared
    inv_k2 = np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 1.0)

    def matvec(x):
        phi = Q.like(np.asarray(x, float).reshape(shape))
        return covariant_laplacian(A, phi).data.ravel()

    def precond(x):
        return g.ifft(g.fft(np.asarray(x, float).reshape(shape)) * inv_k2).ravel()

    op = LinearOperator((size, size), matvec=matvec, dtype=float)
    M = LinearOperator((size, size), matvec=precond, dtype=float)
    b = -Q.data.ravel()
    x, info = cg(op, b, rtol=rtol, atol=atol, maxiter=maxiter, M=M)
    if info != 0:
        raise SolverError(f"CG did not converge (info={info}) after {maxiter} iterations")
    phi = Q.like(x.reshape(shape))
    E = cov_d(A, phi)
    resid = gauss_residual(GaugeState(A, E), Q)
    if np.linalg.norm(resid.data) > 10 * max(rtol * np.linalg.norm(b), atol):
        raise SolverError(
            f"CG residual {np.linalg.norm(resid.data):.3e} above tolerance; "
            "charge density may be incompatible with the connection"
        )
    return E


def reproject_gauss(gs: GaugeState, Q: GForm) -> GaugeState:
    """Remove the Gauss defect by adding a covariant gradient to ``E``.

    Only the longitudinal part of ``E`` changes.  When the covariant Laplacian
    has the constants as kernel, the mean of the defect is unreachable and is
    left in place.
    """
    r = gauss_residual(gs, Q)
    if _kernel_is_constants(gs.A):
        r = r.like(r.data - np.mean(r.data, axis=r.grid.axes, keepdims=True))
    floor = 1e-13 * max(np.linalg.norm(Q.data), np.linalg.norm(r.data))
    return GaugeState(gs.A, gs.E + solve_initial_E(gs.A, r, atol=floor))
