"""Conserved quantities and the lifted-loop circulation diagnostic.

The circulation of a closed material loop ``x(sigma)`` carrying fiber
elements ``g(sigma)`` (a lift of the loop to the trivial bundle) is::

    I = loop integral of  v.dx + (1/rho) gamma(Q, A(dx) + dg g^-1)

Points move with the fluid velocity and the fibers with
``dg/dt = theta g``, ``theta = Q/rho - A(v)``.  Along the flow
``dI/dt = loop integral of T ds``.  Loop points are stored unwrapped so the
curve stays continuous; fields are periodic so sampling needs no wrapping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from chromofluid.fluid_dynamics import (
    BlowUpError,
    CFLError,
    CoupledState,
    EquationOfState,
    max_stable_dt,
    system_rhs,
)
from chromofluid.forms import FourierSampler, GForm, ext_codiff, make_sampler
from chromofluid.gauge_dynamics import field_energy, gauss_residual
from chromofluid.integrate import rk4_step
from chromofluid.lie import LieAlgebra

DIAGNOSTIC_COLUMNS = (
    "t",
    "mass",
    "energy_fluid",
    "energy_charge",
    "energy_internal",
    "energy_em",
    "energy_total",
    "gauss_L2",
    "s_min",
    "s_max",
)


class DegenerateLoopError(ValueError):
    """Adjacent loop points collapsed below a tenth of the grid spacing."""


# ---------------------------------------------------------------------------
# energies and Casimir


def energy_components(state: CoupledState, eos: EquationOfState) -> dict[str, float]:
    g = state.grid
    f = state.fluid
    rho = f.rho.data[0, 0]
    if np.any(rho <= 0):
        raise ValueError("nonpositive density")
    v = f.v.data[:, 0]
    Q = f.Q.data[0]
    qq = np.einsum("pq,p...,q...->...", state.algebra.metric, Q, Q)
    out = {
        "energy_fluid": float(g.integrate(0.5 * rho * np.sum(v * v, axis=0))),
        "energy_charge": float(g.integrate(0.5 * qq / rho)),
        "energy_internal": float(g.integrate(rho * eos.internal_energy(rho, f.s.data[0, 0]))),
        "energy_em": field_energy(state.gauge),
    }
    out["energy_total"] = sum(out.values())
    return out


def total_energy(state: CoupledState, eos: EquationOfState) -> float:
    """Kinetic (velocity plus charge), internal and field energy."""
    return energy_components(state, eos)["energy_total"]


def casimir(rho: GForm, E: GForm) -> float:
    """``1/2 integral (codiff E)^2 / rho`` for an abelian electric field."""
    if not E.algebra.is_abelian:
        raise ValueError("the Casimir is defined for the abelian (u1) case only")
    r = rho.data[0, 0]
    if np.any(r <= 0):
        raise ValueError("nonpositive density")
    dE = ext_codiff(E).data[0, 0]
    return float(rho.grid.integrate(0.5 * dE * dE / r))


def diagnostics_row(state: CoupledState, eos: EquationOfState) -> dict[str, float]:
    g = state.grid
    s = state.fluid.s.data[0, 0]
    row = {"t": state.t, "mass": float(g.integrate(state.fluid.rho.data[0, 0]))}
    row.update(energy_components(state, eos))
    row["gauss_L2"] = gauss_residual(state.gauge, state.fluid.Q).norm_l2()
    row["s_min"] = float(s.min())
    row["s_max"] = float(s.max())
    if state.algebra.is_abelian:
        row["casimir"] = casimir(state.fluid.rho, state.gauge.E)
    return row


# ---------------------------------------------------------------------------
# loops


@dataclass(frozen=True)
class LoopTracer:
    points: np.ndarray  # (K, d), unwrapped
    fibers: np.ndarray  # (K, r, r) complex, group elements
    algebra: LieAlgebra

    def __post_init__(self):
        pts = np.asarray(self.points, float)
        fib = np.asarray(self.fibers, complex)
        if pts.ndim != 2 or pts.shape[0] < 64:
            raise ValueError(f"a loop needs at least 64 points, got shape {pts.shape}")
        r = self.algebra.rep_dim
        if fib.shape != (pts.shape[0], r, r):
            raise ValueError(f"fibers must have shape {(pts.shape[0], r, r)}, got {fib.shape}")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(fib))):
            raise ValueError("non-finite loop data")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "fibers", fib)

    @property
    def K(self) -> int:
        return self.points.shape[0]

    @classmethod
    def circle(cls, grid, algebra: LieAlgebra, center, radius: float, K: int = 256, plane=(0, 1)):
        """Circle in the given coordinate plane with identity fibers."""
        center = np.asarray(center, float)
        if center.shape != (grid.dim,):
            raise ValueError(f"center must have {grid.dim} components")
        sig = 2 * np.pi * np.arange(K) / K
        pts = np.tile(center, (K, 1))
        pts[:, plane[0]] += radius * np.cos(sig)
        pts[:, plane[1]] += radius * np.sin(sig)
        spacing = 2 * np.pi * radius / K
        h = min(grid.spacing)
        if spacing >= 2 * h:
            raise ValueError(f"loop spacing {spacing:.3g} is not below twice the grid spacing; raise K")
        if spacing < h / 10:
            raise DegenerateLoopError(f"loop spacing {spacing:.3g} below h/10")
        fib = np.broadcast_to(np.eye(algebra.rep_dim, dtype=complex), (K, algebra.rep_dim, algebra.rep_dim))
        return cls(pts, fib.copy(), algebra)

    def tangent(self) -> np.ndarray:
        """``dx/dsigma`` by spectral differentiation, sigma in [0, 2 pi)."""
        return _sigma_deriv(self.points)

    def maurer_cartan(self) -> np.ndarray:
        """Coefficients of ``(dg/dsigma) g^-1`` at each loop point, shape (K, n)."""
        dg = _sigma_deriv(self.fibers.real) + 1j * _sigma_deriv(self.fibers.imag)
        ginv = np.conj(np.swapaxes(self.fibers, -1, -2))
        return self.algebra.from_matrix(dg @ ginv)

    def check_spacing(self, grid):
        gaps = np.linalg.norm(np.roll(self.points, -1, axis=0) - self.points, axis=1)
        if gaps.min() < min(grid.spacing) / 10:
            raise DegenerateLoopError(
                f"adjacent loop points collapsed to {gaps.min():.3e} (< h/10)"
            )


def _sigma_deriv(a: np.ndarray) -> np.ndarray:
    """Spectral derivative along axis 0 of samples on sigma = 2 pi k / K.

    Valid for contractible loops, whose unwrapped samples are periodic in sigma.
    """
    K = a.shape[0]
    hat = np.fft.rfft(a, axis=0)
    k = np.fft.rfftfreq(K, 1.0 / K)
    if K % 2 == 0:
        k[-1] = 0.0
    shape = (k.size,) + (1,) * (a.ndim - 1)
    return np.fft.irfft(1j * k.reshape(shape) * hat, n=K, axis=0)


def _loop_fields(state: CoupledState) -> np.ndarray:
    """Stack v, S = Q/rho, A (flattened) for sampling along loops."""
    f = state.fluid
    rho = f.rho.data[0, 0]
    S = f.Q.data[0] / rho
    A = state.gauge.A.data
    d = state.grid.dim
    return np.concatenate([f.v.data[:, 0], S, A.reshape(d * state.algebra.dim, *state.grid.shape)])


class _LoopSampler:
    def __init__(self, state: CoupledState, method: str = "fourier"):
        self.d = state.grid.dim
        self.n = state.algebra.dim
        self.sampler = make_sampler(state.grid, _loop_fields(state), method)

    def __call__(self, pts):
        vals = self.sampler(pts)  # (F, K)
        d, n = self.d, self.n
        v = vals[:d].T  # (K, d)
        S = vals[d : d + n].T  # (K, n)
        A = vals[d + n :].reshape(d, n, -1).transpose(2, 0, 1)  # (K, d, n)
        return v, S, A


def _loop_velocity(alg: LieAlgebra, sampled, fibers):
    v, S, A = sampled
    Av = np.einsum("kj,kjn->kn", v, A)
    theta = S - Av
    dg = alg.to_matrix(theta) @ fibers
    return v, dg


def advect_loop(loop: LoopTracer, state: CoupledState, dt: float, method: str = "fourier") -> LoopTracer:
    """RK4 transport of the loop and its fibers through a frozen state."""
    if dt == 0:
        return loop
    samp = _LoopSampler(state, method)
    alg = loop.algebra

    def f(y):
        return list(_loop_velocity(alg, samp(y[0]), y[1]))

    pts, fib = rk4_step(f, [loop.points, loop.fibers], dt)
    out = LoopTracer(pts, fib, alg)
    out.check_spacing(state.grid)
    return out


def step_with_loop(
    state: CoupledState,
    loop: LoopTracer,
    dt: float,
    eos: EquationOfState,
    system: str,
    q_over_m: float | None = None,
    cfl: float | None = 0.4,
    method: str = "fourier",
):
    """One RK4 step of the flow and the material loop together.

    The loop velocity at each stage is sampled from that stage's state, so the
    pair is integrated as one fourth-order system.
    """
    if cfl is not None:
        bound = max_stable_dt(state, eos, system, cfl)
        if dt > bound * (1 + 1e-12):
            raise CFLError(f"dt={dt:.4g} exceeds CFL bound {bound:.4g} (C={cfl})")
    rhs = system_rhs(system, eos, q_over_m)
    alg = loop.algebra
    nf = len(state.arrays())

    def f(y):
        st = state.with_arrays(y[:nf])
        try:
            dst = rhs(st).arrays()
        except ValueError as exc:
            if "nonpositive density" in str(exc):
                raise BlowUpError("rho", state.t, str(exc)) from exc
            raise
        v, dg = _loop_velocity(alg, _LoopSampler(st, method)(y[nf]), y[nf + 1])
        return dst + [v, dg]

    y = rk4_step(f, state.arrays() + [loop.points, loop.fibers], dt)
    new_state = state.with_arrays(y[:nf], t=state.t + dt)
    if np.any(new_state.fluid.rho.data <= 0) and system not in ("eym_incompressible", "ym_vacuum"):
        raise BlowUpError("rho", new_state.t, "density lost positivity")
    new_loop = LoopTracer(y[nf], y[nf + 1], alg)
    new_loop.check_spacing(state.grid)
    return new_state, new_loop


def kelvin_quantity(loop: LoopTracer, state: CoupledState) -> float:
    """Trapezoidal loop integral of ``v.dx + (1/rho) gamma(Q, A(dx) + dg g^-1)``."""
    if loop.algebra != state.algebra:
        raise ValueError("loop and state use different algebras")
    loop.check_spacing(state.grid)
    v, S, A = _LoopSampler(state)(loop.points)
    xs = loop.tangent()
    Ax = np.einsum("kj,kjn->kn", xs, A)
    mc = loop.maurer_cartan()
    metric = state.algebra.metric
    integrand = np.sum(v * xs, axis=1) + np.einsum("pq,kp,kq->k", metric, S, Ax + mc)
    return float(np.mean(integrand) * 2 * np.pi)


def plain_circulation(loop: LoopTracer, state: CoupledState, q_over_m: float = 0.0) -> float:
    """``loop integral of (v + (q/m) A).dx`` for the abelian case."""
    g = state.grid
    d = g.dim
    fields = np.concatenate([state.fluid.v.data[:, 0], state.gauge.A.data[:, 0]])
    vals = FourierSampler(g, fields)(loop.points)
    xs = loop.tangent()
    w = vals[:d].T + q_over_m * vals[d:].T
    return float(np.mean(np.sum(w * xs, axis=1)) * 2 * np.pi)


def kelvin_rhs(loop: LoopTracer, state: CoupledState, eos: EquationOfState) -> float:
    """Loop integral of ``T ds`` with ``T`` the temperature."""
    g = state.grid
    loop.check_spacing(g)
    rho = state.fluid.rho.data[0, 0]
    s = state.fluid.s.data[0, 0]
    T = eos.temperature(rho, s)
    fields = np.concatenate([T[None], g.gradient(s)])
    vals = FourierSampler(g, fields)(loop.points)
    xs = loop.tangent()
    integrand = vals[0] * np.sum(vals[1:].T * xs, axis=1)
    return float(np.mean(integrand) * 2 * np.pi)
