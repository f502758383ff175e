"""Compressible Euler, Euler-Yang-Mills, Euler-Maxwell and incompressible EYM.

The evolved variables are the velocity-form ones: density ``rho``, specific
entropy ``s``, velocity ``v``, charge density ``Q`` and the temporal-gauge
fields ``(A, E)``.  With ``A0 = 0`` the compressible Euler-Yang-Mills system
reads::

    dv/dt + (v.grad) v = (1/rho) gamma(Q, E(.) + B(., v))^sharp - (1/rho) grad p
    drho/dt = -div(rho v)            ds/dt = -ds(v)
    dQ/dt   = codiff(A, Q v)         (= -(dQ(v) + [A(v), Q] + Q div v))
    dA/dt   = -E                     dE/dt = codiff(A, B) - Q v

The charge equation is written through the codifferential so that the Gauss
law is preserved up to the projected-bracket defect of the discrete scheme.
``B(., v)`` is ``-i_v B`` with ``(i_v B)(u) = B(v, u)``.

Vector-field brackets use the Jacobi-Lie convention ``[v, w] = v.grad w -
w.grad v``; the left bracket of the automorphism algebra is its negative.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from chromofluid.forms import (
    GForm,
    Grid,
    codiff,
    contract,
    cov_d,
    curvature,
    interior_product,
    leray_project,
    scalar_field,
    vector_field,
)
from chromofluid.gauge_dynamics import GaugeState, ym_rhs
from chromofluid.integrate import rk4_step
from chromofluid.lie import LieAlgebra, make_algebra

SYSTEMS = ("euler", "euler_maxwell", "eym_compressible", "eym_incompressible", "ym_vacuum")


class BlowUpError(RuntimeError):
    """Non-finite values or loss of positivity during time stepping."""

    def __init__(self, field: str, t: float, detail: str = ""):
        self.field = field
        self.t = t
        msg = f"blow-up in field {field!r} at t={t:.17g}"
        super().__init__(msg + (f": {detail}" if detail else ""))


class CFLError(ValueError):
    """Requested time step exceeds the configured CFL bound."""


@dataclass(frozen=True)
class EquationOfState:
    """Polytropic gas: ``e(rho, s) = kappa0 exp(s/c_v) rho^(Gamma-1) / (Gamma-1)``."""

    gamma: float = 5.0 / 3.0
    kappa0: float = 1.0
    c_v: float = 1.0

    def __post_init__(self):
        if not self.gamma > 1 or not self.kappa0 > 0 or not self.c_v > 0:
            raise ValueError(f"invalid equation of state {self}")

    def internal_energy(self, rho, s):
        rho = _positive(rho)
        return self.kappa0 * np.exp(np.asarray(s) / self.c_v) * rho ** (self.gamma - 1) / (self.gamma - 1)

    def pressure(self, rho, s):
        """``p = rho^2 de/drho = (Gamma - 1) rho e``."""
        rho = _positive(rho)
        return (self.gamma - 1) * rho * self.internal_energy(rho, s)

    def temperature(self, rho, s):
        """``T = de/ds = e / c_v``."""
        return self.internal_energy(rho, s) / self.c_v

    def sound_speed(self, rho, s):
        rho = _positive(rho)
        return np.sqrt(self.gamma * self.pressure(rho, s) / rho)


def _positive(rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError(f"nonpositive density (min {rho.min():.3e})")
    return rho


def pressure(rho: GForm, s: GForm, eos: EquationOfState) -> GForm:
    return rho.like(eos.pressure(rho.data, s.data))


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class FluidState:
    rho: GForm
    s: GForm
    v: GForm
    Q: GForm

    @property
    def grid(self) -> Grid:
        return self.rho.grid


@dataclass(frozen=True)
class CoupledState:
    fluid: FluidState
    gauge: GaugeState
    t: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.fluid.grid

    @property
    def algebra(self) -> LieAlgebra:
        return self.gauge.A.algebra

    FIELDS = ("rho", "s", "v", "Q", "A", "E")

    def arrays(self) -> list[np.ndarray]:
        f, g = self.fluid, self.gauge
        return [f.rho.data, f.s.data, f.v.data, f.Q.data, g.A.data, g.E.data]

    def with_arrays(self, arrs, t: float | None = None) -> "CoupledState":
        for name, a in zip(self.FIELDS, arrs):
            if not np.all(np.isfinite(a)):
                raise BlowUpError(name, self.t if t is None else t, "non-finite values")
        f, g = self.fluid, self.gauge
        fluid = FluidState(f.rho.like(arrs[0]), f.s.like(arrs[1]), f.v.like(arrs[2]), f.Q.like(arrs[3]))
        gauge = GaugeState(g.A.like(arrs[4]), g.E.like(arrs[5]))
        return CoupledState(fluid, gauge, self.t if t is None else t)


def make_state(
    grid: Grid,
    algebra: LieAlgebra,
    rho=None,
    s=None,
    v=None,
    Q=None,
    A: GForm | None = None,
    E: GForm | None = None,
    t: float = 0.0,
) -> CoupledState:
    """Assemble a state from plain arrays; missing pieces default to quiet values."""
    shape = grid.shape
    rho = np.ones(shape) if rho is None else rho
    s = np.zeros(shape) if s is None else s
    v = np.zeros((grid.dim,) + shape) if v is None else v
    Q = np.zeros((algebra.dim,) + shape) if Q is None else Q
    fluid = FluidState(
        scalar_field(grid, rho),
        scalar_field(grid, s),
        vector_field(grid, v),
        scalar_field(grid, Q, algebra),
    )
    A = A if A is not None else GForm.zeros(grid, 1, algebra)
    E = E if E is not None else GForm.zeros(grid, 1, algebra)
    return CoupledState(fluid, GaugeState(A, E), t)


# ---------------------------------------------------------------------------
# right-hand sides


def _raw(state: CoupledState):
    f = state.fluid
    return f.rho.data[0, 0], f.s.data[0, 0], f.v.data[:, 0], f.Q.data[0]


def _advect(grid: Grid, v: np.ndarray, a: np.ndarray) -> np.ndarray:
    """``P((v . grad) a)`` for an array with leading component axes."""
    P = grid.project
    pv = P(v)
    ha = grid.fft(a)
    out = np.zeros_like(a)
    for j in range(grid.dim):
        out += pv[j] * grid.ifft(1j * grid.wavenumbers[j] * ha)
    return P(out)


def _div(grid: Grid, flux: np.ndarray) -> np.ndarray:
    """Spectral divergence over the leading axis of ``flux``."""
    return sum(grid.deriv(flux[j], j) for j in range(grid.dim))


def _hydro(state: CoupledState, eos: EquationOfState):
    """Uncharged compressible Euler tendencies for (rho, s, v)."""
    g = state.grid
    P = g.project
    rho, s, v, _ = _raw(state)
    _positive(rho)
    drho = -_div(g, P(P(rho) * P(v)))
    ds = -_advect(g, v, s)
    dv = -_advect(g, v, v)
    p = eos.pressure(rho, s)
    dv = dv - P(g.gradient(p) / rho)
    return drho, ds, dv


def _deriv_state(state, drho, ds, dv, dQ, dA, dE) -> CoupledState:
    zero = np.zeros
    arrs = [
        zero(state.fluid.rho.data.shape) if drho is None else drho.reshape(state.fluid.rho.data.shape),
        zero(state.fluid.s.data.shape) if ds is None else ds.reshape(state.fluid.s.data.shape),
        zero(state.fluid.v.data.shape) if dv is None else dv.reshape(state.fluid.v.data.shape),
        zero(state.fluid.Q.data.shape) if dQ is None else dQ.reshape(state.fluid.Q.data.shape),
        zero(state.gauge.A.data.shape) if dA is None else dA,
        zero(state.gauge.E.data.shape) if dE is None else dE,
    ]
    return state.with_arrays(arrs, t=1.0)


def euler_rhs(state: CoupledState, eos: EquationOfState) -> CoupledState:
    """Compressible adiabatic Euler; charge and gauge fields are ignored."""
    drho, ds, dv = _hydro(state, eos)
    return _deriv_state(state, drho, ds, dv, None, None, None)


def current(state: CoupledState) -> GForm:
    """The Lie-valued current 1-form ``Q v^flat``, dealiased."""
    g = state.grid
    P = g.project
    _, _, v, Q = _raw(state)
    J = P(P(v)[:, None] * P(Q)[None])
    return state.gauge.A.like(J)


def lorentz_force(state: CoupledState) -> np.ndarray:
    """``gamma(Q, E(.) + B(., v))^sharp`` as a ``(d, *shape)`` array (not divided by rho)."""
    g = state.grid
    P = g.project
    _, _, _, Q = _raw(state)
    B = curvature(state.gauge.A)
    F = state.gauge.E.data - interior_product(state.fluid.v, B).data
    metric = state.algebra.metric
    return np.einsum("pq,p...,jq...->j...", metric, P(Q), P(F))


def eym_rhs(state: CoupledState, eos: EquationOfState) -> CoupledState:
    """Compressible Euler-Yang-Mills (temporal gauge)."""
    g = state.grid
    P = g.project
    drho, ds, dv = _hydro(state, eos)
    rho = state.fluid.rho.data[0, 0]
    dv = dv + P(lorentz_force(state) / rho)
    J = current(state)
    A = state.gauge.A
    dQ = codiff(A, J).data
    dfield = ym_rhs(state.gauge, J)
    return _deriv_state(state, drho, ds, dv, dQ, dfield.A.data, dfield.E.data)


def eym_momentum_form_rhs(state: CoupledState, eos: EquationOfState) -> CoupledState:
    """Same dynamics assembled from the momentum-form (Euler-Poincare) equations.

    Used only to cross-check :func:`eym_rhs`.  With ``A0 = 0`` and
    ``S = Q / rho``::

        rho dv/dt = -rho (v.grad) v - gamma(Q, -E(.) + d^A S(.) + B(v, .))^sharp
                    + 1/2 rho grad gamma(S, S) - grad p
        dQ/dt     = -[Q, S] - dQ(v) - [A(v), Q] - Q div v
    """
    g = state.grid
    P = g.project
    alg = state.algebra
    rho, s, v, Q = _raw(state)
    _positive(rho)
    A = state.gauge.A
    E = state.gauge.E
    S = P(Q / rho)
    S_form = scalar_field(g, S, alg)
    dAS = cov_d(A, S_form).data  # (d, n, ...)
    B = curvature(A)
    # B(v, .) = i_v B
    BV = interior_product(state.fluid.v, B).data
    inner = -E.data + dAS + BV
    coupling = np.einsum("pq,p...,jq...->j...", alg.metric, P(Q), P(inner))
    half_grad = 0.5 * P(rho) * g.gradient(P(np.einsum("pq,p...,q...->...", alg.metric, S, S)))
    p = eos.pressure(rho, s)
    rhs_v = -P(rho * _advect(g, v, v)) - P(coupling) + P(half_grad) - g.gradient(p)
    dv = P(rhs_v / rho)
    drho = -_div(g, P(P(rho) * P(v)))
    ds = -_advect(g, v, s)
    # charge equation in non-conservative form
    Av = contract(A, state.fluid.v).data[0]
    divv = _div(g, v)
    dQ = (
        -P(alg.bracket_field(P(Q), S))
        - _advect(g, v, Q)
        - P(alg.bracket_field(Av, P(Q)))
        - P(P(Q) * P(divv))
    )
    dfield = ym_rhs(state.gauge, current(state))
    return _deriv_state(state, drho, ds, dv, dQ, dfield.A.data, dfield.E.data)


def _star_vector(B: np.ndarray, d: int) -> np.ndarray:
    """Vector proxy of a real 2-form: scalar in 2D, ``(*B)^sharp`` in 3D."""
    if d == 2:
        return B[0]
    # components ordered (01, 02, 12):  B_x = B_yz, B_y = B_zx = -B_xz, B_z = B_xy
    return np.stack([B[2], -B[1], B[0]])


def euler_maxwell_rhs(state: CoupledState, eos: EquationOfState, q_over_m: float) -> CoupledState:
    """Euler-Maxwell in vector-calculus form, written independently of :func:`eym_rhs`.

    ``Q = (q/m) rho`` is a definition here; its tendency is returned as
    ``(q/m) drho/dt`` so that it stays consistent.
    """
    if not state.algebra.is_abelian:
        raise ValueError("euler_maxwell_rhs requires the abelian algebra u1")
    g = state.grid
    d = g.dim
    P = g.project
    rho, s, v, _ = _raw(state)
    drho, ds, dv = _hydro(state, eos)
    A = state.gauge.A.data[:, 0]
    E = state.gauge.E.data[:, 0]
    # B = dA as a 2-form, then its vector proxy
    Bform = np.zeros(((d * (d - 1)) // 2,) + g.shape)
    ci = 0
    for i in range(d):
        for j in range(i + 1, d):
            Bform[ci] = g.deriv(A[j], i) - g.deriv(A[i], j)
            ci += 1
    Bv = _star_vector(Bform, d)
    pv = P(v)
    if d == 2:
        vxB = np.stack([pv[1] * P(Bv), -pv[0] * P(Bv)])
        curlB = np.stack([g.deriv(Bv, 1), -g.deriv(Bv, 0)])
    else:
        pb = P(Bv)
        vxB = np.cross(pv, pb, axis=0)
        curlB = np.stack(
            [
                g.deriv(Bv[2], 1) - g.deriv(Bv[1], 2),
                g.deriv(Bv[0], 2) - g.deriv(Bv[2], 0),
                g.deriv(Bv[1], 0) - g.deriv(Bv[0], 1),
            ]
        )
    dv = dv + q_over_m * P(E + P(vxB))
    dE = curlB - q_over_m * P(P(rho) * pv)
    dQ = q_over_m * drho
    return _deriv_state(state, drho, ds, dv, dQ[None], -state.gauge.E.data, dE[:, None])


def _check_divergence_free(state: CoupledState, tol: float = 1e-10):
    g = state.grid
    v = state.fluid.v.data[:, 0]
    div = _div(g, v)
    scale = max(1.0, float(np.max(np.abs(v))))
    if np.max(np.abs(div)) > tol * scale:
        raise ValueError(f"velocity is not divergence-free (max |div v| = {np.max(np.abs(div)):.3e})")


def incompressible_eym_rhs(state: CoupledState, eos: EquationOfState | None = None) -> CoupledState:
    """Homogeneous incompressible Euler-Yang-Mills; ``rho = 1``, no entropy.

    The charge is advected in skew-symmetric form, which conserves
    ``integral gamma(Q, Q)`` exactly for the semi-discrete system.
    """
    _check_divergence_free(state)
    g = state.grid
    P = g.project
    alg = state.algebra
    _, _, v, Q = _raw(state)
    force = lorentz_force(state)
    accel = -_advect(g, v, v) + P(force)
    dv = leray_project(vector_field(g, accel)).data[:, 0]
    J = current(state)
    Av = contract(state.gauge.A, state.fluid.v).data[0]
    pQ = P(Q)
    dQ = -0.5 * (_advect(g, v, Q) + _div(g, J.data))
    dQ = dQ - P(alg.bracket_field(Av, pQ))
    dfield = ym_rhs(state.gauge, J)
    return _deriv_state(state, None, None, dv, dQ, dfield.A.data, dfield.E.data)


def ym_vacuum_rhs(state: CoupledState, eos: EquationOfState | None = None) -> CoupledState:
    d = ym_rhs(state.gauge)
    return _deriv_state(state, None, None, None, None, d.A.data, d.E.data)


def system_rhs(system: str, eos: EquationOfState, q_over_m: float | None = None):
    """Return ``f(state) -> derivative`` for a named system."""
    if system == "euler":
        return lambda st: euler_rhs(st, eos)
    if system == "eym_compressible":
        return lambda st: eym_rhs(st, eos)
    if system == "euler_maxwell":
        if q_over_m is None:
            raise ValueError("euler_maxwell needs q_over_m")
        return lambda st: euler_maxwell_rhs(st, eos, q_over_m)
    if system == "eym_incompressible":
        return lambda st: incompressible_eym_rhs(st, eos)
    if system == "ym_vacuum":
        return lambda st: ym_vacuum_rhs(st, eos)
    raise ValueError(f"unknown system {system!r}; expected one of {SYSTEMS}")


# ---------------------------------------------------------------------------
# time stepping


def max_stable_dt(state: CoupledState, eos: EquationOfState, system: str, cfl: float = 0.4) -> float:
    """``C h / (max|v| + c_sound + 1)``; the +1 covers the unit light speed."""
    g = state.grid
    h = min(g.spacing)
    rho, s, v, _ = _raw(state)
    vmax = float(np.max(np.sqrt(np.sum(v**2, axis=0))))
    if system in ("eym_incompressible", "ym_vacuum"):
        cmax = 0.0
    else:
        cmax = float(np.max(eos.sound_speed(rho, s)))
    return cfl * h / (vmax + cmax + 1.0)


def _check_state(state: CoupledState, system: str):
    rho = state.fluid.rho.data
    if system not in ("eym_incompressible", "ym_vacuum") and np.any(rho <= 0):
        raise BlowUpError("rho", state.t, f"density lost positivity (min {rho.min():.3e})")


def step(
    state: CoupledState,
    dt: float,
    eos: EquationOfState,
    system: str,
    q_over_m: float | None = None,
    cfl: float | None = 0.4,
) -> CoupledState:
    """Advance one classical RK4 step.  ``cfl=None`` skips the CFL check."""
    if not dt > 0:
        if dt == 0:
            return state
        raise ValueError(f"time step must be positive, got {dt}")
    if cfl is not None:
        bound = max_stable_dt(state, eos, system, cfl)
        if dt > bound * (1 + 1e-12):
            raise CFLError(f"dt={dt:.4g} exceeds CFL bound {bound:.4g} (C={cfl})")
    f = system_rhs(system, eos, q_over_m)

    def flat(arrs):
        try:
            return f(state.with_arrays(arrs)).arrays()
        except ValueError as exc:
            if "nonpositive density" in str(exc):
                raise BlowUpError("rho", state.t, str(exc)) from exc
            raise

    new = rk4_step(flat, state.arrays(), dt)
    out = state.with_arrays(new, t=state.t + dt)
    _check_state(out, system)
    return out


# ---------------------------------------------------------------------------
# semidirect-product algebra helpers (trivial bundle)
#
# Elements are pairs (v, theta) of a vector field (d, *shape) array and a
# Lie-valued function (n, *shape) array.


def jacobi_lie_bracket(grid: Grid, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``[v, w] = (v.grad) w - (w.grad) v``."""
    return _advect(grid, v, w) - _advect(grid, w, v)


def _dfun(grid: Grid, theta: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``d theta(v)`` for a Lie-valued function."""
    return _advect(grid, v, theta)


def semidirect_bracket(grid: Grid, alg: LieAlgebra, vt, wo):
    """Left bracket ``[(v,th),(w,om)]_L = ([v,w]_L, dth(w) - dom(v) + [th, om])``."""
    v, th = vt
    w, om = wo
    P = grid.project
    vec = -jacobi_lie_bracket(grid, v, w)
    fib = _dfun(grid, th, w) - _dfun(grid, om, v) + P(alg.bracket_field(P(th), P(om)))
    return vec, fib


def ad_dagger(grid: Grid, alg: LieAlgebra, vt, mn):
    """L2 adjoint of the left bracket, ``ad^dagger_{(v,theta)} (m, nu)``.

    ``(grad_v m + (grad v)^T m + m div v + gamma(nu, dtheta(.))^sharp,
    nu div v + dnu(v) + [nu, theta])``.
    """
    v, th = vt
    m, nu = mn
    P = grid.project
    divv = _div(grid, v)
    pm = P(m)
    gradv = np.stack([grid.gradient(v[j]) for j in range(grid.dim)])  # [j, i] = d_i v_j
    gvT_m = np.einsum("ji...,j...->i...", P(gradv), pm)
    gth = np.stack([grid.gradient(th[a]) for a in range(alg.dim)])  # [a, i]
    nu_dth = np.einsum("pq,p...,qi...->i...", alg.metric, P(nu), P(gth))
    vec = _advect(grid, v, m) + P(gvT_m) + P(pm * P(divv)) + P(nu_dth)
    fib = P(P(nu) * P(divv)) + _dfun(grid, nu, v) + P(alg.bracket_field(P(nu), P(th)))
    return vec, fib


def semidirect_pairing(grid: Grid, alg: LieAlgebra, mn, vt) -> float:
    m, nu = mn
    v, th = vt
    s = np.sum(m * v) + np.sum(np.einsum("pq,p...,q...->...", alg.metric, nu, th))
    return float(s * grid.cell_volume)
