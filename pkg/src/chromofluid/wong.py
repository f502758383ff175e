"""Classical particle with non-abelian charge in a static Yang-Mills background.

On the flat torus with a trivialized bundle the equations are::

    dx/dt = u
    m du/dt = gamma(q, E(.) + B(., u))^sharp
    dq/dt = -[A(u) + A0, q]

with ``E = cov_d(A, A0)`` and ``B = curvature(A)`` for the static connection.
Field values at the particle come from a trigonometric interpolant of the
grid data (or a periodic cubic spline when asked).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from chromofluid.forms import GForm, components, cov_d, curvature, make_sampler
from chromofluid.integrate import rk4_step
from chromofluid.lie import LieAlgebra


@dataclass(frozen=True)
class WongState:
    x: np.ndarray
    u: np.ndarray
    q: np.ndarray
    m: float = 1.0
    t: float = 0.0

    def __post_init__(self):
        for name in ("x", "u", "q"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be a 1-D array")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite {name} in Wong state")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if len(self.x) != len(self.u):
            raise ValueError("x and u must have the same length")
        if not self.m > 0:
            raise ValueError(f"particle mass must be positive, got {self.m}")

    def charge_norm(self, algebra: LieAlgebra) -> float:
        return float(algebra.inner(self.q, self.q))

    @property
    def kinetic_energy(self) -> float:
        return 0.5 * self.m * float(self.u @ self.u)


class Background:
    """Static gauge background ``(A, A0)`` sampled at particle positions.

    ``uniform_B`` adds a spatially constant magnetic 2-form (components in
    ``(01, 02, 12)`` order) that no periodic connection can carry; it is only
    accepted for the abelian algebra, where the connection itself never enters
    the particle equations.
    """

    def __init__(
        self,
        A: GForm,
        A0: GForm | None = None,
        uniform_B=None,
        method: str = "fourier",
    ):
        if A.degree != 1:
            raise ValueError("background connection must be a 1-form")
        A0 = GForm.zeros(A.grid, 0, A.algebra) if A0 is None else A0
        A._same(A0)
        if A0.degree != 0:
            raise ValueError("A0 must be a 0-form")
        self.A, self.A0 = A, A0
        self.grid, self.algebra = A.grid, A.algebra
        g, n = self.grid, self.algebra.dim
        d = g.dim
        self.E = cov_d(A, A0)
        self.B = curvature(A)
        nb = comb(d, 2)
        if uniform_B is not None:
            if not self.algebra.is_abelian:
                raise ValueError("a uniform magnetic field is only supported for the abelian algebra")
            ub = np.asarray(uniform_B, dtype=float).reshape(nb, n)
        else:
            ub = np.zeros((nb, n))
        self.uniform_B = ub
        fields = np.concatenate(
            [
                A.data.reshape(d * n, *g.shape),
                A0.data.reshape(n, *g.shape),
                self.E.data.reshape(d * n, *g.shape),
                self.B.data.reshape(nb * n, *g.shape),
            ]
        )
        self._slices = np.cumsum([0, d * n, n, d * n, nb * n])
        self._sampler = make_sampler(g, fields, method)

    def sample(self, x) -> dict[str, np.ndarray]:
        """Field values at one position: A (d, n), A0 (n,), E (d, n), B (C(d,2), n)."""
        d, n = self.grid.dim, self.algebra.dim
        vals = self._sampler(np.asarray(x, float)[None])[:, 0]
        s = self._slices
        return {
            "A": vals[s[0] : s[1]].reshape(d, n),
            "A0": vals[s[1] : s[2]],
            "E": vals[s[2] : s[3]].reshape(d, n),
            "B": vals[s[3] : s[4]].reshape(-1, n) + self.uniform_B,
        }


def _lorentz(bg: Background, f: dict, u: np.ndarray, q: np.ndarray) -> np.ndarray:
    """``gamma(q, E(.) + B(., u))^sharp`` at the particle."""
    d = bg.grid.dim
    F = f["E"].copy()
    for ci, (i, j) in enumerate(components(d, 2)):
        # B(e_k, u) = sum_l B_kl u_l
        F[i] += f["B"][ci] * u[j]
        F[j] -= f["B"][ci] * u[i]
    return F @ bg.algebra.metric @ q


def wong_rhs(state: WongState, bg: Background) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Time derivatives ``(dx, du, dq)``."""
    alg = bg.algebra
    if state.q.shape != (alg.dim,) or state.x.shape != (bg.grid.dim,):
        raise ValueError("Wong state does not match the background grid/algebra")
    f = bg.sample(state.x)
    du = _lorentz(bg, f, state.u, state.q) / state.m
    gen = state.u @ f["A"] + f["A0"]
    dq = -alg.bracket(gen, state.q)
    return state.u.copy(), du, dq


def wrap(x: np.ndarray, lengths) -> np.ndarray:
    return np.mod(x, np.asarray(lengths))


def wong_step(state: WongState, bg: Background, dt: float) -> WongState:
    """One RK4 step; the position is wrapped back onto the torus."""
    if dt == 0:
        return state
    if not dt > 0:
        raise ValueError(f"time step must be positive, got {dt}")
    m = state.m

    def f(y):
        s = WongState(y[0], y[1], y[2], m)
        return list(wong_rhs(s, bg))

    try:
        x, u, q = rk4_step(f, [state.x, state.u, state.q], dt)
    except ValueError as exc:
        raise FloatingPointError(f"Wong integration blew up at t={state.t:.17g}: {exc}") from exc
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(u)) and np.all(np.isfinite(q))):
        raise FloatingPointError(f"Wong integration blew up at t={state.t + dt:.17g}")
    return WongState(wrap(x, bg.grid.lengths), u, q, m, state.t + dt)


def integrate(state: WongState, bg: Background, dt: float, nsteps: int, record_every: int = 0):
    """Run ``nsteps`` steps; returns the final state and the recorded states."""
    out = [state] if record_every else []
    for k in range(nsteps):
        state = wong_step(state, bg, dt)
        if record_every and (k + 1) % record_every == 0:
            out.append(state)
    return state, out


def trajectory_header(dim: int, ncharge: int) -> list[str]:
    return (
        ["t"]
        + [f"x{i}" for i in range(dim)]
        + [f"u{i}" for i in range(dim)]
        + [f"q{a}" for a in range(ncharge)]
        + ["charge_norm", "kinetic_energy"]
    )


def trajectory_row(state: WongState, algebra: LieAlgebra) -> list[float]:
    return (
        [state.t]
        + list(state.x)
        + list(state.u)
        + list(state.q)
        + [state.charge_norm(algebra), state.kinetic_energy]
    )
