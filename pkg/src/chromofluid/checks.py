"""Bundled invariant checks run by the ``check`` subcommand.

Each check builds small random band-limited data from a fixed seed, measures a
residual and compares it with a threshold.  The suite is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from chromofluid import forms
from chromofluid.fluid_dynamics import (
    EquationOfState,
    ad_dagger,
    euler_maxwell_rhs,
    eym_rhs,
    make_state,
    semidirect_bracket,
    semidirect_pairing,
)
from chromofluid.forms import (
    GForm,
    Grid,
    contract,
    cov_d,
    curvature,
    divergence,
    ext_d,
    l2_inner,
    leray_project,
    random_form,
)
from chromofluid.gauge_dynamics import GaugeState, field_energy, ym_rhs
from chromofluid.integrate import rk4_step
from chromofluid.lie import ad_invariance_residual, jacobi_residual, make_algebra


@dataclass
class CheckResult:
    name: str
    residual: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual < self.threshold)


def _rng(seed: int = 20240531) -> np.random.Generator:
    return np.random.default_rng(seed)


def check_lie_kernel() -> CheckResult:
    rng = _rng()
    worst = 0.0
    for name in ("u1", "su2", "su3"):
        alg = make_algebra(name)
        for _ in range(20):
            x, y, z = (alg.random(rng) for _ in range(3))
            worst = max(
                worst,
                float(np.max(np.abs(alg.bracket(x, y) + alg.bracket(y, x)))),
                jacobi_residual(alg, x, y, z),
                ad_invariance_residual(alg, x, y, z),
            )
    return CheckResult("lie_kernel", worst, 1e-13)


def check_d_squared() -> CheckResult:
    rng = _rng()
    g = Grid((16, 16, 16))
    alg = make_algebra("su2")
    worst = 0.0
    for k in (0, 1):
        w = random_form(g, k, alg, rng, kmax=3)
        worst = max(worst, ext_d(ext_d(w)).norm_inf())
    return CheckResult("d_squared", worst, 1e-11)


def check_curvature_identity() -> CheckResult:
    """cov_d(A, cov_d(A, f)) = [B, f]."""
    rng = _rng()
    g = Grid((32, 32))
    alg = make_algebra("su2")
    worst = 0.0
    for _ in range(5):
        A = random_form(g, 1, alg, rng, kmax=3)
        f = random_form(g, 0, alg, rng, kmax=3)
        lhs = cov_d(A, cov_d(A, f)).data
        B = curvature(A).data
        rhs = np.stack([alg.bracket_field(B[c], f.data[0]) for c in range(B.shape[0])])
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return CheckResult("curvature_identity", worst, 1e-10)


def check_bianchi() -> CheckResult:
    rng = _rng()
    g = Grid((16, 16, 16))
    alg = make_algebra("su2")
    A = random_form(g, 1, alg, rng, kmax=2)
    return CheckResult("bianchi", cov_d(A, curvature(A)).norm_inf(), 1e-10)


def check_adjointness() -> CheckResult:
    rng = _rng()
    g = Grid((32, 32))
    alg = make_algebra("su2")
    worst = 0.0
    for k in (0, 1):
        for _ in range(5):
            A = random_form(g, 1, alg, rng, kmax=3)
            a = random_form(g, k, alg, rng, kmax=3)
            b = random_form(g, k + 1, alg, rng, kmax=3)
            lhs = l2_inner(cov_d(A, a), b)
            rhs = l2_inner(a, forms.codiff(A, b))
            worst = max(worst, abs(lhs - rhs) / (a.norm_l2() * b.norm_l2()))
    return CheckResult("adjointness", worst, 1e-11)


def check_integration_by_parts() -> CheckResult:
    """int g(d^A f(v), h) + int g(f, d^A h(v)) + int g(f, h) div v = 0."""
    rng = _rng()
    g = Grid((32, 32))
    alg = make_algebra("su2")
    u1 = make_algebra("u1")
    worst = 0.0
    for _ in range(5):
        A = random_form(g, 1, alg, rng, kmax=2)
        f = random_form(g, 0, alg, rng, kmax=2)
        h = random_form(g, 0, alg, rng, kmax=2)
        v = random_form(g, 1, u1, rng, kmax=2)
        t1 = l2_inner(contract(cov_d(A, f), v), h)
        t2 = l2_inner(f, contract(cov_d(A, h), v))
        fh = np.einsum("pq,p...,q...->...", alg.metric, f.data[0], h.data[0])
        t3 = float(g.integrate(fh * divergence(v)))
        scale = f.norm_l2() * h.norm_l2() * max(1.0, v.norm_inf())
        worst = max(worst, abs(t1 + t2 + t3) / scale)
    return CheckResult("integration_by_parts", worst, 1e-10)


def check_semidirect_duality() -> CheckResult:
    rng = _rng()
    g = Grid((32, 32))
    alg = make_algebra("su2")
    u1 = make_algebra("u1")

    def pair():
        return (
            random_form(g, 1, u1, rng, kmax=2).data[:, 0],
            random_form(g, 0, alg, rng, kmax=2).data[0],
        )

    worst = 0.0
    for _ in range(5):
        vt, wo, mn = pair(), pair(), pair()
        lhs = semidirect_pairing(g, alg, ad_dagger(g, alg, vt, mn), wo)
        rhs = semidirect_pairing(g, alg, mn, semidirect_bracket(g, alg, vt, wo))
        norms = np.sqrt(
            semidirect_pairing(g, alg, vt, vt)
            * semidirect_pairing(g, alg, wo, wo)
            * semidirect_pairing(g, alg, mn, mn)
        )
        worst = max(worst, abs(lhs - rhs) / norms)
    return CheckResult("semidirect_duality", worst, 1e-9)


def check_leray() -> CheckResult:
    rng = _rng()
    g = Grid((32, 32))
    u1 = make_algebra("u1")
    v = random_form(g, 1, u1, rng, kmax=6)
    p = leray_project(v)
    pp = leray_project(p)
    worst = max(float(np.max(np.abs(divergence(p)))), (pp - p).norm_inf())
    return CheckResult("leray", worst, 1e-11)


def check_abelian_reduction() -> CheckResult:
    """Euler-Yang-Mills with u1 equals the dedicated Euler-Maxwell path."""
    rng = _rng()
    g = Grid((32, 32))
    u1 = make_algebra("u1")
    qm = 1.5
    rho = 1 + 0.1 * random_form(g, 0, u1, rng, kmax=2).data[0, 0]
    s = 0.1 * random_form(g, 0, u1, rng, kmax=2).data[0, 0]
    v = 0.1 * random_form(g, 1, u1, rng, kmax=2).data[:, 0]
    A = random_form(g, 1, u1, rng, kmax=2, amplitude=0.2)
    E = random_form(g, 1, u1, rng, kmax=2, amplitude=0.2)
    st = make_state(g, u1, rho, s, v, qm * rho, A, E)
    eos = EquationOfState()
    a = eym_rhs(st, eos).arrays()
    b = euler_maxwell_rhs(st, eos, qm).arrays()
    worst = max(float(np.max(np.abs(x - y))) for x, y in zip(a, b))
    return CheckResult("abelian_reduction", worst, 1e-13)


def check_energy() -> CheckResult:
    """Non-abelian vacuum Yang-Mills field energy over 100 RK4 steps."""
    rng = _rng()
    g = Grid((16, 16))
    alg = make_algebra("su2")
    A = random_form(g, 1, alg, rng, kmax=2, amplitude=0.5)
    E = GForm.zeros(g, 1, alg)
    gs = GaugeState(A, E)
    e0 = field_energy(gs)

    def f(y):
        d = ym_rhs(GaugeState(A.like(y[0]), A.like(y[1])))
        return [d.A.data, d.E.data]

    y = [A.data, E.data]
    for _ in range(100):
        y = rk4_step(f, y, 0.02)
    e1 = field_energy(GaugeState(A.like(y[0]), A.like(y[1])))
    return CheckResult("energy", abs(e1 - e0) / e0, 1e-6)


CHECKS: list[tuple[str, Callable[[], CheckResult]]] = [
    ("lie_kernel", check_lie_kernel),
    ("d_squared", check_d_squared),
    ("curvature_identity", check_curvature_identity),
    ("bianchi", check_bianchi),
    ("adjointness", check_adjointness),
    ("integration_by_parts", check_integration_by_parts),
    ("semidirect_duality", check_semidirect_duality),
    ("leray", check_leray),
    ("abelian_reduction", check_abelian_reduction),
    ("energy", check_energy),
]


def run_checks() -> list[CheckResult]:
    return [fn() for _, fn in CHECKS]
