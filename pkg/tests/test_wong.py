import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chromofluid.forms import GForm, Grid, random_form
from chromofluid.lie import make_algebra
from chromofluid.wong import (
    Background,
    WongState,
    integrate,
    trajectory_header,
    trajectory_row,
    wong_rhs,
    wong_step,
)


def unwrap(xs, lengths):
    xs = np.asarray(xs)
    jumps = np.diff(xs, axis=0)
    L = np.asarray(lengths)
    corr = -L * np.round(jumps / L)
    return np.concatenate([xs[:1], xs[:1] + np.cumsum(jumps + corr, axis=0)])


def fit_circle(pts):
    """Algebraic least-squares circle: returns centre and radius."""
    x, y = pts[:, 0], pts[:, 1]
    M = np.stack([x, y, np.ones_like(x)], axis=1)
    sol, *_ = np.linalg.lstsq(M, x**2 + y**2, rcond=None)
    c = sol[:2] / 2
    return c, np.sqrt(sol[2] + c @ c)


def rodrigues(axis_vec, angle, q):
    n = axis_vec / np.linalg.norm(axis_vec)
    return q * np.cos(angle) + np.cross(n, q) * np.sin(angle) + n * (n @ q) * (1 - np.cos(angle))


@pytest.fixture(scope="module")
def larmor():
    g = Grid((16, 16))
    u1 = make_algebra("u1")
    m, q0, B0 = 2.0, 1.5, 0.5
    bg = Background(GForm.zeros(g, 1, u1), uniform_B=[B0])
    return g, bg, m, q0, B0


def test_uncharged_straight_line():
    g = Grid((16, 16))
    su2 = make_algebra("su2")
    rng = np.random.default_rng(0)
    bg = Background(random_form(g, 1, su2, rng), random_form(g, 0, su2, rng))
    p = WongState([1.0, 2.0], [1.0, 0.0], [0.0, 0.0, 0.0])
    dx, du, dq = wong_rhs(p, bg)
    assert np.all(du == 0) and np.all(dq == 0)
    p2 = wong_step(p, bg, 0.125)
    assert p2.x[0] == 1.125 and p2.x[1] == 2.0
    np.testing.assert_array_equal(p2.u, p.u)


def test_zero_dt_and_errors(larmor):
    g, bg, m, q0, B0 = larmor
    p = WongState([1.0, 1.0], [0.3, 0.2], [q0], m)
    assert wong_step(p, bg, 0.0) is p
    with pytest.raises(ValueError):
        wong_step(p, bg, -0.1)
    with pytest.raises(ValueError):
        WongState([1.0], [0.0, 1.0], [1.0])
    with pytest.raises(ValueError):
        WongState([1.0, 1.0], [0.0, 1.0], [1.0], m=0.0)
    with pytest.raises(ValueError):
        Background(GForm.zeros(g, 1, make_algebra("su2")), uniform_B=[1.0, 0.0, 0.0])


def test_larmor_orbit(larmor):
    g, bg, m, q0, B0 = larmor
    speed = 1.0
    T = 2 * np.pi * m / (q0 * B0)
    R = m * speed / (q0 * B0)
    n = 1000
    p = WongState([3.0, 3.0], [speed, 0.0], [q0], m)
    p_end, rec = integrate(p, bg, T / n, n, record_every=1)
    xs = unwrap([s.x for s in rec], g.lengths)
    c, r = fit_circle(xs)
    assert abs(r - R) / R < 1e-6
    # period: the velocity returns to its initial direction after one revolution
    ang = np.unwrap([np.arctan2(s.u[1], s.u[0]) for s in rec])
    ts = np.array([s.t for s in rec])
    turn = np.abs(ang - ang[0])
    k = np.searchsorted(turn, 2 * np.pi) if turn[-1] >= 2 * np.pi else len(turn) - 1
    k = min(max(k, 1), len(turn) - 1)
    t_period = np.interp(2 * np.pi, turn[k - 1 : k + 1], ts[k - 1 : k + 1])
    if turn[-1] < 2 * np.pi:  # final sample just short of a full turn
        w = (turn[-1] - turn[-2]) / (ts[-1] - ts[-2])
        t_period = ts[-1] + (2 * np.pi - turn[-1]) / w
    assert abs(t_period - T) / T < 1e-6
    assert np.linalg.norm(xs[-1] - xs[0]) / R < 1e-6


def test_larmor_convergence(larmor):
    g, bg, m, q0, B0 = larmor
    T = 2 * np.pi * m / (q0 * B0)

    def err(n):
        p = WongState([3.0, 3.0], [1.0, 0.0], [q0], m)
        _, rec = integrate(p, bg, T / n, n, record_every=1)
        xs = unwrap([s.x for s in rec], g.lengths)
        return np.linalg.norm(xs[-1] - xs[0])

    ratio = err(100) / err(200)
    assert 8 <= ratio <= 32


def test_abelian_charge_constant(larmor):
    g, bg, m, q0, B0 = larmor
    p = WongState([3.0, 3.0], [0.4, -0.7], [q0], m)
    for _ in range(200):
        p = wong_step(p, bg, 0.01)
        assert p.q[0] == q0


def test_su2_isospin_rotation_closed_form():
    g = Grid((16, 16))
    su2 = make_algebra("su2")
    a = np.array([0.3, -0.4, 1.1])
    A0 = GForm(g, 0, su2, np.broadcast_to(a[None, :, None, None], (1, 3) + g.shape).copy())
    bg = Background(GForm.zeros(g, 1, su2), A0)
    assert np.max(np.abs(bg.E.data)) == 0.0
    q0 = np.array([0.5, 0.2, -0.1])

    def err(n):
        p = WongState([1.0, 1.0], [0.0, 0.0], q0)
        p, _ = integrate(p, bg, 5.0 / n, n)
        # dq/dt = -a x q: rotation about a by angle -|a| t
        expected = rodrigues(a, -np.linalg.norm(a) * p.t, q0)
        assert abs(p.charge_norm(su2) - q0 @ q0) < 1e-12
        return np.max(np.abs(p.q - expected))

    e1, e2 = err(1000), err(2000)
    assert e1 < 1e-10  # RK4 truncation only
    assert 8 <= e1 / e2 <= 32


def test_nonabelian_charge_norm_and_energy():
    g = Grid((16, 16))
    su2 = make_algebra("su2")
    rng = np.random.default_rng(0)
    bg = Background(random_form(g, 1, su2, rng, kmax=2, amplitude=0.5))
    p = WongState([1.0, 2.0], [0.3, 0.1], [0.3, -0.5, 0.8])
    n0, k0 = p.charge_norm(su2), p.kinetic_energy
    p, _ = integrate(p, bg, 0.005, 10_000)
    assert abs(p.charge_norm(su2) - n0) / n0 < 1e-10
    assert abs(p.kinetic_energy - k0) / k0 < 1e-8


def test_cubic_interpolation_close_to_fourier():
    g = Grid((32, 32))
    su2 = make_algebra("su2")
    rng = np.random.default_rng(2)
    A = random_form(g, 1, su2, rng, kmax=2, amplitude=0.5)
    p = WongState([1.0, 2.0], [0.3, 0.1], [0.3, -0.5, 0.8])
    ref = wong_rhs(p, Background(A))
    cub = wong_rhs(p, Background(A, method="cubic"))
    assert np.max(np.abs(ref[1] - cub[1])) < 1e-2
    assert np.max(np.abs(ref[2] - cub[2])) < 1e-2


def test_trajectory_rows(tmp_path, larmor):
    g, bg, m, q0, B0 = larmor
    p = WongState([3.0, 3.0], [1.0, 0.0], [q0], m)
    head = trajectory_header(2, 1)
    assert head == ["t", "x0", "x1", "u0", "u1", "q0", "charge_norm", "kinetic_energy"]
    row = trajectory_row(p, bg.algebra)
    assert row == [0.0, 3.0, 3.0, 1.0, 0.0, q0, q0 * q0, 1.0]


@settings(max_examples=20, deadline=None)
@given(
    q=st.lists(st.floats(-2, 2), min_size=3, max_size=3),
    u=st.lists(st.floats(-1, 1), min_size=2, max_size=2),
)
def test_property_charge_rate_orthogonal(q, u):
    # the charge derivative is a rotation generator: gamma(q, dq/dt) = 0
    g = Grid((16, 16))
    su2 = make_algebra("su2")
    rng = np.random.default_rng(5)
    bg = Background(random_form(g, 1, su2, rng), random_form(g, 0, su2, rng))
    p = WongState([0.7, 1.9], u, q)
    _, du, dq = wong_rhs(p, bg)
    assert abs(np.dot(p.q, dq)) < 1e-12 * max(1.0, np.dot(q, q))
