import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from chromofluid.lie import ALGEBRA_NAMES, ad_invariance_residual, jacobi_residual, make_algebra

# Textbook su(3) structure constants f_abc (1-based, Gell-Mann normalization).
# Listed independently of the commutator computation used by the library.
SU3_F = {
    (1, 2, 3): 1.0,
    (1, 4, 7): 0.5,
    (1, 5, 6): -0.5,
    (2, 4, 6): 0.5,
    (2, 5, 7): 0.5,
    (3, 4, 5): 0.5,
    (3, 6, 7): -0.5,
    (4, 5, 8): np.sqrt(3) / 2,
    (6, 7, 8): np.sqrt(3) / 2,
}


def _su3_reference():
    f = np.zeros((8, 8, 8))
    for (a, b, c), val in SU3_F.items():
        for (i, j, k), s in [
            ((a, b, c), 1), ((b, c, a), 1), ((c, a, b), 1),
            ((b, a, c), -1), ((a, c, b), -1), ((c, b, a), -1),
        ]:
            f[i - 1, j - 1, k - 1] = s * val
    return f


def test_u1_is_abelian():
    alg = make_algebra("u1")
    assert alg.dim == 1
    assert alg.is_abelian
    assert np.all(alg.structure_constants == 0)
    assert alg.bracket([2.0], [-3.0])[0] == 0.0


def test_su2_epsilon_constants():
    alg = make_algebra("su2")
    c = alg.structure_constants
    assert c[0, 1, 2] == 1.0
    assert c[1, 0, 2] == -1.0
    assert c[1, 2, 0] == 1.0 and c[2, 0, 1] == 1.0
    np.testing.assert_array_equal(alg.bracket([1, 0, 0], [0, 1, 0]), [0, 0, 1])


def test_su3_matches_textbook_table():
    alg = make_algebra("su3")
    np.testing.assert_allclose(alg.structure_constants, _su3_reference(), atol=1e-14)


@pytest.mark.parametrize("name", ALGEBRA_NAMES)
def test_metric_is_identity(name):
    alg = make_algebra(name)
    np.testing.assert_allclose(alg.metric, np.eye(alg.dim), atol=1e-14)
    e = np.eye(alg.dim)
    assert alg.inner(e[0], e[0]) == pytest.approx(1.0)
    if alg.dim > 1:
        assert abs(alg.inner(e[0], e[1])) < 1e-15


@pytest.mark.parametrize("name", ALGEBRA_NAMES)
def test_constants_antisymmetric_and_jacobi_on_basis(name):
    alg = make_algebra(name)
    c = alg.structure_constants
    np.testing.assert_array_equal(c, -np.swapaxes(c, 0, 1))
    e = np.eye(alg.dim)
    worst = max(
        jacobi_residual(alg, e[a], e[b], e[d])
        for a in range(alg.dim) for b in range(alg.dim) for d in range(alg.dim)
    )
    assert worst < 1e-14


@pytest.mark.parametrize("name", ALGEBRA_NAMES)
def test_random_triples(name, rng):
    alg = make_algebra(name)
    for _ in range(100):
        x, y, z = (alg.random(rng) for _ in range(3))
        assert np.max(np.abs(alg.bracket(x, x))) < 1e-13
        assert np.max(np.abs(alg.bracket(x, y) + alg.bracket(y, x))) < 1e-13
        assert jacobi_residual(alg, x, y, z) < 1e-13
        assert ad_invariance_residual(alg, x, y, z) < 1e-13


@pytest.mark.parametrize("name", ALGEBRA_NAMES)
def test_matrix_round_trip_and_bracket_is_commutator(name, rng):
    alg = make_algebra(name)
    x, y = alg.random(rng), alg.random(rng)
    np.testing.assert_allclose(alg.from_matrix(alg.to_matrix(x)), x, atol=1e-14)
    X, Y = alg.to_matrix(x), alg.to_matrix(y)
    np.testing.assert_allclose(alg.to_matrix(alg.bracket(x, y)), X @ Y - Y @ X, atol=1e-13)


def test_ad_matrix(su3, rng):
    x, y = su3.random(rng), su3.random(rng)
    np.testing.assert_allclose(su3.ad_matrix(x) @ y, su3.bracket(x, y), atol=1e-13)


@pytest.mark.parametrize("name", ALGEBRA_NAMES)
def test_exp_zero_is_identity(name, rng):
    alg = make_algebra(name)
    g = alg.exp(alg.random(rng), 0.0)
    np.testing.assert_allclose(g, np.eye(alg.rep_dim), atol=1e-15)


def test_u1_exp_pi():
    g = make_algebra("u1").exp([1.0], np.pi)
    assert g.shape == (1, 1)
    assert abs(g[0, 0] - (-1.0)) < 1e-15


def test_su2_spin_half_periodicity():
    alg = make_algebra("su2")
    e3 = [0.0, 0.0, 1.0]
    g = alg.exp(e3, 2 * np.pi)
    # closed form exp(-i t sigma_3 / 2) at t = 2 pi is -1
    np.testing.assert_allclose(g, -np.eye(2), atol=1e-14)
    np.testing.assert_allclose(g @ g, np.eye(2), atol=1e-14)


def test_su2_exp_closed_form(rng):
    alg = make_algebra("su2")
    x = alg.random(rng)
    t = 0.7
    th = np.linalg.norm(x) * t
    n = x / np.linalg.norm(x)
    sig = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])
    expected = np.cos(th / 2) * np.eye(2) - 1j * np.sin(th / 2) * np.einsum("a,aij->ij", n, sig)
    np.testing.assert_allclose(alg.exp(x, t), expected, atol=1e-14)


@pytest.mark.parametrize("name", ALGEBRA_NAMES)
def test_exp_derivative_at_zero(name, rng):
    alg = make_algebra(name)
    x = alg.random(rng)
    errs = []
    for h in (1e-2, 5e-3):
        d = (alg.exp(x, h) - alg.exp(x, -h)) / (2 * h)
        errs.append(np.max(np.abs(d - alg.to_matrix(x))))
    # central difference: error is O(h^2)
    assert errs[1] < errs[0] / 3.5
    assert errs[0] < 1e-3 * max(1.0, np.linalg.norm(x) ** 3)


@pytest.mark.parametrize("name", ALGEBRA_NAMES)
def test_exp_is_unitary(name, rng):
    alg = make_algebra(name)
    g = alg.exp(alg.random(rng, 5), 1.3)
    eye = np.broadcast_to(np.eye(alg.rep_dim), g.shape)
    np.testing.assert_allclose(g @ np.conj(np.swapaxes(g, -1, -2)), eye, atol=1e-13)
    if name != "u1":
        np.testing.assert_allclose(np.linalg.det(g), 1.0, atol=1e-13)


@pytest.mark.parametrize("name", ALGEBRA_NAMES)
def test_ad_preserves_metric(name, rng):
    alg = make_algebra(name)
    for _ in range(20):
        g = alg.exp(alg.random(rng), 1.0)
        x, y = alg.random(rng), alg.random(rng)
        assert abs(alg.inner(alg.Ad(g, x), alg.Ad(g, y)) - alg.inner(x, y)) < 1e-10


def test_ad_is_homomorphism(su2, rng):
    g = su2.exp(su2.random(rng), 1.0)
    x, y = su2.random(rng), su2.random(rng)
    lhs = su2.Ad(g, su2.bracket(x, y))
    rhs = su2.bracket(su2.Ad(g, x), su2.Ad(g, y))
    np.testing.assert_allclose(lhs, rhs, atol=1e-13)


def test_bracket_field_matches_pointwise(su3, rng):
    x = rng.standard_normal((8, 7, 5))
    y = rng.standard_normal((8, 7, 5))
    ref = np.moveaxis(su3.bracket(np.moveaxis(x, 0, -1), np.moveaxis(y, 0, -1)), -1, 0)
    np.testing.assert_allclose(su3.bracket_field(x, y), ref, atol=1e-13)


def test_errors():
    with pytest.raises(ValueError):
        make_algebra("so3")
    alg = make_algebra("su2")
    with pytest.raises(ValueError):
        alg.bracket([1.0, 0.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        alg.exp([np.nan, 0, 0])


vec8 = arrays(np.float64, 8, elements=st.floats(-10, 10, allow_nan=False))


@settings(max_examples=60, deadline=None)
@given(vec8, vec8, vec8)
def test_property_su3_identities(x, y, z):
    alg = make_algebra("su3")
    scale = max(1.0, np.max(np.abs(x)) * np.max(np.abs(y)) * np.max(np.abs(z)))
    assert jacobi_residual(alg, x, y, z) < 1e-12 * scale
    assert ad_invariance_residual(alg, x, y, z) < 1e-12 * scale
