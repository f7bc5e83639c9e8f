import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from siegel_theta.errors import DimensionError, DomainError, RefinementRequired, SingularCocycleError
from siegel_theta.symplectic import (
    BlockSymplectic,
    CartanDirection,
    IntegerSymplectic,
    SiegelPoint,
    cartan_matrix,
    cocycle,
    height_raw,
    iwasawa,
    loads_point,
    dumps_point,
    mobius,
    path_length,
    random_siegel,
    random_symplectic,
    verify_symplectic,
)

seeds = st.integers(0, 2**32 - 1)
genus = st.integers(1, 3)


def test_verify_identity_and_diagonal():
    assert verify_symplectic(np.eye(4)) == 0.0
    assert verify_symplectic(np.diag([2.0, 0.5])) == 0.0


def test_verify_rejects_gl2():
    M = np.array([[1.0, 2.0], [3.0, 4.0]])  # det -2
    assert verify_symplectic(M) > 0.1


def test_verify_odd_dimension():
    with pytest.raises(DimensionError):
        verify_symplectic(np.eye(3))


def test_block_rejects_non_symplectic():
    with pytest.raises(DomainError):
        BlockSymplectic.from_matrix(np.array([[1.0, 2.0], [3.0, 4.0]]))


def test_mobius_fixed_point_and_translation():
    Zi = SiegelPoint.i_identity(1)
    S = BlockSymplectic.from_matrix([[0, -1], [1, 0]])
    T = BlockSymplectic.from_matrix([[1, 1], [0, 1]])
    assert np.allclose(mobius(S, Zi).Z, 1j, atol=1e-15)
    assert np.allclose(mobius(T, Zi).Z, 1 + 1j, atol=1e-15)


def test_mobius_singular():
    # Q Z + I = diag(i 1e-14, 1) has condition number 1e14
    Z = SiegelPoint([[-1.0, 0.0], [0.0, 0.0]], [[1e-14, 0.0], [0.0, 1.0]])
    alpha = BlockSymplectic.lower_triangular(np.diag([1.0, 0.0]))
    with pytest.raises(SingularCocycleError):
        mobius(alpha, Z)


@settings(max_examples=40)
@given(genus, seeds)
def test_mobius_left_action(g, seed):
    rng = np.random.default_rng(seed)
    a, b = random_symplectic(g, rng, 0.5), random_symplectic(g, rng, 0.5)
    Z = random_siegel(g, rng)
    lhs = mobius(a @ b, Z).Z
    rhs = mobius(a, mobius(b, Z)).Z
    assert np.abs(lhs - rhs).max() <= 1e-9 * max(1.0, np.abs(lhs).max())


@settings(max_examples=40)
@given(genus, seeds)
def test_kernel_is_plus_minus_identity(g, seed):
    rng = np.random.default_rng(seed)
    a = random_symplectic(g, rng, 0.5)
    Z = random_siegel(g, rng)
    assert np.allclose(mobius(a, Z).Z, mobius(-a, Z).Z, atol=1e-12, rtol=1e-10)


@settings(max_examples=60)
@given(genus, seeds)
def test_height_covariance(g, seed):
    rng = np.random.default_rng(seed)
    a = random_symplectic(g, rng, 0.5)
    Z = random_siegel(g, rng)
    lhs = height_raw(mobius(a, Z)) * abs(cocycle(a, Z)) ** 2
    assert lhs == pytest.approx(height_raw(Z), rel=1e-10)


def test_height_raw_examples():
    assert height_raw(SiegelPoint.i_identity(3)) == pytest.approx(1.0)
    assert height_raw(SiegelPoint([[5.0, 1.0], [1.0, -2.0]], np.diag([2.0, 3.0]))) == pytest.approx(6.0)


def test_orthogonal_stabilizer(rng):
    # kappa = [[cos, sin], [-sin, cos]] blocks from an orthogonal U = P + iQ
    g = 2
    th = rng.uniform(0, 2 * math.pi)
    P = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    k = BlockSymplectic(P, np.zeros((g, g)), np.zeros((g, g)), P)
    assert height_raw(mobius(k, SiegelPoint.i_identity(g))) == pytest.approx(1.0, abs=1e-14)
    S = BlockSymplectic(np.zeros((g, g)), -np.eye(g), np.eye(g), np.zeros((g, g)))
    assert np.allclose(mobius(S, SiegelPoint.i_identity(g)).Z, 1j * np.eye(g))


def test_iwasawa_examples():
    c = iwasawa(SiegelPoint.i_identity(3))
    assert np.array_equal(c.W, np.eye(3)) and np.allclose(c.D, 1.0) and np.all(c.X == 0)
    c = iwasawa(SiegelPoint(np.zeros((2, 2)), [[2.0, 1.0], [1.0, 1.0]]))
    assert np.allclose(c.D, [2.0, 0.5])
    assert c.W[0, 1] == pytest.approx(0.5)


@settings(max_examples=100)
@given(genus, seeds)
def test_iwasawa_roundtrip(g, seed):
    Z = random_siegel(g, np.random.default_rng(seed))
    c = iwasawa(Z)
    back = c.reconstruct()
    assert np.abs(back.Z - Z.Z).max() <= 1e-10 * max(1.0, np.abs(Z.Z).max())
    assert np.prod(c.D) == pytest.approx(height_raw(Z), rel=1e-10)
    again = iwasawa(back)
    assert np.allclose(again.W, c.W, atol=1e-10) and np.allclose(again.D, c.D, rtol=1e-10)


def test_iwasawa_rejects_indefinite():
    with pytest.raises(DomainError):
        SiegelPoint(np.zeros((2, 2)), [[1.0, 2.0], [2.0, 1.0]])


def test_cartan_examples():
    dh = CartanDirection((1.0,))
    assert np.array_equal(cartan_matrix(dh, 0.0).matrix, np.eye(2))
    assert np.allclose(cartan_matrix(dh, 1.0).matrix, np.diag([math.e, 1 / math.e]))
    assert verify_symplectic(cartan_matrix(CartanDirection((1.0, 0.5)), 3.0).matrix) < 1e-12


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_cartan_group_law(s, t):
    dh = CartanDirection((1.0, 0.3, 0.0))
    lhs = (cartan_matrix(dh, s) @ cartan_matrix(dh, t)).matrix
    rhs = cartan_matrix(dh, s + t).matrix
    assert np.abs(lhs - rhs).max() <= 1e-12 * np.abs(rhs).max()


def test_cartan_direction_validation():
    with pytest.raises(DomainError):
        CartanDirection((-1.0, 1.0))
    with pytest.raises(DomainError):
        CartanDirection((0.0, 0.0)).require_nonzero()
    assert CartanDirection.unit(3, 2).delta == (1.0, 1.0, 0.0)


def _vertical(a, b, n):
    return [SiegelPoint([[0.0]], [[y]]) for y in np.exp(np.linspace(math.log(a), math.log(b), n))]


def test_path_length_constant_and_vertical():
    Z = SiegelPoint.i_identity(2)
    assert path_length([Z, Z, Z]) == 0.0
    # hyperbolic distance from i to i e is log e = 1
    assert path_length(_vertical(1.0, math.e, 400)) == pytest.approx(1.0, rel=1e-5)


def test_path_length_refinement():
    with pytest.raises(RefinementRequired):
        path_length(_vertical(1.0, math.e, 2))


def test_path_length_invariance(rng):
    g = 2
    a = random_symplectic(g, rng, 0.3)
    Z0, Z1 = random_siegel(g, rng), random_siegel(g, rng)
    path = [SiegelPoint((1 - s) * Z0.X + s * Z1.X, (1 - s) * Z0.Y + s * Z1.Y) for s in np.linspace(0, 1, 2000)]
    moved = [mobius(a, Z) for Z in path]
    assert path_length(moved) == pytest.approx(path_length(path), rel=1e-5)


def test_integer_symplectic_exact():
    S = IntegerSymplectic([[0, -1], [1, 0]])
    assert np.array_equal((S @ S @ S @ S).M, np.eye(2, dtype=int))
    assert np.array_equal((S @ S.inverse()).M, np.eye(2, dtype=int))
    with pytest.raises(DomainError):
        IntegerSymplectic([[1, 1], [1, 1]])


def test_serialization_roundtrip(rng):
    Z = random_siegel(2, rng)
    assert np.array_equal(loads_point(dumps_point(Z)).Z, Z.Z)
    a = random_symplectic(2, rng)
    assert np.array_equal(BlockSymplectic.from_json(a.to_json()).matrix, a.matrix)


def test_lower_triangular_exact():
    a = BlockSymplectic.lower_triangular([["(1+sqrt(5))/2"]])
    assert a.C[0, 0] == pytest.approx((1 + math.sqrt(5)) / 2)
    assert a.exact is not None
    with pytest.raises(DomainError):
        BlockSymplectic.lower_triangular([[1, 2], [3, 1]])
