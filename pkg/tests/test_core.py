import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from floqubit.core import (
    DensityMatrix,
    DimensionError,
    HilbertSpace,
    Operator,
    SpaceMismatchError,
    StateVector,
    annihilation,
    basis,
    coherent,
    creation,
    embed,
    expectation,
    identity,
    number,
    sigma_x,
    sigma_y,
    sigma_z,
    tensor,
)

from conftest import random_density, random_hermitian


def test_hilbert_space_total_dim():
    assert HilbertSpace((2, 3, 4)).total_dim == 24
    with pytest.raises(DimensionError):
        HilbertSpace(())
    with pytest.raises(DimensionError):
        HilbertSpace((2, 1))


def test_operator_shape_checked():
    with pytest.raises(DimensionError):
        Operator(HilbertSpace((2,)), np.eye(3))


def test_operator_flags():
    assert sigma_x().is_hermitian and sigma_x().is_unitary
    a = annihilation(3)
    assert not a.is_hermitian and not a.is_unitary
    near = Operator(HilbertSpace((2,)), np.array([[0, 1 + 1e-8], [1, 0]]))
    assert not near.is_hermitian


def test_tensor_sigma_z_identity_on_00():
    op = tensor(sigma_z(), identity(2))
    v = basis(4, 0)
    assert expectation(StateVector(op.space, v.amplitudes), op).real == 1.0
    assert op.space.factor_dims == (2, 2)


def test_tensor_identities():
    np.testing.assert_array_equal(tensor(identity(2), identity(3)).matrix, np.eye(6))
    xx = tensor(sigma_x(), sigma_x())
    np.testing.assert_array_equal((xx @ xx).matrix, np.eye(4))
    assert tensor([sigma_x(), sigma_z()]).space.factor_dims == (2, 2)


def test_tensor_dimension_cap():
    with pytest.raises(DimensionError):
        tensor(identity(64), identity(65))
    with pytest.raises(DimensionError):
        tensor(identity(4), identity(4), max_dim=8)


def test_annihilation_examples():
    np.testing.assert_array_equal(annihilation(2).matrix, [[0, 1], [0, 0]])
    a3 = annihilation(3).matrix
    expected = np.zeros((3, 3))
    expected[0, 1], expected[1, 2] = 1.0, math.sqrt(2.0)
    np.testing.assert_array_equal(a3, expected)
    with pytest.raises(DimensionError):
        annihilation(1)


def test_coherent_state_mean_field():
    # Truncated coherent series summed explicitly: <a> = alpha for alpha=0.5.
    alpha, dim = 0.5, 30
    psi = coherent(dim, alpha)
    n = np.arange(dim)
    amps = np.array([alpha**k / math.sqrt(math.factorial(k)) for k in n]) * math.exp(-alpha**2 / 2)
    np.testing.assert_allclose(psi.amplitudes, amps / np.linalg.norm(amps), atol=1e-14)
    assert abs(expectation(psi, annihilation(dim)) - 0.5) < 1e-6


def test_expectation_examples():
    assert expectation(basis(5, 0), annihilation(5)) == 0
    rho = DensityMatrix(HilbertSpace((2,)), np.diag([0.0, 1.0]))
    assert expectation(rho, sigma_z()) == -1
    for n in range(4):
        assert expectation(basis(5, n), number(5)) == pytest.approx(n)
        assert expectation(basis(5, n), creation(5) @ annihilation(5)) == pytest.approx(n)


def test_expectation_space_mismatch():
    with pytest.raises(SpaceMismatchError):
        expectation(basis(3, 0), sigma_z())
    with pytest.raises(SpaceMismatchError):
        sigma_z() + identity(3)


def test_embed_places_factor():
    space = HilbertSpace((2, 3))
    op = embed(annihilation(3), 1, space)
    np.testing.assert_array_equal(op.matrix, np.kron(np.eye(2), annihilation(3).matrix))
    with pytest.raises(SpaceMismatchError):
        embed(annihilation(3), 0, space)


def test_density_matrix_check():
    DensityMatrix(HilbertSpace((2,)), np.eye(2) / 2).check()
    with pytest.raises(ValueError):
        DensityMatrix(HilbertSpace((2,)), np.eye(2)).check()
    with pytest.raises(ValueError):
        DensityMatrix(HilbertSpace((2,)), np.diag([1.5, -0.5])).check()


def test_core_objects_are_immutable():
    op = sigma_x()
    with pytest.raises(ValueError):
        op.matrix[0, 0] = 1.0


@given(st.integers(2, 8))
def test_canonical_commutator_below_truncation(dim):
    a = annihilation(dim).matrix
    comm = a @ a.conj().T - a.conj().T @ a
    k = dim - 1
    np.testing.assert_allclose(comm[:k, :k], np.eye(k), atol=1e-14)


@given(st.integers(0, 2**32 - 1))
def test_tensor_associative(seed):
    rng = np.random.default_rng(seed)
    # Integer entries keep every product exact, so equality is bitwise.
    ops = [Operator(HilbertSpace((d,)), rng.integers(-9, 10, size=(d, d))) for d in (2, 3, 2)]
    left = tensor(tensor(ops[0], ops[1]), ops[2])
    right = tensor(ops[0], tensor(ops[1], ops[2]))
    np.testing.assert_array_equal(left.matrix, right.matrix)
    assert left.space == right.space


@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_hermitian_expectation_is_real(seed, d):
    rng = np.random.default_rng(seed)
    h = Operator(HilbertSpace((d,)), random_hermitian(rng, d))
    rho = DensityMatrix(HilbertSpace((d,)), random_density(rng, d))
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    psi = StateVector(HilbertSpace((d,)), v / np.linalg.norm(v))
    assert abs(expectation(rho, h).imag) < 1e-10
    assert abs(expectation(psi, h).imag) < 1e-10


def test_pauli_algebra():
    x, y, z = sigma_x().matrix, sigma_y().matrix, sigma_z().matrix
    np.testing.assert_allclose(x @ y, 1j * z)
    assert z[0, 0] == 1 and z[1, 1] == -1
