"""Dense finite-dimensional quantum objects.

Qubit convention used everywhere in the package: ``sigma_z = diag(+1, -1)`` so
that ``|0>`` is the +1 eigenstate (the upper level of ``+w0/2 sigma_z``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

MAX_DIM = 4096
CHECK_TOL = 1e-10


class DimensionError(ValueError):
    """Invalid or oversized Hilbert-space dimension."""


class SpaceMismatchError(ValueError):
    """Operands live on different Hilbert spaces."""


@dataclass(frozen=True)
class HilbertSpace:
    factor_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        if not dims:
            raise DimensionError("factor_dims must be nonempty")
        if any(d < 2 for d in dims):
            raise DimensionError(f"every factor dimension must be >= 2, got {dims}")
        object.__setattr__(self, "factor_dims", dims)

    @property
    def total_dim(self) -> int:
        return math.prod(self.factor_dims)

    def __mul__(self, other: HilbertSpace) -> HilbertSpace:
        return HilbertSpace(self.factor_dims + other.factor_dims)


def _as_space(space: HilbertSpace | int | tuple | list) -> HilbertSpace:
    if isinstance(space, HilbertSpace):
        return space
    if isinstance(space, int):
        return HilbertSpace((space,))
    return HilbertSpace(tuple(space))


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense operator with Hermitian/unitary flags set from numerical checks."""

    space: HilbertSpace
    matrix: np.ndarray
    is_hermitian: bool = field(init=False)
    is_unitary: bool = field(init=False)

    def __post_init__(self):
        space = _as_space(self.space)
        m = np.array(self.matrix, dtype=complex)
        n = space.total_dim
        if m.shape != (n, n):
            raise DimensionError(f"matrix shape {m.shape} does not match total_dim {n}")
        m.setflags(write=False)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "matrix", m)
        herm = n == 0 or float(np.max(np.abs(m - m.conj().T))) < CHECK_TOL
        uni = float(np.max(np.abs(m.conj().T @ m - np.eye(n)))) < CHECK_TOL
        object.__setattr__(self, "is_hermitian", herm)
        object.__setattr__(self, "is_unitary", uni)

    @property
    def dim(self) -> int:
        return self.space.total_dim

    def dag(self) -> Operator:
        return Operator(self.space, self.matrix.conj().T)

    def _check(self, other: Operator):
        if other.space != self.space:
            raise SpaceMismatchError(f"{self.space} vs {other.space}")

    def __add__(self, other: Operator) -> Operator:
        self._check(other)
        return Operator(self.space, self.matrix + other.matrix)

    def __sub__(self, other: Operator) -> Operator:
        self._check(other)
        return Operator(self.space, self.matrix - other.matrix)

    def __neg__(self) -> Operator:
        return Operator(self.space, -self.matrix)

    def __mul__(self, scalar) -> Operator:
        return Operator(self.space, scalar * self.matrix)

    __rmul__ = __mul__

    def __matmul__(self, other: Operator) -> Operator:
        self._check(other)
        return Operator(self.space, self.matrix @ other.matrix)

    def __repr__(self) -> str:
        return f"Operator(dims={self.space.factor_dims}, hermitian={self.is_hermitian})"


@dataclass(frozen=True, eq=False)
class StateVector:
    space: HilbertSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        space = _as_space(self.space)
        v = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if v.shape != (space.total_dim,):
            raise DimensionError(f"vector length {v.size} != total_dim {space.total_dim}")
        v.setflags(write=False)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "amplitudes", v)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> StateVector:
        return StateVector(self.space, self.amplitudes / self.norm)

    def overlap(self, other: StateVector) -> complex:
        """Return <self|other>."""
        if other.space != self.space:
            raise SpaceMismatchError(f"{self.space} vs {other.space}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_density(self) -> DensityMatrix:
        return DensityMatrix(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    space: HilbertSpace
    matrix: np.ndarray

    def __post_init__(self):
        space = _as_space(self.space)
        m = np.array(self.matrix, dtype=complex)
        n = space.total_dim
        if m.shape != (n, n):
            raise DimensionError(f"matrix shape {m.shape} does not match total_dim {n}")
        m.setflags(write=False)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "matrix", m)

    def check(self, herm_tol: float = 1e-9, trace_tol: float = 1e-9, pos_tol: float = 1e-7) -> None:
        """Raise ``ValueError`` if this is not a valid density matrix."""
        m = self.matrix
        herm = float(np.max(np.abs(m - m.conj().T)))
        if herm > herm_tol:
            raise ValueError(f"density matrix not Hermitian (deviation {herm:.3e})")
        tr = abs(np.trace(m) - 1.0)
        if tr > trace_tol:
            raise ValueError(f"density matrix trace deviates from 1 by {tr:.3e}")
        lam = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
        if lam < -pos_tol:
            raise ValueError(f"density matrix has negative eigenvalue {lam:.3e}")


def tensor(*ops, max_dim: int = MAX_DIM) -> Operator:
    """Kronecker product of operators in the listed order.

    Accepts either ``tensor(a, b, c)`` or ``tensor([a, b, c])``.
    """
    if len(ops) == 1 and isinstance(ops[0], (list, tuple)):
        ops = tuple(ops[0])
    if not ops:
        raise ValueError("tensor needs at least one operator")
    dims = tuple(d for op in ops for d in op.space.factor_dims)
    if math.prod(dims) > max_dim:
        raise DimensionError(f"tensor product dimension {math.prod(dims)} exceeds cap {max_dim}")
    mat = reduce(np.kron, (op.matrix for op in ops))
    return Operator(HilbertSpace(dims), mat)


def tensor_states(*states: StateVector) -> StateVector:
    if len(states) == 1 and isinstance(states[0], (list, tuple)):
        states = tuple(states[0])
    dims = tuple(d for s in states for d in s.space.factor_dims)
    return StateVector(HilbertSpace(dims), reduce(np.kron, (s.amplitudes for s in states)))


def identity(dim: int) -> Operator:
    return Operator(HilbertSpace((dim,)), np.eye(dim))


def annihilation(dim: int) -> Operator:
    """Truncated bosonic lowering operator with sqrt(n) on the superdiagonal."""
    if dim < 2:
        raise DimensionError(f"annihilation needs dim >= 2, got {dim}")
    return Operator(HilbertSpace((dim,)), np.diag(np.sqrt(np.arange(1, dim)), 1))


def creation(dim: int) -> Operator:
    return annihilation(dim).dag()


def number(dim: int) -> Operator:
    return Operator(HilbertSpace((dim,)), np.diag(np.arange(dim, dtype=float)))


def sigma_x() -> Operator:
    return Operator(HilbertSpace((2,)), [[0, 1], [1, 0]])


def sigma_y() -> Operator:
    return Operator(HilbertSpace((2,)), [[0, -1j], [1j, 0]])


def sigma_z() -> Operator:
    return Operator(HilbertSpace((2,)), [[1, 0], [0, -1]])


def basis(dim: int, n: int) -> StateVector:
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return StateVector(HilbertSpace((dim,)), v)


def coherent(dim: int, alpha: complex) -> StateVector:
    """Truncated coherent state built from the Fock series, renormalized."""
    n = np.arange(dim)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    amps = np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * log_fact) * np.power(complex(alpha), n)
    amps = amps / np.linalg.norm(amps)
    return StateVector(HilbertSpace((dim,)), amps)


def expectation(state: StateVector | DensityMatrix, op: Operator) -> complex:
    if state.space != op.space:
        raise SpaceMismatchError(f"state on {state.space}, operator on {op.space}")
    if isinstance(state, StateVector):
        v = state.amplitudes
        return complex(np.vdot(v, op.matrix @ v))
    return complex(np.trace(state.matrix @ op.matrix))


def embed(op: Operator, index: int, space: HilbertSpace) -> Operator:
    """Place a single-factor operator at position ``index`` of ``space``."""
    factors = [identity(d) for d in space.factor_dims]
    if op.space.factor_dims != (space.factor_dims[index],):
        raise SpaceMismatchError(f"operator dims {op.space.factor_dims} do not fit factor {index}")
    factors[index] = op
    return tensor(factors)
