"""Dense complex linear algebra and quantum-state primitives.

Matrices are plain ``numpy`` complex arrays. Spin operators follow the
spin-1/2 convention ``I_a = sigma_a / 2`` throughout the package.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_DIM = 2**10
HERMITIAN_ATOL = 1e-10
STATE_ATOL = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


class ValidationError(ValueError):
    """Input violates an operation's precondition."""


class CapacityError(ValidationError):
    """Requested Hilbert-space dimension exceeds ``MAX_DIM``."""


def is_hermitian(h: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    h = np.asarray(h)
    return h.ndim == 2 and h.shape[0] == h.shape[1] and np.allclose(h, h.conj().T, rtol=0.0, atol=atol)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or b.ndim != 2:
        raise ValidationError("kron expects 2-D matrices")
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if max(rows, cols) > MAX_DIM:
        raise CapacityError(f"kron result {rows}x{cols} exceeds dimension budget {MAX_DIM}")
    return np.kron(a, b)


def hermitian_eig(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decompose a Hermitian matrix.

    Returns ascending real eigenvalues and a unitary whose columns are the
    matching eigenvectors, so that ``h = V @ diag(w) @ V.conj().T``.
    """
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h, atol=1e-12 * max(1.0, float(np.abs(h).max(initial=0.0)))):
        raise ValidationError("hermitian_eig requires a Hermitian matrix")
    w, v = np.linalg.eigh(h)
    return w, v


def expm_hermitian_generator(h: np.ndarray, t: float) -> np.ndarray:
    """Return ``exp(-i h t)`` for Hermitian ``h``."""
    w, v = hermitian_eig(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


@dataclass(frozen=True, eq=False)
class QuantumState:
    """A pure state vector or a density matrix on ``n_qubits`` qubits.

    Construct through :meth:`pure`, :meth:`mixed` or :meth:`zero`; these
    validate normalization, hermiticity and positivity.
    """

    n_qubits: int
    data: np.ndarray

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @classmethod
    def pure(cls, amplitudes, normalize: bool = False) -> "QuantumState":
        vec = np.array(amplitudes, dtype=complex).reshape(-1)
        n = _qubit_count(vec.shape[0])
        norm2 = float(np.vdot(vec, vec).real)
        if normalize:
            if norm2 == 0.0:
                raise ValidationError("cannot normalize the zero vector")
            vec = vec / np.sqrt(norm2)
        elif abs(norm2 - 1.0) > STATE_ATOL:
            raise ValidationError(f"state vector norm^2 = {norm2!r}, expected 1")
        vec.setflags(write=False)
        return cls(n, vec)

    @classmethod
    def mixed(cls, rho) -> "QuantumState":
        rho = np.array(rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValidationError("density matrix must be square")
        n = _qubit_count(rho.shape[0])
        if not is_hermitian(rho, atol=STATE_ATOL):
            raise ValidationError("density matrix is not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > STATE_ATOL:
            raise ValidationError(f"density matrix trace = {tr!r}, expected 1")
        if np.linalg.eigvalsh(rho)[0] < -STATE_ATOL:
            raise ValidationError("density matrix has a negative eigenvalue")
        rho.setflags(write=False)
        return cls(n, rho)

    @classmethod
    def zero(cls, n_qubits: int) -> "QuantumState":
        vec = np.zeros(2**n_qubits, dtype=complex)
        vec[0] = 1.0
        return cls.pure(vec)

    def density(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def as_mixed(self) -> "QuantumState":
        return self if not self.is_pure else QuantumState.mixed(self.density())


def _qubit_count(dim: int) -> int:
    if dim < 2 or dim & (dim - 1):
        raise ValidationError(f"dimension {dim} is not a power of two >= 2")
    if dim > MAX_DIM:
        raise CapacityError(f"dimension {dim} exceeds budget {MAX_DIM}")
    return dim.bit_length() - 1


def purity(state: QuantumState) -> float:
    if state.is_pure:
        return 1.0
    rho = state.data
    # Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
    return float(np.sum(np.abs(rho) ** 2))


def fidelity_pure(a: QuantumState, b: QuantumState) -> float:
    """Overlap modulus ``|<a|b>|``, invariant under global phases."""
    if not (a.is_pure and b.is_pure):
        raise ValidationError("fidelity_pure needs two pure states")
    if a.dim != b.dim:
        raise ValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return float(min(1.0, abs(np.vdot(a.data, b.data))))
