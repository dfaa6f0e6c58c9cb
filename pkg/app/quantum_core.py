"""Dense complex linear algebra, Kraus channels and the channel fidelity.

Matrices and state vectors are plain complex128 numpy arrays. Qubit 0 is the
most significant bit of a basis index throughout the package.
"""
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .errors import ChannelError, DimensionError, check_probability

ATOL = 1e-12


def _frozen(matrix):
    array = np.asarray(matrix, dtype=complex)
    array.flags.writeable = False
    return array


I2 = _frozen([[1, 0], [0, 1]])
X = _frozen([[0, 1], [1, 0]])
Y = _frozen([[0, -1j], [1j, 0]])
Z = _frozen([[1, 0], [0, -1]])
H = _frozen(np.array([[1, 1], [1, -1]]) / np.sqrt(2))
S_DAG = _frozen([[1, 0], [0, -1j]])
PAULIS = (I2, X, Y, Z)


def is_unitary(matrix, atol=ATOL):
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        return False
    return bool(np.max(np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0]))) <= atol)


def num_qubits(dim):
    """log2 of a Hilbert-space dimension; non-powers of two are rejected."""
    if dim < 1 or dim & (dim - 1):
        raise DimensionError(f"dimension {dim} is not a power of two")
    return dim.bit_length() - 1


def tensor(a, b):
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def basis_state(n_qubits, index):
    state = np.zeros(2 ** n_qubits, dtype=complex)
    state[index] = 1.0
    return state


def rho_q(q):
    """Diagonal mixed ancilla state diag(1 - q/2, q/2)."""
    q = check_probability('q', q)
    return np.diag([1.0 - q / 2, q / 2]).astype(complex)


def validate_density_matrix(rho, atol=ATOL):
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density matrix must be square, got shape {rho.shape}")
    if abs(np.trace(rho) - 1.0) > atol:
        raise ChannelError(f"density matrix trace is {np.trace(rho)}")
    if np.max(np.abs(rho - rho.conj().T)) > atol:
        raise ChannelError("density matrix is not Hermitian")
    if np.min(np.linalg.eigvalsh(rho)) < -1e-10:
        raise ChannelError("density matrix has a negative eigenvalue")
    return rho


class KrausChannel(BaseModel):
    """A finite Kraus set; completeness is checked on construction."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    dim: int
    operators: Tuple[np.ndarray, ...]
    labels: Optional[Tuple[str, ...]] = None

    @model_validator(mode='after')
    def _check(self):
        for op in self.operators:
            if op.shape != (self.dim, self.dim):
                raise ChannelError(f"Kraus operator of shape {op.shape} in a {self.dim}-dimensional channel")
        if self.labels is not None and len(self.labels) != len(self.operators):
            raise ChannelError("one label per Kraus operator is required")
        total = sum((op.conj().T @ op for op in self.operators), np.zeros((self.dim, self.dim), dtype=complex))
        if np.max(np.abs(total - np.eye(self.dim))) > ATOL:
            raise ChannelError("Kraus operators do not satisfy completeness")
        return self

    @classmethod
    def from_weights(cls, weighted, labels=None):
        """Builds {sqrt(w) * U} from (weight, unitary) pairs."""
        operators = tuple(np.sqrt(weight) * np.asarray(unitary, dtype=complex) for weight, unitary in weighted)
        return cls(dim=operators[0].shape[0], operators=operators, labels=labels)


def identity_channel(dim):
    return KrausChannel(dim=dim, operators=(np.eye(dim, dtype=complex),), labels=('I',))


def bitflip_init_channel(q):
    q = check_probability('q', q)
    return KrausChannel.from_weights([(1 - q / 2, I2), (q / 2, X)], labels=('I', 'X'))


def main_bitflip_channel(p):
    p = check_probability('p', p)
    return KrausChannel.from_weights([(1 - p, I2), (p, X)], labels=('I', 'X'))


def depolarizing_channel(p):
    p = check_probability('p', p)
    return KrausChannel.from_weights(
        [(1 - 3 * p / 4, I2), (p / 4, X), (p / 4, Y), (p / 4, Z)], labels=('I', 'X', 'Y', 'Z'))


def channel_fidelity(channel):
    """(1/4^n) * sum_k |Tr K_k|^2."""
    num_qubits(channel.dim)
    total = sum(abs(np.trace(op)) ** 2 for op in channel.operators)
    return float(total / channel.dim ** 2)


def apply_channel(channel, rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (channel.dim, channel.dim):
        raise DimensionError(f"channel of dimension {channel.dim} applied to a state of shape {rho.shape}")
    return sum(op @ rho @ op.conj().T for op in channel.operators)


def apply_on_axis(tensor_, operator, axis):
    """Contracts a square operator into one axis of a tensor, keeping axis order."""
    updated = np.tensordot(operator, tensor_, axes=([1], [axis]))
    return np.moveaxis(updated, 0, axis)


def apply_controlled(states, unitary, target, controls, n_qubits):
    """Applies a controlled single-qubit unitary to a batch of state vectors.

    `states` has shape (batch, 2**n_qubits); `controls` is a sequence of
    (qubit, polarity) pairs. Returns a new array.
    """
    out = np.array(states, dtype=complex, copy=True)
    psi = out.reshape((out.shape[0],) + (2,) * n_qubits)
    index = [slice(None)] * (n_qubits + 1)
    for qubit, bit in controls:
        index[qubit + 1] = bit
    index = tuple(index)
    axis = 1 + target - sum(1 for qubit, _ in controls if qubit < target)
    psi[index] = apply_on_axis(psi[index], unitary, axis)
    return out


def apply_local_channel(channel, rho, qubit, n_qubits):
    """Applies a single-qubit channel to one qubit of an n-qubit density matrix."""
    if channel.dim != 2:
        raise DimensionError("only single-qubit channels can be applied locally")
    shape = (2,) * (2 * n_qubits)
    rho_t = np.asarray(rho, dtype=complex).reshape(shape)
    out = np.zeros(shape, dtype=complex)
    for op in channel.operators:
        out += apply_on_axis(apply_on_axis(rho_t, op, qubit), op.conj(), n_qubits + qubit)
    return out.reshape(rho.shape)


def partial_trace(rho, keep):
    """Traces out every qubit not in `keep`; kept qubits stay in ascending order."""
    rho = np.asarray(rho, dtype=complex)
    n = num_qubits(rho.shape[0])
    keep = sorted(set(keep))
    if not keep:
        raise DimensionError("partial_trace needs at least one qubit to keep")
    if keep[0] < 0 or keep[-1] >= n:
        raise DimensionError(f"qubit indices {keep} out of range for {n} qubits")
    traced = [k for k in range(n) if k not in keep]
    dk, dt = 2 ** len(keep), 2 ** len(traced)
    order = keep + traced + [n + k for k in keep] + [n + t for t in traced]
    reshaped = rho.reshape((2,) * (2 * n)).transpose(order).reshape(dk, dt, dk, dt)
    return np.einsum('ajbj->ab', reshaped)
