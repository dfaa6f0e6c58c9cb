"""Circuits and code construction: repetition codes, the 5-qubit perfect code,
recovery derivation, augmentation and two-level concatenation."""
import itertools
import logging
from typing import Dict, Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .errors import CodeConstructionError, ParameterRangeError, SyndromeCollisionError
from .quantum_core import H, I2, S_DAG, X, Y, Z, apply_controlled, is_unitary

logger = logging.getLogger(__name__)

ChannelFamily = Literal['bitflip', 'depolarizing']


class Gate(BaseModel):
    """A single-qubit unitary on `target`, active only where every control matches its polarity."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    target: int
    unitary: np.ndarray
    controls: Tuple[Tuple[int, int], ...] = ()

    @field_validator('unitary', mode='before')
    @classmethod
    def _as_complex(cls, value):
        return np.asarray(value, dtype=complex)

    @model_validator(mode='after')
    def _check(self):
        if self.unitary.shape != (2, 2) or not is_unitary(self.unitary):
            raise CodeConstructionError(f"gate on qubit {self.target} is not a 2x2 unitary")
        qubits = [qubit for qubit, _ in self.controls]
        if self.target in qubits:
            raise CodeConstructionError(f"target {self.target} is also a control")
        if len(set(qubits)) != len(qubits):
            raise CodeConstructionError(f"repeated control qubit in {self.controls}")
        if any(bit not in (0, 1) for _, bit in self.controls):
            raise CodeConstructionError(f"control polarity must be 0 or 1: {self.controls}")
        return self

    def inverse(self):
        return Gate(target=self.target, unitary=self.unitary.conj().T, controls=self.controls)

    def is_x(self):
        return bool(np.array_equal(self.unitary, X))

    def qubits(self):
        return [self.target] + [qubit for qubit, _ in self.controls]


def single(target, unitary):
    return Gate(target=target, unitary=unitary)


def cnot(control, target):
    return Gate(target=target, unitary=X, controls=((control, 1),))


def cz(control, target):
    return Gate(target=target, unitary=Z, controls=((control, 1),))


def toffoli(control_a, control_b, target):
    return Gate(target=target, unitary=X, controls=((control_a, 1), (control_b, 1)))


class Circuit(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n_qubits: int
    gates: Tuple[Gate, ...] = ()

    @model_validator(mode='after')
    def _check(self):
        for gate in self.gates:
            if max(gate.qubits()) >= self.n_qubits or min(gate.qubits()) < 0:
                raise CodeConstructionError(f"gate {gate.qubits()} outside a {self.n_qubits}-qubit register")
        return self

    def __add__(self, other):
        if other.n_qubits != self.n_qubits:
            raise CodeConstructionError("cannot join circuits of different width")
        return Circuit(n_qubits=self.n_qubits, gates=self.gates + other.gates)

    def __len__(self):
        return len(self.gates)

    def inverse(self):
        return Circuit(n_qubits=self.n_qubits, gates=tuple(gate.inverse() for gate in reversed(self.gates)))

    def apply(self, states):
        """Propagates a batch of state vectors, shape (batch, 2**n)."""
        states = np.atleast_2d(np.asarray(states, dtype=complex))
        for gate in self.gates:
            states = apply_controlled(states, gate.unitary, gate.target, gate.controls, self.n_qubits)
        return states

    def unitary(self):
        dim = 2 ** self.n_qubits
        return self.apply(np.eye(dim, dtype=complex)).T

    def is_permutation(self):
        return all(gate.is_x() for gate in self.gates)

    def permute(self, indices):
        """Basis-index image of `indices` under an all-controlled-X circuit."""
        if not self.is_permutation():
            raise CodeConstructionError("permutation propagation needs controlled-X gates only")
        idx = np.array(indices, dtype=np.int64, copy=True)
        n = self.n_qubits
        for gate in self.gates:
            active = np.ones(idx.shape, dtype=bool)
            for qubit, bit in gate.controls:
                active &= ((idx >> (n - 1 - qubit)) & 1) == bit
            idx ^= active.astype(np.int64) << (n - 1 - gate.target)
        return idx

    def permutation(self):
        return self.permute(np.arange(2 ** self.n_qubits))


def inverse(circuit):
    return circuit.inverse()


def equivalent_up_to_phase(u, v, atol=1e-9):
    return abs(abs(np.trace(np.asarray(u).conj().T @ np.asarray(v))) - u.shape[0]) <= atol


class RecoveryTable(BaseModel):
    """Ancilla syndrome bit-string -> 2x2 correction applied to the message qubit."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n_ancillas: int
    corrections: Dict[str, np.ndarray]

    @model_validator(mode='after')
    def _check(self):
        zero = '0' * self.n_ancillas
        if zero in self.corrections and not equivalent_up_to_phase(self.corrections[zero], I2):
            raise CodeConstructionError("the trivial syndrome must map to the identity correction")
        for syndrome in self.corrections:
            if len(syndrome) != self.n_ancillas or set(syndrome) - {'0', '1'}:
                raise CodeConstructionError(f"malformed syndrome {syndrome!r}")
        return self

    def correction(self, syndrome):
        return self.corrections.get(syndrome, I2)

    def to_circuit(self, n_qubits, message_index=0):
        """One controlled gate per syndrome whose correction is not trivial."""
        gates = []
        for syndrome in sorted(self.corrections):
            unitary = self.corrections[syndrome]
            if equivalent_up_to_phase(unitary, I2):
                continue
            controls = tuple((k + 1, int(bit)) for k, bit in enumerate(syndrome))
            gates.append(Gate(target=message_index, unitary=unitary, controls=controls))
        return Circuit(n_qubits=n_qubits, gates=tuple(gates))

    @classmethod
    def from_circuit(cls, circuit):
        """Reads a lookup-style recovery back into a table."""
        n_ancillas = circuit.n_qubits - 1
        corrections = {'0' * n_ancillas: np.array(I2)}
        for gate in circuit.gates:
            pattern = dict(gate.controls)
            if gate.target != 0 or sorted(pattern) != list(range(1, circuit.n_qubits)):
                raise CodeConstructionError("recovery gates must target the message, controlled on every ancilla")
            syndrome = ''.join(str(pattern[k]) for k in range(1, circuit.n_qubits))
            corrections[syndrome] = gate.unitary @ corrections.get(syndrome, np.array(I2))
        return cls(n_ancillas=n_ancillas, corrections=corrections)


class CodeSpec(BaseModel):
    """A complete code instance: encoder, post-error decoder and final recovery."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n_qubits: int
    message_index: int = 0
    encoder: Circuit
    decoder: Circuit
    recovery: Circuit
    augmented: bool = False
    augmentation: Literal['none', 'on', 'top', 'full'] = 'none'
    channel_family: ChannelFamily
    label: str

    @model_validator(mode='after')
    def _check(self):
        if self.message_index != 0:
            raise CodeConstructionError("the message qubit is qubit 0")
        for circuit in (self.encoder, self.decoder, self.recovery):
            if circuit.n_qubits != self.n_qubits:
                raise CodeConstructionError(f"{self.label}: circuit width does not match the code")
        for gate in self.recovery.gates:
            if gate.target != self.message_index or any(q == self.message_index for q, _ in gate.controls):
                raise CodeConstructionError(f"{self.label}: recovery must act on the message, controlled on ancillas")
        return self

    @property
    def n_ancillas(self):
        return self.n_qubits - 1

    def post_error(self):
        return self.decoder + self.recovery

    def pipeline(self):
        return self.encoder + self.decoder + self.recovery

    def gate_count(self):
        return len(self.pipeline())


def repetition_code(t):
    """2t+1 qubit bit-flip code; recovery flips the message on every syndrome of weight >= t+1."""
    if not isinstance(t, int) or not 1 <= t <= 4:
        raise ParameterRangeError(f"repetition codes are supported for 1 <= t <= 4, got {t}")
    n = 2 * t + 1
    encoder = Circuit(n_qubits=n, gates=tuple(cnot(0, a) for a in range(1, n)))
    gates = []
    for syndrome in itertools.product((0, 1), repeat=n - 1):
        if sum(syndrome) >= t + 1:
            controls = tuple((k + 1, bit) for k, bit in enumerate(syndrome))
            gates.append(Gate(target=0, unitary=X, controls=controls))
    logger.info(f"Built rep{n} with {len(gates)} recovery gates.")
    return CodeSpec(n_qubits=n, encoder=encoder, decoder=encoder.inverse(),
                    recovery=Circuit(n_qubits=n, gates=tuple(gates)),
                    channel_family='bitflip', label=f'rep{n}')


def single_qubit_errors(n_qubits):
    """Identity plus X, Y, Z on every qubit."""
    errors = [single(0, I2)]
    for qubit in range(n_qubits):
        errors.extend(single(qubit, pauli) for pauli in (X, Y, Z))
    return errors


def derive_recovery(encoder, errors):
    """Builds the syndrome table by decoding each error through the inverse encoder."""
    n = encoder.n_qubits
    n_ancillas = n - 1
    decoder = encoder.inverse()
    inputs = np.zeros((2, 2 ** n), dtype=complex)
    inputs[0, 0] = 1.0
    inputs[1, 2 ** n_ancillas] = 1.0
    residuals = {}
    for error in errors:
        circuit = encoder + Circuit(n_qubits=n, gates=(error,)) + decoder
        out = circuit.apply(inputs).reshape(2, 2, 2 ** n_ancillas)
        support = np.flatnonzero(np.sum(np.abs(out) ** 2, axis=(0, 1)) > 1e-9)
        if len(support) != 1:
            raise CodeConstructionError(f"error on qubit {error.target} does not decode to a single syndrome")
        s = int(support[0])
        residual = out[:, :, s].T
        if not is_unitary(residual, atol=1e-9):
            raise CodeConstructionError(f"error on qubit {error.target} leaves a non-unitary residual")
        syndrome = format(s, f'0{n_ancillas}b')
        if syndrome in residuals:
            if not equivalent_up_to_phase(residuals[syndrome], residual):
                raise SyndromeCollisionError(f"syndrome {syndrome} is shared by inequivalent residuals")
            continue
        residuals[syndrome] = residual
    zero = '0' * n_ancillas
    if zero in residuals:
        residuals[zero] = np.array(I2)
    return RecoveryTable(n_ancillas=n_ancillas,
                         corrections={s: r.conj().T for s, r in residuals.items()})


def perfect5_encoder():
    """[[5,1,3]] encoder whose stabilizers are the cyclic shifts of XZZXI.

    Copies the message into all five qubits, turns the copy into the ring
    graph state (logical Z on every qubit), then maps Y -> Z, Z -> X locally.
    """
    gates = [cnot(0, a) for a in range(1, 5)]
    gates += [single(k, H) for k in range(5)]
    gates += [cz(k, (k + 1) % 5) for k in range(5)]
    for k in range(5):
        gates += [single(k, S_DAG), single(k, H)]
    return Circuit(n_qubits=5, gates=tuple(gates))


def perfect5_code():
    encoder = perfect5_encoder()
    table = derive_recovery(encoder, single_qubit_errors(5))
    if len(table.corrections) != 16:
        raise CodeConstructionError(f"expected 16 distinct syndromes, found {len(table.corrections)}")
    logger.info("Built perfect5 with a derived 16-entry recovery table.")
    return CodeSpec(n_qubits=5, encoder=encoder, decoder=encoder.inverse(),
                    recovery=table.to_circuit(5), channel_family='depolarizing', label='perfect5')


def augment(code):
    """Prepends the inverse recovery to the encoder."""
    if code.augmented:
        raise CodeConstructionError(f"{code.label} is already augmented")
    label = 'concat3-top' if code.label == 'concat3-unaug' else f'{code.label}+aug'
    augmentation = 'top' if code.label == 'concat3-unaug' else 'on'
    return code.model_copy(update=dict(
        encoder=code.recovery.inverse() + code.encoder,
        augmented=True, augmentation=augmentation, label=label))


CONCAT_VARIANTS = {'unaugmented': 'unaug', 'top_level': 'top', 'full': 'full'}


def concatenated3(variant):
    """Two-level 3-qubit repetition code on 9 qubits, blocks starting at qubits 0, 3, 6."""
    if variant not in CONCAT_VARIANTS:
        raise CodeConstructionError(f"unknown concatenation variant {variant!r}")
    blocks = (0, 3, 6)
    outer_encoder = [cnot(0, 3), cnot(0, 6)]
    outer_recovery = toffoli(3, 6, 0)

    def inner_encoder(b):
        return [cnot(b, b + 1), cnot(b, b + 2)]

    def inner_recovery(b):
        return toffoli(b + 1, b + 2, b)

    encoder = []
    if variant != 'unaugmented':
        encoder.append(outer_recovery.inverse())
    encoder += outer_encoder
    for b in blocks:
        if variant == 'full':
            encoder.append(inner_recovery(b).inverse())
        encoder += inner_encoder(b)

    decoder = []
    for b in blocks:
        decoder += [gate.inverse() for gate in reversed(inner_encoder(b))]
    decoder += [inner_recovery(b) for b in blocks]
    decoder += [gate.inverse() for gate in reversed(outer_encoder)]

    augmentation = {'unaugmented': 'none', 'top_level': 'top', 'full': 'full'}[variant]
    return CodeSpec(
        n_qubits=9,
        encoder=Circuit(n_qubits=9, gates=tuple(encoder)),
        decoder=Circuit(n_qubits=9, gates=tuple(decoder)),
        recovery=Circuit(n_qubits=9, gates=(outer_recovery,)),
        augmented=variant != 'unaugmented', augmentation=augmentation,
        channel_family='bitflip', label=f'concat3-{CONCAT_VARIANTS[variant]}')


SINGLE_LEVEL_LABELS = ('rep3', 'rep5', 'rep7', 'rep9', 'perfect5')
CONCAT_LABELS = ('concat3-unaug', 'concat3-top', 'concat3-full')
CODE_LABELS = (SINGLE_LEVEL_LABELS + tuple(f'{label}+aug' for label in SINGLE_LEVEL_LABELS)
               + CONCAT_LABELS)


def build_code(label):
    """Resolves a display label (see CODE_LABELS) into a CodeSpec."""
    base, _, suffix = label.partition('+')
    if suffix not in ('', 'aug'):
        raise CodeConstructionError(f"unknown code label {label!r}")
    if base in CONCAT_LABELS and not suffix:
        variant = {value: key for key, value in CONCAT_VARIANTS.items()}[base.split('-')[1]]
        return concatenated3(variant)
    if base in ('rep3', 'rep5', 'rep7', 'rep9'):
        code = repetition_code((int(base[3:]) - 1) // 2)
    elif base == 'perfect5':
        code = perfect5_code()
    else:
        raise CodeConstructionError(f"unknown code label {label!r}")
    return augment(code) if suffix else code


def resolve_code(label, augment_mode='none'):
    """Combines a base label with the CLI's --augment flag."""
    if label == 'concat3':
        modes = {'none': 'concat3-unaug', 'top': 'concat3-top', 'full': 'concat3-full'}
        if augment_mode not in modes:
            raise CodeConstructionError(f"concat3 takes --augment none|top|full, got {augment_mode!r}")
        return build_code(modes[augment_mode])
    if augment_mode == 'none':
        return build_code(label)
    if augment_mode != 'on':
        raise CodeConstructionError(f"--augment {augment_mode} only applies to concat3")
    code = build_code(label)
    return code if code.augmented else augment(code)


def with_channel(code, family):
    """The same circuits under the other main-error channel."""
    if family is None or family == code.channel_family:
        return code
    if family not in ('bitflip', 'depolarizing'):
        raise CodeConstructionError(f"unknown channel family {family!r}")
    return code.model_copy(update=dict(channel_family=family, label=f'{code.label}@{family}'))


def gate_overhead(plain, augmented):
    """Pipeline gate count of an augmented code relative to its unaugmented form."""
    return augmented.gate_count() / plain.gate_count()
