"""Exact channel fidelity F_C(p, q) by error-pattern enumeration, and an
independent density-matrix oracle.

A pattern is a set of flipped ancillas (initialization error) together with a
Pauli on every code qubit (main error). Patterns are numbered
`init_index * M**n + main_index`, M = 2 (bit flip) or 4 (depolarizing); the
main index is read base-M with qubit 0 as its most significant digit. Patterns
are processed in fixed-size chunks whose histograms are merged in chunk order,
so the result does not depend on how many worker processes are used.
"""
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bipoly import BiPoly, binomial_weight
from .errors import ChannelError, check_probability
from .quantum_core import (
    PAULIS, apply_local_channel, bitflip_init_channel, depolarizing_channel,
    main_bitflip_channel, partial_trace,
)

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 4096
PAULI_COUNT = {'bitflip': 2, 'depolarizing': 4}


def _check_family(family):
    if family not in PAULI_COUNT:
        raise ChannelError(f"unsupported channel family {family!r}")
    return family


@dataclass(frozen=True)
class PropagationPlan:
    """Everything a worker needs to propagate a range of patterns."""
    n_qubits: int
    family: str
    encoder_perm: Optional[np.ndarray] = None
    post_perm: Optional[np.ndarray] = None
    encoder_unitary: Optional[np.ndarray] = None
    post_unitary: Optional[np.ndarray] = None

    @property
    def n_ancillas(self):
        return self.n_qubits - 1

    @property
    def paulis_per_qubit(self):
        return PAULI_COUNT[self.family]

    @property
    def n_main(self):
        return self.paulis_per_qubit ** self.n_qubits

    @property
    def n_patterns(self):
        return 2 ** self.n_ancillas * self.n_main

    @property
    def fast(self):
        return self.encoder_perm is not None


def make_plan(code, fast_path=True):
    family = _check_family(code.channel_family)
    post = code.post_error()
    if fast_path and family == 'bitflip' and code.encoder.is_permutation() and post.is_permutation():
        return PropagationPlan(code.n_qubits, family,
                               encoder_perm=code.encoder.permutation(), post_perm=post.permutation())
    return PropagationPlan(code.n_qubits, family,
                           encoder_unitary=code.encoder.unitary(), post_unitary=post.unitary())


def _main_digits(main_index, plan):
    """Per-qubit Pauli indices, shape (batch, n), qubit 0 first."""
    digits = np.empty((len(main_index), plan.n_qubits), dtype=np.int64)
    rest = np.array(main_index, dtype=np.int64)
    base = plan.paulis_per_qubit
    for qubit in range(plan.n_qubits - 1, -1, -1):
        digits[:, qubit] = rest % base
        rest //= base
    return digits


def _popcount(values):
    values = np.array(values, dtype=np.int64)
    count = np.zeros(values.shape, dtype=np.int64)
    while np.any(values):
        count += values & 1
        values >>= 1
    return count


def propagate(plan, init_index, main_index):
    """Final states for the two message inputs, shape (2, batch, 2, 2**Na).

    Axis 2 of the result is the message qubit, axis 3 the ancilla outcome.
    """
    n, na = plan.n_qubits, plan.n_ancillas
    digits = _main_digits(main_index, plan)
    batch = len(init_index)
    outputs = np.zeros((2, batch, 2, 2 ** na), dtype=complex)
    if plan.fast:
        flip_mask = np.zeros(batch, dtype=np.int64)
        for qubit in range(n):
            flip_mask |= digits[:, qubit] << (n - 1 - qubit)
        for b in (0, 1):
            start = (b << na) | np.asarray(init_index, dtype=np.int64)
            final = plan.post_perm[plan.encoder_perm[start] ^ flip_mask]
            outputs[b, np.arange(batch), final >> na, final & (2 ** na - 1)] = 1.0
        return outputs
    for b in (0, 1):
        start = (b << na) | np.asarray(init_index, dtype=np.int64)
        states = plan.encoder_unitary[:, start].T.copy()
        psi = states.reshape((batch,) + (2,) * n)
        for qubit in range(n):
            for pauli in range(1, plan.paulis_per_qubit):
                rows = np.flatnonzero(digits[:, qubit] == pauli)
                if len(rows):
                    block = np.moveaxis(psi[rows], qubit + 1, -1) @ PAULIS[pauli].T
                    psi[rows] = np.moveaxis(block, -1, qubit + 1)
        states = psi.reshape(batch, 2 ** n) @ plan.post_unitary.T
        outputs[b] = states.reshape(batch, 2, 2 ** na)
    return outputs


def pattern_weights(outputs):
    """(1/4) * sum_s |Tr K_s|^2 per pattern, Tr K_s = <0,s|psi_0> + <1,s|psi_1>."""
    traces = outputs[0, :, 0, :] + outputs[1, :, 1, :]
    return 0.25 * np.sum(np.abs(traces) ** 2, axis=1)


def _chunk_histogram(plan, start, stop):
    ids = np.arange(start, stop, dtype=np.int64)
    init_index, main_index = ids // plan.n_main, ids % plan.n_main
    weights = pattern_weights(propagate(plan, init_index, main_index))
    flips = _popcount(init_index)
    errors = np.count_nonzero(_main_digits(main_index, plan), axis=1)
    histogram = np.zeros((plan.n_ancillas + 1, plan.n_qubits + 1))
    np.add.at(histogram, (flips, errors), weights)
    return histogram


def _chunk_job(args):
    return _chunk_histogram(*args)


def weight_histogram(code, workers=1, chunk_size=DEFAULT_CHUNK_SIZE, fast_path=True, main_errors=None):
    """W[j][k]: summed pattern weight over j initial flips and k nontrivial main errors.

    `main_errors=0` restricts the enumeration to trivial main errors.
    """
    plan = make_plan(code, fast_path=fast_path)
    if main_errors == 0:
        ids = np.arange(2 ** plan.n_ancillas, dtype=np.int64) * plan.n_main
        weights = pattern_weights(propagate(plan, ids // plan.n_main, ids % plan.n_main))
        histogram = np.zeros((plan.n_ancillas + 1, plan.n_qubits + 1))
        np.add.at(histogram, (_popcount(ids // plan.n_main), 0), weights)
        return histogram
    jobs = [(plan, start, min(start + chunk_size, plan.n_patterns))
            for start in range(0, plan.n_patterns, chunk_size)]
    began = time.perf_counter()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_job, jobs))
    else:
        parts = [_chunk_histogram(*job) for job in jobs]
    histogram = np.zeros((plan.n_ancillas + 1, plan.n_qubits + 1))
    for part in parts:
        histogram += part
    logger.info(f"Enumerated {plan.n_patterns} patterns of {code.label} "
                f"({'permutation' if plan.fast else 'generic'} path, {len(jobs)} chunks) "
                f"in {time.perf_counter() - began:.2f}s.")
    return histogram


def main_error_polynomial(family, k, n):
    """Probability of one specific pattern with k nontrivial errors on n qubits."""
    p = BiPoly.p()
    if _check_family(family) == 'bitflip':
        return binomial_weight(1 - p, p, k, n)
    return binomial_weight(1 - 0.75 * p, 0.25 * p, k, n)


def init_polynomial(j, n_ancillas):
    q = BiPoly.q()
    return binomial_weight(1 - 0.5 * q, 0.5 * q, j, n_ancillas)


def assemble(histogram, family):
    n_ancillas, n_qubits = histogram.shape[0] - 1, histogram.shape[1] - 1
    init = [init_polynomial(j, n_ancillas) for j in range(n_ancillas + 1)]
    main = [main_error_polynomial(family, k, n_qubits) for k in range(n_qubits + 1)]
    result = BiPoly()
    for j in range(n_ancillas + 1):
        for k in range(n_qubits + 1):
            if histogram[j, k]:
                result = result + init[j] * main[k] * float(histogram[j, k])
    return result


def fidelity_polynomial(code, workers=1, chunk_size=DEFAULT_CHUNK_SIZE, fast_path=True):
    """Exact F_C(p, q) of the effective message-qubit channel."""
    histogram = weight_histogram(code, workers=workers, chunk_size=chunk_size, fast_path=fast_path)
    return assemble(histogram, code.channel_family)


def main_channel(family, p):
    if _check_family(family) == 'bitflip':
        return main_bitflip_channel(p)
    return depolarizing_channel(p)


def oracle_fidelity(code, p, q, prefix=None):
    """F_C by direct density-matrix simulation with a reference qubit.

    Register order: message (0), ancillas (1..n-1), reference (n). `prefix`
    is an optional circuit run before the encoder.
    """
    p, q = check_probability('p', p), check_probability('q', q)
    n = code.n_qubits
    total = n + 1
    omega = np.zeros(2 ** total, dtype=complex)
    omega[0] = omega[(1 << n) | 1] = 1 / np.sqrt(2)
    rho = np.outer(omega, omega.conj())
    init = bitflip_init_channel(q)
    for ancilla in range(1, n):
        rho = apply_local_channel(init, rho, ancilla, total)
    encoder = code.encoder if prefix is None else prefix + code.encoder
    rho = _conjugate(rho, encoder.unitary())
    channel = main_channel(code.channel_family, p)
    for qubit in range(n):
        rho = apply_local_channel(channel, rho, qubit, total)
    rho = _conjugate(rho, code.post_error().unitary())
    reduced = partial_trace(rho, [0, n])
    bell = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    return float(np.real(bell.conj() @ reduced @ bell))


def _conjugate(rho, unitary):
    # unitary on the code qubits, identity on the trailing reference qubit
    full = np.kron(unitary, np.eye(2))
    return full @ rho @ full.conj().T


def unencoded_baseline(family, p):
    p = check_probability('p', p)
    if _check_family(family) == 'bitflip':
        return 1.0 - p
    return 1.0 - 0.75 * p
