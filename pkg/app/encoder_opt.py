"""Search over encoder extensions made of one controlled single-qubit unitary
per ancilla bit-string, inserted where augmentation puts the inverse recovery.

For fixed (p, q) the channel fidelity is a quadratic form in the inserted
unitaries: F = 1/4 * sum_a Pr(a) * u_a^H A_a u_a, u_a the flattened 2x2 block
for ancilla pattern a. `FidelityResponse` precomputes the A_a so that the
optimizer's objective costs a few 4x4 products.
"""
import logging
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.optimize import minimize

from .codes import Circuit, Gate
from .errors import CodeConstructionError, ParameterRangeError, check_probability
from .fidelity_engine import make_plan, oracle_fidelity, propagate, _main_digits, _popcount
from .quantum_core import is_unitary

logger = logging.getLogger(__name__)

MAX_EVALUATIONS = 10 ** 5
SIMPLEX_TOLERANCE = 1e-8


def rz(theta):
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]])


def ry(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def zyz_unitary(alpha, beta, gamma):
    return rz(alpha) @ ry(beta) @ rz(gamma)


def zyz_unitaries(angles):
    """Vectorized zyz_unitary over rows of an (m, 3) angle array."""
    alpha, beta, gamma = angles[:, 0], angles[:, 1], angles[:, 2]
    c, s = np.cos(beta / 2), np.sin(beta / 2)
    plus, minus = np.exp(-0.5j * (alpha + gamma)), np.exp(-0.5j * (alpha - gamma))
    out = np.empty((len(angles), 2, 2), dtype=complex)
    out[:, 0, 0] = plus * c
    out[:, 0, 1] = -minus * s
    out[:, 1, 0] = np.conj(minus) * s
    out[:, 1, 1] = np.conj(plus) * c
    return out


def zyz_angles(unitary, atol=1e-12):
    """(alpha, beta, gamma) with zyz_unitary equal to `unitary` up to global phase."""
    unitary = np.asarray(unitary, dtype=complex)
    special = unitary / np.sqrt(np.linalg.det(unitary))
    a, b = special[0, 0], special[1, 0]
    beta = 2 * np.arctan2(abs(b), abs(a))
    if abs(b) <= atol:
        alpha = gamma = -np.angle(a)
    elif abs(a) <= atol:
        alpha, gamma = np.angle(b), -np.angle(b)
    else:
        total, difference = -2 * np.angle(a), 2 * np.angle(b)
        alpha, gamma = 0.5 * (total + difference), 0.5 * (total - difference)
    return float(alpha), float(beta), float(gamma)


class ControlledUnitaryFamily(BaseModel):
    """Three Euler angles per ancilla bit-string (row s = integer value of the string)."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n_qubits: int
    angles: np.ndarray

    @model_validator(mode='after')
    def _check(self):
        expected = (2 ** (self.n_qubits - 1), 3)
        if self.angles.shape != expected:
            raise CodeConstructionError(f"expected angles of shape {expected}, got {self.angles.shape}")
        return self

    @classmethod
    def from_vector(cls, n_qubits, vector):
        return cls(n_qubits=n_qubits, angles=np.asarray(vector, dtype=float).reshape(-1, 3))

    @property
    def parameter_count(self):
        return self.angles.size

    def unitaries(self):
        return zyz_unitaries(self.angles)


def zero_family(n_qubits):
    return ControlledUnitaryFamily(n_qubits=n_qubits, angles=np.zeros((2 ** (n_qubits - 1), 3)))


def recovery_blocks(code):
    """The 2x2 message-qubit block of the recovery for every ancilla pattern."""
    na_dim = 2 ** code.n_ancillas
    full = code.recovery.unitary().reshape(2, na_dim, 2, na_dim)
    return np.stack([full[:, s, :, s] for s in range(na_dim)])


def inverse_recovery_family(code):
    angles = [zyz_angles(block.conj().T) for block in recovery_blocks(code)]
    return ControlledUnitaryFamily(n_qubits=code.n_qubits, angles=np.array(angles))


def family_to_circuit(family):
    n, na = family.n_qubits, family.n_qubits - 1
    gates = []
    for s, unitary in enumerate(family.unitaries()):
        if not is_unitary(unitary):
            raise CodeConstructionError(f"block {s} is not unitary")
        controls = tuple((k + 1, (s >> (na - 1 - k)) & 1) for k in range(na))
        gates.append(Gate(target=0, unitary=unitary, controls=controls))
    return Circuit(n_qubits=n, gates=tuple(gates))


def _require_plain(code):
    if code.augmented:
        raise CodeConstructionError(f"{code.label}: insertions are made into the unaugmented encoder")


def objective(code, family, p, q):
    """Oracle channel fidelity with the family prepended to the unaugmented encoder."""
    _require_plain(code)
    return oracle_fidelity(code, p, q, prefix=family_to_circuit(family))


class FidelityResponse:
    """Per-ancilla-pattern response matrices A_a of a code at fixed (p, q)."""

    def __init__(self, n_qubits, init_probabilities, matrices):
        self.n_qubits = n_qubits
        self.init_probabilities = init_probabilities
        self.matrices = matrices

    @classmethod
    def build(cls, code, p, q):
        _require_plain(code)
        p, q = check_probability('p', p), check_probability('q', q)
        plan = make_plan(code)
        na_dim = 2 ** plan.n_ancillas
        main = np.arange(plan.n_main, dtype=np.int64)
        errors = np.count_nonzero(_main_digits(main, plan), axis=1)
        if plan.family == 'bitflip':
            main_prob = p ** errors * (1 - p) ** (plan.n_qubits - errors)
        else:
            main_prob = (p / 4) ** errors * (1 - 0.75 * p) ** (plan.n_qubits - errors)
        flips = _popcount(np.arange(na_dim))
        init_prob = (q / 2) ** flips * (1 - q / 2) ** (plan.n_ancillas - flips)
        matrices = np.zeros((na_dim, 4, 4), dtype=complex)
        for a in range(na_dim):
            outputs = propagate(plan, np.full(plan.n_main, a, dtype=np.int64), main)
            # w[e, s, 2*b + m] = <m, s| W_e |b, a>, so Tr(K U) = w . vec(U)
            w = outputs.transpose(1, 3, 0, 2).reshape(plan.n_main, na_dim, 4)
            outer = np.conj(w)[..., :, None] * w[..., None, :]
            matrices[a] = np.einsum('e,eskl->kl', main_prob, outer)
        return cls(plan.n_qubits, init_prob, matrices)

    def evaluate(self, vector):
        unitaries = zyz_unitaries(np.asarray(vector, dtype=float).reshape(-1, 3))
        u = unitaries.reshape(len(unitaries), 4)
        quad = np.einsum('ak,akl,al->a', np.conj(u), self.matrices, u).real
        return float(0.25 * np.dot(self.init_probabilities, quad))


def _run_start(args):
    response, start = args
    result = minimize(lambda x: -response.evaluate(x), start, method='Nelder-Mead',
                      options=dict(xatol=SIMPLEX_TOLERANCE, fatol=1e-15,
                                   maxfev=MAX_EVALUATIONS, adaptive=True))
    return -float(result.fun), np.asarray(result.x), int(result.nfev)


def start_points(code, restarts, seed):
    """The inverse-recovery family, then the zero family, then seeded uniform draws in (-pi, pi).

    Exactly `restarts` points; the first two are deterministic.
    """
    if restarts < 1:
        raise ParameterRangeError("restarts must be at least 1")
    n = code.n_qubits
    starts = [inverse_recovery_family(code).angles.ravel(), zero_family(n).angles.ravel()][:restarts]
    rng = np.random.default_rng(seed)
    for _ in range(restarts - len(starts)):
        starts.append(rng.uniform(-np.pi, np.pi, size=starts[0].shape))
    return starts


def optimize(code, p, q, restarts, seed, workers=1):
    """Multi-start Nelder-Mead over the controlled-unitary family.

    Runs one search from each of `start_points`. Ties keep the lowest start index.
    Returns (best family, best fidelity, total evaluations).
    """
    starts = start_points(code, restarts, seed)
    response = FidelityResponse.build(code, p, q)
    jobs = [(response, start) for start in starts]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_start, jobs))
    else:
        results = [_run_start(job) for job in jobs]
    best_index = 0
    for index, (value, _, _) in enumerate(results):
        logger.info(f"{code.label} start {index}: fidelity {value:.12f}")
        if value > results[best_index][0]:
            best_index = index
    best_value, best_vector, _ = results[best_index]
    evaluations = sum(nfev for _, _, nfev in results)
    return ControlledUnitaryFamily.from_vector(code.n_qubits, best_vector), best_value, evaluations
