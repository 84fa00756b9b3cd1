"""Dense statevector engine.

Qubits are labelled 1..n. Qubit 1 is the most significant bit of the
amplitude index, so the label ``x1 x2 ... xn`` of a ket is the binary
index of its amplitude.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

NORM_TOL = 1e-9
ZERO_PROB = 1e-12

_S2 = 1 / np.sqrt(2)

GATE_MATRICES: dict[str, np.ndarray] = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _S2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    # X applied after Z
    "XZ": np.array([[0, -1], [1, 0]], dtype=complex),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "CNOT": np.eye(4, dtype=complex)[[0, 1, 3, 2]],
    "SWAP": np.eye(4, dtype=complex)[[0, 2, 1, 3]],
}
GATE_ARITY = {"H": 1, "X": 1, "Z": 1, "XZ": 1, "CZ": 2, "CNOT": 2, "SWAP": 2}


class StateVector:
    """Immutable normalized pure state on ``num_qubits`` labelled wires."""

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, amplitudes, num_qubits: int | None = None, *, check: bool = True):
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        n = int(round(np.log2(amps.size))) if num_qubits is None else num_qubits
        if n < 1 or amps.size != 2**n:
            raise ValueError(f"need 2**n amplitudes with n >= 1, got {amps.size}")
        if check:
            norm = np.linalg.norm(amps)
            if abs(norm - 1) > NORM_TOL:
                raise ValueError(f"state not normalized (norm {norm:.12g})")
        amps.flags.writeable = False
        self.num_qubits = n
        self.amplitudes = amps

    @classmethod
    def from_unnormalized(cls, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(amps)
        if norm < np.sqrt(ZERO_PROB):
            raise ValueError("cannot normalize a (near) zero vector")
        return cls(amps / norm)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.num_qubits)

    def amplitude(self, label: str) -> complex:
        return complex(self.amplitudes[int(label, 2)])

    def nonzero_terms(self, tol: float = 1e-12) -> dict[str, complex]:
        n = self.num_qubits
        return {
            format(i, f"0{n}b"): complex(a)
            for i, a in enumerate(self.amplitudes)
            if abs(a) > tol
        }

    def __repr__(self):
        terms = self.nonzero_terms()
        shown = " ".join(f"{a:+.4g}|{k}>" for k, a in list(terms.items())[:8])
        more = " ..." if len(terms) > 8 else ""
        return f"StateVector(n={self.num_qubits}: {shown}{more})"


@dataclass(frozen=True)
class GateSpec:
    name: str
    targets: tuple[int, ...]

    def __post_init__(self):
        if self.name not in GATE_MATRICES:
            raise ValueError(f"unknown gate {self.name!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if len(self.targets) != GATE_ARITY[self.name]:
            raise ValueError(f"{self.name} takes {GATE_ARITY[self.name]} target(s), got {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"repeated target in {self.targets}")

    @property
    def matrix(self) -> np.ndarray:
        return GATE_MATRICES[self.name]


@dataclass(frozen=True)
class MeasurementBranch:
    outcome: str
    probability: float
    post_state: StateVector | None
    survivor_map: tuple[int, ...]

    @property
    def zero_probability(self) -> bool:
        return self.probability <= ZERO_PROB


class DensityMatrix:
    __slots__ = ("num_qubits", "entries")

    def __init__(self, entries):
        rho = np.array(entries, dtype=complex)
        dim = rho.shape[0]
        n = int(round(np.log2(dim)))
        if rho.shape != (dim, dim) or 2**n != dim:
            raise ValueError(f"bad density matrix shape {rho.shape}")
        rho.flags.writeable = False
        self.num_qubits = n
        self.entries = rho

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        a = state.amplitudes
        return cls(np.outer(a, a.conj()))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh((self.entries + self.entries.conj().T) / 2)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))


def _check_qubits(n: int, qubits: Sequence[int]) -> list[int]:
    qs = [int(q) for q in qubits]
    if len(set(qs)) != len(qs):
        raise ValueError(f"repeated qubit in {qs}")
    for q in qs:
        if not 1 <= q <= n:
            raise ValueError(f"qubit {q} out of range 1..{n}")
    return qs


def basis_state(num_qubits: int, label: str) -> StateVector:
    if len(label) != num_qubits or set(label) - {"0", "1"}:
        raise ValueError(f"label {label!r} is not a {num_qubits}-bit string")
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[int(label, 2)] = 1
    return StateVector(amps)


def apply_matrix(amps: np.ndarray, n: int, matrix: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Apply a k-qubit matrix to raw amplitudes (no normalization checks)."""
    k = len(targets)
    axes = [t - 1 for t in targets]
    t = amps.reshape((2,) * n)
    t = np.tensordot(matrix.reshape((2,) * (2 * k)), t, axes=(list(range(k, 2 * k)), axes))
    t = np.moveaxis(t, list(range(k)), axes)
    return t.reshape(-1)


def apply_gate(state: StateVector, gate: GateSpec) -> StateVector:
    targets = _check_qubits(state.num_qubits, gate.targets)
    out = apply_matrix(state.amplitudes, state.num_qubits, gate.matrix, targets)
    return StateVector(out, state.num_qubits, check=False)


def apply_gates(state: StateVector, gates: Sequence[GateSpec]) -> StateVector:
    for g in gates:
        state = apply_gate(state, g)
    return state


def tensor_product(a: StateVector, b: StateVector) -> StateVector:
    return StateVector(np.kron(a.amplitudes, b.amplitudes), a.num_qubits + b.num_qubits, check=False)


def project(amps: np.ndarray, n: int, qubits: Sequence[int], bits: Sequence[int]) -> np.ndarray:
    """Unnormalized projection onto ``bits`` with the measured qubits removed."""
    index: list = [slice(None)] * n
    for q, b in zip(qubits, bits):
        index[q - 1] = int(b)
    return np.ascontiguousarray(amps.reshape((2,) * n)[tuple(index)]).reshape(-1)


def enumerate_measurement_branches(state: StateVector, qubits: Sequence[int]) -> list[MeasurementBranch]:
    """All 2**m computational-basis outcomes of measuring ``qubits``.

    Outcome strings follow the order of ``qubits``. Zero-probability branches
    are kept with ``post_state=None``; so is the (single-valued) post state
    when every qubit is measured.
    """
    n = state.num_qubits
    qs = _check_qubits(n, qubits)
    survivors = tuple(q for q in range(1, n + 1) if q not in qs)
    branches = []
    for bits in product((0, 1), repeat=len(qs)):
        vec = project(state.amplitudes, n, qs, bits)
        p = float(np.vdot(vec, vec).real)
        post = None
        if p > ZERO_PROB and survivors:
            post = StateVector(vec / np.sqrt(p), len(survivors), check=False)
        branches.append(MeasurementBranch("".join(map(str, bits)), p, post, survivors))
    return branches


def reduced_density_matrix(state: StateVector, keep: Sequence[int]) -> DensityMatrix:
    n = state.num_qubits
    ks = _check_qubits(n, keep)
    rest = [q - 1 for q in range(1, n + 1) if q not in ks]
    t = np.moveaxis(state.tensor(), [k - 1 for k in ks] + rest, list(range(n)))
    mat = t.reshape(2 ** len(ks), -1)
    return DensityMatrix(mat @ mat.conj().T)


def _same_size(a, b):
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"dimension mismatch: {a.num_qubits} vs {b.num_qubits} qubits")


def pure_fidelity(a: StateVector, b: StateVector) -> float:
    _same_size(a, b)
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    _same_size(a, b)
    return float(0.5 * np.linalg.svd(a.entries - b.entries, compute_uv=False).sum())


def equal_up_to_global_phase(a: StateVector, b: StateVector, tol: float = 1e-12) -> bool:
    # the minimizing phase is arg<b|a>; evaluate the residual directly rather
    # than via 2 - 2|<a|b>|, which loses half the digits
    _same_size(a, b)
    overlap = np.vdot(b.amplitudes, a.amplitudes)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return bool(np.linalg.norm(a.amplitudes - phase * b.amplitudes) <= tol)


def random_state(num_qubits: int, rng: np.random.Generator) -> StateVector:
    v = rng.normal(size=2**num_qubits) + 1j * rng.normal(size=2**num_qubits)
    return StateVector(v / np.linalg.norm(v))
