"""Locking/unlocking pipeline for splitting a two-qubit secret over a cluster channel.

Joint wire layout: wires 1, 2 carry the secret (psi_1, psi_2); wire k + 2
carries channel qubit c_k. Alice measures wires 1-4, Bob_1 holds c_3 (and
c_4 when N >= 6), each middle Bob one further qubit, Charlie the last two.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .cluster import ChannelSource, build_channel
from .sim import (
    ZERO_PROB,
    GateSpec,
    MeasurementBranch,
    StateVector,
    apply_gate,
    apply_gates,
    enumerate_measurement_branches,
    pure_fidelity,
    tensor_product,
)

log = logging.getLogger(__name__)

BOB1_STYLES = ("cnot_then_measure", "cnot_then_hadamards", "cz_then_hadamards")
LOCK_LAYOUTS = ("target_h", "bell")


# -- secret ------------------------------------------------------------------


@dataclass(frozen=True)
class SecretState:
    """alpha|00> + mu|10> + gamma|01> + beta|11>."""

    alpha: complex
    mu: complex
    gamma: complex
    beta: complex

    def __post_init__(self):
        norm = sum(abs(c) ** 2 for c in self.coefficients())
        if abs(norm - 1) > 1e-9:
            raise ValueError(f"secret not normalized: sum |c|^2 = {norm:.12g}")

    def coefficients(self) -> tuple[complex, complex, complex, complex]:
        return (self.alpha, self.mu, self.gamma, self.beta)

    def vector(self) -> np.ndarray:
        """Amplitudes in computational order |00>, |01>, |10>, |11>."""
        return np.array([self.alpha, self.gamma, self.mu, self.beta], dtype=complex)

    def state(self) -> StateVector:
        return StateVector(self.vector(), 2, check=False)

    @classmethod
    def from_vector(cls, v) -> "SecretState":
        v = np.asarray(v, dtype=complex)
        return cls(alpha=v[0], mu=v[2], gamma=v[1], beta=v[3])

    @classmethod
    def basis(cls, label: str) -> "SecretState":
        v = np.zeros(4, dtype=complex)
        v[int(label, 2)] = 1
        return cls.from_vector(v)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "SecretState":
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        return cls.from_vector(v / np.linalg.norm(v))

    @classmethod
    def from_reals(cls, values: Sequence[float]) -> "SecretState":
        """Eight reals: (re, im) of alpha, mu, gamma, beta. Normalized on load."""
        if len(values) != 8:
            raise ValueError(f"secret needs 8 reals, got {len(values)}")
        a, m, g, b = (complex(values[2 * k], values[2 * k + 1]) for k in range(4))
        norm = np.sqrt(sum(abs(c) ** 2 for c in (a, m, g, b)))
        if norm == 0:
            raise ValueError("secret is the zero vector")
        if abs(norm - 1) > 1e-6:
            log.warning("secret renormalized (norm was %.9g)", norm)
        return cls(a / norm, m / norm, g / norm, b / norm)


# -- parties and variants ----------------------------------------------------


@dataclass(frozen=True)
class PartyAssignment:
    """Joint-wire indices held by each party."""

    n: int
    alice: tuple[int, ...]
    bob1: tuple[int, ...]
    mid_bobs: tuple[int, ...]
    charlie: tuple[int, int]

    @property
    def num_parties(self) -> int:
        return 3 + len(self.mid_bobs)

    def channel_qubits(self, wires: Sequence[int]) -> list[int]:
        return [w - 2 for w in wires if w > 2]

    def party_names(self) -> list[str]:
        return ["alice", "bob1"] + [f"bob{i}" for i in range(2, 2 + len(self.mid_bobs))] + ["charlie"]

    def wires_of(self, party: str) -> tuple[int, ...]:
        if party == "alice":
            return self.alice
        if party == "bob1":
            return self.bob1
        if party == "charlie":
            return self.charlie
        if party.startswith("bob") and party[3:].isdigit():
            i = int(party[3:])
            if 2 <= i < 2 + len(self.mid_bobs):
                return (self.mid_bobs[i - 2],)
        raise ValueError(f"no party {party!r} at N={self.n}")


def assign_parties(n: int) -> PartyAssignment:
    if n < 5:
        raise ValueError(f"the protocol needs N >= 5, got {n}")
    c = lambda k: k + 2  # noqa: E731
    if n == 5:
        return PartyAssignment(5, (1, 2, c(1), c(2)), (c(3),), (), (c(4), c(5)))
    return PartyAssignment(
        n,
        (1, 2, c(1), c(2)),
        (c(3), c(4)),
        tuple(c(i + 3) for i in range(2, n - 4)),
        (c(n - 1), c(n)),
    )


@dataclass(frozen=True)
class LockingVariant:
    """Which reading of Alice's locking circuit and Bob_1's unlock to run.

    ``lock_layout="target_h"`` puts the Hadamards after the CNOTs on the CNOT
    targets (wires 2 and 4); ``h_on_psi1`` optionally adds one on wire 1.
    ``lock_layout="bell"`` puts them on the CNOT controls (wires 1 and 3), so
    Alice makes two Bell measurements. That layout already contains the psi_1
    Hadamard, so ``h_on_psi1`` is forced on.
    """

    lock_layout: str = "target_h"
    h_on_psi1: bool = False
    bob1_style: str = "cnot_then_measure"

    def __post_init__(self):
        if self.lock_layout not in LOCK_LAYOUTS:
            raise ValueError(f"lock_layout must be one of {LOCK_LAYOUTS}")
        if self.bob1_style not in BOB1_STYLES:
            raise ValueError(f"bob1_style must be one of {BOB1_STYLES}")
        if self.lock_layout == "bell":
            object.__setattr__(self, "h_on_psi1", True)

    @property
    def tag(self) -> str:
        return f"{self.lock_layout}/h{int(self.h_on_psi1)}/{self.bob1_style}"

    def to_json(self) -> dict:
        return {"lock_layout": self.lock_layout, "h_on_psi1": self.h_on_psi1, "bob1_style": self.bob1_style}

    @classmethod
    def from_json(cls, d: dict) -> "LockingVariant":
        return cls(d["lock_layout"], bool(d["h_on_psi1"]), d["bob1_style"])


@dataclass(frozen=True)
class ProtocolConfig:
    n: int
    source: ChannelSource = ChannelSource.REFERENCE
    variant: LockingVariant = field(default_factory=LockingVariant)
    schedule: str = "standard"
    flip_last_sign: bool = False

    def __post_init__(self):
        if isinstance(self.source, str):
            object.__setattr__(self, "source", ChannelSource.parse(self.source))
        if self.n < 5:
            raise ValueError(f"the protocol needs N >= 5, got {self.n}")
        if self.source in (ChannelSource.REFERENCE, ChannelSource.DRESSED):
            # these come pre-swapped
            object.__setattr__(self, "schedule", "none")

    def channel(self) -> StateVector:
        return build_channel(self.n, self.source, self.schedule, flip_last_sign=self.flip_last_sign)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "source": self.source.value,
            "schedule": self.schedule,
            "variant": self.variant.to_json(),
            "flip_last_sign": self.flip_last_sign,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ProtocolConfig":
        return cls(d["n"], ChannelSource(d["source"]), LockingVariant.from_json(d["variant"]),
                   d.get("schedule", "standard"), bool(d.get("flip_last_sign", False)))

    @property
    def tag(self) -> str:
        flip = "/flip" if self.flip_last_sign else ""
        return f"N{self.n}/{self.source.value}/{self.schedule}/{self.variant.tag}{flip}"


# -- transcripts and corrections -------------------------------------------


@dataclass(frozen=True)
class ClassicalTranscript:
    alice: tuple[int, ...]
    bob1: tuple[int, ...]
    mids: tuple[int, ...] = ()

    def __post_init__(self):
        for name in ("alice", "bob1", "mids"):
            bits = tuple(int(b) for b in getattr(self, name))
            if any(b not in (0, 1) for b in bits):
                raise ValueError(f"{name} bits must be 0/1, got {bits}")
            object.__setattr__(self, name, bits)
        if len(self.alice) != 4:
            raise ValueError(f"Alice sends 4 bits, got {len(self.alice)}")

    def check(self, n: int):
        expect_bob = 1 if n == 5 else 2
        if len(self.bob1) != expect_bob or len(self.mids) != max(0, n - 6):
            raise ValueError(f"transcript {self.encode()} does not fit N={n}")

    @property
    def total_bits(self) -> int:
        return len(self.alice) + len(self.bob1) + len(self.mids)

    def encode(self) -> str:
        j = lambda bits: "".join(map(str, bits))  # noqa: E731
        return f"{j(self.alice)}|{j(self.bob1)}|{j(self.mids)}"

    @classmethod
    def parse(cls, text: str) -> "ClassicalTranscript":
        parts = text.split("|")
        if len(parts) != 3:
            raise ValueError(f"transcript {text!r} must look like 'a1a2a3a4|b..|m..'")
        return cls(*(tuple(int(c) for c in p) for p in parts))

    def __str__(self):
        return self.encode()


def all_transcripts(n: int) -> list[ClassicalTranscript]:
    from itertools import product

    nb = 1 if n == 5 else 2
    nm = max(0, n - 6)
    return [
        ClassicalTranscript(bits[:4], bits[4 : 4 + nb], bits[4 + nb :])
        for bits in product((0, 1), repeat=4 + nb + nm)
    ]


_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.diag([1, -1]).astype(complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.diag([1, 1j])

TOKEN_MATRICES: dict[str, np.ndarray] = {
    "I": np.eye(4, dtype=complex),
    "X1": np.kron(_X, _I2),
    "X2": np.kron(_I2, _X),
    "Z1": np.kron(_Z, _I2),
    "Z2": np.kron(_I2, _Z),
    "H1": np.kron(_H, _I2),
    "H2": np.kron(_I2, _H),
    "S1": np.kron(_S, _I2),
    "S2": np.kron(_I2, _S),
    "CNOT12": np.eye(4, dtype=complex)[[0, 1, 3, 2]],
    "CNOT21": np.eye(4, dtype=complex)[[0, 3, 2, 1]],
    "SWAP": np.eye(4, dtype=complex)[[0, 2, 1, 3]],
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
}

# named Pauli layers on Charlie's pair; qubit 1 is his lower-indexed wire
PAULI_LAYERS: dict[str, tuple[str, ...]] = {
    "II": (),
    "XI": ("X1",),
    "IX": ("X2",),
    "XX": ("X1", "X2"),
    "ZI": ("Z1",),
    "IZ": ("Z2",),
    "ZZ": ("Z1", "Z2"),
}


@dataclass(frozen=True)
class GateSequence:
    """Charlie's correction as a matrix product, written left to right.

    ``("X1", "CNOT21", "SWAP", "Z2")`` is X1 . CNOT21 . SWAP . Z2, so Z2 acts
    first. ``CNOT21`` has control 2 and target 1. The empty sequence is the
    identity.
    """

    tokens: tuple[str, ...] = ()

    def __post_init__(self):
        toks = tuple(t for t in self.tokens if t != "I")
        for t in toks:
            if t not in TOKEN_MATRICES:
                raise ValueError(f"unknown gate token {t!r}")
        object.__setattr__(self, "tokens", toks)

    def matrix(self) -> np.ndarray:
        m = np.eye(4, dtype=complex)
        for t in self.tokens:
            m = m @ TOKEN_MATRICES[t]
        return m

    def __add__(self, other: "GateSequence") -> "GateSequence":
        return GateSequence(self.tokens + other.tokens)

    def __str__(self):
        return ".".join(self.tokens) if self.tokens else "I"

    @classmethod
    def of(cls, *parts) -> "GateSequence":
        """Concatenate Pauli-layer names ('XI', 'IZ', ...) and raw tokens."""
        toks: list[str] = []
        for p in parts:
            toks.extend(PAULI_LAYERS.get(p, (p,)))
        return cls(tuple(toks))


# -- protocol stages ---------------------------------------------------------


def prepare_joint_state(secret: SecretState, channel: StateVector) -> StateVector:
    return tensor_product(secret.state(), channel)


def lock_gates(variant: LockingVariant) -> list[GateSpec]:
    gates = [GateSpec("SWAP", (2, 4)), GateSpec("CNOT", (1, 2))]
    if variant.lock_layout == "target_h":
        gates += [GateSpec("H", (2,)), GateSpec("CNOT", (3, 4)), GateSpec("H", (4,))]
        if variant.h_on_psi1:
            gates.append(GateSpec("H", (1,)))
    else:
        gates += [GateSpec("CNOT", (3, 4)), GateSpec("H", (1,)), GateSpec("H", (3,))]
    return gates


def lock(joint: StateVector, variant: LockingVariant) -> list[tuple[str, MeasurementBranch]]:
    """Alice's gates, then all 16 outcomes of measuring wires 1-4 (a1..a4)."""
    if joint.num_qubits < 7:
        raise ValueError(f"joint state needs >= 7 qubits, got {joint.num_qubits}")
    state = apply_gates(joint, lock_gates(variant))
    return [(b.outcome, b) for b in enumerate_measurement_branches(state, [1, 2, 3, 4])]


def bob1_gates(n: int, variant: LockingVariant) -> list[GateSpec]:
    """Bob_1's gates on the post-lock state, where his wires are 1 (and 2)."""
    if n == 5:
        return [GateSpec("H", (1,))]
    style = variant.bob1_style
    if style == "cnot_then_measure":
        return [GateSpec("CNOT", (1, 2))]
    if style == "cnot_then_hadamards":
        return [GateSpec("CNOT", (1, 2)), GateSpec("H", (1,)), GateSpec("H", (2,))]
    return [GateSpec("CZ", (1, 2)), GateSpec("H", (1,)), GateSpec("H", (2,))]


def unlock_bob1(branch_state: StateVector, n: int, variant: LockingVariant) -> list[tuple[str, MeasurementBranch]]:
    wires = [1] if n == 5 else [1, 2]
    state = apply_gates(branch_state, bob1_gates(n, variant))
    return [(b.outcome, b) for b in enumerate_measurement_branches(state, wires)]


def unlock_bob_mid(branch_state: StateVector, wire: int) -> list[tuple[str, MeasurementBranch]]:
    """Hadamard-basis measurement of a single wire."""
    state = apply_gate(branch_state, GateSpec("H", (wire,)))
    return [(b.outcome, b) for b in enumerate_measurement_branches(state, [wire])]


@dataclass(frozen=True)
class Leaf:
    transcript: ClassicalTranscript
    probability: float
    charlie: StateVector | None


def protocol_leaves(config: ProtocolConfig, secret: SecretState, channel: StateVector | None = None) -> Iterator[Leaf]:
    """Every full outcome path, in transcript order, with Charlie's 2-qubit state."""
    n = config.n
    channel = config.channel() if channel is None else channel
    joint = prepare_joint_state(secret, channel)
    n_mid = max(0, n - 6)
    nb = 1 if n == 5 else 2

    def mids(state, p, done):
        if len(done) == n_mid:
            yield done, p, state
            return
        for bit, br in unlock_bob_mid(state, 1) if state is not None else [(b, None) for b in "01"]:
            q = 0.0 if br is None else p * br.probability
            nxt = None if br is None or br.zero_probability else br.post_state
            yield from mids(nxt, q, done + bit)

    for a_bits, abr in lock(joint, config.variant):
        if abr.zero_probability:
            bob = [(format(k, f"0{nb}b"), None) for k in range(2**nb)]
        else:
            bob = unlock_bob1(abr.post_state, n, config.variant)
        for b_bits, bbr in bob:
            p_ab = 0.0 if bbr is None else abr.probability * bbr.probability
            st = None if bbr is None or bbr.zero_probability else bbr.post_state
            for m_bits, p, final in mids(st, p_ab, ""):
                t = ClassicalTranscript(tuple(map(int, a_bits)), tuple(map(int, b_bits)), tuple(map(int, m_bits)))
                yield Leaf(t, p, final if p > ZERO_PROB else None)


# -- closed-form decoders ----------------------------------------------------


def _bits(t: ClassicalTranscript, n_bob: int):
    if len(t.alice) != 4 or len(t.bob1) != n_bob:
        raise ValueError(f"transcript {t} needs 4 Alice bits and {n_bob} Bob bit(s)")
    return t.alice, t.bob1


def decode_n5(t: ClassicalTranscript) -> GateSequence:
    """Five-qubit closed form, boolean selectors evaluated literally."""
    (a1, a2, a3, a4), (b1,) = _bits(t, 1)
    first = {(0, 0): "XI", (0, 1): "IX", (1, 0): "II", (1, 1): "XX"}[(a4, a2)]
    s, r = a1 ^ a3, a3 ^ b1
    last = {(0, 0): "IZ", (0, 1): "ZI", (1, 0): "ZZ", (1, 1): "II"}[(s, r)]
    return GateSequence.of(first, "CNOT21", "SWAP", last)


def decode_n6(t: ClassicalTranscript) -> GateSequence:
    """Six-qubit closed form, boolean selectors evaluated literally."""
    (a1, a2, a3, a4), (b1, b2) = _bits(t, 2)
    sel = (a1 ^ a2 ^ b1) ^ (a3 ^ b2)
    first = {(0, 0): "XI", (0, 1): "II", (1, 0): "IX", (1, 1): "XX"}[(a4, sel)]
    s, r = a1 ^ a3, a3 ^ b2
    last = {(0, 0): "ZI", (0, 1): "IZ", (1, 0): "ZZ", (1, 1): "II"}[(s, r)]
    return GateSequence.of(first, "CNOT21", last)


DECODERS = {"eq6": (5, decode_n5), "eq8": (6, decode_n6)}


def apply_correction(charlie_state: StateVector, seq: GateSequence) -> StateVector:
    if charlie_state.num_qubits != 2:
        raise ValueError(f"Charlie holds 2 qubits, got a {charlie_state.num_qubits}-qubit state")
    return StateVector(seq.matrix() @ charlie_state.amplitudes, 2, check=False)


@dataclass(frozen=True)
class BranchResult:
    transcript: ClassicalTranscript
    probability: float
    fidelity: float | None
    correction: GateSequence | None


def enumerate_protocol_branches(config: ProtocolConfig, secret: SecretState, decoder: str = "table",
                                table=None) -> list[BranchResult]:
    """Run every outcome path, correct with ``decoder`` and score against ``secret``.

    ``table`` is anything with ``sequence_for(transcript)``; required when
    ``decoder == "table"``.
    """
    if decoder == "table":
        if table is None:
            raise ValueError("decoder 'table' needs a correction table")
        lookup = table.sequence_for
    elif decoder in DECODERS:
        need_n, fn = DECODERS[decoder]
        if config.n != need_n:
            raise ValueError(f"decoder {decoder} only applies to N={need_n}, not N={config.n}")
        lookup = fn
    else:
        raise ValueError(f"unknown decoder {decoder!r}")
    target = secret.state()
    out = []
    for leaf in protocol_leaves(config, secret):
        if leaf.charlie is None:
            out.append(BranchResult(leaf.transcript, leaf.probability, None, None))
            continue
        seq = lookup(leaf.transcript)
        fid = pure_fidelity(apply_correction(leaf.charlie, seq), target)
        out.append(BranchResult(leaf.transcript, leaf.probability, fid, seq))
    return out
