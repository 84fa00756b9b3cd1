"""Can a single party learn anything about the secret on their own?

For every Alice outcome the scan compares the party's reduced state for
pairs of random secrets. Trace distance zero means the party's share is
independent of the secret.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .protocol import (
    ProtocolConfig,
    SecretState,
    assign_parties,
    lock,
    prepare_joint_state,
    unlock_bob1,
    unlock_bob_mid,
)
from .sim import DensityMatrix, StateVector, reduced_density_matrix, trace_distance

# post-lock survivors are joint wires 5..N+2, i.e. local wire = joint wire - 4
_LOCK_OFFSET = 4


@dataclass
class SecurityReport:
    party: str
    config: ProtocolConfig
    pairs: int
    seed: int
    per_branch: dict[str, float]
    # same distance with Alice's bits unknown too
    alice_blind: float = 0.0

    @property
    def global_max(self) -> float:
        return max(self.per_branch.values()) if self.per_branch else 0.0

    def to_json(self) -> dict:
        return {
            "party": self.party,
            "config": self.config.to_json(),
            "pairs": self.pairs,
            "seed": self.seed,
            "per_branch": self.per_branch,
            "global_max": self.global_max,
            "alice_blind_max": self.alice_blind,
        }


def sample_secret_pairs(pairs: int, seed: int) -> list[tuple[SecretState, SecretState]]:
    rng = np.random.default_rng(seed)
    return [(SecretState.random(rng), SecretState.random(rng)) for _ in range(pairs)]


def charlie_blind_state(post_lock: StateVector, config: ProtocolConfig) -> DensityMatrix:
    """Charlie's state knowing Alice's bits but none of the Bobs' results.

    Runs the Bobs' measurements and mixes the resulting Charlie states with
    their probabilities.
    """
    n = config.n
    rho = np.zeros((4, 4), dtype=complex)
    stack = []
    for _, br in unlock_bob1(post_lock, n, config.variant):
        if not br.zero_probability:
            stack.append((br.probability, br.post_state))
    while stack:
        p, st = stack.pop()
        if st.num_qubits == 2:
            rho += p * np.outer(st.amplitudes, st.amplitudes.conj())
            continue
        for _, br in unlock_bob_mid(st, 1):
            if not br.zero_probability:
                stack.append((p * br.probability, br.post_state))
    return DensityMatrix(rho)


def party_state(post_lock: StateVector, config: ProtocolConfig, party: str) -> DensityMatrix:
    if party == "charlie":
        return charlie_blind_state(post_lock, config)
    wires = assign_parties(config.n).wires_of(party)
    return reduced_density_matrix(post_lock, [w - _LOCK_OFFSET for w in wires])


def security_scan(config: ProtocolConfig, party: str, pairs: int = 50, seed: int = 0) -> SecurityReport:
    if party == "alice":
        raise ValueError("Alice holds the secret before measuring; scan a Bob or Charlie")
    assign_parties(config.n).wires_of(party)
    channel = config.channel()
    worst: dict[str, float] = {}
    blind = 0.0
    for s1, s2 in sample_secret_pairs(pairs, seed):
        b1 = lock(prepare_joint_state(s1, channel), config.variant)
        b2 = lock(prepare_joint_state(s2, channel), config.variant)
        mix1, mix2 = 0.0, 0.0
        for (bits, x), (_, y) in zip(b1, b2):
            if x.zero_probability or y.zero_probability:
                continue
            rx = party_state(x.post_state, config, party)
            ry = party_state(y.post_state, config, party)
            worst[bits] = max(worst.get(bits, 0.0), trace_distance(rx, ry))
            mix1 = mix1 + x.probability * rx.entries
            mix2 = mix2 + y.probability * ry.entries
        blind = max(blind, trace_distance(DensityMatrix(mix1), DensityMatrix(mix2)))
    return SecurityReport(party, config, pairs, seed, dict(sorted(worst.items())), blind)


def scan_all_parties(config: ProtocolConfig, pairs: int = 50, seed: int = 0) -> dict[str, SecurityReport]:
    names = [p for p in assign_parties(config.n).party_names() if p != "alice"]
    return {p: security_scan(config, p, pairs, seed) for p in names}
