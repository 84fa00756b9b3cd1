"""Linear cluster channels and the pre-distribution swap schedules."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .sim import GateSpec, StateVector, apply_gate, basis_state

MIN_N, MAX_N = 2, 16


class ChannelSource(str, Enum):
    PRODUCT = "product_form"
    CIRCUIT = "circuit_form"
    REFERENCE = "reference"
    DRESSED = "dressed_form"

    @classmethod
    def parse(cls, tag: str) -> "ChannelSource":
        short = {"product": cls.PRODUCT, "circuit": cls.CIRCUIT, "dressed": cls.DRESSED}
        return short.get(tag) or cls(tag)


@dataclass(frozen=True)
class SwapSchedule:
    swaps: tuple[tuple[int, int], ...]
    tag: str = "custom"

    def __post_init__(self):
        swaps = tuple((int(i), int(j)) for i, j in self.swaps)
        for i, j in swaps:
            if i == j:
                raise ValueError(f"degenerate swap ({i}, {j})")
        object.__setattr__(self, "swaps", swaps)

    def reversed(self) -> "SwapSchedule":
        return SwapSchedule(tuple(reversed(self.swaps)), f"{self.tag}-reversed")

    def permutation(self, n: int) -> list[int]:
        """``perm[p-1]`` is the original label that ends up on wire ``p``."""
        labels = list(range(1, n + 1))
        for i, j in self.swaps:
            labels[i - 1], labels[j - 1] = labels[j - 1], labels[i - 1]
        return labels


def _check_n(n: int):
    if not MIN_N <= n <= MAX_N:
        raise ValueError(f"N must be in {MIN_N}..{MAX_N}, got {n}")


def _bit_table(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    return (idx[:, None] >> np.arange(n - 1, -1, -1)) & 1


def build_product_form(n: int) -> StateVector:
    """Expand prod_a (|0>_a Z_{a+1} + |1>_a) / sqrt(2), with Z_{N+1} = I.

    Choosing |0> on qubit a flips the sign when qubit a+1 is 1, so the
    amplitude of |x> is (-1)^{sum_a (1 - x_a) x_{a+1}} / 2^{N/2}.
    """
    _check_n(n)
    x = _bit_table(n)
    parity = ((1 - x[:, :-1]) * x[:, 1:]).sum(axis=1) % 2
    return StateVector((1 - 2 * parity) / 2 ** (n / 2), n)


def generation_circuit(n: int) -> list[GateSpec]:
    _check_n(n)
    gates = [GateSpec("H", (q,)) for q in range(1, n + 1)]
    gates += [GateSpec("CZ", (a, a + 1)) for a in range(1, n)]
    return gates


def build_circuit_form(n: int) -> StateVector:
    """Run the generation circuit (H on every wire, CZ chain) on |0...0>."""
    state = basis_state(n, "0" * n)
    for gate in generation_circuit(n):
        state = apply_gate(state, gate)
    return state


def circuit_json(n: int) -> dict:
    return {
        "num_qubits": n,
        "gates": [{"name": g.name, "targets": list(g.targets)} for g in generation_circuit(n)],
    }


_REFERENCE_TERMS = {
    "C5": (5, 2.0, [("00101", 1), ("00010", -1), ("11001", -1), ("11110", 1)]),
    "C5_prime": (5, 2.0, [("00010", 1), ("01101", 1), ("10100", -1), ("11011", -1)]),
    "C6_prime": (
        6,
        2 * np.sqrt(2),
        [
            ("010101", 1), ("010010", -1), ("001001", -1), ("001110", 1),
            ("100101", 1), ("100010", -1), ("111001", -1), ("111110", -1),
        ],
    ),
}
REFERENCE_NAMES = tuple(_REFERENCE_TERMS)


def reference_terms(name: str) -> tuple[int, float, list[tuple[str, int]]]:
    if name not in _REFERENCE_TERMS:
        raise ValueError(f"unknown reference state {name!r}; choose from {REFERENCE_NAMES}")
    return _REFERENCE_TERMS[name]


def reference_state(name: str, *, flip_last_sign: bool = False) -> StateVector:
    """The tabulated compressed kets, coefficients exactly as listed.

    ``flip_last_sign`` negates the final term, which for C6_prime turns the
    listed ``-|111110>`` into ``+|111110>`` for the sign-flip probe.
    """
    n, norm, terms = reference_terms(name)
    amps = np.zeros(2**n, dtype=complex)
    for k, (label, sign) in enumerate(terms):
        if flip_last_sign and k == len(terms) - 1:
            sign = -sign
        amps[int(label, 2)] = sign / norm
    return StateVector(amps, n)


REFERENCE_FOR_N = {5: "C5_prime", 6: "C6_prime"}


def swap_schedule(n: int) -> SwapSchedule:
    """Pre-distribution swaps, applied left to right.

    Odd N: (1,3), (3,5), ..., (N-2, N). Even N: (1, N/2+1), (N/2, N),
    which is (1,4), (3,6) at N = 6.
    """
    if n < 5:
        raise ValueError(f"swap schedules need N >= 5, got {n}")
    if n % 2:
        return SwapSchedule(tuple((a, a + 2) for a in range(1, n - 1, 2)), "standard")
    return SwapSchedule(((1, n // 2 + 1), (n // 2, n)), "standard")


def relay_schedule(n: int) -> SwapSchedule:
    """Move chain qubit 2 next to the far end: wires read 1, 3, 4, ..., N-1, 2, N.

    Alice then holds chain sites {1, 3}, the Bobs hold the contiguous run
    4..N-1 and Charlie holds {2, N}, so the secret has to cross every Bob.
    """
    if n < 5:
        raise ValueError(f"swap schedules need N >= 5, got {n}")
    return SwapSchedule(tuple((k, k + 1) for k in range(2, n - 1)), "relay")


SCHEDULES = {"standard": swap_schedule, "relay": relay_schedule}

# dressed channels: Hadamards on some cluster sites after the CZ chain, then
# a fixed set of swaps
DRESSED_PREP = {
    5: ((1, 3, 5), SwapSchedule(((1, 3), (3, 5)), "dressed")),
    6: ((1, 4, 6), SwapSchedule(((1, 3), (4, 6)), "dressed")),
}


def build_dressed_form(n: int) -> StateVector:
    if n not in DRESSED_PREP:
        raise ValueError(f"dressed channel only exists for N in {sorted(DRESSED_PREP)}")
    hadamards, schedule = DRESSED_PREP[n]
    state = build_circuit_form(n)
    for q in hadamards:
        state = apply_gate(state, GateSpec("H", (q,)))
    return redistribute(state, schedule)


def redistribute(state: StateVector, schedule: SwapSchedule) -> StateVector:
    for i, j in schedule.swaps:
        for q in (i, j):
            if not 1 <= q <= state.num_qubits:
                raise ValueError(f"swap index {q} out of range 1..{state.num_qubits}")
        state = apply_gate(state, GateSpec("SWAP", (i, j)))
    return state


def build_channel(n: int, source: ChannelSource | str, schedule: str = "standard",
                  *, flip_last_sign: bool = False) -> StateVector:
    """The redistributed channel |C'_N> ready for qubit distribution.

    Reference kets and the dressed channels are already in post-swap form, so
    ``schedule`` is ignored for them.
    """
    source = ChannelSource.parse(source) if isinstance(source, str) else source
    if source is ChannelSource.DRESSED:
        return build_dressed_form(n)
    if source is ChannelSource.REFERENCE:
        if n not in REFERENCE_FOR_N:
            raise ValueError(f"reference channel only exists for N in {sorted(REFERENCE_FOR_N)}")
        return reference_state(REFERENCE_FOR_N[n], flip_last_sign=flip_last_sign)
    raw = build_product_form(n) if source is ChannelSource.PRODUCT else build_circuit_form(n)
    return redistribute(raw, SCHEDULES[schedule](n))
