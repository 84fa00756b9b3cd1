"""Audit of the closed-form decoders against a synthesized table."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .protocol import DECODERS, ClassicalTranscript, GateSequence
from .synthesis import CORRECTED, CorrectionTable, same_up_to_phase

_SWAP = GateSequence(("SWAP",)).matrix()

# worked examples stated alongside each closed form: (transcript, stated U)
WORKED_EXAMPLES = {
    "eq6": (ClassicalTranscript((1, 1, 1, 0), (1,)), GateSequence.of("XI", "CNOT21", "SWAP", "IZ")),
    "eq8": (ClassicalTranscript((0, 1, 0, 0), (0, 1)), GateSequence.of("IX", "CNOT21", "IZ")),
}


@dataclass(frozen=True)
class BitConvention:
    """How the closed form's bit names map onto measured wires.

    Named bit a_i is the outcome of Alice's measured wire ``alice[i-1]``,
    likewise b_i for Bob_1. ``charlie_swapped`` reads the closed form with
    Charlie's two qubits in the opposite order. ``time_order`` reads the
    written product left to right as the order the gates are applied, i.e.
    the reverse of the matrix product.
    """

    alice: tuple[int, ...] = (1, 2, 3, 4)
    bob: tuple[int, ...] = (1,)
    charlie_swapped: bool = False
    time_order: bool = False

    @property
    def tag(self) -> str:
        t = "a" + "".join(map(str, self.alice)) + ".b" + "".join(map(str, self.bob))
        return t + (".cs" if self.charlie_swapped else "") + (".t" if self.time_order else "")

    @classmethod
    def parse(cls, tag: str) -> "BitConvention":
        parts = tag.split(".")
        alice = tuple(int(c) for c in parts[0][1:])
        bob = tuple(int(c) for c in parts[1][1:])
        return cls(alice, bob, "cs" in parts[2:], "t" in parts[2:])

    def to_named(self, t: ClassicalTranscript) -> ClassicalTranscript:
        """Physical transcript -> the bits as named in the closed form."""
        return ClassicalTranscript(
            tuple(t.alice[w - 1] for w in self.alice),
            tuple(t.bob1[w - 1] for w in self.bob),
            t.mids,
        )

    def to_physical(self, t: ClassicalTranscript) -> ClassicalTranscript:
        alice = [0] * 4
        for i, w in enumerate(self.alice):
            alice[w - 1] = t.alice[i]
        bob = [0] * len(self.bob)
        for i, w in enumerate(self.bob):
            bob[w - 1] = t.bob1[i]
        return ClassicalTranscript(tuple(alice), tuple(bob), t.mids)

    def realize(self, seq: GateSequence) -> np.ndarray:
        u = GateSequence(seq.tokens[::-1]).matrix() if self.time_order else seq.matrix()
        return _SWAP @ u @ _SWAP if self.charlie_swapped else u


def default_conventions(decoder: str) -> list[BitConvention]:
    n_bob = 1 if decoder == "eq6" else 2
    ident = tuple(range(1, n_bob + 1))
    return [BitConvention((1, 2, 3, 4), ident), BitConvention((4, 3, 2, 1), ident[::-1])]


def all_conventions(decoder: str) -> list[BitConvention]:
    n_bob = 1 if decoder == "eq6" else 2
    return [
        BitConvention(a, b, cs, to)
        for to in (False, True)
        for cs in (False, True)
        for a in permutations((1, 2, 3, 4))
        for b in permutations(range(1, n_bob + 1))
    ]


def _classify(in_table: bool, in_equation: bool) -> str:
    if in_table and in_equation:
        return "both"
    return "table" if in_table else "equation" if in_equation else "neither"


def audit_decoder(table: CorrectionTable, decoder: str, convention: BitConvention | str | None = None) -> dict:
    """Compare a closed form with ``table`` row by row, up to global phase."""
    if decoder not in DECODERS:
        raise ValueError(f"unknown decoder {decoder!r}")
    need_n, fn = DECODERS[decoder]
    if table.n != need_n:
        raise ValueError(f"{decoder} is the N={need_n} decoder; table is for N={table.n}")
    if convention is None:
        convention = default_conventions(decoder)[0]
    elif isinstance(convention, str):
        convention = BitConvention.parse(convention)

    matched, mismatched = 0, []
    for key, row in table.rows.items():
        if row.flag != CORRECTED:
            continue
        t = ClassicalTranscript.parse(key)
        named = convention.to_named(t)
        u = convention.realize(fn(named))
        if same_up_to_phase(u, row.sequence.matrix()):
            matched += 1
        else:
            mismatched.append(key)
    corrected = table.count(CORRECTED)

    ex_t, ex_u = WORKED_EXAMPLES[decoder]
    phys = convention.to_physical(ex_t)
    stated = convention.realize(ex_u)
    literal = fn(ex_t)
    row = table.rows.get(phys.encode())
    in_table = row is not None and row.flag == CORRECTED and same_up_to_phase(stated, row.sequence.matrix())
    in_eq = same_up_to_phase(ex_u.matrix(), literal.matrix())
    return {
        "decoder": decoder,
        "convention": convention.tag,
        "corrected_rows": corrected,
        "matched": matched,
        "match_fraction": matched / corrected if corrected else 0.0,
        "mismatched": mismatched,
        "worked_example": {
            "named_transcript": ex_t.encode(),
            "physical_transcript": phys.encode(),
            "stated": list(ex_u.tokens),
            "literal_equation": list(literal.tokens),
            "table": None if row is None else list(row.sequence.tokens),
            "classification": _classify(in_table, in_eq),
        },
    }


def audit_sweep(table: CorrectionTable, decoder: str) -> dict:
    """Default conventions in full plus a match-fraction scan over all of them."""
    named = [audit_decoder(table, decoder, c) for c in default_conventions(decoder)]
    scan = {c.tag: audit_decoder(table, decoder, c) for c in all_conventions(decoder)}
    best_tag = max(scan, key=lambda k: (scan[k]["match_fraction"], -list(scan).index(k)))
    fractions = {k: v["match_fraction"] for k, v in scan.items()}
    return {
        "decoder": decoder,
        "n": table.n,
        "table_config": table.config.tag,
        "conventions": named,
        "best": scan[best_tag],
        "scan": fractions,
        "example_classifications": {k: v["worked_example"]["classification"] for k, v in scan.items()},
    }
