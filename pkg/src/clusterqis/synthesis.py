"""Ground truth for Charlie's corrections.

For a fixed outcome path the protocol is linear in the secret, so running it
on the four basis secrets gives a 4x4 transfer map M from secret amplitudes
to Charlie's unnormalized state. The path is recoverable iff M is a multiple
of a unitary, and the correction is then any U with U M = c I.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Iterable

import numpy as np

from .cluster import DRESSED_PREP, REFERENCE_FOR_N, ChannelSource
from .protocol import (
    BOB1_STYLES,
    TOKEN_MATRICES,
    ClassicalTranscript,
    GateSequence,
    LockingVariant,
    ProtocolConfig,
    SecretState,
    protocol_leaves,
)
from .sim import ZERO_PROB

PROP_TOL = 1e-9
DICTIONARY_LEVELS = ("pauli_frame", "extended", "full_clifford")


# -- transfer maps -----------------------------------------------------------


@dataclass(frozen=True)
class TransferMap:
    transcript: ClassicalTranscript
    matrix: np.ndarray = field(repr=False)

    @property
    def gram(self) -> np.ndarray:
        return self.matrix.conj().T @ self.matrix

    @property
    def probability_scale(self) -> float:
        """Branch probability when M^dag M is proportional to I."""
        return float(np.trace(self.gram).real / 4)

    def probability(self, secret: SecretState) -> float:
        v = self.matrix @ secret.vector()
        return float(np.vdot(v, v).real)

    def is_correctable(self, tol: float = PROP_TOL) -> bool:
        """M^dag M = c I with c > 0, checked without any gate search."""
        c = self.probability_scale
        return c > ZERO_PROB and float(np.abs(self.gram - c * np.eye(4)).max()) <= tol


@lru_cache(maxsize=64)
def transfer_maps(config: ProtocolConfig) -> dict[str, TransferMap]:
    """Transfer maps for every transcript, keyed by encoded transcript."""
    channel = config.channel()
    columns: dict[str, list[np.ndarray]] = {}
    transcripts: dict[str, ClassicalTranscript] = {}
    for j in range(4):
        basis = SecretState.from_vector(np.eye(4)[j])
        for leaf in protocol_leaves(config, basis, channel):
            key = leaf.transcript.encode()
            transcripts[key] = leaf.transcript
            col = np.zeros(4, dtype=complex) if leaf.charlie is None else np.sqrt(leaf.probability) * leaf.charlie.amplitudes
            columns.setdefault(key, []).append(col)
    out = {}
    for key, cols in columns.items():
        m = np.array(cols).T
        m.flags.writeable = False
        out[key] = TransferMap(transcripts[key], m)
    return out


def branch_transfer_map(config: ProtocolConfig, transcript: ClassicalTranscript | str) -> TransferMap:
    key = transcript if isinstance(transcript, str) else transcript.encode()
    maps = transfer_maps(config)
    if key not in maps:
        raise ValueError(f"transcript {key!r} does not exist for {config.tag}")
    return maps[key]


def completeness_residual(config: ProtocolConfig) -> float:
    """max |sum_t M_t^dag M_t - I|; zero for a complete measurement."""
    total = sum(m.gram for m in transfer_maps(config).values())
    return float(np.abs(total - np.eye(4)).max())


# -- gate dictionaries -------------------------------------------------------


def phase_key(u: np.ndarray) -> bytes:
    """Hashable key identifying ``u`` up to global phase."""
    flat = u.reshape(-1)
    k = int(np.argmax(np.abs(flat) > 0.5 * np.abs(flat).max()))
    v = flat * (abs(flat[k]) / flat[k])
    v = np.round(v, 8) + (0.0 + 0.0j)
    return v.tobytes()


def same_up_to_phase(u: np.ndarray, v: np.ndarray, tol: float = 1e-9) -> bool:
    """True iff u = e^{i phi} v for unitaries u, v."""
    return abs(abs(np.trace(u.conj().T @ v)) - u.shape[0]) <= tol


@dataclass(frozen=True)
class GateDictionary:
    level: str
    entries: tuple[GateSequence, ...]
    matrices: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.entries)


_PAULI_1Q = {"I": (), "X": ("X",), "Z": ("Z",), "XZ": ("X", "Z")}
ENTANGLERS = (
    (),
    ("CNOT12",),
    ("CNOT21",),
    ("SWAP",),
    ("CNOT21", "SWAP"),
    ("CNOT12", "SWAP"),
)


def _pauli_layers() -> list[tuple[str, ...]]:
    layers = []
    for p1, p2 in product(_PAULI_1Q, repeat=2):
        layers.append(tuple(g + "1" for g in _PAULI_1Q[p1]) + tuple(g + "2" for g in _PAULI_1Q[p2]))
    return layers


def _dedup(words: Iterable[tuple[str, ...]], level: str) -> GateDictionary:
    seen: set[bytes] = set()
    entries, mats = [], []
    for w in words:
        seq = GateSequence(w)
        m = seq.matrix()
        key = phase_key(m)
        if key not in seen:
            seen.add(key)
            entries.append(seq)
            mats.append(m)
    return GateDictionary(level, tuple(entries), np.array(mats))


def _clifford_words() -> list[tuple[str, ...]]:
    gens = ("H1", "H2", "S1", "S2", "CNOT12")
    start = np.eye(4, dtype=complex)
    seen = {phase_key(start)}
    words = [()]
    queue = deque([((), start)])
    while queue:
        word, m = queue.popleft()
        for g in gens:
            nm = m @ TOKEN_MATRICES[g]
            key = phase_key(nm)
            if key not in seen:
                seen.add(key)
                words.append(word + (g,))
                queue.append((word + (g,), nm))
    return words


@lru_cache(maxsize=None)
def build_dictionary(level: str) -> GateDictionary:
    """Correction search space.

    pauli_frame: Pauli layer . entangler . Pauli layer. extended: the same
    sandwiched between Hadamard layers. full_clifford: every two-qubit
    Clifford (11520 up to phase), as shortest words over H, S, CNOT12.
    All levels are deduplicated up to global phase, first occurrence wins.
    """
    layers = _pauli_layers()
    frame = [l + e + r for e in ENTANGLERS for l in layers for r in layers]
    if level == "pauli_frame":
        return _dedup(frame, level)
    if level == "extended":
        hl = [(), ("H1",), ("H2",), ("H1", "H2")]
        words = frame + [a + w + b for a in hl for b in hl for w in frame]
        return _dedup(words, level)
    if level == "full_clifford":
        return _dedup(frame + _clifford_words(), level)
    raise ValueError(f"unknown dictionary level {level!r}; choose from {DICTIONARY_LEVELS}")


def find_correction(m: np.ndarray, dictionary: GateDictionary, tol: float = PROP_TOL):
    """First entry U with U m = c I, as (index, c); None if absent."""
    scale = np.trace(m.conj().T @ m).real / 4
    if scale <= ZERO_PROB:
        return None
    v = m / np.sqrt(scale)
    overlaps = np.abs(np.einsum("kij,ji->k", dictionary.matrices, v))
    for k in np.flatnonzero(overlaps > 4 - 1e-6):
        um = dictionary.matrices[k] @ m
        c = np.trace(um) / 4
        if np.abs(um - c * np.eye(4)).max() <= tol:
            return int(k), complex(c)
    return None


# -- correction tables -------------------------------------------------------

CORRECTED, ZERO, UNSYNTH = "corrected", "zero-probability", "unsynthesizable"


@dataclass(frozen=True)
class TableRow:
    transcript: str
    sequence: GateSequence
    flag: str
    dictionary_index: int | None = None


@dataclass
class CorrectionTable:
    config: ProtocolConfig
    level: str
    rows: dict[str, TableRow]

    @property
    def n(self) -> int:
        return self.config.n

    def sequence_for(self, transcript: ClassicalTranscript | str) -> GateSequence:
        key = transcript if isinstance(transcript, str) else transcript.encode()
        return self.rows[key].sequence

    def count(self, flag: str) -> int:
        return sum(r.flag == flag for r in self.rows.values())

    @property
    def complete(self) -> bool:
        """Every transcript is either corrected or never occurs."""
        return self.count(UNSYNTH) == 0 and self.count(CORRECTED) > 0

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "source": self.config.source.value,
            "schedule": self.config.schedule,
            "flip_last_sign": self.config.flip_last_sign,
            "variant": self.config.variant.to_json(),
            "dictionary": self.level,
            "rows": [
                {"transcript": r.transcript, "sequence": list(r.sequence.tokens), "flag": r.flag,
                 "dictionary_index": r.dictionary_index}
                for r in self.rows.values()
            ],
        }

    @classmethod
    def from_json(cls, d: dict) -> "CorrectionTable":
        config = ProtocolConfig(d["n"], ChannelSource(d["source"]), LockingVariant.from_json(d["variant"]),
                                d.get("schedule", "standard"), bool(d.get("flip_last_sign", False)))
        rows = {
            r["transcript"]: TableRow(r["transcript"], GateSequence(tuple(r["sequence"])), r["flag"],
                                      r.get("dictionary_index"))
            for r in d["rows"]
        }
        return cls(config, d.get("dictionary", "pauli_frame"), rows)


def synthesize_table(config: ProtocolConfig, dictionary: GateDictionary | str = "pauli_frame") -> CorrectionTable:
    if isinstance(dictionary, str):
        dictionary = build_dictionary(dictionary)
    rows = {}
    for key, tm in sorted(transfer_maps(config).items()):
        if tm.probability_scale <= ZERO_PROB and np.abs(tm.matrix).max() ** 2 <= ZERO_PROB:
            rows[key] = TableRow(key, GateSequence(), ZERO)
            continue
        hit = find_correction(tm.matrix, dictionary)
        if hit is None:
            rows[key] = TableRow(key, GateSequence(), UNSYNTH)
        else:
            rows[key] = TableRow(key, dictionary.entries[hit[0]], CORRECTED, hit[0])
    return CorrectionTable(config, dictionary.level, rows)


def synthesize_escalating(config: ProtocolConfig) -> CorrectionTable:
    """Try each dictionary level until no correctable row is left unsolved."""
    maps = transfer_maps(config)
    correctable = {k for k, tm in maps.items() if tm.is_correctable()}
    table = None
    for level in DICTIONARY_LEVELS:
        table = synthesize_table(config, level)
        missing = [k for k in correctable if table.rows[k].flag != CORRECTED]
        if not missing:
            break
        if not correctable:
            break
    return table


def party_dependence(table: CorrectionTable) -> dict[str, bool]:
    """Whether Charlie's correction changes with each Bob's bits.

    A Bob whose bits never change the correction is not needed to unlock.
    """
    corrected = {k: r.sequence.matrix() for k, r in table.rows.items() if r.flag == CORRECTED}
    parties = {"bob1": lambda t: (t.alice, t.mids)}
    for i in range(max(0, table.n - 6)):
        parties[f"bob{i + 2}"] = lambda t, i=i: (t.alice, t.bob1, t.mids[:i] + t.mids[i + 1 :])
    out = {}
    for party, blank in parties.items():
        groups: dict[tuple, list[np.ndarray]] = {}
        for key, u in corrected.items():
            groups.setdefault(blank(ClassicalTranscript.parse(key)), []).append(u)
        out[party] = any(not same_up_to_phase(g[0], u) for g in groups.values() for u in g[1:])
    return out


# -- configuration sweep -----------------------------------------------------


def candidate_configs(n: int, *, sources=None, schedules=None, layouts=None, h_psi1=None,
                      bob1_styles=None) -> list[ProtocolConfig]:
    """Configurations in sweep order; the first deterministic one is accepted."""
    if sources is None:
        sources = [ChannelSource.REFERENCE, ChannelSource.CIRCUIT, ChannelSource.PRODUCT, ChannelSource.DRESSED]
    schedules = schedules or ["standard", "relay"]
    layouts = layouts or ["target_h", "bell"]
    h_psi1 = [False, True] if h_psi1 is None else h_psi1
    bob1_styles = bob1_styles or list(BOB1_STYLES)
    if n == 5:
        bob1_styles = bob1_styles[:1]
    variants = []
    for layout in layouts:
        for h in h_psi1:
            for style in bob1_styles:
                v = LockingVariant(layout, h, style)
                if v not in variants:
                    variants.append(v)
    configs = []
    for src in sources:
        src = ChannelSource.parse(src) if isinstance(src, str) else src
        if src is ChannelSource.REFERENCE:
            if n not in REFERENCE_FOR_N:
                continue
            flips = [False, True] if n == 6 else [False]
            for flip in flips:
                configs += [ProtocolConfig(n, src, v, flip_last_sign=flip) for v in variants]
            continue
        if src is ChannelSource.DRESSED:
            if n in DRESSED_PREP:
                configs += [ProtocolConfig(n, src, v) for v in variants]
            continue
        for sched in schedules:
            configs += [ProtocolConfig(n, src, v, sched) for v in variants]
    return configs


@dataclass
class SweepEntry:
    config: ProtocolConfig
    transcripts: int
    correctable: int
    corrected: int
    zero_probability: int
    dictionary: str
    completeness_residual: float
    deterministic: bool
    party_dependence: dict[str, bool] | None = None

    def to_json(self) -> dict:
        d = {
            "config": self.config.to_json(),
            "tag": self.config.tag,
            "transcripts": self.transcripts,
            "correctable": self.correctable,
            "corrected": self.corrected,
            "zero_probability": self.zero_probability,
            "dictionary": self.dictionary,
            "completeness_residual": self.completeness_residual,
            "deterministic": self.deterministic,
        }
        if self.party_dependence is not None:
            d["party_dependence"] = self.party_dependence
        return d


@dataclass
class SweepReport:
    n: int
    entries: list[SweepEntry]
    tables: dict[str, CorrectionTable]

    @property
    def accepted(self) -> ProtocolConfig | None:
        for e in self.entries:
            if e.deterministic:
                return e.config
        return None

    def accepted_table(self) -> CorrectionTable | None:
        cfg = self.accepted
        return None if cfg is None else self.tables[cfg.tag]

    def to_json(self) -> dict:
        acc = self.accepted
        return {
            "n": self.n,
            "accepted": None if acc is None else acc.to_json(),
            "accepted_tag": None if acc is None else acc.tag,
            "deterministic": [e.config.tag for e in self.entries if e.deterministic],
            "entries": [e.to_json() for e in self.entries],
        }


def evaluate_config(config: ProtocolConfig) -> tuple[SweepEntry, CorrectionTable]:
    maps = transfer_maps(config)
    table = synthesize_escalating(config)
    correctable = sum(tm.is_correctable() for tm in maps.values())
    corrected = table.count(CORRECTED)
    zero = table.count(ZERO)
    det = table.complete and corrected + zero == len(maps)
    entry = SweepEntry(
        config, len(maps), correctable, corrected, zero, table.level,
        completeness_residual(config), det, party_dependence(table) if det else None,
    )
    return entry, table


def variant_sweep(n: int, configs: list[ProtocolConfig] | None = None) -> SweepReport:
    if not 5 <= n <= 12:
        raise ValueError(f"variant sweep covers N in 5..12, got {n}")
    configs = candidate_configs(n) if configs is None else configs
    entries, tables = [], {}
    for cfg in configs:
        entry, table = evaluate_config(cfg)
        entries.append(entry)
        tables[cfg.tag] = table
    return SweepReport(n, entries, tables)


@lru_cache(maxsize=16)
def accepted_configuration(n: int) -> ProtocolConfig | None:
    """First deterministic configuration in sweep order, stopping at the first hit."""
    for cfg in candidate_configs(n):
        entry, _ = evaluate_config(cfg)
        if entry.deterministic:
            return cfg
    return None


def outcome_distribution(config: ProtocolConfig, secret: SecretState) -> dict[str, float]:
    return {leaf.transcript.encode(): leaf.probability for leaf in protocol_leaves(config, secret)}
