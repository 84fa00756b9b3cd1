import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clusterqis.cli import FIXTURE_DIR
from clusterqis.cluster import ChannelSource, reference_state
from clusterqis.protocol import (
    DECODERS,
    ClassicalTranscript,
    GateSequence,
    LockingVariant,
    ProtocolConfig,
    SecretState,
    all_transcripts,
    apply_correction,
    assign_parties,
    decode_n5,
    decode_n6,
    enumerate_protocol_branches,
    lock,
    prepare_joint_state,
    unlock_bob1,
    unlock_bob_mid,
)
from clusterqis.serialize import read_artifact, state_from_json
from clusterqis.sim import StateVector, basis_state, random_state
from clusterqis.synthesis import accepted_configuration, outcome_distribution, synthesize_escalating

C5P = reference_state("C5_prime")
FIXTURES = FIXTURE_DIR


def T(text):
    return ClassicalTranscript.parse(text)


# -- secret --------------------------------------------------------------------


def test_secret_coefficient_order():
    # mu multiplies |10>, gamma multiplies |01>
    s = SecretState(alpha=0, mu=1, gamma=0, beta=0)
    assert s.state().nonzero_terms() == {"10": 1}
    assert SecretState.from_vector(s.vector()) == s


def test_secret_must_be_normalized():
    with pytest.raises(ValueError):
        SecretState(1, 1, 0, 0)


def test_secret_from_reals(caplog):
    s = SecretState.from_reals([0.6, 0, 0, 0, 0, 0, 0.8, 0])
    assert s.coefficients() == pytest.approx((0.6, 0, 0, 0.8))
    with caplog.at_level(logging.WARNING):
        s = SecretState.from_reals([1, 0, 0, 0, 0, 0, 1, 0])
    assert "renormalized" in caplog.text
    assert abs(s.alpha) == pytest.approx(1 / np.sqrt(2))
    with pytest.raises(ValueError):
        SecretState.from_reals([0] * 8)
    with pytest.raises(ValueError):
        SecretState.from_reals([1, 0])


# -- parties -------------------------------------------------------------------


def test_party_assignment_examples():
    p5 = assign_parties(5)
    assert p5.alice == (1, 2, 3, 4) and p5.bob1 == (5,) and p5.charlie == (6, 7)
    assert p5.channel_qubits(p5.bob1) == [3] and p5.channel_qubits(p5.charlie) == [4, 5]
    p6 = assign_parties(6)
    assert p6.channel_qubits(p6.bob1) == [3, 4] and p6.channel_qubits(p6.charlie) == [5, 6]
    assert p6.mid_bobs == ()
    p8 = assign_parties(8)
    assert [p8.channel_qubits([w]) for w in p8.mid_bobs] == [[5], [6]]
    assert p8.channel_qubits(p8.charlie) == [7, 8]
    assert p8.num_parties == 5
    with pytest.raises(ValueError):
        assign_parties(4)


@pytest.mark.parametrize("n", range(5, 13))
def test_parties_partition_the_wires(n):
    p = assign_parties(n)
    wires = sorted(w for name in p.party_names() for w in p.wires_of(name))
    assert wires == list(range(1, n + 3))
    # N=5 and N=6 both have three parties; each further qubit adds a Bob
    assert p.num_parties == max(3, n - 3)
    with pytest.raises(ValueError):
        p.wires_of(f"bob{n}")


# -- transcripts and gate sequences ------------------------------------------------


def test_transcript_encoding_round_trip():
    t = ClassicalTranscript((1, 1, 1, 0), (1,))
    assert t.encode() == "1110|1|"
    assert T("0100|01|101") == ClassicalTranscript((0, 1, 0, 0), (0, 1), (1, 0, 1))
    assert T("0100|01|101").total_bits == 9
    for bad in ("0100|01", "010|1|", "0120|1|"):
        with pytest.raises(ValueError):
            T(bad)
    with pytest.raises(ValueError):
        T("0000|1|").check(6)


@pytest.mark.parametrize("n", [5, 6, 7, 9])
def test_all_transcripts_count(n):
    ts = all_transcripts(n)
    assert len(ts) == len(set(ts)) == 2**n
    for t in ts:
        t.check(n)
        assert t.total_bits == 4 + (1 if n == 5 else 2) + max(0, n - 6)


def test_gate_sequence_is_matrix_product_left_to_right():
    x1 = GateSequence.of("XI").matrix()
    z2 = GateSequence.of("IZ").matrix()
    seq = GateSequence.of("XI", "CNOT21", "SWAP", "IZ")
    expected = x1 @ GateSequence(("CNOT21",)).matrix() @ GateSequence(("SWAP",)).matrix() @ z2
    assert np.allclose(seq.matrix(), expected)
    assert seq.tokens == ("X1", "CNOT21", "SWAP", "Z2")
    assert GateSequence.of("II").tokens == ()
    with pytest.raises(ValueError):
        GateSequence(("T1",))


def test_cnot21_has_control_on_qubit_two():
    out = apply_correction(basis_state(2, "01"), GateSequence(("CNOT21",)))
    assert out.nonzero_terms() == {"11": 1}


def test_apply_correction_examples():
    s = random_state(2, np.random.default_rng(0))
    assert np.allclose(apply_correction(s, GateSequence()).amplitudes, s.amplitudes)
    assert apply_correction(basis_state(2, "00"), GateSequence.of("XI")).nonzero_terms() == {"10": 1}
    with pytest.raises(ValueError):
        apply_correction(basis_state(3, "000"), GateSequence())


# -- closed-form decoders ---------------------------------------------------------


def test_decode_n5_examples():
    assert decode_n5(T("0000|0|")) == GateSequence.of("XI", "CNOT21", "SWAP", "IZ")
    assert decode_n5(T("0101|1|")) == GateSequence.of("XX", "CNOT21", "SWAP", "ZI")
    # the worked example's stated first factor is X on qubit 1; literal
    # evaluation selects X on qubit 2
    assert decode_n5(T("1110|1|")).tokens[0] == "X2"
    with pytest.raises(ValueError):
        decode_n5(T("0000|00|"))


def test_decode_n6_examples():
    assert decode_n6(T("0000|00|")) == GateSequence.of("XI", "CNOT21", "ZI")
    assert decode_n6(T("0100|01|")).tokens[0] == "X1"
    with pytest.raises(ValueError):
        decode_n6(T("0000|0|"))


@pytest.mark.parametrize("decoder", sorted(DECODERS))
def test_decoders_total_and_unitary(decoder):
    n, fn = DECODERS[decoder]
    for t in all_transcripts(n):
        u = fn(t).matrix()
        assert np.abs(u.conj().T @ u - np.eye(4)).max() <= 1e-12
        # one Pauli layer from each bracket
        assert "CNOT21" in fn(t).tokens


# -- pipeline stages ----------------------------------------------------------------


def test_joint_state_layout():
    joint = prepare_joint_state(SecretState.basis("00"), C5P)
    assert joint.num_qubits == 7
    assert all(k.startswith("00") for k in joint.nonzero_terms())
    bell = SecretState.from_vector([1 / np.sqrt(2), 0, 0, 1 / np.sqrt(2)])
    assert abs(prepare_joint_state(bell, C5P).norm() - 1) < 1e-12


@pytest.mark.parametrize("variant", [LockingVariant(), LockingVariant("target_h", True), LockingVariant("bell")])
def test_lock_emits_sixteen_branches(variant):
    secret = SecretState.random(np.random.default_rng(1))
    branches = lock(prepare_joint_state(secret, C5P), variant)
    assert [b for b, _ in branches] == [format(i, "04b") for i in range(16)]
    assert sum(br.probability for _, br in branches) == pytest.approx(1, abs=1e-12)


def test_lock_needs_seven_qubits():
    with pytest.raises(ValueError):
        lock(basis_state(6, "000000"), LockingVariant())


def test_bell_layout_forces_psi1_hadamard():
    assert LockingVariant("bell", False).h_on_psi1 is True
    with pytest.raises(ValueError):
        LockingVariant("diagonal")
    with pytest.raises(ValueError):
        LockingVariant(bob1_style="measure")
    v = LockingVariant("target_h", True, "cz_then_hadamards")
    assert LockingVariant.from_json(v.to_json()) == v


def test_unlock_stage_branch_counts():
    secret = SecretState.random(np.random.default_rng(2))
    _, br5 = lock(prepare_joint_state(secret, C5P), LockingVariant("bell"))[3]
    assert len(unlock_bob1(br5.post_state, 5, LockingVariant("bell"))) == 2
    cfg6 = ProtocolConfig(6, ChannelSource.CIRCUIT, LockingVariant("bell", bob1_style="cz_then_hadamards"), "standard")
    _, br6 = lock(prepare_joint_state(secret, cfg6.channel()), cfg6.variant)[0]
    out = unlock_bob1(br6.post_state, 6, cfg6.variant)
    assert [b for b, _ in out] == ["00", "01", "10", "11"]
    assert sum(b.probability for _, b in out) == pytest.approx(1)


def test_unlock_bob_mid_hadamard_basis():
    plus = StateVector([2**-0.5, 2**-0.5])
    minus = StateVector([2**-0.5, -(2**-0.5)])
    assert dict((b, br.probability) for b, br in unlock_bob_mid(plus, 1))["0"] == pytest.approx(1)
    assert dict((b, br.probability) for b, br in unlock_bob_mid(minus, 1))["1"] == pytest.approx(1)
    s = random_state(3, np.random.default_rng(3))
    assert sum(br.probability for _, br in unlock_bob_mid(s, 2)) == pytest.approx(1)


def test_protocol_config_json_and_tag():
    cfg = ProtocolConfig(7, "circuit_form", LockingVariant("bell", bob1_style="cnot_then_hadamards"), "relay")
    assert ProtocolConfig.from_json(cfg.to_json()) == cfg
    assert cfg.tag == "N7/circuit_form/relay/bell/h1/cnot_then_hadamards"
    assert ProtocolConfig(5).schedule == "none"
    with pytest.raises(ValueError):
        ProtocolConfig(4)


# -- conformance post-states -----------------------------------------------------------


def test_conformance_post_states_pinned():
    pinned = read_artifact(FIXTURES / "conformance.json")
    s00 = SecretState.basis("00")
    for name, variant in (("n5_lock_0000_target_h", LockingVariant()), ("n5_lock_0000_bell", LockingVariant("bell"))):
        br = dict(lock(prepare_joint_state(s00, C5P), variant))["0000"]
        assert br.probability == pytest.approx(pinned[name]["probability"], abs=1e-12)
        if br.post_state is not None:
            ref = state_from_json(pinned[name]["post_state"])
            assert np.allclose(br.post_state.amplitudes, ref.amplitudes, atol=1e-12)
    entry = pinned["n6_unlock_0000_00"]
    cfg = ProtocolConfig.from_json(entry["protocol"])
    a = dict(lock(prepare_joint_state(s00, cfg.channel()), cfg.variant))["0000"]
    b = dict(unlock_bob1(a.post_state, 6, cfg.variant))["00"]
    assert np.allclose(b.post_state.amplitudes, state_from_json(entry["post_state"]).amplitudes, atol=1e-12)


# -- whole protocol --------------------------------------------------------------------


@pytest.fixture(scope="module")
def accepted5():
    cfg = accepted_configuration(5)
    return cfg, synthesize_escalating(cfg)


def test_secret_00_recovered_on_every_branch(accepted5):
    cfg, table = accepted5
    results = enumerate_protocol_branches(cfg, SecretState.basis("00"), "table", table)
    assert len(results) == 32
    assert sum(r.probability for r in results) == pytest.approx(1, abs=1e-9)
    assert all(r.fidelity == pytest.approx(1, abs=1e-9) for r in results)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_accepted_n5_is_deterministic_for_random_secrets(accepted5, seed):
    cfg, table = accepted5
    secret = SecretState.random(np.random.default_rng(seed))
    for r in enumerate_protocol_branches(cfg, secret, "table", table):
        assert r.fidelity >= 1 - 1e-9


def test_decoder_n_mismatch_and_missing_table(accepted5):
    cfg, _ = accepted5
    s = SecretState.basis("00")
    with pytest.raises(ValueError):
        enumerate_protocol_branches(cfg, s, "eq8")
    with pytest.raises(ValueError):
        enumerate_protocol_branches(cfg, s, "table")
    with pytest.raises(ValueError):
        enumerate_protocol_branches(cfg, s, "magic")


def test_literal_closed_form_scored_on_n5(accepted5):
    cfg, _ = accepted5
    results = enumerate_protocol_branches(cfg, SecretState.random(np.random.default_rng(4)), "eq6")
    assert len(results) == 32
    assert sum(r.probability for r in results) == pytest.approx(1)
    assert all(0 <= r.fidelity <= 1 + 1e-12 for r in results)


def test_target_h_layout_leaks_psi1():
    # with Hadamards on the CNOT targets Alice measures psi_1 in Z, so the
    # outcome statistics depend on the secret
    cfg = ProtocolConfig(5, ChannelSource.REFERENCE, LockingVariant())
    d0 = outcome_distribution(cfg, SecretState.basis("00"))
    d1 = outcome_distribution(cfg, SecretState.basis("10"))
    assert max(abs(d0[k] - d1[k]) for k in d0) > 1e-3

