import itertools
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clusterqis.cluster import (
    DRESSED_PREP,
    ChannelSource,
    SwapSchedule,
    build_channel,
    build_circuit_form,
    build_dressed_form,
    build_product_form,
    circuit_json,
    reference_state,
    redistribute,
    relay_schedule,
    swap_schedule,
)
from clusterqis.sim import equal_up_to_global_phase, random_state, reduced_density_matrix

I2 = np.eye(2)
Z = np.diag([1.0, -1.0])
KET0, KET1 = np.array([1.0, 0]), np.array([0, 1.0])


def kron_all(ops):
    return reduce(np.kron, ops)


def product_oracle(n):
    """Multiply out prod_a (|0>_a Z_{a+1} + |1>_a) / sqrt(2) as explicit matrices."""
    state = np.zeros(2**n)
    # expand the product term by term: choose |0> (with Z on the next site) or |1> at each site
    for choice in itertools.product((0, 1), repeat=n):
        vec = kron_all([KET0 if c == 0 else KET1 for c in choice])
        zs = [I2] * n
        for a, c in enumerate(choice[:-1]):
            if c == 0:
                zs[a + 1] = zs[a + 1] @ Z
        state += kron_all(zs) @ vec
    return state / 2 ** (n / 2)


def circuit_oracle(n):
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    state = kron_all([h @ KET0] * n)
    for a in range(n - 1):
        cz = np.eye(2**n)
        for i in range(2**n):
            bits = format(i, f"0{n}b")
            if bits[a] == "1" and bits[a + 1] == "1":
                cz[i, i] = -1
        state = cz @ state
    return state


def test_product_form_n2():
    assert np.allclose(build_product_form(2).amplitudes, [0.5, -0.5, 0.5, 0.5])


def test_circuit_form_n2():
    assert np.allclose(build_circuit_form(2).amplitudes, [0.5, 0.5, 0.5, -0.5])


@pytest.mark.parametrize("n", range(2, 8))
def test_product_form_matches_matrix_oracle(n):
    assert np.allclose(build_product_form(n).amplitudes, product_oracle(n), atol=1e-12)


@pytest.mark.parametrize("n", range(2, 8))
def test_circuit_form_matches_matrix_oracle(n):
    assert np.allclose(build_circuit_form(n).amplitudes, circuit_oracle(n), atol=1e-12)


@pytest.mark.parametrize("n", range(2, 11))
def test_circuit_form_closed_sign_pattern(n):
    amps = build_circuit_form(n).amplitudes
    for i in range(2**n):
        x = [int(c) for c in format(i, f"0{n}b")]
        sign = (-1) ** sum(x[a] * x[a + 1] for a in range(n - 1))
        assert amps[i] == pytest.approx(sign / 2 ** (n / 2), abs=1e-15)


@pytest.mark.parametrize("n", [2, 3, 5, 9])
def test_uniform_magnitudes(n):
    for state in (build_product_form(n), build_circuit_form(n)):
        assert np.allclose(np.abs(state.amplitudes), 2 ** (-n / 2))


@pytest.mark.parametrize("n", [1, 17])
def test_size_limits(n):
    with pytest.raises(ValueError):
        build_product_form(n)
    with pytest.raises(ValueError):
        build_circuit_form(n)


def test_circuit_json_lists_hadamards_then_cz_chain():
    c = circuit_json(3)
    assert c["num_qubits"] == 3
    assert c["gates"] == [
        {"name": "H", "targets": [1]}, {"name": "H", "targets": [2]}, {"name": "H", "targets": [3]},
        {"name": "CZ", "targets": [1, 2]}, {"name": "CZ", "targets": [2, 3]},
    ]


def test_reference_state_unknown_name():
    with pytest.raises(ValueError):
        reference_state("C7")


def test_reference_flip_changes_only_last_term():
    a = reference_state("C6_prime").nonzero_terms()
    b = reference_state("C6_prime", flip_last_sign=True).nonzero_terms()
    assert b["111110"] == -a["111110"]
    assert {k: v for k, v in a.items() if k != "111110"} == {k: v for k, v in b.items() if k != "111110"}


def test_swap_schedules():
    assert swap_schedule(5).swaps == ((1, 3), (3, 5))
    assert swap_schedule(6).swaps == ((1, 4), (3, 6))
    assert swap_schedule(7).swaps == ((1, 3), (3, 5), (5, 7))
    assert swap_schedule(8).swaps == ((1, 5), (4, 8))
    with pytest.raises(ValueError):
        swap_schedule(4)


def test_relay_schedule_permutation():
    assert relay_schedule(7).permutation(7) == [1, 3, 4, 5, 6, 2, 7]
    assert relay_schedule(5).permutation(5) == [1, 3, 4, 2, 5]


def test_swap_schedule_applied_in_listed_order_maps_reference_kets():
    moved = redistribute(reference_state("C5"), swap_schedule(5))
    assert np.allclose(moved.amplitudes, -reference_state("C5_prime").amplitudes)
    # the opposite order does not reproduce it
    other = redistribute(reference_state("C5"), swap_schedule(5).reversed())
    assert not equal_up_to_global_phase(other, reference_state("C5_prime"), tol=1e-6)


def test_redistribute_edge_cases():
    s = random_state(3, np.random.default_rng(0))
    with pytest.raises(ValueError):
        SwapSchedule(((2, 2),))
    with pytest.raises(ValueError):
        redistribute(s, SwapSchedule(((1, 4),)))
    assert np.array_equal(redistribute(s, SwapSchedule(())).amplitudes, s.amplitudes)
    twice = redistribute(redistribute(s, SwapSchedule(((1, 3),))), SwapSchedule(((1, 3),)))
    assert np.allclose(twice.amplitudes, s.amplitudes)


@settings(max_examples=100, deadline=None)
@given(st.integers(3, 7), st.integers(0, 2**32 - 1), st.data())
def test_redistribute_is_invertible_permutation(n, seed, data):
    s = random_state(n, np.random.default_rng(seed))
    pairs = data.draw(st.lists(st.tuples(st.integers(1, n), st.integers(1, n)).filter(lambda p: p[0] != p[1]),
                               max_size=6))
    sched = SwapSchedule(tuple(pairs))
    moved = redistribute(s, sched)
    assert abs(moved.norm() - 1) <= 1e-12
    assert np.allclose(np.sort_complex(moved.amplitudes), np.sort_complex(s.amplitudes))
    assert np.allclose(redistribute(moved, sched.reversed()).amplitudes, s.amplitudes)
    # permutation() names the original label that lands on each wire
    perm = sched.permutation(n)
    for i in range(2**n):
        bits = format(i, f"0{n}b")
        moved_label = "".join(bits[perm[p] - 1] for p in range(n))
        assert moved.amplitude(moved_label) == pytest.approx(s.amplitudes[i])


def test_build_channel_dispatch():
    assert np.array_equal(build_channel(5, "reference").amplitudes, reference_state("C5_prime").amplitudes)
    assert np.allclose(
        build_channel(7, ChannelSource.CIRCUIT, "relay").amplitudes,
        redistribute(build_circuit_form(7), relay_schedule(7)).amplitudes,
    )
    assert ChannelSource.parse("product") is ChannelSource.PRODUCT
    assert ChannelSource.parse("circuit_form") is ChannelSource.CIRCUIT
    with pytest.raises(ValueError):
        build_channel(7, "reference")
    with pytest.raises(ValueError):
        build_dressed_form(7)


def test_five_qubit_reference_is_the_dressed_channel_up_to_local_paulis():
    dressed = build_dressed_form(5)
    ref = reference_state("C5_prime")
    # X on qubit 4 and Z on qubit 1
    amps = ref.tensor().copy()
    amps = np.flip(amps, axis=3)
    amps[1] *= -1
    assert equal_up_to_global_phase(dressed, type(ref)(amps.reshape(-1)), tol=1e-12)


def _maximally_mixed(state, pair):
    return np.allclose(reduced_density_matrix(state, pair).eigenvalues(), 0.25, atol=1e-12)


def test_tabulated_six_qubit_ket_lacks_two_ebits_at_the_ends():
    # a two-qubit secret needs Alice's pair and Charlie's pair each maximally
    # entangled with the rest; the dressed channel has that, the tabulated ket not
    dressed = build_dressed_form(6)
    assert _maximally_mixed(dressed, [1, 2]) and _maximally_mixed(dressed, [5, 6])
    for flip in (False, True):
        s = reference_state("C6_prime", flip_last_sign=flip)
        assert not _maximally_mixed(s, [5, 6])
    assert not _maximally_mixed(reference_state("C6_prime"), [1, 2])


@pytest.mark.parametrize("n", sorted(DRESSED_PREP))
def test_dressed_channel_is_normalized(n):
    assert abs(build_dressed_form(n).norm() - 1) < 1e-12
