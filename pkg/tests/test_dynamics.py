from __future__ import annotations

import json

import numpy as np
import pytest
from scipy.linalg import expm

from entflow.dynamics import (
    InteractionNetwork, assemble_hamiltonian, evolve, from_pauli_coefficients, interaction_distance,
    load_network, neighborhood, norm_hs_boundary, norm_l1_schmidt, norm_op, pauli_coefficients,
    save_network,
)
from entflow.hilbert import PAULIS, I2, SX, SY, SZ, PureState, partial_trace, random_hermitian, random_state, schmidt_decompose
from entflow.measures import concurrence_2q


def path(n, h=None):
    h = np.kron(SZ, SZ) if h is None else h
    return InteractionNetwork.chain([h] * (n - 1))


def test_assemble_examples():
    net = InteractionNetwork.chain([np.kron(SZ, SZ)])
    np.testing.assert_allclose(assemble_hamiltonian(net), np.diag([1, -1, -1, 1]))
    net3 = InteractionNetwork.chain([np.kron(SZ, SZ), np.kron(SZ, I2)])
    hand = np.kron(np.kron(SZ, SZ), I2) + np.kron(I2, np.kron(SZ, I2))
    np.testing.assert_allclose(assemble_hamiltonian(net3), hand)
    np.testing.assert_allclose(assemble_hamiltonian(InteractionNetwork((2, 2, 2))), np.zeros((8, 8)))


def test_assemble_non_adjacent_edge_order(rng):
    h = random_hermitian(6, rng)  # qubit 2 first, qutrit 0 second
    net = InteractionNetwork((3, 2, 2), [])
    net.add_edge(2, 0, h)
    # oracle: build on (2, 0, 1) ordering then permute
    big = np.kron(h, np.eye(2)).reshape(2, 3, 2, 2, 3, 2).transpose(1, 2, 0, 4, 5, 3).reshape(12, 12)
    np.testing.assert_allclose(assemble_hamiltonian(net), big, atol=1e-12)


def test_assemble_overflow_directs_to_evolve():
    with pytest.raises(ValueError, match="evolve"):
        assemble_hamiltonian(path(11))


def test_network_invariants():
    net = InteractionNetwork((2, 2))
    with pytest.raises(ValueError):
        net.add_edge(0, 0, np.eye(2))
    with pytest.raises(ValueError):
        net.add_edge(0, 1, np.array([[0, 1, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]))
    net.add_edge(0, 1, np.eye(4))
    with pytest.raises(ValueError):
        net.add_edge(1, 0, np.eye(4))


def test_evolve_examples():
    psi = PureState((2, 2), np.array([0.6, 0, 0.8j, 0]))
    res = evolve(InteractionNetwork((2, 2)), psi, [0.0, 1.0, 2.0])
    for s in res.states:
        np.testing.assert_allclose(s.amps, psi.amps)
    # sigma_z on the first qubit for t = pi flips the overall sign
    net = InteractionNetwork.chain([np.kron(SZ, I2)])
    out = evolve(net, psi, [np.pi]).states[0]
    np.testing.assert_allclose(out.amps, -psi.amps, atol=1e-12)
    # sigma_x sigma_x for pi/4 on |00> is maximally entangled
    net = InteractionNetwork.chain([np.kron(SX, SX)])
    out = evolve(net, PureState.basis((2, 2), [0, 0]), [np.pi / 4]).states[0]
    np.testing.assert_allclose(out.amps, expm(-1j * np.pi / 4 * np.kron(SX, SX))[:, 0], atol=1e-12)
    assert concurrence_2q(out.density()) == pytest.approx(1, abs=1e-10)


def test_evolve_rejects_bad_input(rng):
    net = path(3)
    with pytest.raises(ValueError):
        evolve(net, random_state((2, 2), rng), [1.0])
    with pytest.raises(ValueError):
        evolve(net, random_state((2, 2, 2), rng), [np.nan])
    with pytest.raises(ValueError):
        evolve(net, random_state((2, 2, 2), rng), [1.0, 0.5])


def random_chain(n, rng):
    return InteractionNetwork.chain([random_hermitian(4, rng) for _ in range(n - 1)])


@pytest.mark.parametrize("n", [3, 5, 8])
def test_integrator_matches_eigendecomposition(n, rng):
    net = random_chain(n, rng)
    psi = random_state((2,) * n, rng)
    times = np.linspace(0, 2, 5)
    a = evolve(net, psi, times, method="eig")
    b = evolve(net, psi, times, method="integrate")
    for x, y in zip(a.states, b.states):
        assert np.linalg.norm(x.amps - y.amps) < 1e-8


def test_energy_and_norm_conserved(rng):
    net = random_chain(6, rng)
    H = assemble_hamiltonian(net)
    psi = random_state((2,) * 6, rng)
    res = evolve(net, psi, np.linspace(0, 5, 21))
    e0 = np.vdot(psi.amps, H @ psi.amps).real
    for s in res.states:
        assert np.linalg.norm(s.amps) == pytest.approx(1, abs=1e-9)
        assert np.vdot(s.amps, H @ s.amps).real == pytest.approx(e0, abs=1e-8)


def test_matrix_free_apply_matches_dense(rng):
    net = InteractionNetwork((2, 3, 2))
    net.add_edge(0, 1, random_hermitian(6, rng))
    net.add_edge(2, 1, random_hermitian(6, rng))
    v = random_state(net.dims, rng).amps
    np.testing.assert_allclose(net.apply(v), assemble_hamiltonian(net) @ v, atol=1e-12)


def test_norm_l1_schmidt_examples(rng):
    psi = PureState.basis((2, 2, 2), [0, 0, 0])
    assert norm_l1_schmidt(np.kron(SZ, SZ), np.zeros((4, 4)), psi) == pytest.approx(1)
    assert norm_l1_schmidt(np.kron(SZ, I2), np.kron(I2, SX), psi) == pytest.approx(0, abs=1e-12)


def test_norm_l1_schmidt_brute_force(rng):
    psi = random_state((2, 2, 2), rng)
    hab, hbc = random_hermitian(4, rng), random_hermitian(4, rng)
    w = schmidt_decompose(psi, [1]).basis_left
    pb = [w @ p @ w.conj().T for p in PAULIS]
    total = 0.0
    for i in range(1, 4):
        for j in range(1, 4):
            total += abs(np.trace(hab @ np.kron(PAULIS[i], pb[j])) / 4)
            total += abs(np.trace(hbc @ np.kron(pb[i], PAULIS[j])) / 4)
    assert norm_l1_schmidt(hab, hbc, psi) == pytest.approx(total, abs=1e-12)


def test_pauli_coefficients_round_trip(rng):
    h = random_hermitian(4, rng)
    np.testing.assert_allclose(from_pauli_coefficients(pauli_coefficients(h)), h, atol=1e-12)


def test_norm_hs_boundary_examples(rng):
    h1, h2 = random_hermitian(4, rng), random_hermitian(4, rng)
    net = InteractionNetwork.chain([h1, h2])
    expect = np.linalg.norm(h1) + np.linalg.norm(h2)
    assert norm_hs_boundary(net, {0}, {2}) == pytest.approx(expect)
    assert norm_hs_boundary(net, {0, 1}, {2}) == pytest.approx(np.linalg.norm(h2))
    with pytest.raises(ValueError):
        norm_hs_boundary(net, {0, 1}, {1})


def test_norm_hs_boundary_enumerated_network(rng):
    # a - 1 - 2 - b with a spur 1 - 5 and an interior edge inside B (3 - 4)
    net = InteractionNetwork((2,) * 6)
    edges = {(0, 1): 1.0, (1, 2): 2.0, (2, 3): 3.0, (3, 4): 4.0, (1, 5): 5.0, (4, 2): 6.0}
    for (i, j), s in edges.items():
        net.add_edge(i, j, s * np.kron(SZ, SZ) / 2)  # HS norm = s
    A, B = {0, 1}, {3, 4}
    # crossing: (1,2) A, (1,5) A, (2,3) B, (4,2) B; (0,1) and (3,4) are interior
    assert norm_hs_boundary(net, A, B) == pytest.approx(2 + 5 + 3 + 6)


def test_norm_hs_boundary_monotone_as_set_grows(rng):
    net = random_chain(6, rng)
    vals = [norm_hs_boundary(net, set(range(k)), {5}) for k in range(1, 5)]
    # growing A past an edge removes it; the total never increases except by the new frontier edge
    full = norm_hs_boundary(net, {0, 1, 2, 3, 4}, set())
    assert full <= vals[-1] + 1e-12


def test_norm_op_examples(rng):
    assert norm_op(SZ) == pytest.approx(1)
    assert norm_op(np.diag([3.0, -5.0])) == pytest.approx(5)
    h = random_hermitian(5, rng)
    assert norm_op(h) == pytest.approx(np.max(np.abs(np.linalg.eigvalsh(h))), abs=1e-10)


def test_distance_and_neighborhood():
    net = path(5)
    assert interaction_distance(net, 0, 4) == 4
    assert neighborhood(net, {0}) == frozenset({0, 1})
    split = InteractionNetwork((2,) * 4)
    split.add_edge(0, 1, np.eye(4))
    assert interaction_distance(split, 0, 3) is None


def test_distance_branching_network():
    # shortest route a=0 -> 1 -> 2 -> 3 -> 4 -> b=5, with a longer detour 1 -> 6 -> 7 -> 8 -> 4
    net = InteractionNetwork((2,) * 9)
    for i, j in [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (1, 6), (6, 7), (7, 8), (8, 4)]:
        net.add_edge(i, j, np.kron(SZ, SZ))
    assert interaction_distance(net, 0, 5) == 5
    assert neighborhood(net, {1}) == frozenset({0, 1, 2, 6})


def test_network_json_round_trip(tmp_path, rng):
    net = InteractionNetwork((2, 3, 2))
    net.add_edge(0, 1, random_hermitian(6, rng))
    net.add_edge(1, 2, random_hermitian(6, rng))
    p = tmp_path / "net.json"
    save_network(net, p)
    back = load_network(p)
    assert back.dims == net.dims
    np.testing.assert_allclose(assemble_hamiltonian(back), assemble_hamiltonian(net))


def test_network_json_pauli_coeffs(tmp_path):
    c = np.zeros((4, 4))
    c[3, 3] = 1.0
    p = tmp_path / "n.json"
    p.write_text(json.dumps({"dims": [2, 2], "edges": [{"i": 0, "j": 1, "pauli_coeffs": c.tolist()}]}))
    np.testing.assert_allclose(assemble_hamiltonian(load_network(p)), np.kron(SZ, SZ))
