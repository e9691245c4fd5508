from __future__ import annotations

import json

import numpy as np
import pytest

from entflow.dynamics import InteractionNetwork
from entflow.hilbert import PureState, SZ, random_hermitian, random_state
from entflow.measures import SINGLET
from entflow.rate_eqs import RateCurveSet, saturated_levels
from entflow.verify import (
    TOLERANCES, NondifferentiablePoint, Propagator, ThreeQubitTrial, TrialReport, TripartiteTrial,
    check_3q_bound, check_fan_hoffman, check_lemma_real_imag, check_rate_equation, check_tripartite_bound,
    concurrence_sq_3q, envelope_check, exact_3q_concurrence_derivative, random_matrix, replay, richardson,
    run_campaign,
)
from entflow.measures import OptimizerConfig


def test_lemma_examples(rng):
    rep = check_lemma_real_imag(1j * np.eye(2))
    assert rep.rhs == pytest.approx(4.0) and rep.lhs == pytest.approx(2.0)
    assert rep.slack == pytest.approx(2.0) and rep.passed
    h = random_hermitian(4, rng)
    rep = check_lemma_real_imag(h)
    assert rep.lhs == pytest.approx(0, abs=1e-12) and rep.rhs >= -1e-12
    with pytest.raises(ValueError):
        check_lemma_real_imag(np.zeros((2, 3)))


def test_lemma_against_eigenvalue_oracle(rng):
    for _ in range(300):
        X = random_matrix(rng, int(rng.integers(2, 7)))
        rep = check_lemma_real_imag(X)
        # square roots of tiny eigenvalues cost this oracle about sqrt(eps) accuracy
        tr_abs = np.sqrt(np.clip(np.linalg.eigvalsh(X.conj().T @ X), 0, None)).sum()
        assert rep.rhs == pytest.approx(tr_abs**2 - np.trace(X).real ** 2, rel=1e-7, abs=1e-7)
        assert rep.passed


def test_fan_hoffman_examples(rng):
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    psd = g @ g.conj().T
    rep = check_fan_hoffman(psd)
    np.testing.assert_allclose(rep.diagnostics["gaps"], 0, atol=1e-10)
    rep = check_fan_hoffman(np.array([[-3.0]]))
    assert rep.rhs == pytest.approx(3) and rep.lhs == pytest.approx(-3)


def test_exact_derivative_zero_hamiltonian(rng):
    psi = random_state((2, 2, 2), rng)
    z = np.zeros((4, 4))
    assert exact_3q_concurrence_derivative(psi, z, z).value == pytest.approx(0, abs=1e-12)


def test_guard_on_product_state(rng):
    psi = PureState.basis((2, 2, 2), [0, 0, 0])
    with pytest.raises(NondifferentiablePoint):
        exact_3q_concurrence_derivative(psi, random_hermitian(4, rng), random_hermitian(4, rng))


def test_exact_derivative_matches_fd(rng):
    checked = 0
    for _ in range(500):
        psi = random_state((2, 2, 2), rng)
        hab, hbc = random_hermitian(4, rng), random_hermitian(4, rng)
        try:
            ex = exact_3q_concurrence_derivative(psi, hab, hbc)
        except NondifferentiablePoint:
            continue
        from entflow.verify import chain_hamiltonian
        prop = Propagator(chain_hamiltonian(hab, hbc))
        fd, _, _ = richardson(lambda s: concurrence_sq_3q(prop(psi.amps, s)), 0.0, prop.step())
        assert abs(ex.value - fd) <= max(1e-5, 1e-3 * abs(ex.value))
        checked += 1
    assert checked > 450


def test_literal_determinant_prefactor_disagrees(rng):
    # the factor-4 determinant term misses the FD oracle on generic states; the factor 2 matches
    bad = 0
    for _ in range(20):
        trial = ThreeQubitTrial(random_state((2, 2, 2), rng), random_hermitian(4, rng),
                                random_hermitian(4, rng), 0.3)
        d = check_3q_bound(trial).diagnostics
        if not d["guard"]:
            assert d["fd_agree"]
            bad += not d["literal_det_term_agrees"]
    assert bad > 10


def test_3q_bound_product_state(rng):
    trial = ThreeQubitTrial(PureState.basis((2, 2, 2), [0, 0, 0]), random_hermitian(4, rng),
                            random_hermitian(4, rng), 0.0)
    rep = check_3q_bound(trial)
    assert rep.diagnostics["guard"]
    assert rep.rhs == pytest.approx(0, abs=1e-12) and rep.lhs == pytest.approx(0, abs=1e-8)
    assert rep.passed


def test_3q_bound_maximally_entangled_ac(rng):
    # singlet on (a, c), b in |0>: lambda_2 = 0 so rhs vanishes, lhs cannot be positive
    amps = np.einsum("ac,b->abc", SINGLET, np.array([1, 0])).reshape(-1)
    trial = ThreeQubitTrial(PureState((2, 2, 2), amps), random_hermitian(4, rng), random_hermitian(4, rng), 0.0)
    rep = check_3q_bound(trial)
    assert rep.rhs == pytest.approx(0, abs=1e-12)
    assert rep.lhs <= TOLERANCES["exact"]


def test_tripartite_separable(rng):
    psi = PureState.product(random_state((2,), rng).amps, random_state((3,), rng).amps,
                            random_state((2,), rng).amps)
    rep = check_tripartite_bound(TripartiteTrial((2, 3, 2), random_hermitian(6, rng), random_hermitian(6, rng), psi))
    assert rep.rhs == pytest.approx(0, abs=1e-12)
    assert rep.passed


def test_tripartite_qubits(rng):
    for _ in range(5):
        psi = random_state((2, 2, 2), rng)
        rep = check_tripartite_bound(TripartiteTrial((2, 2, 2), random_hermitian(4, rng), random_hermitian(4, rng), psi))
        assert rep.passed


def _embedded_singlet(n, a, b):
    t = np.zeros((2,) * n, dtype=complex)
    for i in range(2):
        for j in range(2):
            idx = [0] * n
            idx[a], idx[b] = i, j
            t[tuple(idx)] = SINGLET[i, j]
    return PureState((2,) * n, t.reshape(-1))


def test_rate_equation_saturated_pair(rng):
    net = InteractionNetwork.chain([random_hermitian(4, rng, unit_hs=True) for _ in range(2)])
    rep = check_rate_equation(net, {0}, {2}, 0, 2, _embedded_singlet(3, 0, 2), 0.0, rng=rng)
    assert rep.diagnostics["branch"] == "overlap"
    assert rep.diagnostics["F"] == pytest.approx(1, abs=1e-9)
    assert rep.rhs == pytest.approx(0, abs=1e-4)
    assert rep.passed


def test_rate_equation_branch_selection(rng):
    net = InteractionNetwork.chain([random_hermitian(4, rng, unit_hs=True) for _ in range(3)])
    psi = random_state((2,) * 4, rng)
    rep = check_rate_equation(net, {0}, {3}, 0, 3, psi, 0.4, rng=rng)
    assert rep.diagnostics["branch"] == "disjoint"
    assert rep.diagnostics["pathway_le_aggregate"]
    assert rep.passed
    with pytest.raises(ValueError):
        check_rate_equation(net, {0, 1}, {1, 3}, 0, 3, psi, 0.4, rng=rng)


def test_envelope_zero_hamiltonian():
    t = np.linspace(0, 2, 21)
    sim = RateCurveSet(t, np.full((2, t.size), 0.5), np.ones(2), "simulated")
    env = saturated_levels(2, 1e-12, grid=t)
    assert envelope_check(sim, env).passed
    with pytest.raises(ValueError):
        envelope_check(sim, saturated_levels(3, grid=t))


def test_envelope_detects_violation():
    t = np.linspace(0, 1, 11)
    sim = RateCurveSet(t, np.full((1, t.size), 0.9), np.ones(1), "simulated")
    rep = envelope_check(sim, saturated_levels(1, grid=t))
    assert not rep.passed and rep.diagnostics["worst_time"] == 0.0


def test_campaign_deterministic_and_parallel_equivalent():
    a = run_campaign("tripartite", 12, seed=7)
    b = run_campaign("tripartite", 12, seed=7, jobs=3)
    assert [r.lhs for r in a.reports] == [r.lhs for r in b.reports]
    assert [r.seed for r in a.reports] == [(7, i) for i in range(12)]
    again = replay("tripartite", 7, 5)[0]
    assert again.lhs == a.reports[5].lhs


def test_campaign_report_json(tmp_path):
    rep = run_campaign("lemma1", 50, seed=1)
    assert rep.passed and rep.to_dict()["evaluations"] == 50
    bad = TrialReport("lemma1", (1, 3), {"X": np.eye(2) * 1j}, 1.0, 0.0, 1e-10)
    rep.reports.append(bad)
    out = tmp_path / "r.json"
    rep.write_json(out)
    data = json.loads(out.read_text())
    assert not data["passed"] and data["failures"][0]["seed"] == [1, 3]
    with pytest.raises(KeyError):
        run_campaign("nope", 1)


def test_fd_steps_consistent_three_qubit():
    rep = run_campaign("three_qubit", 100, seed=3)
    assert rep.passed
    for r in rep.reports:
        d = r.diagnostics
        assert abs(d["fd_h"] - d["fd_h2"]) < 0.1 * max(r.tolerance, 1e-3 * abs(d["fd"]))


def test_small_rate_campaign():
    rep = run_campaign("rate_eq", 4, seed=11)
    assert rep.passed
    assert all(r.diagnostics["pathway_le_aggregate"] for r in rep.reports)
    for r in rep.reports:
        assert abs(r.diagnostics["fd_h"] - r.diagnostics["fd_h2"]) < 0.1 * r.tolerance
