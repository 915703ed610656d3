import cmath
import math
from collections import defaultdict

import numpy as np
import pytest

from klm_ancilla import fock
from klm_ancilla.analytic import (
    QubitState,
    fidelity_sq,
    full_outcome_table,
    outcome_probability,
    success_probability,
    teleported_state,
)
from klm_ancilla.eigen import optimal_profile, uniform_profile
from klm_ancilla.fock import (
    FockState,
    MeasurementRecord,
    ModeUnitary,
    OracleCapacityError,
    ProtocolWiringError,
    apply_mode_unitary,
    build_ancilla,
    compositions,
    correction_phase,
    dft_matrix,
    expected_fidelity_sq,
    inject_input,
    measure_modes,
    per_k_probabilities,
    simulate_protocol,
    transition_amplitudes,
)
from klm_ancilla.verify import random_inputs

PLUS = QubitState.plus()


def random_unitary(m, rng):
    z = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def polynomial_transitions(u, s):
    """<t|U|s> by expanding prod_j (sum_i U[i,j] a_i^+)^{s_j} as a polynomial."""
    m = len(s)
    poly = {(0,) * m: 1 + 0j}
    for j, c in enumerate(s):
        for _ in range(c):
            nxt = defaultdict(complex)
            for mono, coef in poly.items():
                for i in range(m):
                    bumped = list(mono)
                    bumped[i] += 1
                    nxt[tuple(bumped)] += coef * u[i, j]
            poly = nxt
    s_norm = math.sqrt(math.prod(math.factorial(c) for c in s))
    return {t: coef * math.sqrt(math.prod(math.factorial(c) for c in t)) / s_norm
            for t, coef in poly.items()}


def circular_distance(a, b):
    d = (a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def test_dft_examples():
    np.testing.assert_allclose(dft_matrix(1).entries, [[1]])
    np.testing.assert_allclose(dft_matrix(2).entries, np.array([[1, 1], [1, -1]]) / math.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(dft_matrix(4).entries[1], np.array([1, 1j, -1, -1j]) / 2, atol=1e-15)
    for m in range(1, 10):
        u = dft_matrix(m).entries
        assert np.max(np.abs(u @ u.conj().T - np.eye(m))) <= 1e-12
    with pytest.raises(ValueError):
        dft_matrix(0)


def test_mode_unitary_rejects_non_unitary():
    with pytest.raises(ValueError):
        ModeUnitary(2, np.ones((2, 2)))
    with pytest.raises(ValueError):
        ModeUnitary(3, np.eye(2))


def test_compositions_lexicographic():
    pats = list(compositions(2, 3))
    assert pats == sorted(pats)
    assert len(pats) == math.comb(4, 2)
    assert all(sum(p) == 2 for p in pats)


def test_build_ancilla():
    a1 = build_ancilla(uniform_profile(1))
    assert a1.modes == 2
    assert a1.terms == pytest.approx({(0, 1): 1 / math.sqrt(2), (1, 0): 1 / math.sqrt(2)})

    a2 = build_ancilla(optimal_profile(2))
    expected = {(0, 0, 1, 1): 1, (0, 1, 0, 1): 2, (1, 1, 0, 0): 1}
    assert set(a2.terms) == set(expected)
    for occ, w in expected.items():
        assert a2.terms[occ] == pytest.approx(w / math.sqrt(6), abs=1e-12)

    for n in range(1, 7):
        anc = build_ancilla(optimal_profile(n))
        assert len(anc.terms) == n + 1
        assert anc.photon_numbers() == {n}
        assert anc.norm_sq() == pytest.approx(1.0, abs=1e-12)


def test_inject_input():
    anc = build_ancilla(optimal_profile(3))
    s = inject_input(QubitState(1, 0), anc)
    assert all(occ[0] == 0 for occ in s.terms)
    s = inject_input(PLUS, build_ancilla(uniform_profile(1)))
    assert len(s.terms) == 4
    for amp in s.terms.values():
        assert amp == pytest.approx(0.5, abs=1e-15)
    psi = QubitState.from_population(0.3, 2.0)
    assert inject_input(psi, anc).norm_sq() == pytest.approx(1.0, abs=1e-12)


def test_fockstate_validation():
    with pytest.raises(ValueError):
        FockState(2, {(1,): 1.0})
    with pytest.raises(ValueError):
        FockState(1, {(-1,): 1.0})


def test_single_photon_picks_a_column():
    u = dft_matrix(4)
    state = FockState(4, {(0, 0, 1, 0): 1.0})
    out = apply_mode_unitary(state, u, range(4))
    for i in range(4):
        occ = tuple(int(i == j) for j in range(4))
        assert out.terms[occ] == pytest.approx(u.entries[i, 2], abs=1e-15)


def test_identity_unitary_leaves_state_unchanged():
    psi = QubitState.from_population(0.4, 1.3)
    state = inject_input(psi, build_ancilla(optimal_profile(3)))
    out = apply_mode_unitary(state, ModeUnitary(4, np.eye(4)), range(4))
    assert set(out.terms) == set(state.terms)
    for occ, amp in state.terms.items():
        assert out.terms[occ] == pytest.approx(amp, abs=1e-15)


def test_hong_ou_mandel():
    h = dft_matrix(2)
    out = apply_mode_unitary(FockState(2, {(1, 1): 1.0}), h, [0, 1])
    assert (1, 1) not in out.terms
    assert out.terms[(2, 0)] == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert out.terms[(0, 2)] == pytest.approx(-1 / math.sqrt(2), abs=1e-15)

    # |2,0> -> (a0^+ + a1^+)^2 / (2 sqrt 2) |0>
    out = apply_mode_unitary(FockState(2, {(2, 0): 1.0}), h, [0, 1])
    assert out.terms[(2, 0)] == pytest.approx(0.5, abs=1e-15)
    assert out.terms[(1, 1)] == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert out.terms[(0, 2)] == pytest.approx(0.5, abs=1e-15)


def test_transitions_match_polynomial_expansion():
    rng = np.random.default_rng(17)
    for m in range(1, 5):
        u = random_unitary(m, rng)
        mu = ModeUnitary(m, u)
        for total in range(0, 4):
            for s in compositions(total, m):
                got = transition_amplitudes(mu, s)
                want = polynomial_transitions(u, s)
                for t in set(got) | set(want):
                    assert got.get(t, 0) == pytest.approx(want.get(t, 0), abs=1e-12)


def test_evolution_conserves_norm_and_photons():
    rng = np.random.default_rng(4)
    for n in range(1, 5):
        psi = QubitState.from_population(rng.random(), rng.random() * 6)
        state = inject_input(psi, build_ancilla(optimal_profile(n)))
        u = ModeUnitary(n + 1, random_unitary(n + 1, rng))
        out = apply_mode_unitary(state, u, range(n + 1))
        assert abs(out.norm_sq() - 1.0) <= 1e-10
        assert out.photon_numbers() <= state.photon_numbers()
        # target-mode photon number per spectator configuration is conserved
        before = {(occ[n + 1:], sum(occ[:n + 1])) for occ in state.terms}
        after = {(occ[n + 1:], sum(occ[:n + 1])) for occ in out.terms}
        assert after <= before


def test_apply_mode_unitary_errors():
    state = inject_input(PLUS, build_ancilla(uniform_profile(2)))
    with pytest.raises(ValueError):
        apply_mode_unitary(state, dft_matrix(3), [0, 0, 1])
    with pytest.raises(ValueError):
        apply_mode_unitary(state, dft_matrix(3), [0, 1, 9])
    with pytest.raises(ValueError):
        apply_mode_unitary(state, dft_matrix(3), [0, 1])


def test_pruning_does_not_change_results(monkeypatch):
    psi = QubitState.from_population(0.37, 0.9)
    prof = optimal_profile(4)
    pruned = simulate_protocol(psi, prof)
    monkeypatch.setattr(fock, "PRUNE_THRESHOLD", 0.0)
    fock._calibration.cache_clear()
    full = simulate_protocol(psi, prof)
    fock._calibration.cache_clear()
    p1 = per_k_probabilities(pruned, 4)
    p2 = per_k_probabilities(full, 4)
    assert max(abs(a - b) for a, b in zip(p1, p2)) <= 1e-12
    assert expected_fidelity_sq(pruned, psi) == pytest.approx(expected_fidelity_sq(full, psi), abs=1e-12)


def test_measurement_completeness_and_order():
    psi = QubitState.from_population(0.6, 0.2)
    for n in range(1, 5):
        recs = simulate_protocol(psi, optimal_profile(n))
        assert math.fsum(r.probability for r in recs) == pytest.approx(1.0, abs=1e-9)
        patterns = [r.pattern for r in recs]
        assert patterns == sorted(patterns)
        for r in recs:
            assert r.k == sum(r.pattern) and r.probability > 0
            assert (r.conditional is not None) == (1 <= r.k <= n)
            if r.conditional is not None:
                assert r.output_mode == n + r.k


def test_zero_input_never_gives_n_plus_one():
    for n in range(1, 5):
        recs = simulate_protocol(QubitState(1, 0), optimal_profile(n))
        assert all(r.k <= n for r in recs)


def test_per_k_matches_closed_form_n2():
    recs = simulate_protocol(PLUS, optimal_profile(2))
    np.testing.assert_allclose(per_k_probabilities(recs, 2), [1 / 12, 5 / 12, 5 / 12, 1 / 12], atol=1e-12)
    table = full_outcome_table(PLUS, optimal_profile(2))
    np.testing.assert_allclose(per_k_probabilities(recs, 2), [r.probability for r in table], atol=1e-12)


def test_measure_wiring_error():
    # two different spectator configurations behind one pattern
    bad = FockState(3, {(1, 0, 1): 1 / math.sqrt(2), (1, 1, 0): 1 / math.sqrt(2)})
    with pytest.raises(ProtocolWiringError):
        measure_modes(bad, [0])
    # two photons in the output mode
    bad = FockState(2, {(1, 2): 1.0})
    with pytest.raises(ProtocolWiringError):
        measure_modes(bad, [0])


def test_n1_correction_phases():
    prof = uniform_profile(1)
    recs = {r.pattern: r for r in simulate_protocol(PLUS, prof)}
    assert correction_phase(recs[(1, 0)], prof, PLUS) == pytest.approx(0.0, abs=1e-12)
    assert circular_distance(correction_phase(recs[(0, 1)], prof, PLUS), math.pi) <= 1e-12
    assert recs[(1, 0)].correction_phase == pytest.approx(0.0, abs=1e-12)
    assert circular_distance(recs[(0, 1)].correction_phase, math.pi) <= 1e-12
    assert (1, 1) not in recs


def test_correction_phase_independent_of_input():
    rng = np.random.default_rng(21)
    for n in range(1, 5):
        prof = optimal_profile(n)
        psi1, psi2 = (QubitState.from_population(0.1 + 0.8 * rng.random(), rng.random() * 6)
                      for _ in range(2))
        r1 = {r.pattern: r for r in fock._run(psi1, prof) if r.conditional is not None}
        r2 = {r.pattern: r for r in fock._run(psi2, prof) if r.conditional is not None}
        assert set(r1) == set(r2)
        for pat in r1:
            phi1 = correction_phase(r1[pat], prof, psi1)
            phi2 = correction_phase(r2[pat], prof, psi2)
            assert circular_distance(phi1, phi2) <= 1e-8


def test_correction_phase_degenerate_and_errors():
    prof = optimal_profile(2)
    recs = simulate_protocol(QubitState(1, 0), prof)
    heralded = [r for r in recs if r.conditional is not None]
    assert all(correction_phase(r, prof, QubitState(1, 0)) == 0.0 for r in heralded)
    failed = next(r for r in recs if r.conditional is None)
    with pytest.raises(ValueError):
        correction_phase(failed, prof, PLUS)
    with pytest.raises(ValueError):
        failed.corrected()


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("kind", ["optimal", "uniform"])
def test_oracle_equivalence(n, kind):
    prof = optimal_profile(n) if kind == "optimal" else uniform_profile(n)
    for psi in random_inputs(8, seed=n):
        recs = simulate_protocol(psi, prof)
        pk = per_k_probabilities(recs, n)
        for k in range(n + 2):
            assert abs(pk[k] - outcome_probability(psi, prof, k)) <= 1e-9
        for r in recs:
            if r.conditional is not None:
                ideal = teleported_state(psi, prof, r.k)
                assert fidelity_sq(ideal, r.corrected()) >= 1 - 1e-9
        assert abs(expected_fidelity_sq(recs, psi) - success_probability(psi, prof)) <= 1e-9


def test_oracle_cap(monkeypatch):
    monkeypatch.setenv(fock.ORACLE_CAP_ENV, "2")
    assert fock.oracle_cap() == 2
    with pytest.raises(OracleCapacityError):
        simulate_protocol(PLUS, optimal_profile(3))
    monkeypatch.setenv(fock.ORACLE_CAP_ENV, "zero")
    with pytest.raises(OracleCapacityError):
        fock.oracle_cap()
    monkeypatch.delenv(fock.ORACLE_CAP_ENV)
    assert fock.oracle_cap() == fock.DEFAULT_ORACLE_CAP


def test_simulation_is_deterministic():
    psi = random_inputs(1, seed=3)[0]
    a = simulate_protocol(psi, optimal_profile(3))
    b = simulate_protocol(psi, optimal_profile(3))
    assert a == b


def test_record_corrected_applies_phase():
    rec = MeasurementRecord((0, 1), 1, 0.5, QubitState(1 / math.sqrt(2), -1 / math.sqrt(2)), math.pi)
    out = rec.corrected()
    assert out.beta == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert cmath.phase(out.alpha) == 0.0
