import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gcore.errors import DomainError
from gcore.states import (
    apply_to_subsystem,
    basis_ket,
    canonical_phase,
    check_density,
    check_family,
    check_unitary,
    correlation,
    equal_up_to_phase,
    error_operator,
    family_basis,
    gell_mann,
    gellmann_correlation,
    ghz_basis_state,
    label_digits,
    label_name,
    label_state,
    measure_in_family,
    multi_entangled_state,
    partial_trace,
    pauli_correlation,
    qudit_bell_state,
    qutrit_transform_unitary,
    reduced_density,
    six_port_matrix,
)

from oracles import GHZ3, QUTRIT2, QUTRIT3, ghz_correlation, ket, product_state_correlation, qutrit_psi00_correlation

unit_vectors3 = st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-3).map(
    lambda v: np.asarray(v) / np.linalg.norm(v)
)
unit_vectors8 = st.lists(st.floats(-1, 1), min_size=8, max_size=8).filter(lambda v: np.linalg.norm(v) > 1e-3).map(
    lambda v: np.asarray(v) / np.linalg.norm(v)
)


@pytest.mark.parametrize("label", range(8))
def test_ghz_states_match_printed_kets(label):
    expected = ket(GHZ3[label], 2)
    assert np.array_equal(label_state(label, 3, 2), expected)
    assert np.array_equal(ghz_basis_state(3, label >> 1, -1 if label & 1 else +1), expected)


@pytest.mark.parametrize("label", range(9))
def test_two_qutrit_states_match_printed_kets(label):
    np.testing.assert_allclose(label_state(label, 2, 3), ket(QUTRIT2[label], 3), atol=1e-15)


@pytest.mark.parametrize("nmk", sorted(QUTRIT3))
def test_three_qutrit_states_match_printed_kets(nmk):
    n, m, k = nmk
    np.testing.assert_allclose(multi_entangled_state(3, 3, k, (n, m)), ket(QUTRIT3[nmk], 3), atol=1e-15)


def test_two_qutrit_label_order():
    assert [label_name(k, 2, 3) for k in range(4)] == ["psi_{0}^{0}", "psi_{0}^{1}", "psi_{0}^{2}", "psi_{1}^{0}"]
    assert label_digits(5, 2, 3) == (1, 2)


def test_ghz_names():
    assert [label_name(k, 3, 2) for k in (0, 1, 7)] == ["psi_0^+", "psi_0^-", "psi_3^-"]


@pytest.mark.parametrize("N,d", [(2, 2), (3, 2), (4, 2), (2, 3), (3, 3), (2, 4), (2, 5), (4, 3), (6, 3)])
def test_family_is_orthonormal(N, d):
    B = family_basis(N, d)
    np.testing.assert_allclose(B.conj().T @ B, np.eye(d**N), atol=1e-10)


def test_family_basis_is_read_only():
    with pytest.raises(ValueError):
        family_basis(3, 2)[0, 0] = 1


def test_qubit_ghz_equals_generic_family_up_to_phase():
    shifts = [(s1, s2) for s1 in (0, 1) for s2 in (0, 1)]
    for label in range(8):
        sign = label & 1
        matches = [s for s in shifts if equal_up_to_phase(label_state(label, 3, 2), multi_entangled_state(2, 3, sign, s))]
        assert len(matches) == 1


@pytest.mark.parametrize("N,d", [(1, 3), (0, 2), (2, 1), (7, 3), (5, 4)])
def test_family_bounds(N, d):
    with pytest.raises(DomainError):
        check_family(N, d)


def test_family_cap_allows_729():
    assert check_family(6, 3) == 729
    assert check_family(3, 9) == 729


def test_label_range_checked():
    with pytest.raises(DomainError):
        label_state(8, 3, 2)
    with pytest.raises(DomainError):
        multi_entangled_state(3, 2, 3, (0,))
    with pytest.raises(DomainError):
        basis_ket((0, 3), 3)


@pytest.mark.parametrize("i", range(3))
@pytest.mark.parametrize("j", range(3))
def test_printed_qutrit_transforms(i, j):
    U = qutrit_transform_unitary(i, j)
    check_unitary(U)
    psi00 = qudit_bell_state(3, 0, 0)
    out = apply_to_subsystem(U, psi00, 1, (3, 3))
    assert equal_up_to_phase(out, qudit_bell_state(3, i, j))


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_error_operators_generate_bell_basis(d):
    psi00 = qudit_bell_state(d, 0, 0)
    for n in range(d):
        for m in range(d):
            U = error_operator(d, m, n)
            check_unitary(U)
            out = apply_to_subsystem(U, psi00, 1, (d, d))
            np.testing.assert_allclose(out, qudit_bell_state(d, n, m), atol=1e-12)


def test_canonical_phase():
    v = np.array([0, 1j, 1]) / math.sqrt(2)
    c = canonical_phase(v)
    assert c[1].real > 0 and abs(c[1].imag) < 1e-15
    assert not equal_up_to_phase(v, np.array([0, 1, 1j]) / math.sqrt(2))


@pytest.mark.parametrize("N,d", [(3, 2), (2, 3), (3, 3)])
def test_measure_basis_state_is_deterministic(N, d):
    for k in range(d**N):
        p = measure_in_family(label_state(k, N, d), N, d)
        expected = np.zeros(d**N)
        expected[k] = 1
        np.testing.assert_allclose(p, expected, atol=1e-12)


def test_measure_maximally_mixed():
    np.testing.assert_allclose(measure_in_family(np.eye(8) / 8, 3, 2), np.full(8, 1 / 8), atol=1e-12)


def test_partial_trace_of_bell_state():
    rho = np.outer(qudit_bell_state(3, 1, 2), qudit_bell_state(3, 1, 2).conj())
    np.testing.assert_allclose(partial_trace(rho, [0], (3, 3)), np.eye(3) / 3, atol=1e-15)
    np.testing.assert_allclose(reduced_density(qudit_bell_state(3, 1, 2), [1], (3, 3)), np.eye(3) / 3, atol=1e-15)


def test_ghz_two_particle_marginal():
    # tracing one qubit of psi_0^+ leaves (|00><00| + |11><11|)/2
    rho = reduced_density(label_state(0, 3, 2), [1, 2], (2, 2, 2))
    np.testing.assert_allclose(rho, np.diag([0.5, 0, 0, 0.5]), atol=1e-15)


@given(st.integers(0, 2**32 - 1))
def test_reduced_density_agrees_with_partial_trace(seed):
    rng = np.random.default_rng(seed)
    dims = (2, 3, 2)
    psi = rng.normal(size=12) + 1j * rng.normal(size=12)
    psi /= np.linalg.norm(psi)
    keep = sorted(rng.choice(3, size=rng.integers(1, 3), replace=False).tolist())
    np.testing.assert_allclose(
        reduced_density(psi, keep, dims), partial_trace(np.outer(psi, psi.conj()), keep, dims), atol=1e-12
    )
    check_density(reduced_density(psi, keep, dims))


def test_check_density_rejects_non_hermitian():
    with pytest.raises(DomainError):
        check_density(np.array([[0.5, 0.1], [0.0, 0.5]]))


@given(unit_vectors3, unit_vectors3, unit_vectors3, st.integers(0, 7))
def test_ghz_correlations_closed_form(a, b, c, label):
    value = pauli_correlation(label_state(label, 3, 2), a, b, c)
    assert value == pytest.approx(ghz_correlation(label, a, b, c), abs=1e-12)


@given(unit_vectors3, unit_vectors3, unit_vectors3, st.integers(0, 7))
def test_product_state_correlations(a, b, c, index):
    digits = format(index, "03b")
    value = pauli_correlation(basis_ket([int(x) for x in digits], 2), a, b, c)
    assert value == pytest.approx(product_state_correlation(digits, a, b, c), abs=1e-12)


def test_known_state_correlation_is_one_along_x():
    x = [1, 0, 0]
    assert pauli_correlation(label_state(0, 3, 2), x, x, x) == pytest.approx(1.0, abs=1e-12)


@given(unit_vectors8, unit_vectors8)
def test_qutrit_psi00_correlation_closed_form(M, N):
    value = gellmann_correlation(qudit_bell_state(3, 0, 0), M, N)
    assert value == pytest.approx(qutrit_psi00_correlation(M, N), abs=1e-12)


def test_gell_mann_algebra():
    for a in range(1, 9):
        la = gell_mann(a)
        np.testing.assert_allclose(la, la.conj().T)
        assert abs(np.trace(la)) < 1e-15
        for b in range(1, 9):
            assert np.trace(la @ gell_mann(b)).real == pytest.approx(2.0 if a == b else 0.0, abs=1e-12)


def test_gell_mann_lambda1_standard_form():
    np.testing.assert_array_equal(gell_mann(1).real, [[0, 1, 0], [1, 0, 0], [0, 0, 0]])


def test_correlation_accepts_density():
    rho = np.eye(9) / 9
    assert correlation(rho, [np.eye(8)[0], np.eye(8)[0]], 3) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DomainError):
        correlation(np.eye(4) / 4, [[1, 0, 0]] * 3, 2)


def test_six_port_is_unitary():
    T = six_port_matrix()
    check_unitary(T)
    assert T[1, 1] == pytest.approx(np.exp(2j * np.pi / 3) / math.sqrt(3))
