import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dmkit import hadamard as hd
from dmkit import qmodel as qm

from strategies import generators


def statevector_readout(a, b, psi, e, bit):
    """Probe-Z (x) E expectation from a hand-rolled pure-state simulation.

    Probe amplitudes are stored as two system vectors (branch 0, branch 1).
    """
    s = np.diag([1.0, 1j]) if bit else np.eye(2)
    zero, one = psi / np.sqrt(2), psi / np.sqrt(2)  # after H
    zero, one = a @ zero, b @ one  # |0>-controlled A, |1>-controlled B
    zero, one = s[0, 0] * zero, s[1, 1] * one
    zero, one = (zero + one) / np.sqrt(2), (zero - one) / np.sqrt(2)  # final H
    return float(np.real(zero.conj() @ e @ zero - one.conj() @ e @ one))


def test_trivial_config_gives_unit_readout(rng):
    rho = qm.random_state(3, rng).matrix
    spec = hd.HadamardTestSpec(np.eye(3), np.eye(3), rho, np.eye(3))
    assert abs(hd.expectation(spec) - 1.0) < 1e-14


def test_born_rule_reduction(rng):
    rho = qm.random_state(3, rng).matrix
    e = qm.random_povm_element(3, rng).matrix
    val = hd.expectation_complex(hd.HadamardTestSpec(np.eye(3), np.eye(3), rho, e))
    assert abs(val - np.trace(rho @ e)) < 1e-14


@pytest.mark.parametrize("d", [2, 3, 5])
def test_shift_config_reads_element(rng, d):
    rho = qm.random_state(d, rng).matrix
    for i in range(d):
        for j in range(d):
            spec = hd.HadamardTestSpec(qm.u_shift(d, j - i), np.eye(d), rho,
                                       qm.basis_projector(d, j))
            assert abs(hd.expectation(spec) - rho[i, j].real) < 1e-12
            assert abs(hd.expectation(spec.with_bit(1)) - rho[i, j].imag) < 1e-12
            assert abs(hd.expectation_complex(spec) - rho[i, j]) < 1e-12


def test_projector_config_reads_element_over_d(rng):
    d = 3
    rho = qm.random_state(d, rng).matrix
    m = qm.mub_state(d)
    e = np.outer(m, m.conj())
    for i in range(d):
        for j in range(d):
            spec = hd.HadamardTestSpec(qm.basis_projector(d, i), qm.basis_projector(d, j), rho, e)
            assert abs(hd.expectation_complex(spec) - rho[i, j] / d) < 1e-12


def test_expectation_complex_pair_validation(rng):
    rho = qm.random_state(2, rng).matrix
    s0 = hd.HadamardTestSpec(np.eye(2), np.eye(2), rho, np.eye(2))
    assert abs(hd.expectation_complex(s0, s0.with_bit(1)) - 1.0) < 1e-14
    with pytest.raises(ValueError):
        hd.expectation_complex(s0, s0)
    other = hd.HadamardTestSpec(qm.u_shift(2, 1), np.eye(2), rho, np.eye(2), 1)
    with pytest.raises(ValueError):
        hd.expectation_complex(s0, other)


def test_spec_validation():
    with pytest.raises(ValueError):
        hd.HadamardTestSpec(np.eye(2), np.eye(3), np.eye(2) / 2, np.eye(2))
    with pytest.raises(ValueError):
        hd.HadamardTestSpec(np.eye(2), np.eye(2), np.eye(2) / 2, np.eye(2), b=2)


def test_circuit_path_matches_statevector_oracle(rng):
    d = 3
    psi = qm.random_pure_state(d, rng)
    rho = np.outer(psi, psi.conj())
    a, b = qm.haar_unitary(d, rng), qm.haar_unitary(d, rng)
    e = qm.random_povm_element(d, rng).matrix
    for bit in (0, 1):
        spec = hd.HadamardTestSpec(a, b, rho, e, bit)
        oracle = statevector_readout(a, b, psi, e, bit)
        assert abs(hd.circuit_cross_check(spec) - oracle) < 1e-12
        assert abs(hd.expectation(spec) - oracle) < 1e-12


def test_circuit_identity_gates_give_born_rule(rng):
    rho = qm.random_state(3, rng).matrix
    e = qm.random_povm_element(3, rng).matrix
    spec = hd.HadamardTestSpec(np.eye(3), np.eye(3), rho, e)
    assert abs(hd.circuit_cross_check(spec) - np.trace(rho @ e).real) < 1e-12


def test_circuit_matches_formula_for_shift_configs(rng):
    d = 3
    for _ in range(5):
        rho = qm.random_state(d, rng).matrix
        for i in range(d):
            for j in range(d):
                for bit in (0, 1):
                    spec = hd.HadamardTestSpec(qm.u_shift(d, j - i), np.eye(d), rho,
                                               qm.basis_projector(d, j), bit)
                    assert abs(hd.circuit_cross_check(spec) - hd.expectation(spec)) < 1e-10


def test_circuit_rejects_projector_gates(rng):
    rho = qm.random_state(2, rng).matrix
    spec = hd.HadamardTestSpec(qm.basis_projector(2, 0), np.eye(2), rho, np.eye(2))
    with pytest.raises(ValueError, match="unitary"):
        hd.circuit_cross_check(spec)


def test_process_identity_channel_unit_readout(rng):
    d = 2
    spec = hd.ProcessTestSpec(np.eye(d), np.eye(d), np.eye(d), np.eye(d),
                              qm.random_state(d, rng).matrix, np.eye(d), qm.identity_channel(d))
    assert abs(hd.expectation_process(spec) - 1.0) < 1e-14


@pytest.mark.parametrize("d", [2, 3])
def test_process_shift_config_reads_chi(rng, d):
    ch = qm.random_channel(d, rng)
    chi = qm.chi_from_kraus(ch).entries
    eye = np.eye(d)
    for i, j, k, l in np.ndindex(d, d, d, d):
        spec = hd.ProcessTestSpec(qm.u_shift(d, i - j), eye, qm.u_shift(d, k - l), eye,
                                  qm.basis_projector(d, j), qm.basis_projector(d, k), ch)
        assert abs(hd.expectation_process_complex(spec) - chi[i, j, k, l]) < 1e-12


def test_process_projector_config_reads_chi_over_d2(rng):
    d = 2
    ch = qm.random_channel(d, rng)
    chi = qm.chi_from_kraus(ch).entries
    m = qm.mub_state(d)
    mub = np.outer(m, m.conj())
    p = [qm.basis_projector(d, n) for n in range(d)]
    for i, j, k, l in np.ndindex(d, d, d, d):
        spec = hd.ProcessTestSpec(p[i], p[j], p[l], p[k], mub, mub, ch)
        assert abs(hd.expectation_process_complex(spec) - chi[i, j, k, l] / d**2) < 1e-12


def test_process_circuit_cross_check(rng):
    d = 2
    ch = qm.random_channel(d, rng)
    for bit in (0, 1):
        spec = hd.ProcessTestSpec(qm.haar_unitary(d, rng), qm.haar_unitary(d, rng),
                                  qm.haar_unitary(d, rng), qm.haar_unitary(d, rng),
                                  qm.random_state(d, rng).matrix,
                                  qm.random_povm_element(d, rng).matrix, ch, bit)
        assert abs(hd.circuit_cross_check_process(spec) - hd.expectation_process(spec)) < 1e-10


@given(generators(), st.integers(min_value=2, max_value=4), st.sampled_from([0, 1]))
def test_formula_and_circuit_agree(gen, d, bit):
    spec = hd.HadamardTestSpec(qm.haar_unitary(d, gen), qm.haar_unitary(d, gen),
                               qm.random_state(d, gen).matrix,
                               qm.random_povm_element(d, gen).matrix, bit)
    assert abs(hd.circuit_cross_check(spec) - hd.expectation(spec)) < 1e-10


@given(generators(), st.floats(min_value=0, max_value=1))
def test_linear_in_rho(gen, w):
    d = 3
    a, b = gen.normal(size=(d, d)), gen.normal(size=(d, d))
    e = qm.random_povm_element(d, gen).matrix
    r1, r2 = qm.random_state(d, gen).matrix, qm.random_state(d, gen).matrix
    mix = hd.expectation_complex(hd.HadamardTestSpec(a, b, w * r1 + (1 - w) * r2, e))
    parts = (w * hd.expectation_complex(hd.HadamardTestSpec(a, b, r1, e))
             + (1 - w) * hd.expectation_complex(hd.HadamardTestSpec(a, b, r2, e)))
    assert abs(mix - parts) < 1e-10


@given(generators())
def test_swapping_branches_conjugates(gen):
    d = 3
    a = gen.normal(size=(d, d)) + 1j * gen.normal(size=(d, d))
    b = gen.normal(size=(d, d)) + 1j * gen.normal(size=(d, d))
    rho = qm.random_state(d, gen).matrix
    e = qm.random_povm_element(d, gen).matrix
    ab = hd.expectation_complex(hd.HadamardTestSpec(a, b, rho, e))
    ba = hd.expectation_complex(hd.HadamardTestSpec(b, a, rho, e))
    assert abs(ab - np.conj(ba)) < 1e-10


@given(generators())
def test_identity_channel_composes_gates(gen):
    d = 2
    a, b, c, dd = (gen.normal(size=(d, d)) + 1j * gen.normal(size=(d, d)) for _ in range(4))
    rho = qm.random_state(d, gen).matrix
    e = qm.random_povm_element(d, gen).matrix
    proc = hd.expectation_process_complex(
        hd.ProcessTestSpec(a, b, c, dd, rho, e, qm.identity_channel(d)))
    direct = np.trace((c @ a) @ rho @ (dd @ b).conj().T @ e)
    assert abs(proc - direct) < 1e-10
