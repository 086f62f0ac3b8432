import numpy as np
import pytest
from scipy.stats import unitary_group

from rydms.core import qubit_rotation, single_rotation, swap_atoms, to_qubit
from rydms.dynamics import pulse_propagator
from rydms.errors import LeakageError
from rydms.hamiltonian import DriveParams, RampSchedule
from rydms.sequence import (CNOT, DressingPulse, GateSequence, RamanRotation, Wait,
                            effective_unitary, entangling_power, fix_gauge, gate_fidelity,
                            gate_summary, ideal_output, is_perfect_entangler, local_invariants,
                            make_echo_gate, make_noecho_gate, ms_ideal, noisy_gate_unitary,
                            run_sequence, spin_y_qubit)
from rydms.units import MHZ, NS, US

from conftest import DELTA, OMEGA

SWAP = to_qubit(swap_atoms())


@pytest.fixture(scope="module")
def echo_u(echo_gate, pair, drive):
    return effective_unitary(echo_gate, pair, drive)


def test_ms_ideal_closed_form():
    # Sy^2 on two spins: exp(-i phi Sy^2) from its spectral decomposition
    sy = spin_y_qubit()
    w, v = np.linalg.eigh(sy @ sy)
    for phi in (0.3, -np.pi / 2):
        expect = v @ np.diag(np.exp(-1j * phi * w)) @ v.conj().T
        assert np.allclose(ms_ideal(phi), expect)
    out = ideal_output(-np.pi / 2)
    bell = np.array([-1j, 0, 0, 1]) / np.sqrt(2)
    assert abs(np.vdot(bell, out)) == pytest.approx(1.0)


def test_metrics_on_known_gates():
    eye = np.eye(4)
    assert entangling_power(eye) == pytest.approx(0, abs=1e-12)
    assert entangling_power(CNOT) == pytest.approx(2 / 9)
    assert entangling_power(SWAP) == pytest.approx(0, abs=1e-12)
    assert is_perfect_entangler(CNOT)
    assert not is_perfect_entangler(SWAP)
    assert not is_perfect_entangler(eye)
    g1, g2 = local_invariants(CNOT)
    assert abs(g1) == pytest.approx(0, abs=1e-12) and g2 == pytest.approx(1)


@pytest.mark.parametrize("phi", [0.0, 0.2, 0.7, np.pi / 2, 2.0])
def test_ms_entangling_power(phi):
    assert entangling_power(ms_ideal(phi)) == pytest.approx(2 / 9 * np.sin(phi) ** 2, abs=1e-12)


def test_perfect_entangler_at_quarter_turn_only():
    assert is_perfect_entangler(ms_ideal(-np.pi / 2))
    assert is_perfect_entangler(ms_ideal(np.pi / 2))
    assert not is_perfect_entangler(ms_ideal(0.5))


def test_invariants_are_local():
    rng = np.random.default_rng(1)
    u = ms_ideal(0.9)
    a = np.kron(unitary_group.rvs(2, random_state=rng), unitary_group.rvs(2, random_state=rng))
    b = np.kron(unitary_group.rvs(2, random_state=rng), unitary_group.rvs(2, random_state=rng))
    g1, g2 = local_invariants(u)
    h1, h2 = local_invariants(a @ u @ b)
    assert h1 == pytest.approx(g1) and h2 == pytest.approx(g2)


def test_gate_fidelity():
    u = ms_ideal(0.4)
    assert gate_fidelity(u, u) == pytest.approx(1)
    assert gate_fidelity(u, np.exp(0.7j) * u) == pytest.approx(1)
    assert gate_fidelity(np.eye(4), CNOT) == pytest.approx((4 + 4) / 20)
    assert np.angle(fix_gauge(np.exp(0.3j) * u)[0, 0]) == pytest.approx(0)


def test_noise_extended_form():
    assert np.allclose(noisy_gate_unitary(0.3, 0.3, -0.8, -0.8), ms_ideal(-0.8))
    from scipy.linalg import expm
    extra = expm(-1j * 0.2 * spin_y_qubit())
    assert np.allclose(noisy_gate_unitary(0.5, 0.3, -0.8, -0.8), extra @ ms_ideal(-0.8))


def test_raman_echo_composition():
    # pi/2, pi, pi/2 about the same axis is a 2 pi rotation: -1 on each qubit
    seq = GateSequence([RamanRotation(np.pi / 2), RamanRotation(np.pi), RamanRotation(np.pi / 2)])
    u = run_sequence(seq, None).unitary
    assert np.allclose(to_qubit(u), np.kron(single_rotation(2 * np.pi, 0), single_rotation(2 * np.pi, 0)))


def test_echo_structure(echo_gate):
    assert echo_gate.is_echo
    kinds = [type(s).__name__ for s in echo_gate.segments]
    assert kinds == ["RamanRotation", "DressingPulse", "RamanRotation", "DressingPulse",
                     "RamanRotation"]
    a, b = echo_gate.pulses
    assert a == b
    t1, t2 = echo_gate.dressing_starts
    assert t2 - t1 == pytest.approx(a.duration)
    assert not GateSequence([RamanRotation(np.pi / 2)]).is_echo
    with pytest.raises(ValueError):
        Wait(-1.0)


def test_echo_gate_is_ms(echo_u):
    assert gate_fidelity(ms_ideal(-np.pi / 2), echo_u) >= 0.9999
    assert np.allclose(echo_u.conj().T @ echo_u, np.eye(4), atol=1e-4)
    assert entangling_power(echo_u) == pytest.approx(2 / 9, abs=1e-4)


def test_exchange_symmetry(echo_gate, echo_u, pair):
    assert np.allclose(SWAP @ echo_u @ SWAP, echo_u, atol=1e-10)
    d = DriveParams(OMEGA, 0.97 * OMEGA, DELTA + 0.05 * MHZ, DELTA)
    u = effective_unitary(echo_gate, pair, d)
    v = effective_unitary(echo_gate, pair, d.swapped())
    assert np.allclose(SWAP @ u @ SWAP, v, atol=1e-8)


def test_dressing_leaves_zero_zero_alone(echo_gate, pair):
    u = pulse_propagator(echo_gate.pulses[0].schedule, pair)
    assert u[0, 0] == 1 and np.allclose(u[0, 1:], 0) and np.allclose(u[1:, 0], 0)


def test_zero_target(template, pair, drive):
    seq = make_echo_gate(0.0, template, pair, drive)
    assert seq.duration == 0
    u = effective_unitary(seq, pair, drive)
    assert entangling_power(u) == pytest.approx(0, abs=1e-12)
    assert np.allclose(u, np.eye(4))


def test_noecho_reference_matches_ms(template, pair, drive):
    seq = make_noecho_gate(-np.pi / 4, template, pair, drive)
    assert len(seq.pulses) == 1 and not seq.is_echo
    res = run_sequence(seq, pair, drive)
    assert res.pulse_phases[0] == pytest.approx(-np.pi / 2, abs=1e-2)


def test_leakage_error(pair):
    fast = RampSchedule(10 * NS, 50 * NS, 10 * NS, OMEGA, 16 * MHZ, DELTA)
    seq = GateSequence([RamanRotation(np.pi / 2), DressingPulse(fast)])
    with pytest.raises(LeakageError):
        effective_unitary(seq, pair)


def test_summary(echo_gate, pair, drive):
    s = gate_summary(echo_gate, pair, drive, target=-np.pi / 2)
    assert set(s) == {"phi_j", "leakage", "fidelity_to_ms", "entangling_power"}
    assert s["fidelity_to_ms"] >= 0.9999
    assert s["phi_j"] == pytest.approx(-np.pi / 2, abs=1e-2)


def test_analysis_pulse_and_waits(echo_gate, pair):
    seq = make_echo_gate(0.0, echo_gate.pulses[0].schedule, pair, wait=1 * US)
    assert seq.duration == pytest.approx(2 * US)
    ana = seq.with_analysis(0.3)
    assert isinstance(ana.segments[-1], RamanRotation) and ana.segments[-1].phi == 0.3
    u = to_qubit(run_sequence(ana, pair).unitary)
    assert np.allclose(u, qubit_rotation(np.pi / 2, 0.3))
