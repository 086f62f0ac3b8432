"""Spin-echo gate composition, effective unitaries and gate metrics.

Gate sequences are immutable tuples of segments.  The echo gate built by
:func:`make_echo_gate` is

    R(pi/2) - dress - R(pi) - dress - R(pi/2)

with all Raman axes equal.  For dressing pulses that imprint single-atom
phase ``a`` and pair phase ``b`` (``b = int J dt``) the composition is, up to
a global phase, ``exp(-i (a1 - a2) Sy - i (b1 + b2)/2 Sy^2)`` in the qubit
basis.  A pulse pair with equal single-atom phases therefore gives
``exp(-i phi Sy^2)`` when each pulse carries ``int J dt = phi``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.linalg import expm

from .core import DIM, QUBIT_INDICES, qubit_rotation, raman_rotation, spin_y_collective, to_qubit
from .dynamics import LEAKAGE_THRESHOLD, PulseControls, pulse_blocks, solve_hold_time
from .errors import LeakageError
from .hamiltonian import DriveParams, InteractionParams, RampSchedule, assemble_blocks

# -- segments ---------------------------------------------------------------


@dataclass(frozen=True)
class RamanRotation:
    """Instantaneous identical rotation of both qubits."""

    theta: float
    phi: float = 0.0
    duration: float = field(default=0.0, init=False)


@dataclass(frozen=True)
class DressingPulse:
    schedule: RampSchedule

    @property
    def duration(self) -> float:
        return self.schedule.duration


@dataclass(frozen=True)
class Wait:
    duration: float

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("wait duration must be non-negative")


Segment = Union[RamanRotation, DressingPulse, Wait]


@dataclass(frozen=True)
class GateSequence:
    segments: tuple

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def start_times(self) -> np.ndarray:
        durations = [seg.duration for seg in self.segments]
        return np.concatenate([[0.0], np.cumsum(durations)[:-1]]) if durations else np.zeros(0)

    @property
    def duration(self) -> float:
        return float(sum(seg.duration for seg in self.segments))

    @property
    def dressing_starts(self) -> list[float]:
        """Turn-on times of the dressing pulses (``t1``, ``t2`` for the echo)."""
        return [float(t) for t, seg in zip(self.start_times, self.segments)
                if isinstance(seg, DressingPulse)]

    @property
    def pulses(self) -> list[DressingPulse]:
        return [seg for seg in self.segments if isinstance(seg, DressingPulse)]

    @property
    def is_echo(self) -> bool:
        """Exactly two dressing pulses with a pi rotation between them."""
        idx = [i for i, seg in enumerate(self.segments) if isinstance(seg, DressingPulse)]
        if len(idx) != 2:
            return False
        between = [seg for seg in self.segments[idx[0] + 1:idx[1]]
                   if isinstance(seg, RamanRotation)]
        return len(between) == 1 and np.isclose(abs(between[0].theta), np.pi)

    def with_analysis(self, phi: float) -> "GateSequence":
        """Append an analysis pi/2 pulse about ``(cos phi, sin phi, 0)``."""
        return GateSequence(self.segments + (RamanRotation(np.pi / 2, phi),))


def _zero_pulse(s: RampSchedule) -> RampSchedule:
    return RampSchedule(0.0, 0.0, 0.0, s.omega_peak, s.delta_start, s.delta_hold,
                        s.omega_shape, s.delta_shape)


def make_echo_gate(phi_j_target: float, s_template: RampSchedule, p: InteractionParams,
                   d: Optional[DriveParams] = None, *, phi0: float = 0.0,
                   wait: float = 0.0) -> GateSequence:
    """Echo sequence realizing ``exp(-i phi_j_target Sy^2)``.

    Both dressing pulses are identical and each accumulates
    ``int J dt = phi_j_target``; the hold time is solved on the template's
    ramps.  A zero target gives zero-length dressing pulses.  ``wait`` inserts
    free evolution on either side of the pi pulse.
    """
    if phi_j_target == 0:
        sched = _zero_pulse(s_template)
    else:
        sched = s_template.with_hold(solve_hold_time(phi_j_target, s_template, p, d))
    pulse = DressingPulse(sched)
    mid = [RamanRotation(np.pi, phi0)]
    if wait > 0:
        mid = [Wait(wait)] + mid + [Wait(wait)]
    return GateSequence([RamanRotation(np.pi / 2, phi0), pulse, *mid, pulse,
                         RamanRotation(np.pi / 2, phi0)])


def make_noecho_gate(phi_j_target: float, s_template: RampSchedule, p: InteractionParams,
                     d: Optional[DriveParams] = None, *, phi0: float = 0.0) -> GateSequence:
    """Reference without the pi pulse: one merged pulse carrying ``2 phi_j_target``."""
    if phi_j_target == 0:
        sched = _zero_pulse(s_template)
    else:
        sched = s_template.with_hold(solve_hold_time(2 * phi_j_target, s_template, p, d))
    return GateSequence([RamanRotation(np.pi / 2, phi0), DressingPulse(sched),
                         RamanRotation(np.pi / 2, phi0)])


# -- propagation ------------------------------------------------------------

@dataclass
class SequenceResult:
    unitary: np.ndarray
    pulse_phases: list


def _controls_for(d: Optional[DriveParams], base: PulseControls, t0: float) -> PulseControls:
    offs, scale = base.delta_offsets, base.rabi_scale
    if d is not None:
        om_bar = abs(complex(d.omega_bar))
        if om_bar > 0:
            scale = (scale[0] * abs(d.omega1) / om_bar, scale[1] * abs(d.omega2) / om_bar)
        de_bar = float(d.delta_bar)
        offs = (offs[0] + float(d.delta1) - de_bar, offs[1] + float(d.delta2) - de_bar)
    return PulseControls(offs, scale, base.laser_noise, t0)


def run_sequence(seq: GateSequence, p: InteractionParams, d: Optional[DriveParams] = None,
                 *, controls: PulseControls = PulseControls(), dt_max=None) -> SequenceResult:
    """9x9 propagator of a sequence plus the interferometric phase of each pulse.

    ``controls`` applies to every dressing pulse; its laser noise is sampled at
    absolute sequence time.  ``d`` adds per-atom asymmetry relative to the
    schedule (the schedule itself sets the mean drive).
    """
    from .dynamics import block_phase

    u = np.eye(DIM, dtype=complex)
    phases = []
    for t0, seg in zip(seq.start_times, seq.segments):
        if isinstance(seg, RamanRotation):
            u = raman_rotation(seg.theta, seg.phi) @ u
        elif isinstance(seg, DressingPulse):
            if seg.duration == 0:
                phases.append(0.0)
                continue
            totals, _, _ = pulse_blocks(seg.schedule, p, dt_max, _controls_for(d, controls, t0))
            phases.append(float(block_phase(totals)))
            u = assemble_blocks(totals, zero_block=1.0) @ u
        elif isinstance(seg, Wait):
            continue
        else:
            raise TypeError(f"unknown segment {seg!r}")
    return SequenceResult(u, phases)


def sequence_propagator(seq: GateSequence, p: InteractionParams,
                        d: Optional[DriveParams] = None, **kw) -> np.ndarray:
    return run_sequence(seq, p, d, **kw).unitary


def qubit_leakage(u9: np.ndarray) -> float:
    """Largest population leaving the qubit subspace over qubit-basis inputs."""
    cols = u9[:, list(QUBIT_INDICES)]
    kept = np.sum(np.abs(to_qubit(u9)) ** 2, axis=0)
    return float(np.max(np.clip(np.sum(np.abs(cols) ** 2, axis=0) - kept, 0.0, 1.0)))


def fix_gauge(u: np.ndarray) -> np.ndarray:
    """Remove the global phase so that ``arg U[0, 0] = 0``."""
    z = u[0, 0]
    if abs(z) < 1e-12:
        z = u[np.unravel_index(np.argmax(np.abs(u)), u.shape)]
    return u * np.exp(-1j * np.angle(z))


def effective_unitary(seq: GateSequence, p: InteractionParams, d: Optional[DriveParams] = None,
                      *, leakage_threshold=LEAKAGE_THRESHOLD, **kw) -> np.ndarray:
    """4x4 gate on ``(|00>, |01>, |10>, |11>)`` with ``arg U[0,0] = 0``.

    Raises
    ------
    LeakageError
        If any qubit input ends with Rydberg population above the threshold.
    """
    u9 = sequence_propagator(seq, p, d, **kw)
    leak = qubit_leakage(u9)
    if leak >= leakage_threshold:
        raise LeakageError(f"population {leak:.2e} left outside the qubit subspace")
    return fix_gauge(to_qubit(u9))


# -- ideal gates and metrics ------------------------------------------------

def spin_y_qubit() -> np.ndarray:
    return to_qubit(spin_y_collective())


def ms_ideal(phi_j: float) -> np.ndarray:
    """``exp(-i phi_j Sy^2)`` on the qubit subspace."""
    sy = spin_y_qubit()
    return expm(-1j * phi_j * (sy @ sy))


def noisy_gate_unitary(phi1_t1: float, phi1_t2: float, phi2_t1: float, phi2_t2: float) -> np.ndarray:
    """Echo gate with pulse-dependent single-atom (``phi1``) and pair (``phi2``) angles.

    ``exp[-i (phi1_t1 - phi1_t2) Sy - i (phi2_t1 + phi2_t2)/2 Sy^2]``; the two
    generators commute.
    """
    sy = spin_y_qubit()
    gen = (phi1_t1 - phi1_t2) * sy + 0.5 * (phi2_t1 + phi2_t2) * (sy @ sy)
    return expm(-1j * gen)


def gate_fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """Average gate fidelity ``(|Tr U^dag V|^2 + d) / (d (d + 1))`` with ``d = 4``."""
    tr = np.trace(np.conj(u).T @ v)
    return float((abs(tr) ** 2 + 4) / 20)


_MAGIC = np.array([[1, 1j, 0, 0],
                   [0, 0, 1j, 1],
                   [0, 0, 1j, -1],
                   [1, -1j, 0, 0]], dtype=complex) / np.sqrt(2)

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def _magic_m(u: np.ndarray) -> np.ndarray:
    ub = _MAGIC.conj().T @ u @ _MAGIC
    return ub.T @ ub


def local_invariants(u: np.ndarray) -> tuple[complex, float]:
    """Makhlin invariants ``(G1, G2)``; equal for locally equivalent gates."""
    m = _magic_m(u)
    det = np.linalg.det(u)
    tr = np.trace(m)
    g1 = tr**2 / (16 * det)
    g2 = (tr**2 - np.trace(m @ m)) / (4 * det)
    return complex(g1), float(np.real(g2))


def entangling_power(u: np.ndarray) -> float:
    """``(2/9)(1 - |G1|)``; zero for local gates and 2/9 for CNOT."""
    g1, _ = local_invariants(u)
    return float(2 / 9 * (1 - abs(g1)))


def is_perfect_entangler(u: np.ndarray, tol=1e-9) -> bool:
    """True when the eigenvalues of the magic-basis ``m`` enclose the origin."""
    u = np.asarray(u, dtype=complex)
    u = u / np.linalg.det(u) ** 0.25
    ang = np.sort(np.angle(np.linalg.eigvals(_magic_m(u))))
    gaps = np.diff(np.r_[ang, ang[0] + 2 * np.pi])
    return bool(gaps.max() <= np.pi + tol)


def ideal_output(phi_j: float, psi0: Optional[np.ndarray] = None) -> np.ndarray:
    """``ms_ideal(phi_j)`` applied to ``psi0`` (default |11>)."""
    if psi0 is None:
        psi0 = np.array([0, 0, 0, 1], dtype=complex)
    return ms_ideal(phi_j) @ psi0


def analysis_rotation(phi: float) -> np.ndarray:
    return qubit_rotation(np.pi / 2, phi)


# -- summary ----------------------------------------------------------------

def gate_summary(seq: GateSequence, p: InteractionParams, d: Optional[DriveParams] = None,
                 *, target: Optional[float] = None) -> dict:
    """``phi_j``, ``leakage``, ``fidelity_to_ms`` and ``entangling_power``.

    ``phi_j`` is the mean interferometric phase per dressing pulse, which is
    the MS angle of the echo gate.  The fidelity is taken to ``ms_ideal``
    of ``target`` (default: the achieved ``phi_j``) after the gauge fix.
    """
    res = run_sequence(seq, p, d)
    leak = qubit_leakage(res.unitary)
    u = fix_gauge(to_qubit(res.unitary))
    phi = float(np.mean(res.pulse_phases)) if res.pulse_phases else 0.0
    ref = phi if target is None else target
    return {
        "phi_j": phi,
        "leakage": leak,
        "fidelity_to_ms": gate_fidelity(ms_ideal(ref), u),
        "entangling_power": entangling_power(u),
    }


def summary_json(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True)
