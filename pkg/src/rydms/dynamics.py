"""Time-dependent propagation through dressing pulses.

The integrator is a fixed-step fourth-order Magnus scheme with two Gauss
points per step,

    K = dt/2 (H1 + H2) - i sqrt(3)/12 dt^2 [H2, H1],   U = exp(-i K),

applied separately to each conserved block of the Hamiltonian (the |0> count
is conserved, so the 9x9 problem splits into blocks of size 1, 2, 2 and 4).
The step obeys ``dt <= dt_max`` and ``||H|| dt <= 0.05``.  A noiseless hold
plateau has a constant Hamiltonian and is exponentiated in one step.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import DIM, label, rydberg_number
from .errors import ConvergenceError, IntegratorError
from .hamiltonian import (SECTORS, DriveParams, InteractionParams, RampSchedule,
                          assemble_blocks, schedule_eval, sector_blocks)
from .spectrum import branch_energies, entangling_energy
from .tracking import follow_step
from .units import MHZ, US

STEP_PHASE = 0.05          # max ||H|| dt per step
LEAKAGE_THRESHOLD = 1e-4
NORM_TOLERANCE = 1e-6
PHASE_QUAD_TOL = 1e-5      # Richardson target for each ramp integral
J_FLOOR = 1e-9             # |J| below this fraction of the drive counts as zero

_G1 = 0.5 - np.sqrt(3) / 6
_G2 = 0.5 + np.sqrt(3) / 6
_BLOCKS = ("01", "10", "11")


class AdiabaticityWarning(UserWarning):
    """Rydberg population left at the end of a dressing pulse."""


@dataclass(frozen=True)
class PulseControls:
    """Per-shot deviations applied on top of a schedule.

    ``delta_offsets`` are static per-atom detuning shifts, ``rabi_scale``
    multiplies each atom's Rabi frequency, and ``laser_noise(t)`` is a common
    detuning shift evaluated at absolute time ``t0 + t``.
    """

    delta_offsets: tuple[float, float] = (0.0, 0.0)
    rabi_scale: tuple[float, float] = (1.0, 1.0)
    laser_noise: Optional[Callable] = None
    t0: float = 0.0

    @property
    def is_static(self) -> bool:
        return self.laser_noise is None


NOMINAL = PulseControls()


def drive_at(s: RampSchedule, t, c: PulseControls = NOMINAL) -> DriveParams:
    """Drive parameters of schedule ``s`` at local time(s) ``t``."""
    omega, delta = schedule_eval(s, t)
    common = 0.0 if c.laser_noise is None else c.laser_noise(c.t0 + np.asarray(t))
    return DriveParams(omega * c.rabi_scale[0], omega * c.rabi_scale[1],
                       delta + c.delta_offsets[0] + common,
                       delta + c.delta_offsets[1] + common)


def _blocks_at(s, t, v, c):
    d = drive_at(s, t, c)
    return sector_blocks(d.omega1, d.omega2, d.delta1, d.delta2, v)


def _norm_bound(blocks) -> float:
    """Largest Gershgorin row sum over a stack of blocks."""
    return max(float(np.max(np.sum(np.abs(b), axis=-1))) for b in blocks.values())


def _eigh_expm(k):
    """``exp(-i K)`` for a stack of Hermitian ``K``."""
    w, vecs = np.linalg.eigh(k)
    return np.einsum("...ij,...j,...kj->...ik", vecs, np.exp(-1j * w), vecs.conj())


def _magnus_steps(s, v, c, t_start, t_stop, dt_max):
    """Stacked step propagators (per block) on a uniform grid over [t_start, t_stop]."""
    span = t_stop - t_start
    probe = np.linspace(t_start, t_stop, 257)
    bound = max(_norm_bound(_blocks_at(s, probe, v, c)), 1e-300)
    dt = STEP_PHASE / bound
    if dt_max is not None:
        dt = min(dt, dt_max)
    n = max(int(np.ceil(span / dt)), 1)
    dt = span / n
    edges = t_start + dt * np.arange(n + 1)
    left = edges[:-1]
    h1 = _blocks_at(s, np.clip(left + _G1 * dt, t_start, t_stop), v, c)
    h2 = _blocks_at(s, np.clip(left + _G2 * dt, t_start, t_stop), v, c)
    steps = {}
    for name in _BLOCKS:
        a, b = h1[name], h2[name]
        comm = b @ a - a @ b
        k = 0.5 * dt * (a + b) - 1j * (np.sqrt(3) / 12) * dt**2 * comm
        steps[name] = _eigh_expm(k)
    return edges, steps


def _exact_step(s, v, c, t_start, t_stop):
    mid = 0.5 * (t_start + t_stop)
    h = _blocks_at(s, np.array([mid]), v, c)
    return {name: _eigh_expm(h[name] * (t_stop - t_start)) for name in _BLOCKS}


def _chain_product(mats: np.ndarray) -> np.ndarray:
    """``mats[n-1] @ ... @ mats[0]`` by pairwise reduction."""
    while mats.shape[0] > 1:
        if mats.shape[0] % 2:
            eye = np.broadcast_to(np.eye(mats.shape[-1]), (1,) + mats.shape[1:])
            mats = np.concatenate([mats, eye], axis=0)
        mats = mats[1::2] @ mats[0::2]
    return mats[0]


def _prefix_products(mats: np.ndarray) -> np.ndarray:
    """Running products ``P_k = mats[k] @ ... @ mats[0]`` (Hillis-Steele scan)."""
    out = mats.copy()
    shift = 1
    while shift < out.shape[0]:
        out[shift:] = out[shift:] @ out[:-shift]
        shift *= 2
    return out


def _segments(s: RampSchedule, c: PulseControls, record: bool):
    """``(t_start, t_stop, exact)`` for the non-empty pieces of a schedule."""
    _, a, b, end = s.boundaries()
    exact_hold = c.is_static and not record
    out = []
    for lo, hi, is_hold in ((0.0, a, False), (a, b, True), (b, end, False)):
        if hi > lo:
            out.append((lo, hi, is_hold and exact_hold))
    return out


@dataclass
class PropagationResult:
    """Outcome of :func:`propagate`.

    ``max_leakage`` is the total Rydberg population at the end of the
    schedule.  ``accumulated_phi_j`` is the interferometric two-atom phase of
    the pulse, ``-arg(U11 / (U10 U01))`` for the bare-to-bare amplitudes.
    ``rydberg_integral`` (s) is the time integral of the summed Rydberg
    population and is filled only when ``record=True``, as is ``trajectory``
    (a tuple of times and states).
    """

    final_state: np.ndarray
    accumulated_phi_j: float
    max_leakage: float
    adiabaticity_warning: bool
    unitary: np.ndarray
    rydberg_integral: Optional[float] = None
    trajectory: Optional[tuple[np.ndarray, np.ndarray]] = None


def pulse_blocks(s: RampSchedule, p: InteractionParams, dt_max=None,
                 controls: PulseControls = NOMINAL, record=False):
    """Block propagators of one pulse; with ``record`` also the running products."""
    v = p.strength
    totals = {name: np.eye(len(SECTORS[name]), dtype=complex) for name in _BLOCKS}
    times = [np.array([0.0])]
    running = {name: [totals[name][None]] for name in _BLOCKS}
    for lo, hi, exact in _segments(s, controls, record):
        if exact:
            steps = _exact_step(s, v, controls, lo, hi)
            edges = np.array([lo, hi])
        else:
            edges, steps = _magnus_steps(s, v, controls, lo, hi, dt_max)
        for name in _BLOCKS:
            if record:
                pref = _prefix_products(steps[name]) @ totals[name]
                running[name].append(pref)
                totals[name] = pref[-1]
            else:
                totals[name] = _chain_product(steps[name]) @ totals[name]
        times.append(edges[1:])
    if record:
        return totals, np.concatenate(times), {k: np.concatenate(v_) for k, v_ in running.items()}
    return totals, None, None


def pulse_propagator(s: RampSchedule, p: InteractionParams, dt_max=None,
                     controls: PulseControls = NOMINAL) -> np.ndarray:
    """Full 9x9 propagator of one dressing pulse."""
    totals, _, _ = pulse_blocks(s, p, dt_max, controls)
    return assemble_blocks(totals, zero_block=1.0)


def block_phase(totals) -> float:
    """Interferometric phase ``-arg(U11 conj(U10) conj(U01))`` of bare amplitudes."""
    z = totals["11"][..., 0, 0] * np.conj(totals["10"][..., 0, 0]) * np.conj(totals["01"][..., 0, 0])
    return -np.angle(z)


def interferometric_phase(psi: np.ndarray, psi0: np.ndarray) -> float:
    """Two-atom phase from a propagated superposition.

    ``psi0`` must populate |10>, |01> and |11>; the phase of each output
    amplitude is referenced to its input so that
    ``phi = arg a10 + arg a01 - arg a11`` with ``a = psi / psi0``.
    """
    idx = {"10": 3, "01": 1, "11": 4}
    a = {k: psi[i] / psi0[i] for k, i in idx.items()}
    return float(-np.angle(a["11"] * np.conj(a["10"]) * np.conj(a["01"])))


def propagate(psi0: np.ndarray, s: RampSchedule, p: InteractionParams, dt_max=None, *,
              controls: PulseControls = NOMINAL, leakage_threshold=LEAKAGE_THRESHOLD,
              record=False) -> PropagationResult:
    """Integrate the Schrodinger equation through one dressing pulse.

    Parameters
    ----------
    psi0 : (9,) complex array, normalized.
    s : dressing schedule; it must start and end with zero Rabi frequency.
    p : pair interaction.
    dt_max : optional upper bound on the step (s).
    controls : static offsets, Rabi scaling and laser noise.
    record : keep the state on the step grid and the Rydberg time integral.

    Raises
    ------
    IntegratorError
        If the norm drifts by more than 1e-6.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (DIM,):
        raise ValueError("psi0 must have 9 components")
    n0 = np.linalg.norm(psi0)
    if abs(n0 - 1) > 1e-9:
        raise ValueError("psi0 must be normalized")
    om_ends, _ = schedule_eval(s, np.array([0.0, s.duration]))
    if np.any(om_ends != 0):
        raise ValueError("schedule must start and end with zero Rabi frequency")

    totals, times, running = pulse_blocks(s, p, dt_max, controls, record)
    u = assemble_blocks(totals, zero_block=1.0)
    psi = u @ psi0
    if abs(np.linalg.norm(psi) - n0) > NORM_TOLERANCE:
        raise IntegratorError(f"norm drift {abs(np.linalg.norm(psi) - n0):.3e}")
    n_r = rydberg_number()
    leak = float(np.clip(np.sum(n_r * np.abs(psi) ** 2), 0.0, 1.0))
    flag = leak > leakage_threshold
    if flag:
        warnings.warn(f"Rydberg population {leak:.2e} left after the pulse", AdiabaticityWarning,
                      stacklevel=2)
    traj = None
    ryd_int = None
    if record:
        us = assemble_blocks(running, zero_block=1.0)
        states = us @ psi0
        pops = np.abs(states) ** 2
        ryd_int = float(np.trapezoid(pops @ n_r, times))
        traj = (times, states)
    return PropagationResult(psi, float(block_phase(totals)), leak, flag, u, ryd_int, traj)


# -- spectral phase ---------------------------------------------------------

def _j_of_t(s, p, t, c, branch):
    d = drive_at(s, t, c)
    return entangling_energy(d, p, branch)


def _simpson(f_vals, h):
    return h / 3 * (f_vals[0] + f_vals[-1] + 4 * f_vals[1:-1:2].sum() + 2 * f_vals[2:-1:2].sum())


def _ramp_integral(s, p, lo, hi, c, branch, n0=64, max_level=8):
    prev = None
    n = n0
    for _ in range(max_level):
        t = np.linspace(lo, hi, n + 1)
        val = _simpson(_j_of_t(s, p, t, c, branch), (hi - lo) / n)
        if prev is not None:
            err = (val - prev) / 15
            if abs(err) < PHASE_QUAD_TOL:
                return val + err
        prev = val
        n *= 2
    raise ConvergenceError("phase quadrature did not converge")


def phase_parts(s: RampSchedule, p: InteractionParams, controls: PulseControls = NOMINAL,
                branch="+"):
    """``(ramp phase, J on the plateau)`` for a static pulse."""
    if not controls.is_static:
        raise ValueError("spectral phase needs static controls")
    _, a, b, end = s.boundaries()
    ramps = 0.0
    if a > 0:
        ramps += _ramp_integral(s, p, 0.0, a, controls, branch)
    if end > b:
        ramps += _ramp_integral(s, p, b, end, controls, branch)
    j_hold = float(_j_of_t(s, p, np.array([a]), controls, branch)[0])
    return ramps, j_hold


def accumulate_phi_j(s: RampSchedule, p: InteractionParams, d: DriveParams | None = None,
                     *, controls: PulseControls = NOMINAL, branch="+") -> float:
    """Spectral phase ``int J dt`` over the schedule.

    The ramps are integrated with Simpson's rule refined until the
    Richardson error estimate drops below 1e-5 rad; the plateau contributes
    ``J t_hold`` exactly.  When ``d`` is given its per-atom asymmetry
    (Rabi ratio and detuning differences relative to the mean) is carried as
    static controls.
    """
    if d is not None:
        controls = _controls_from_drive(d, s, controls)
    ramps, j_hold = phase_parts(s, p, controls, branch)
    return ramps + j_hold * s.t_hold


def _controls_from_drive(d: DriveParams, s: RampSchedule, base: PulseControls) -> PulseControls:
    om_bar = abs(complex(d.omega_bar))
    if om_bar == 0:
        scale = (1.0, 1.0)
    else:
        scale = (abs(d.omega1) / om_bar, abs(d.omega2) / om_bar)
    de_bar = float(d.delta_bar)
    offs = (float(d.delta1) - de_bar, float(d.delta2) - de_bar)
    return PulseControls(offs, scale, base.laser_noise, base.t0)


def solve_hold_time(target_phi: float, s_template: RampSchedule, p: InteractionParams,
                    d: DriveParams | None = None, *, controls: PulseControls = NOMINAL,
                    branch="+") -> float:
    """Hold time giving ``accumulate_phi_j == target_phi``.

    The phase is affine in the hold time, so the root is found by a single
    secant step from two evaluations and then verified.

    Raises
    ------
    ConvergenceError
        If the plateau ``J`` vanishes or has the wrong sign for the target.
    """
    if d is not None:
        controls = _controls_from_drive(d, s_template, controls)
    ramps, j_hold = phase_parts(s_template.with_hold(0.0), p, controls, branch)
    if target_phi == ramps:
        return 0.0
    scale = max(abs(s_template.omega_peak), abs(s_template.delta_hold), 1.0)
    if abs(j_hold) <= J_FLOOR * scale:
        raise ConvergenceError("J vanishes on the plateau; target cannot be bracketed")
    t_hold = (target_phi - ramps) / j_hold
    if t_hold < 0:
        raise ConvergenceError(
            f"target {target_phi:.4f} rad is not reachable: ramps alone give {ramps:.4f} rad "
            f"and the plateau J has the wrong sign")
    return float(t_hold)


# -- adiabaticity -----------------------------------------------------------

def _branch_of(s: RampSchedule) -> str:
    return "+" if s.delta_start >= 0 else "-"


def adiabaticity_report(s: RampSchedule, p: InteractionParams, d: DriveParams | None = None,
                        *, n_samples=400) -> dict:
    """Leakage at the end of the ramp up, minimum gap and a ramp-speed criterion.

    ``leakage`` is the largest of ``1 - |<dressed|psi>|^2`` over the inputs
    |10>, |01> and |11> (each is in ``leakage_by_state``), evaluated at the start of the plateau against the
    branch the ramp should follow (``+`` for a positive start detuning).
    ``ramp_criterion`` is ``max |<m|dH/dt|n>| / (E_n - E_m)^2`` over the ramp.
    ``final_rydberg`` is the Rydberg population after the whole pulse for |11>.
    """
    controls = NOMINAL if d is None else _controls_from_drive(d, s, NOMINAL)
    branch = _branch_of(s)
    v = p.strength
    a = s.t_ramp_up
    out = {}

    ramp = RampSchedule(a, 0.0, 0.0, s.omega_peak, s.delta_start, s.delta_hold,
                        s.omega_shape, s.delta_shape)
    dplat = drive_at(s, np.array([a]), controls)
    target = branch_energies(dplat.omega1, dplat.omega2, dplat.delta1, dplat.delta2, v, branch)
    if a > 0:
        totals, _, _ = pulse_blocks(ramp, p, None, controls)
    else:
        totals = {name: np.eye(len(SECTORS[name]), dtype=complex) for name in _BLOCKS}
    by_state = {}
    for name in _BLOCKS:
        vec = target[name][1][0][list(SECTORS[name])]
        psi = totals[name][:, 0]
        by_state[name] = float(np.clip(1.0 - abs(np.vdot(vec, psi)) ** 2, 0.0, 1.0))
    out["leakage"] = max(by_state.values())
    out["leakage_by_state"] = by_state

    min_gap = np.inf
    crit = np.inf
    if a > 0:
        crit = 0.0
        t = np.linspace(0.0, a, n_samples)
        h = _blocks_at(s, t, v, controls)
        for name in _BLOCKS:
            w, vecs = np.linalg.eigh(h[name])
            # follow the branch from the bare state along the ramp
            idx = np.empty(len(t), dtype=int)
            vprev = np.zeros(w.shape[-1], dtype=complex)
            vprev[0] = 1.0
            for k in range(len(t)):
                _, vprev, _, _, idx[k] = follow_step(h[name][k], vprev)
            e = w[np.arange(len(t)), idx]
            others = np.where(np.arange(w.shape[-1])[None, :] == idx[:, None], np.inf,
                              np.abs(w - e[:, None]))
            min_gap = min(min_gap, float(others[1:].min()))
            hdot = np.gradient(h[name], t, axis=0)
            n_vec = vecs[np.arange(len(t)), :, idx]
            coupling = np.abs(np.einsum("tim,tij,tj->tm", vecs.conj(), hdot, n_vec))
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(np.isfinite(others) & (others > 0), coupling / others**2, 0.0)
            crit = max(crit, float(ratio[1:].max()))
    else:
        h = _blocks_at(s, np.array([0.0]), v, controls)
        for name in _BLOCKS:
            w = np.linalg.eigvalsh(h[name][0])
            e = float(target[name][0][0])
            gaps = np.abs(w - e)
            gaps = gaps[gaps > 1e-9 * max(np.abs(w).max(), 1.0)]
            if gaps.size:
                min_gap = min(min_gap, float(gaps.min()))
    out["min_gap"] = min_gap
    out["ramp_criterion"] = crit

    if s.duration > 0:
        totals, _, _ = pulse_blocks(s, p, None, controls)
        col = totals["11"][:, 0]
        out["final_rydberg"] = float(np.abs(col[1:3]) @ np.abs(col[1:3]) + 2 * abs(col[3]) ** 2)
    else:
        out["final_rydberg"] = 0.0
    return out


# -- adiabatic (eigenvalue) model for batches of shots ----------------------

@dataclass
class AdiabaticPhases:
    """Dynamical phases and Rydberg integrals of the tracked dressed states.

    Arrays have the batch shape of the inputs.  ``phase[q]`` is ``int E_q dt``
    for qubit state ``q`` in ``("01", "10", "11")``; ``rydberg[q]`` is the time
    integral of the Rydberg population of that dressed state and
    ``rydberg_density[q]`` the population itself on the time grid.
    """

    phase: dict
    rydberg: dict
    rydberg_density: dict

    @property
    def phi_j(self):
        return self.phase["11"] - self.phase["10"] - self.phase["01"]


def pulse_grid(s: RampSchedule, dt: float) -> np.ndarray:
    """Time grid on a schedule that contains all segment boundaries."""
    _, a, b, end = s.boundaries()
    pieces = [np.array([0.0])]
    for lo, hi in ((0.0, a), (a, b), (b, end)):
        if hi > lo:
            n = max(int(np.ceil((hi - lo) / dt)), 1)
            pieces.append(np.linspace(lo, hi, n + 1)[1:])
    return np.concatenate(pieces)


_N_R11 = np.array([0.0, 1.0, 1.0, 2.0])


def _track_eigh(h):
    vec = np.zeros(h.shape[:-3] + (4,), dtype=complex)
    vec[..., 0] = 1.0
    e11 = np.empty(h.shape[:-2])
    nr = np.empty(h.shape[:-2])
    for k in range(h.shape[-3]):
        e, vec, *_ = follow_step(h[..., k, :, :], vec)
        e11[..., k] = e
        nr[..., k] = np.abs(vec) ** 2 @ _N_R11
    return e11, nr


def _track_newton(h, iters=3):
    """Follow the |11> root of ``det(E - H11)`` with Newton steps in time.

    The block couples 11-1R-RR-R1-11 in a ring, so with ``x_i = E - H_ii``

        det = x0 x1 x2 x3 - A x2 x3 - B x1 x3 - C x0 x2 - G x0 x1
              + A G + B C - 2 Re(a c conj(e) conj(b))

    where ``a, b, c, e`` are the couplings 11-1R, 11-R1, 1R-RR, R1-RR and
    ``A = |a|^2`` etc.  The Rydberg population follows from the
    Hellmann-Feynman derivative with respect to a common detuning shift.
    """
    a, b = h[..., 0, 1], h[..., 0, 2]
    c, e = h[..., 1, 3], h[..., 2, 3]
    big_a, big_b, big_c, big_g = (np.abs(z) ** 2 for z in (a, b, c, e))
    ring = 2 * np.real(a * c * np.conj(e) * np.conj(b))
    d0, d1, d2, d3 = (h[..., i, i].real for i in range(4))
    const = big_a * big_g + big_b * big_c - ring

    def partials(en, k):
        x0, x1, x2, x3 = en - d0[..., k], en - d1[..., k], en - d2[..., k], en - d3[..., k]
        ak, bk, ck, gk = big_a[..., k], big_b[..., k], big_c[..., k], big_g[..., k]
        p = (x0 * x1 * x2 * x3 - ak * x2 * x3 - bk * x1 * x3 - ck * x0 * x2 - gk * x0 * x1
             + const[..., k])
        g0 = x1 * x2 * x3 - ck * x2 - gk * x1
        g1 = x0 * x2 * x3 - bk * x3 - gk * x0
        g2 = x0 * x1 * x3 - ak * x3 - ck * x0
        g3 = x0 * x1 * x2 - ak * x2 - bk * x1
        return p, g0 + g1 + g2 + g3, g1 + g2 + 2 * g3

    e_now, _, *_ = follow_step(h[..., 0, :, :], np.eye(4, dtype=complex)[0])
    scale = np.maximum(np.max(np.abs(h), axis=(-3, -2, -1)), 1.0)
    e11 = np.empty(h.shape[:-2])
    nr = np.empty(h.shape[:-2])
    for k in range(h.shape[-3]):
        for _ in range(iters):
            p, dp, _ = partials(e_now, k)
            e_now = e_now - p / dp
        p, dp, dpw = partials(e_now, k)
        if np.any(np.abs(p / dp) > 1e-9 * scale):
            raise ConvergenceError("root continuation of the |11> energy failed")
        e11[..., k] = e_now
        nr[..., k] = dpw / dp
    return e11, nr


def adiabatic_phases(omega1, omega2, delta1, delta2, v, t, tracker="newton") -> AdiabaticPhases:
    """Phases of the adiabatically followed states on a sampled pulse.

    ``omega*`` and ``delta*`` have shape ``batch + (n_t,)`` (broadcastable)
    and ``v`` has the batch shape or is a scalar.  The single-atom energies
    use the closed-form branch selected by the sign of each atom's initial
    detuning; the |11> state is followed from the bare state by eigenvector
    continuation along the time grid.  Integrals use the trapezoid rule.

    ``tracker="newton"`` follows the |11> energy as a root of the
    characteristic polynomial (Newton steps from the previous root) and gets
    its Rydberg population from the detuning derivative of that root; this
    avoids one LAPACK call per matrix; if a Newton continuation fails the
    batch is redone with ``tracker="eigh"``, the full eigenvector
    continuation kept as the reference.
    """
    omega1, omega2, delta1, delta2 = np.broadcast_arrays(
        np.asarray(omega1, dtype=complex), np.asarray(omega2, dtype=complex),
        np.asarray(delta1, dtype=float), np.asarray(delta2, dtype=float))
    v = np.asarray(v, dtype=float)[..., None]
    phase, ryd, dens = {}, {}, {}
    for name, om, de in (("10", omega1, delta1), ("01", omega2, delta2)):
        b = np.where(de[..., :1] >= 0, 1.0, -1.0)
        root = np.sqrt(np.abs(om) ** 2 + de**2)
        e = -de / 2 + b * root / 2
        with np.errstate(invalid="ignore", divide="ignore"):
            n_r = np.where(root > 0, 0.5 * (1 - b * de / np.where(root > 0, root, 1.0)), 0.0)
        phase[name] = np.trapezoid(e, t, axis=-1)
        ryd[name] = np.trapezoid(n_r, t, axis=-1)
        dens[name] = n_r

    h = sector_blocks(omega1, omega2, delta1, delta2, v)["11"]
    if tracker == "eigh":
        e11, nr = _track_eigh(h)
    elif tracker == "newton":
        try:
            e11, nr = _track_newton(h)
        except ConvergenceError:
            # abrupt steps (e.g. strong white laser noise): use the reference tracker
            e11, nr = _track_eigh(h)
    else:
        raise ValueError(f"unknown tracker {tracker!r}")
    phase["11"] = np.trapezoid(e11, t, axis=-1)
    ryd["11"] = np.trapezoid(nr, t, axis=-1)
    dens["11"] = nr
    return AdiabaticPhases(phase, ryd, dens)


# -- output -----------------------------------------------------------------

def write_trajectory_csv(path, result: PropagationResult, s: RampSchedule,
                         p: InteractionParams, controls: PulseControls = NOMINAL,
                         max_rows=2000) -> None:
    """Trajectory as CSV: ``t_us``, the nine basis populations and ``J_MHz``."""
    if result.trajectory is None:
        raise ValueError("propagate with record=True to keep a trajectory")
    times, states = result.trajectory
    stride = max(1, int(np.ceil(len(times) / max_rows)))
    sel = np.unique(np.r_[np.arange(0, len(times), stride), len(times) - 1])
    j = _j_of_t(s, p, times[sel], controls, _branch_of(s))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_us"] + [f"P_{label(i)}" for i in range(DIM)] + ["J_MHz"])
        for k, i in enumerate(sel):
            pops = np.abs(states[i]) ** 2
            w.writerow([f"{times[i] / US:.10g}"] + [f"{x:.10g}" for x in pops]
                       + [f"{j[k] / MHZ:.10g}"])
