"""Readout modelling, parity fringes, Bell-state fidelity and c6 fitting.

Outcome order everywhere is ``(BB, BD, DB, DD)`` with atom 1 first; an atom
in |1> is bright and an atom in |0> is dark.
"""

from __future__ import annotations

import csv
import functools
import json
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .core import from_qubit, to_qubit
from .errors import ConfusionError, ConvergenceError, DomainError
from .hamiltonian import DriveParams, InteractionParams
from .noise import NoiseConfig, shot_output_states
from .sequence import GateSequence, analysis_rotation, run_sequence
from .spectrum import branch_energies, entangling_energy

CLAMP_LIMIT = 1e-3

# qubit-basis populations (00, 01, 10, 11) -> outcomes (BB, BD, DB, DD)
_OUTCOME_FROM_QUBIT = np.array([3, 2, 1, 0])


@dataclass(frozen=True)
class MeasurementModel:
    """Per-atom detection and optical-pumping probabilities.

    ``p_b`` is the probability to see a bright atom as bright, ``p_d`` the
    probability to see a dark atom as bright, ``p_pump`` the probability that
    optical pumping left the atom in the intended sublevel.  ``n_shots`` is
    the number of repetitions per setting (``None`` for exact probabilities).
    """

    p_b1: float = 1.0
    p_b2: float = 1.0
    p_d1: float = 0.0
    p_d2: float = 0.0
    p_pump1: float = 1.0
    p_pump2: float = 1.0
    n_shots: Optional[int] = None

    def __post_init__(self):
        for name in ("p_b1", "p_b2", "p_d1", "p_d2", "p_pump1", "p_pump2"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} = {val} is not a probability")
        if self.n_shots is not None and self.n_shots < 1:
            raise ValueError("n_shots must be positive")

    @classmethod
    def experiment(cls, n_shots: Optional[int] = None) -> "MeasurementModel":
        """Detection values of the reference experiment, 96.3 % pumping per atom."""
        return cls(0.939, 0.908, 0.0162, 0.0456, 0.963, 0.963, n_shots)

    def confusion(self) -> np.ndarray:
        """4x4 matrix mapping true to observed ``(BB, BD, DB, DD)`` probabilities."""
        c1 = np.array([[self.p_b1, self.p_d1], [1 - self.p_b1, 1 - self.p_d1]])
        c2 = np.array([[self.p_b2, self.p_d2], [1 - self.p_b2, 1 - self.p_d2]])
        return np.kron(c1, c2)

    @property
    def contrast(self) -> float:
        """Parity fringe shrink factor ``(P_B1 - P_D1)(P_B2 - P_D2)``."""
        return (self.p_b1 - self.p_d1) * (self.p_b2 - self.p_d2)

    @property
    def eps_op(self) -> float:
        return 0.5 * (1 - self.p_pump1 * self.p_pump2)


def apply_confusion(probs, m: MeasurementModel, direction: str = "forward", *,
                    clamp: bool = True) -> np.ndarray:
    """Apply or undo detection errors on outcome probabilities (last axis of 4).

    ``invert`` solves with the confusion matrix.  Components in
    ``[-1e-3, 0)`` are set to zero and the vector renormalized; anything more
    negative means the data are inconsistent with the model and raises
    :class:`ConfusionError`.  ``clamp=False`` returns the raw solution, which
    suits finite-shot data where sampling noise can push entries negative.
    """
    probs = np.asarray(probs, dtype=float)
    if probs.shape[-1] != 4:
        raise ValueError("expected 4 outcome probabilities")
    c = m.confusion()
    if direction == "forward":
        return probs @ c.T
    if direction != "invert":
        raise ValueError("direction must be 'forward' or 'invert'")
    if min(abs(m.p_b1 - m.p_d1), abs(m.p_b2 - m.p_d2)) < 1e-12:
        raise ConfusionError("confusion matrix is singular (P_B = P_D)")
    out = np.linalg.solve(c, probs[..., None])[..., 0] if probs.ndim > 1 else np.linalg.solve(c, probs)
    if not clamp:
        return out
    if np.any(out < -CLAMP_LIMIT):
        raise ConfusionError(f"corrected probability {out.min():.3e} is below -{CLAMP_LIMIT}")
    out = np.where(out < 0, 0.0, out)
    return out / out.sum(axis=-1, keepdims=True)


def parity(probs) -> np.ndarray:
    """``P_BB + P_DD - P_BD - P_DB``."""
    probs = np.asarray(probs, dtype=float)
    return probs[..., 0] + probs[..., 3] - probs[..., 1] - probs[..., 2]


def outcome_probabilities(psi4: np.ndarray) -> np.ndarray:
    """``(BB, BD, DB, DD)`` probabilities of qubit state(s) ``psi4``."""
    pops = np.abs(np.asarray(psi4)) ** 2
    return pops[..., _OUTCOME_FROM_QUBIT]


# -- datasets ---------------------------------------------------------------

@dataclass
class ParityDataset:
    phis: np.ndarray
    probs: np.ndarray
    corrected: bool = False

    def __post_init__(self):
        self.phis = np.asarray(self.phis, dtype=float)
        self.probs = np.asarray(self.probs, dtype=float).reshape(-1, 4)
        if self.phis.shape != (self.probs.shape[0],):
            raise ValueError("one probability row per phase is required")

    @property
    def parity(self) -> np.ndarray:
        return parity(self.probs)

    def corrected_by(self, m: MeasurementModel, clamp: bool = True) -> "ParityDataset":
        if self.corrected:
            return self
        return ParityDataset(self.phis, apply_confusion(self.probs, m, "invert", clamp=clamp), True)


CSV_HEADER = ("phi_rad", "P_BB", "P_BD", "P_DB", "P_DD", "corrected")


def write_parity_csv(path, datasets: Sequence[ParityDataset]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for ds in datasets:
            for phi, row in zip(ds.phis, ds.probs):
                w.writerow([f"{phi:.12g}"] + [f"{x:.12g}" for x in row] + [int(ds.corrected)])


def read_parity_csv(path) -> list[ParityDataset]:
    """Inverse of :func:`write_parity_csv`; one dataset per ``corrected`` flag."""
    rows = {0: [], 1: []}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(CSV_HEADER):
                raise ValueError(f"{path}:{lineno}: expected {len(CSV_HEADER)} fields")
            try:
                vals = [float(x) for x in rec[:5]]
                flag = int(rec[5])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            rows[flag].append(vals)
    out = []
    for flag in (0, 1):
        if rows[flag]:
            arr = np.array(rows[flag])
            out.append(ParityDataset(arr[:, 0], arr[:, 1:], bool(flag)))
    return out


# -- simulation -------------------------------------------------------------

def gate_output(seq: GateSequence, p: InteractionParams, d: Optional[DriveParams] = None,
                psi0=None) -> np.ndarray:
    """Noiseless qubit output state of ``seq`` for input ``psi0`` (default |11>)."""
    if psi0 is None:
        psi0 = np.array([0, 0, 0, 1], dtype=complex)
    u = run_sequence(seq, p, d).unitary
    return to_qubit(u @ from_qubit(psi0))


def _true_probabilities(states, weights_decayed, phis):
    """Shot-averaged outcome probabilities after an analysis pulse at each phase."""
    out = []
    for phi in phis:
        rot = analysis_rotation(phi)
        probs = outcome_probabilities(states @ rot.T)
        out.append(probs.mean(axis=0))
    probs = np.array(out)
    return (1 - weights_decayed) * probs + weights_decayed * 0.25


def parity_scan(seq_base: GateSequence, phis, m: MeasurementModel, p: InteractionParams,
                noise: Optional[NoiseConfig] = None, *, n_mc: int = 200,
                seed: Optional[int] = None, psi0=None) -> ParityDataset:
    """Parity fringe with analysis pulses ``R(pi/2, phi)`` after ``seq_base``.

    Without ``noise`` the gate output is propagated once with the full
    integrator.  With ``noise`` it is averaged over ``n_mc`` Monte Carlo
    shots (decayed shots contribute a uniform outcome distribution).  The
    readout model is applied forward; ``m.n_shots`` adds multinomial counting
    noise drawn from ``seed`` (default: the noise seed or 0).
    """
    phis = np.asarray(phis, dtype=float)
    if phis.size == 0:
        raise ValueError("no analysis phases given")
    if noise is None:
        states = gate_output(seq_base, p, psi0=psi0)[None, :]
        frac = 0.0
    else:
        states, decayed = shot_output_states(n_mc, noise, seq_base, p, psi0=psi0)
        frac = float(decayed.mean())
        states = states[~decayed] if np.any(~decayed) else states[:0]
        if states.shape[0] == 0:
            states = np.full((1, 4), 0.5, dtype=complex)
            frac = 1.0
    probs = apply_confusion(_true_probabilities(states, frac, phis), m, "forward")
    if m.n_shots is not None:
        rng = np.random.default_rng(seed if seed is not None else (noise.seed if noise else 0))
        counts = np.array([rng.multinomial(m.n_shots, row / row.sum()) for row in probs])
        probs = counts / m.n_shots
    return ParityDataset(phis, probs, corrected=False)


def population_measurement(seq_base: GateSequence, m: MeasurementModel, p: InteractionParams,
                           noise: Optional[NoiseConfig] = None, *, n_mc: int = 200,
                           seed: Optional[int] = None, psi0=None) -> np.ndarray:
    """Observed ``(BB, BD, DB, DD)`` without an analysis pulse."""
    if noise is None:
        states = gate_output(seq_base, p, psi0=psi0)[None, :]
        frac = 0.0
    else:
        states, decayed = shot_output_states(n_mc, noise, seq_base, p, psi0=psi0)
        frac = float(decayed.mean())
        states = states[~decayed] if np.any(~decayed) else np.full((1, 4), 0.5, dtype=complex)
    probs = (1 - frac) * outcome_probabilities(states).mean(axis=0) + frac * 0.25
    probs = apply_confusion(probs, m, "forward")
    if m.n_shots is not None:
        rng = np.random.default_rng(seed if seed is not None else 0)
        probs = rng.multinomial(m.n_shots, probs / probs.sum()) / m.n_shots
    return probs


# -- fitting ----------------------------------------------------------------

@dataclass(frozen=True)
class ParityFit:
    """``parity(phi) = amplitude cos(2 phi + phase) + offset`` with standard errors."""

    amplitude: float
    phase: float
    offset: float
    amplitude_se: float
    phase_se: float
    offset_se: float

    def to_dict(self) -> dict:
        return asdict(self)


def fit_parity(dataset: ParityDataset) -> ParityFit:
    """Linear least-squares fit of ``a cos 2phi + b sin 2phi + C``.

    Standard errors come from the residual variance and the design
    covariance (zero for exact data); the amplitude and phase errors are
    propagated to first order.
    """
    phis = dataset.phis
    distinct = np.unique(np.round(np.mod(phis, np.pi), 12))
    if distinct.size < 4:
        raise ValueError("need at least 4 distinct analysis phases (mod pi)")
    y = dataset.parity
    x = np.column_stack([np.cos(2 * phis), np.sin(2 * phis), np.ones_like(phis)])
    if np.linalg.matrix_rank(x) < 3:
        raise DomainError("analysis phases give a rank-deficient fit")
    coef, *_ = np.linalg.lstsq(x, y, rcond=None)
    a, b, c = coef
    resid = y - x @ coef
    dof = len(y) - 3
    s2 = float(resid @ resid / dof) if dof > 0 else 0.0
    cov = s2 * np.linalg.inv(x.T @ x)
    amp = float(np.hypot(a, b))
    phase = float(np.arctan2(-b, a))
    if amp > 0:
        ga = np.array([a, b]) / amp
        gp = np.array([b, -a]) / amp**2
        amp_se = float(np.sqrt(max(ga @ cov[:2, :2] @ ga, 0.0)))
        ph_se = float(np.sqrt(max(gp @ cov[:2, :2] @ gp, 0.0)))
    else:
        amp_se = float(np.sqrt(max(np.trace(cov[:2, :2]) / 2, 0.0)))
        ph_se = np.inf
    return ParityFit(amp, phase, float(c), amp_se, ph_se, float(np.sqrt(max(cov[2, 2], 0.0))))


def bell_fidelity(p_dd: float, p_bb: float, coherence_2rho: float, m: MeasurementModel) -> dict:
    """Bell-state fidelity with the optical-pumping correction.

    ``F = (P_DD + P_BB)/2 + coherence_2rho/2 - eps_op`` where
    ``2 eps_op = 1 - p_pump1 p_pump2`` and ``coherence_2rho = |2 rho_11,00|``
    is the fitted parity amplitude.  ``F_SPAM = F / (p_pump1 p_pump2)``.
    """
    pump = m.p_pump1 * m.p_pump2
    if pump == 0:
        raise DomainError("optical pumping probability is zero")
    f = 0.5 * (p_dd + p_bb) + 0.5 * coherence_2rho - m.eps_op
    return {"F": float(f), "F_SPAM": float(f / pump), "eps_op": float(m.eps_op)}


def analyze_bell(seq: GateSequence, phis, m: MeasurementModel, p: InteractionParams,
                 noise: Optional[NoiseConfig] = None, *, n_mc: int = 200,
                 seed: Optional[int] = None, clamp: bool = True) -> dict:
    """Full estimator chain: populations and parity scan, correction, fit, fidelity."""
    raw = parity_scan(seq, phis, m, p, noise, n_mc=n_mc, seed=seed)
    corr = raw.corrected_by(m, clamp=clamp)
    pops_raw = population_measurement(seq, m, p, noise, n_mc=n_mc,
                                      seed=None if seed is None else seed + 1)
    pops = apply_confusion(pops_raw, m, "invert", clamp=clamp)
    fit_raw = fit_parity(raw)
    fit = fit_parity(corr)
    fid = bell_fidelity(pops[3], pops[0], fit.amplitude, m)
    return {"raw": raw, "corrected": corr, "populations_raw": pops_raw, "populations": pops,
            "fit_raw": fit_raw, "fit": fit, **fid}


# -- c6 ---------------------------------------------------------------------

@dataclass(frozen=True)
class C6Fit:
    c6: float
    c6_se: float
    iterations: int
    rss: float
    n_points: int

    def to_dict(self) -> dict:
        return asdict(self)


# J depends on c6 and r only through V = c6 / r^6; it is tabulated once per
# drive on log10(V / |Omega_bar|) and splined (relative error below 1e-7)
V_TABLE_RANGE = (-6.0, 10.0)
V_TABLE_PER_DECADE = 64


@functools.lru_cache(maxsize=16)
def _j_table(omega1: complex, omega2: complex, delta1: float, delta2: float) -> CubicSpline:
    om = abs((omega1 + omega2) / 2)
    lo, hi = V_TABLE_RANGE
    x = np.linspace(lo, hi, int((hi - lo) * V_TABLE_PER_DECADE) + 1)
    out = branch_energies(omega1, omega2, delta1, delta2, om * 10.0**x, "+")
    return CubicSpline(x, out["11"][0] - out["10"][0] - out["01"][0])


def _j_model(c6, r, d: DriveParams, axis):
    """``J_+`` at every separation for each ``c6`` (shape ``(len(c6), len(r))``)."""
    c6 = np.atleast_1d(np.asarray(c6, dtype=float))
    p = InteractionParams(c6[:, None] * np.ones_like(r)[None, :], r[None, :], axis)
    om = abs(complex(d.omega_bar))
    if om == 0:
        return entangling_energy(d, p, "+")
    with np.errstate(divide="ignore"):
        x = np.log10(p.strength / om)
    inside = (x >= V_TABLE_RANGE[0]) & (x <= V_TABLE_RANGE[1])
    out = np.empty(x.shape)
    out[inside] = _j_table(complex(d.omega1), complex(d.omega2),
                           float(d.delta1), float(d.delta2))(x[inside])
    if not np.all(inside):
        out[~inside] = entangling_energy(d, InteractionParams(
            np.broadcast_to(c6[:, None], x.shape)[~inside],
            np.broadcast_to(r[None, :], x.shape)[~inside], axis), "+")
    return out


def fit_c6(r, j, d: DriveParams, sigma=None, *, axis="parallel", c6_bounds=None,
           max_iter: int = 100, rel_tol: float = 1e-8) -> C6Fit:
    """Least-squares estimate of ``c6`` from measured ``J_+(r)``.

    A coarse log-spaced scan seeds Gauss-Newton iterations that use a
    forward-difference derivative (relative step 1e-6) and step halving.
    Iteration stops when the relative step falls below ``rel_tol``.  With
    ``sigma`` the fit is weighted and the standard error uses the given
    uncertainties; otherwise it is scaled by the residual variance.

    The model ``J_+(V)`` is tabulated once per drive (a few seconds) and
    cached, so repeated fits with the same drive are fast.

    Parameters are in SI units (m, rad/s, rad/s m^6).
    """
    r = np.asarray(r, dtype=float).ravel()
    j = np.asarray(j, dtype=float).ravel()
    if r.shape != j.shape:
        raise ValueError("r and J must have equal length")
    if r.size < 3 or np.unique(r).size < 2:
        raise ValueError("need at least 3 points at 2 or more separations")
    if sigma is None:
        w = np.ones_like(j)
    else:
        sigma = np.asarray(sigma, dtype=float).ravel()
        if sigma.shape != j.shape or np.any(sigma <= 0):
            raise ValueError("sigma must be positive and match J")
        w = 1.0 / sigma**2
    if np.ptp(j) == 0:
        raise ValueError("J does not vary over the data")

    def rss(c6):
        res = j[None, :] - _j_model(c6, r, d, axis)
        return np.sum(w * res**2, axis=-1)

    om = abs(complex(d.omega_bar))
    lo, hi = c6_bounds if c6_bounds else (om * 1e-2 * r.min() ** 6, om * 1e4 * r.max() ** 6)
    grid = np.geomspace(lo, hi, 25)
    c6 = float(grid[np.argmin(rss(grid))])
    cur = float(rss(c6)[0])
    for it in range(1, max_iter + 1):
        h = 1e-6 * c6
        both = _j_model(np.array([c6, c6 + h]), r, d, axis)
        f0, jac = both[0], (both[1] - both[0]) / h
        jtj = float(np.sum(w * jac**2))
        if jtj == 0:
            raise ConvergenceError(f"J is insensitive to c6 at {c6:.4g}")
        step = float(np.sum(w * jac * (j - f0)) / jtj)
        lam = 1.0
        while True:
            trial = c6 + lam * step
            if trial > 0:
                new = float(rss(trial)[0])
                if new <= cur or lam < 1e-6:
                    break
            lam /= 2
            if lam < 1e-12:
                raise ConvergenceError(f"no decrease from c6={c6:.6g} (rss={cur:.4g})")
        rel = abs(trial - c6) / c6
        c6, cur = trial, new
        if rel < rel_tol:
            break
    else:
        raise ConvergenceError(f"c6 fit did not converge in {max_iter} iterations "
                               f"(c6={c6:.6g}, last step {rel:.2e})")
    h = 1e-6 * c6
    both = _j_model(np.array([c6, c6 + h]), r, d, axis)
    jac = (both[1] - both[0]) / h
    jtj = float(np.sum(w * jac**2))
    dof = r.size - 1
    scale = 1.0 if sigma is not None else cur / dof
    return C6Fit(float(c6), float(np.sqrt(scale / jtj)), it, cur, int(r.size))


def fit_json(obj) -> str:
    data = obj.to_dict() if hasattr(obj, "to_dict") else obj
    return json.dumps(data, indent=2, sort_keys=True)
