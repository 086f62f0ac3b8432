"""Noise models and Monte Carlo gate fidelity.

Channels
--------
doppler
    Static detuning ``k v_j`` per atom with ``v_j`` drawn from the 1-D
    Maxwell-Boltzmann distribution at temperature ``T``.
position
    Each atom is displaced along the pair axis by a Gaussian with the
    thermal width ``sqrt(k_B T / (m w^2))`` of the radial trap; the
    separation changes by the difference.
laser
    Common detuning shift of both atoms drawn from a white, Ornstein-Uhlenbeck
    or tabulated one-sided power spectral density.
decay
    First-jump sampling: a shot decays when the integrated hazard
    ``sum <n_R> / tau`` exceeds an Exp(1) budget drawn for that shot.
    Decayed shots score ``decayed_score`` (0.25, a fully depolarized pair).

Every shot draws its randomness from its own stream
``SeedSequence(seed, spawn_key=(shot,))``, so results do not depend on how
shots are batched or ordered.

Two evaluation methods are offered.  ``"adiabatic"`` (default) replaces each
dressing pulse by the dynamical phases of the adiabatically followed dressed
states, which is fast enough for 10^4 shots.  ``"schrodinger"`` propagates
every shot with the full integrator and serves as a cross-check.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.signal import lfilter

from .core import from_qubit, qubit_rotation, raman_rotation, rydberg_number, to_qubit
from .dynamics import PulseControls, adiabatic_phases, pulse_blocks, pulse_grid
from .hamiltonian import DriveParams, InteractionParams, assemble_blocks, schedule_eval
from .sequence import DressingPulse, GateSequence, RamanRotation, Wait
from .units import CS133_MASS, K_B, KHZ, NM, NS, TWO_PI, UK, UM, US

# -- configuration ----------------------------------------------------------


@dataclass(frozen=True)
class WhiteNoise:
    """Flat one-sided PSD ``level`` in (rad/s)^2 / Hz."""

    level: float

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("PSD level must be non-negative")


@dataclass(frozen=True)
class OUNoise:
    """Ornstein-Uhlenbeck detuning with stationary ``variance`` (rad/s)^2."""

    variance: float
    correlation_time: float

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError("variance must be non-negative")
        if self.correlation_time <= 0:
            raise ValueError("correlation time must be positive")


@dataclass(frozen=True)
class TablePSD:
    """Piecewise-linear one-sided PSD: ``frequencies`` (Hz), ``psd`` ((rad/s)^2/Hz)."""

    frequencies: tuple
    psd: tuple

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        s = np.asarray(self.psd, dtype=float)
        if f.shape != s.shape or f.ndim != 1 or f.size < 2:
            raise ValueError("PSD table needs matching 1-D arrays of length >= 2")
        if np.any(np.diff(f) <= 0):
            raise ValueError("PSD frequencies must increase")
        if np.any(s < 0):
            raise ValueError("PSD values must be non-negative")


LaserModel = Union[WhiteNoise, OUNoise, TablePSD]


@dataclass(frozen=True)
class NoiseConfig:
    laser_model: Optional[LaserModel] = None
    temperature: float = 10 * UK
    wavevector: float = TWO_PI / (319 * NM)
    trap_radial: float = TWO_PI * 34e3
    rydberg_lifetime: float = 170 * US
    seed: int = 0
    doppler: bool = True
    position: bool = True
    laser: bool = True
    decay: bool = True
    decayed_score: float = 0.25
    noise_dt: float = 10 * NS

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.rydberg_lifetime <= 0:
            raise ValueError("Rydberg lifetime must be positive")
        if self.trap_radial <= 0 or self.noise_dt <= 0:
            raise ValueError("trap frequency and noise step must be positive")
        if not 0 <= self.decayed_score <= 1:
            raise ValueError("decayed_score must lie in [0, 1]")

    @classmethod
    def quiet(cls, **kw) -> "NoiseConfig":
        """All channels switched off."""
        base = dict(doppler=False, position=False, laser=False, decay=False)
        base.update(kw)
        return cls(**base)

    def only(self, *channels: str) -> "NoiseConfig":
        """Copy with just the named channels enabled."""
        names = ("doppler", "position", "laser", "decay")
        bad = set(channels) - set(names)
        if bad:
            raise ValueError(f"unknown channels {sorted(bad)}")
        return replace(self, **{n: n in channels for n in names})

    def to_dict(self) -> dict:
        out = asdict(self)
        if self.laser_model is not None:
            out["laser_model"] = {"kind": type(self.laser_model).__name__, **asdict(self.laser_model)}
        return out


def doppler_sigma(temperature: float, wavevector: float, mass: float = CS133_MASS) -> float:
    """RMS Doppler detuning ``k sqrt(k_B T / m)`` in rad/s."""
    return wavevector * np.sqrt(K_B * temperature / mass)


def position_sigma(temperature: float, trap_frequency: float, mass: float = CS133_MASS) -> float:
    """Thermal width of one atom, ``sqrt(k_B T / (m w^2))`` in metres."""
    return np.sqrt(K_B * temperature / (mass * trap_frequency**2))


# -- laser trajectories -----------------------------------------------------

def laser_trajectory(model: Optional[LaserModel], n: int, dt: float,
                     rng: np.random.Generator) -> np.ndarray:
    """``n`` samples of a common detuning at spacing ``dt``."""
    if model is None or n == 0:
        return np.zeros(n)
    if isinstance(model, OUNoise):
        a = np.exp(-dt / model.correlation_time)
        kicks = rng.standard_normal(n)
        kicks[0] *= np.sqrt(model.variance)
        kicks[1:] *= np.sqrt(model.variance * (1 - a * a))
        return lfilter([1.0], [1.0, -a], kicks)
    if isinstance(model, WhiteNoise):
        # band limited to the Nyquist frequency 1 / (2 dt)
        return rng.standard_normal(n) * np.sqrt(model.level / (2 * dt))
    if isinstance(model, TablePSD):
        m = max(n, 2)
        freqs = np.fft.rfftfreq(m, dt)
        s1 = np.interp(freqs, model.frequencies, model.psd, left=0.0, right=0.0)
        df = 1.0 / (m * dt)
        coeff = np.sqrt(s1 * df / 4) * (rng.standard_normal(freqs.size)
                                          + 1j * rng.standard_normal(freqs.size))
        coeff[0] = 0.0
        if m % 2 == 0:
            coeff[-1] = 0.0
        return np.fft.irfft(coeff * m, n=m)[:n]
    raise TypeError(f"unknown laser noise model {model!r}")


def psd_variance(model: Optional[LaserModel], dt: float) -> float:
    """Expected per-sample variance of :func:`laser_trajectory`."""
    if model is None:
        return 0.0
    if isinstance(model, OUNoise):
        return model.variance
    if isinstance(model, WhiteNoise):
        return model.level / (2 * dt)
    f = np.asarray(model.frequencies, dtype=float)
    s = np.asarray(model.psd, dtype=float)
    f_max = min(f[-1], 1 / (2 * dt))
    grid = np.linspace(f[0], f_max, 4001)
    return float(np.trapezoid(np.interp(grid, f, s), grid))


# -- shots ------------------------------------------------------------------

@dataclass
class ShotSample:
    """Random draws for one shot.

    ``doppler`` holds the two static detunings (rad/s), ``r`` the separation
    (m), ``laser_times``/``laser_delta`` the common detuning trajectory and
    ``decay_budget`` the Exp(1) threshold for the first quantum jump.  After
    evaluation ``decayed`` and ``decay_time`` are filled in.
    """

    index: int
    doppler: np.ndarray
    r: float
    laser_times: np.ndarray
    laser_delta: np.ndarray
    decay_budget: float
    decayed: bool = False
    decay_time: Optional[float] = None

    def laser_noise(self):
        """Callable common detuning ``delta(t)`` for the integrator."""
        if not np.any(self.laser_delta):
            return None
        t, y = self.laser_times, self.laser_delta
        return lambda tq: np.interp(tq, t, y)


def shot_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def sample_shot(cfg: NoiseConfig, seq_duration: float, rng: np.random.Generator,
                r_nominal: float, index: int = 0) -> ShotSample:
    """Draw one shot.  The draw order is fixed so each stream is reproducible."""
    n_t = int(np.ceil(seq_duration / cfg.noise_dt)) + 1
    times = np.linspace(0.0, (n_t - 1) * cfg.noise_dt, n_t)
    vel = rng.standard_normal(2)
    pos = rng.standard_normal(2)
    budget = rng.exponential()
    laser = laser_trajectory(cfg.laser_model, n_t, cfg.noise_dt, rng)

    doppler = np.zeros(2)
    if cfg.doppler:
        doppler = vel * doppler_sigma(cfg.temperature, cfg.wavevector)
    r = float(r_nominal)
    if cfg.position:
        sx = position_sigma(cfg.temperature, cfg.trap_radial)
        r = float(r_nominal + sx * (pos[1] - pos[0]))
    if not cfg.laser:
        laser = np.zeros(n_t)
    if not cfg.decay:
        budget = np.inf
    return ShotSample(index, doppler, r, times, laser, float(budget))


def sample_shots(cfg: NoiseConfig, n_shots: int, seq_duration: float, r_nominal: float,
                 start: int = 0) -> list[ShotSample]:
    return [sample_shot(cfg, seq_duration, shot_rng(cfg.seed, i), r_nominal, i)
            for i in range(start, start + n_shots)]


# -- Monte Carlo ------------------------------------------------------------

@dataclass
class MCResult:
    mean: float
    stderr: float
    decay_fraction: float
    fidelities: np.ndarray
    decayed: np.ndarray
    method: str
    samples: list = field(default_factory=list, repr=False)

    @property
    def infidelity(self) -> float:
        return 1.0 - self.mean

    def to_dict(self, cfg: Optional[NoiseConfig] = None) -> dict:
        out = {"n_shots": int(self.fidelities.size), "mean_fidelity": self.mean,
               "std_error": self.stderr, "decay_fraction": self.decay_fraction,
               "method": self.method}
        if cfg is not None:
            out["config"] = cfg.to_dict()
        return out


def _interp_rows(tq: np.ndarray, t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Linear interpolation of every row of ``y`` (shared grid ``t``) at ``tq``."""
    idx = np.clip(np.searchsorted(t, tq) - 1, 0, len(t) - 2)
    w = (tq - t[idx]) / (t[idx + 1] - t[idx])
    w = np.clip(w, 0.0, 1.0)
    return y[:, idx] * (1 - w) + y[:, idx + 1] * w


def _ryd_index(q: str) -> int:
    return {"01": 1, "10": 2, "11": 3}[q]


def _run_adiabatic(seq: GateSequence, p: InteractionParams, shots: list[ShotSample],
                   psi0: np.ndarray, tau: float, grid_dt: float):
    """States after the sequence, decay flags and decay times for a batch of shots."""
    n = len(shots)
    dop = np.array([s.doppler for s in shots]).reshape(n, 2)
    r = np.array([s.r for s in shots])
    v = p.with_r(r).strength
    lt = shots[0].laser_times
    ly = np.array([s.laser_delta for s in shots]).reshape(n, -1)
    budget = np.array([s.decay_budget for s in shots])

    psi = np.broadcast_to(psi0, (n, 4)).astype(complex)
    hazard = np.zeros(n)
    decay_time = np.full(n, np.nan)
    for t0, seg in zip(seq.start_times, seq.segments):
        if isinstance(seg, RamanRotation):
            psi = psi @ qubit_rotation(seg.theta, seg.phi).T
            continue
        if isinstance(seg, Wait) or seg.duration == 0:
            continue
        t = pulse_grid(seg.schedule, grid_dt)
        om, de = schedule_eval(seg.schedule, t)
        common = _interp_rows(t0 + t, lt, ly) if ly.shape[1] > 1 else np.zeros((n, t.size))
        d1 = de[None, :] + dop[:, :1] + common
        d2 = de[None, :] + dop[:, 1:] + common
        ph = adiabatic_phases(om[None, :], om[None, :], d1, d2, v, t)
        phases = np.stack([np.zeros(n), ph.phase["01"], ph.phase["10"], ph.phase["11"]], axis=1)
        if np.isfinite(tau):
            pops = np.abs(psi) ** 2
            rate = (pops[:, 1:2] * ph.rydberg_density["01"] + pops[:, 2:3] * ph.rydberg_density["10"]
                    + pops[:, 3:4] * ph.rydberg_density["11"]) / tau
            cum = hazard[:, None] + cumulative_trapezoid(rate, t, axis=1, initial=0.0)
            newly = np.isnan(decay_time) & (cum[:, -1] > budget)
            if np.any(newly):
                k = np.argmax(cum[newly] > budget[newly, None], axis=1)
                decay_time[newly] = t0 + t[k]
            hazard = cum[:, -1]
        psi = psi * np.exp(-1j * phases)
    decayed = ~np.isnan(decay_time)
    return psi, decayed, decay_time


def _run_schrodinger(seq: GateSequence, p: InteractionParams, shot: ShotSample,
                     psi0: np.ndarray, tau: float, dt_max=None):
    psi = from_qubit(psi0)
    n_r = rydberg_number()
    controls = PulseControls(tuple(shot.doppler), (1.0, 1.0), shot.laser_noise())
    pr = p.with_r(shot.r)
    hazard = 0.0
    decay_time = np.nan
    for t0, seg in zip(seq.start_times, seq.segments):
        if isinstance(seg, RamanRotation):
            psi = raman_rotation(seg.theta, seg.phi) @ psi
            continue
        if isinstance(seg, Wait) or seg.duration == 0:
            continue
        c = replace(controls, t0=float(t0))
        if np.isfinite(tau):
            totals, times, running = pulse_blocks(seg.schedule, pr, dt_max, c, record=True)
            states = assemble_blocks(running, zero_block=1.0) @ psi
            rate = (np.abs(states) ** 2 @ n_r) / tau
            cum = hazard + cumulative_trapezoid(rate, times, initial=0.0)
            if np.isnan(decay_time) and cum[-1] > shot.decay_budget:
                decay_time = t0 + times[np.argmax(cum > shot.decay_budget)]
            hazard = cum[-1]
            psi = states[-1]
        else:
            totals, _, _ = pulse_blocks(seg.schedule, pr, dt_max, c)
            psi = assemble_blocks(totals, zero_block=1.0) @ psi
    return to_qubit(psi), not np.isnan(decay_time), decay_time


def _evaluate(seq, p, shots, psi0, tau, method, grid_dt):
    if method == "adiabatic":
        return _run_adiabatic(seq, p, shots, psi0, tau, grid_dt)
    if method == "schrodinger":
        out = [_run_schrodinger(seq, p, s, psi0, tau) for s in shots]
        return (np.array([o[0] for o in out]), np.array([o[1] for o in out]),
                np.array([o[2] for o in out], dtype=float))
    raise ValueError(f"unknown method {method!r}")


def noiseless_output(seq: GateSequence, p: InteractionParams, psi0=None,
                     method="adiabatic", grid_dt=10 * NS) -> np.ndarray:
    """Output qubit state of the sequence without noise (same method as the MC)."""
    psi0 = _default_psi0(psi0)
    shot = ShotSample(0, np.zeros(2), float(p.r), np.array([0.0, 1.0]), np.zeros(2), np.inf)
    psi, _, _ = _evaluate(seq, p, [shot], psi0, np.inf, method, grid_dt)
    return psi[0]


def _default_psi0(psi0):
    if psi0 is None:
        return np.array([0, 0, 0, 1], dtype=complex)
    return np.asarray(psi0, dtype=complex)


def shot_output_states(n_shots: int, cfg: NoiseConfig, seq: GateSequence, p: InteractionParams,
                       *, method="adiabatic", psi0=None, chunk=2000, grid_dt=10 * NS):
    """Noisy output qubit states and decay flags for ``n_shots`` shots."""
    psi0 = _default_psi0(psi0)
    tau = cfg.rydberg_lifetime if cfg.decay else np.inf
    states = np.empty((n_shots, 4), dtype=complex)
    decayed = np.zeros(n_shots, dtype=bool)
    for start in range(0, n_shots, chunk):
        shots = sample_shots(cfg, min(chunk, n_shots - start), seq.duration, p.r, start)
        psi, dec, _ = _evaluate(seq, p, shots, psi0, tau, method, grid_dt)
        states[start:start + len(shots)] = psi
        decayed[start:start + len(shots)] = dec
    return states, decayed


def mc_fidelity(n_shots: int, cfg: NoiseConfig, seq: GateSequence, p: InteractionParams,
                d: Optional[DriveParams] = None, *, method="adiabatic",
                target: Optional[np.ndarray] = None, psi0=None, chunk=2000,
                grid_dt=10 * NS, keep_samples=False) -> MCResult:
    """Monte Carlo mean fidelity of the sequence output with ``target``.

    ``target`` defaults to the noiseless output of the same sequence
    evaluated by the same method (for the echo gate this is the Bell state
    ``(|11> - i|00>)/sqrt(2)`` up to the residual sequence error).  ``d`` is
    accepted for symmetry with the other entry points; per-atom drive
    asymmetry is not sampled.
    """
    if n_shots < 1:
        raise ValueError("n_shots must be at least 1")
    psi0 = _default_psi0(psi0)
    if target is None:
        target = noiseless_output(seq, p, psi0, method, grid_dt)
    target = np.asarray(target, dtype=complex)
    target = target / np.linalg.norm(target)
    tau = cfg.rydberg_lifetime if cfg.decay else np.inf

    fids = np.empty(n_shots)
    decayed = np.zeros(n_shots, dtype=bool)
    kept = []
    for start in range(0, n_shots, chunk):
        shots = sample_shots(cfg, min(chunk, n_shots - start), seq.duration, p.r, start)
        psi, dec, dtime = _evaluate(seq, p, shots, psi0, tau, method, grid_dt)
        f = np.abs(psi @ target.conj()) ** 2
        f = np.where(dec, cfg.decayed_score, f)
        fids[start:start + len(shots)] = f
        decayed[start:start + len(shots)] = dec
        for s, dflag, tt in zip(shots, dec, dtime):
            s.decayed = bool(dflag)
            s.decay_time = None if np.isnan(tt) else float(tt)
        if keep_samples:
            kept.extend(shots)
    # pairwise summation keeps the mean independent of chunking
    mean = float(np.sum(fids) / n_shots)
    se = float(np.std(fids, ddof=1) / np.sqrt(n_shots)) if n_shots > 1 else 0.0
    return MCResult(mean, se, float(decayed.mean()), fids, decayed, method, kept)


def decay_probability(seq: GateSequence, p: InteractionParams, d: Optional[DriveParams] = None,
                      tau: float = 170 * US, psi0=None) -> float:
    """Integrated decay probability ``int <n_R> dt / tau`` along the ideal trajectory.

    The Rydberg population is summed over both atoms and integrated through
    every dressing pulse of the sequence starting from ``psi0`` (default |11>).
    """
    if tau <= 0:
        raise ValueError("lifetime must be positive")
    if not np.isfinite(tau):
        return 0.0
    psi = from_qubit(_default_psi0(psi0))
    n_r = rydberg_number()
    total = 0.0
    for seg in seq.segments:
        if isinstance(seg, RamanRotation):
            psi = raman_rotation(seg.theta, seg.phi) @ psi
        elif isinstance(seg, DressingPulse) and seg.duration > 0:
            _, times, running = pulse_blocks(seg.schedule, p, None, PulseControls(), record=True)
            states = assemble_blocks(running, zero_block=1.0) @ psi
            total += float(np.trapezoid(np.abs(states) ** 2 @ n_r, times))
            psi = states[-1]
    return total / tau


# -- output -----------------------------------------------------------------

SHOT_LOG_COLUMNS = ("shot", "doppler1_kHz", "doppler2_kHz", "r_um", "laser_rms_kHz",
                    "decayed", "decay_time_us", "fidelity")


def write_shot_log(path, result: MCResult) -> None:
    if len(result.samples) != result.fidelities.size:
        raise ValueError("run mc_fidelity with keep_samples=True to log shots")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SHOT_LOG_COLUMNS)
        for s, f in zip(result.samples, result.fidelities):
            rms = float(np.sqrt(np.mean(s.laser_delta**2)))
            w.writerow([s.index, f"{s.doppler[0] / KHZ:.8g}", f"{s.doppler[1] / KHZ:.8g}",
                        f"{s.r / UM:.8g}", f"{rms / KHZ:.8g}", int(s.decayed),
                        "" if s.decay_time is None else f"{s.decay_time / US:.8g}", f"{f:.10g}"])


def summary_json(result: MCResult, cfg: Optional[NoiseConfig] = None) -> str:
    return json.dumps(result.to_dict(cfg), indent=2, sort_keys=True, default=float)
