"""Drive, interaction and ramp parameters and the two-atom Hamiltonian.

All Hamiltonians are returned divided by hbar, in rad/s.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from .core import DIM, _embed
from .errors import DomainError

Axis = Literal["parallel", "perpendicular"]
Shape = Literal["linear", "sine-squared"]

#: c6 enhancement when the quantization axis is perpendicular to the pair axis
PERPENDICULAR_C6_FACTOR = 25.0

#: 9-dim basis indices of the blocks that conserve the number of |0> atoms
SECTORS = {
    "00": (0,),
    "01": (1, 2),
    "10": (3, 6),
    "11": (4, 5, 7, 8),
}


@dataclass(frozen=True)
class DriveParams:
    """Per-atom complex Rabi frequencies and detunings (rad/s).

    The detuning follows ``Delta_j = omega_laser - omega_R^j``.
    """

    omega1: complex
    omega2: complex
    delta1: float
    delta2: float

    @classmethod
    def symmetric(cls, omega: complex, delta: float) -> "DriveParams":
        return cls(omega, omega, delta, delta)

    @property
    def omega_bar(self):
        return (np.asarray(self.omega1) + np.asarray(self.omega2)) / 2

    @property
    def delta_bar(self):
        return (np.asarray(self.delta1) + np.asarray(self.delta2)) / 2

    def swapped(self) -> "DriveParams":
        return DriveParams(self.omega2, self.omega1, self.delta2, self.delta1)


@dataclass(frozen=True)
class InteractionParams:
    """van der Waals pair interaction ``-c6 / r^6`` on |RR>.

    ``c6`` is in rad/s m^6 and given for the quantization axis parallel to the
    interatomic axis; ``axis="perpendicular"`` scales it by 25.
    """

    c6: float
    r: float
    axis: Axis = "parallel"

    def __post_init__(self):
        if self.axis not in ("parallel", "perpendicular"):
            raise ValueError(f"unknown axis orientation {self.axis!r}")
        if np.any(np.asarray(self.c6) < 0):
            raise DomainError("c6 must be non-negative (attractive convention)")

    @property
    def c6_effective(self):
        factor = PERPENDICULAR_C6_FACTOR if self.axis == "perpendicular" else 1.0
        return factor * np.asarray(self.c6, dtype=float)

    @property
    def strength(self):
        """``c6_eff / r^6`` (rad/s); the |RR> energy is minus this."""
        r = np.asarray(self.r, dtype=float)
        if np.any(r <= 0):
            raise DomainError("interatomic separation must be positive")
        with np.errstate(over="ignore", under="ignore"):
            return self.c6_effective / r**6

    def with_r(self, r) -> "InteractionParams":
        return replace(self, r=r)


def _shape(u, kind: Shape):
    if kind == "linear":
        return u
    if kind == "sine-squared":
        return np.sin(np.pi * u / 2) ** 2
    raise ValueError(f"unknown ramp shape {kind!r}")


@dataclass(frozen=True)
class RampSchedule:
    """One dressing pulse: ramp up, hold, ramp down.

    During the ramp up the Rabi frequency rises from 0 to ``omega_peak`` and
    the detuning moves from ``delta_start`` to ``delta_hold``; the ramp down
    mirrors it.  Both quantities share the ramp fraction ``u`` in [0, 1] and
    are shaped independently.
    """

    t_ramp_up: float
    t_hold: float
    t_ramp_down: float
    omega_peak: float
    delta_start: float
    delta_hold: float
    omega_shape: Shape = "sine-squared"
    delta_shape: Shape = "sine-squared"

    def __post_init__(self):
        for name in ("t_ramp_up", "t_hold", "t_ramp_down"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        _shape(0.0, self.omega_shape)
        _shape(0.0, self.delta_shape)

    @property
    def duration(self) -> float:
        return self.t_ramp_up + self.t_hold + self.t_ramp_down

    def with_hold(self, t_hold: float) -> "RampSchedule":
        return replace(self, t_hold=t_hold)

    def boundaries(self) -> tuple[float, float, float, float]:
        a = self.t_ramp_up
        b = a + self.t_hold
        return 0.0, a, b, b + self.t_ramp_down

    def ramp_fraction(self, t):
        """Fraction of the way from the bare point to the plateau at time t."""
        t = np.asarray(t, dtype=float)
        _, a, b, end = self.boundaries()
        u = np.ones_like(t)
        if a > 0:
            u = np.where(t < a, t / a, u)
        if self.t_ramp_down > 0:
            u = np.where(t > b, (end - t) / self.t_ramp_down, u)
        return np.clip(u, 0.0, 1.0)


def schedule_eval(s: RampSchedule, t):
    """Return ``(omega, delta)`` of schedule ``s`` at time(s) ``t``.

    Raises ``ValueError`` for times outside ``[0, duration]``.
    """
    t = np.asarray(t, dtype=float)
    tol = 1e-12 * max(s.duration, 1e-12)
    if np.any(t < -tol) or np.any(t > s.duration + tol):
        raise ValueError(f"time outside the schedule [0, {s.duration}]")
    u = s.ramp_fraction(t)
    omega = s.omega_peak * _shape(u, s.omega_shape)
    delta = s.delta_start + (s.delta_hold - s.delta_start) * _shape(u, s.delta_shape)
    return omega, delta


def h_single(j: int, omega: complex, delta: float) -> np.ndarray:
    """Atom-light term for atom ``j`` (1 or 2), identity on the other atom."""
    if j not in (1, 2):
        raise ValueError("atom index must be 1 or 2")
    h = np.zeros((3, 3), dtype=complex)
    h[1, 2] = omega / 2
    h[2, 1] = np.conj(omega) / 2
    h[2, 2] = -delta
    return _embed(h, j)


def h_vdw(p: InteractionParams) -> np.ndarray:
    h = np.zeros((DIM, DIM), dtype=complex)
    h[8, 8] = -p.strength
    return h


def h_total(d: DriveParams, p: InteractionParams) -> np.ndarray:
    return h_single(1, d.omega1, d.delta1) + h_single(2, d.omega2, d.delta2) + h_vdw(p)


def sector_blocks(omega1, omega2, delta1, delta2, v) -> dict[str, np.ndarray]:
    """Stacks of the conserved blocks of ``h_total`` (see ``SECTORS``).

    Arguments broadcast against each other; each returned block has shape
    ``broadcast_shape + (n, n)``.
    """
    omega1, omega2, delta1, delta2, v = np.broadcast_arrays(
        np.asarray(omega1, dtype=complex), np.asarray(omega2, dtype=complex),
        np.asarray(delta1, dtype=float), np.asarray(delta2, dtype=float),
        np.asarray(v, dtype=float))
    shape = omega1.shape

    def single(om, de):
        h = np.zeros(shape + (2, 2), dtype=complex)
        h[..., 0, 1] = om / 2
        h[..., 1, 0] = np.conj(om) / 2
        h[..., 1, 1] = -de
        return h

    h11 = np.zeros(shape + (4, 4), dtype=complex)
    # order: 11, 1R, R1, RR
    h11[..., 0, 1] = omega2 / 2
    h11[..., 0, 2] = omega1 / 2
    h11[..., 1, 3] = omega1 / 2
    h11[..., 2, 3] = omega2 / 2
    h11[..., 1, 0] = np.conj(omega2) / 2
    h11[..., 2, 0] = np.conj(omega1) / 2
    h11[..., 3, 1] = np.conj(omega1) / 2
    h11[..., 3, 2] = np.conj(omega2) / 2
    h11[..., 1, 1] = -delta2
    h11[..., 2, 2] = -delta1
    h11[..., 3, 3] = -delta1 - delta2 - v
    return {"01": single(omega2, delta2), "10": single(omega1, delta1), "11": h11}


def assemble_blocks(blocks: dict[str, np.ndarray], zero_block=1.0) -> np.ndarray:
    """Inverse of the sector split: place block stacks into 9x9 matrices."""
    b11 = blocks["11"]
    out = np.zeros(b11.shape[:-2] + (DIM, DIM), dtype=complex)
    out[..., 0, 0] = zero_block
    for name in ("01", "10", "11"):
        idx = np.array(SECTORS[name])
        out[..., idx[:, None], idx[None, :]] = blocks[name]
    return out
