"""Dressed-state energies, the entangling energy J and the blockade radius.

Branch ``+`` (``-``) is the dressed state that connects adiabatically to the
bare ground state at large positive (negative) detuning.  It is found by
continuation: start at a common detuning of ``+-20 |Omega_bar|`` where the
dressed state is nearly bare, then sweep both detunings to their target values
in steps of at most ``0.05 |Omega_bar|``, following the eigenvector of
maximal overlap.  Energy ordering is never used to label branches.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import DIM
from .errors import DegeneracyError, DomainError
from .hamiltonian import SECTORS, DriveParams, InteractionParams, assemble_blocks, sector_blocks
from .tracking import follow
from .units import MHZ, UM

REFERENCE_DETUNING = 20.0  # in units of |Omega_bar|
STEP_FRACTION = 0.05       # detuning step in units of |Omega_bar|
MAX_STEPS = 4000

BRANCHES = {"+": 1.0, "-": -1.0}


def _sign(branch) -> float:
    if branch in BRANCHES:
        return BRANCHES[branch]
    if branch in (1, -1):
        return float(branch)
    raise ValueError(f"branch must be '+' or '-', got {branch!r}")


@dataclass(frozen=True)
class DressedSpectrum:
    """Branch energies (rad/s) of the dressed two-atom system.

    ``states`` maps labels such as ``"11+"`` to the tracked 9-dim dressed
    eigenvectors.
    """

    e10_plus: np.ndarray
    e10_minus: np.ndarray
    e01_plus: np.ndarray
    e01_minus: np.ndarray
    e11_plus: np.ndarray
    e11_minus: np.ndarray
    j_plus: np.ndarray
    j_minus: np.ndarray
    states: dict = field(default_factory=dict, repr=False)

    def j(self, branch="+"):
        return self.j_plus if _sign(branch) > 0 else self.j_minus

    def light_shift(self, branch="+"):
        """Single-atom light shift ``E_LS`` (mean of the two atoms)."""
        if _sign(branch) > 0:
            return (self.e10_plus + self.e01_plus) / 2
        return (self.e10_minus + self.e01_minus) / 2


def _embed_sector(vec: np.ndarray, sector: str) -> np.ndarray:
    out = np.zeros(vec.shape[:-1] + (DIM,), dtype=complex)
    out[..., list(SECTORS[sector])] = vec
    return out


def branch_energies(omega1, omega2, delta1, delta2, v, branch="+", method="sector"):
    """Tracked energies ``(e10, e01, e11)`` and 9-dim vectors for one branch.

    All parameters broadcast; ``v`` is the interaction strength ``c6/r^6``.
    ``method="full"`` continues in the full 9x9 space instead of per sector.
    """
    b = _sign(branch)
    omega1, omega2, delta1, delta2, v = np.broadcast_arrays(
        np.asarray(omega1, dtype=complex), np.asarray(omega2, dtype=complex),
        np.asarray(delta1, dtype=float), np.asarray(delta2, dtype=float),
        np.asarray(v, dtype=float))
    om_bar = np.abs((omega1 + omega2) / 2)
    de_bar = (delta1 + delta2) / 2
    de_ref = b * np.maximum(REFERENCE_DETUNING * om_bar, b * de_bar)
    shift0 = de_ref - de_bar

    with np.errstate(divide="ignore", invalid="ignore"):
        need = np.where(om_bar > 0, np.abs(shift0) / (STEP_FRACTION * om_bar), 0.0)
    n = int(min(np.ceil(np.max(need, initial=0.0)), MAX_STEPS))

    def shift(k):
        return shift0 * (1.0 - k / n) if n else 0.0 * shift0

    if method == "sector":
        def h_at(sector):
            return lambda k: sector_blocks(omega1, omega2, delta1 + shift(k),
                                           delta2 + shift(k), v)[sector]
        out = {}
        for sector in ("10", "01", "11"):
            dim = len(SECTORS[sector])
            v0 = np.zeros(dim, dtype=complex)
            v0[0] = 1.0
            e, vec = follow(h_at(sector), n + 1, v0)
            out[sector] = (e, _embed_sector(vec, sector))
        return out
    if method == "full":
        def h_full(k):
            blocks = sector_blocks(omega1, omega2, delta1 + shift(k), delta2 + shift(k), v)
            return assemble_blocks(blocks, zero_block=0.0)
        out = {}
        for sector in ("10", "01", "11"):
            v0 = np.zeros(DIM, dtype=complex)
            v0[SECTORS[sector][0]] = 1.0
            out[sector] = follow(h_full, n + 1, v0)
        return out
    raise ValueError(f"unknown method {method!r}")


def dressed_branches(d: DriveParams, p: InteractionParams, method="sector") -> DressedSpectrum:
    """Dressed energies for both branches.  Fields of ``d`` and ``p.r`` may be arrays."""
    v = p.strength
    res = {}
    states = {}
    for name in ("+", "-"):
        out = branch_energies(d.omega1, d.omega2, d.delta1, d.delta2, v, name, method)
        res[name] = out
        for sector, (_, vec) in out.items():
            states[sector + name] = vec
    fields = {}
    for name, tag in (("+", "plus"), ("-", "minus")):
        e10 = res[name]["10"][0]
        e01 = res[name]["01"][0]
        e11 = res[name]["11"][0]
        fields[f"e10_{tag}"] = e10
        fields[f"e01_{tag}"] = e01
        fields[f"e11_{tag}"] = e11
        fields[f"j_{tag}"] = e11 - e10 - e01
    return DressedSpectrum(**fields, states=states)


def entangling_energy(d: DriveParams, p: InteractionParams, branch="+"):
    """``J`` for a single branch (cheaper than :func:`dressed_branches`)."""
    out = branch_energies(d.omega1, d.omega2, d.delta1, d.delta2, p.strength, branch)
    return out["11"][0] - out["10"][0] - out["01"][0]


def single_atom_energy(omega, delta, branch="+"):
    """Eigenvalue ``-Delta/2 +- sqrt(|Omega|^2 + Delta^2)/2`` of one atom."""
    b = _sign(branch)
    return -np.asarray(delta) / 2 + b * 0.5 * np.sqrt(np.abs(omega) ** 2 + np.asarray(delta) ** 2)


def blockade_limit_j(omega_bar, delta_bar, branch="+"):
    """Closed-form ``J`` for an infinitely strong interaction."""
    b = _sign(branch)
    om2 = np.abs(omega_bar) ** 2
    de = np.asarray(delta_bar, dtype=float)
    return de / 2 + b * 0.5 * (np.sqrt(2 * om2 + de**2) - 2 * np.sqrt(om2 + de**2))


def blockade_radius(omega_bar, p: InteractionParams):
    """``(c6_eff / |Omega_bar|)^(1/6)`` in metres."""
    om = np.abs(omega_bar)
    if np.any(om == 0):
        raise DomainError("blockade radius is undefined for zero Rabi frequency")
    return (p.c6_effective / om) ** (1.0 / 6.0)


CURVE_COLUMNS = ("E10_plus_MHz", "E10_minus_MHz", "E11_plus_MHz", "E11_minus_MHz",
                 "J_plus_MHz", "J_minus_MHz")


def spectrum_curve(d: DriveParams, p: InteractionParams, sweep: str, values) -> list[dict]:
    """Dressed energies and ``J`` along a sweep of separation or common detuning.

    ``sweep="r"`` takes separations in metres; ``sweep="delta"`` takes the
    common detuning in rad/s.  Points where continuation fails are NaN.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("empty sweep")
    rows = []
    for x in values:
        if sweep == "r":
            dd, pp, key, xv = d, p.with_r(x), "r_um", x / UM
        elif sweep == "delta":
            dd = DriveParams(d.omega1, d.omega2, x, x)
            pp, key, xv = p, "delta_MHz", x / MHZ
        else:
            raise ValueError("sweep must be 'r' or 'delta'")
        row = {key: xv}
        for name, tag in (("+", "plus"), ("-", "minus")):
            try:
                out = branch_energies(dd.omega1, dd.omega2, dd.delta1, dd.delta2,
                                      pp.strength, name)
                e10 = float(out["10"][0]); e11 = float(out["11"][0])
                j = e11 - e10 - float(out["01"][0])
            except (DegeneracyError, DomainError):
                e10 = e11 = j = float("nan")
            row[f"E10_{tag}_MHz"] = e10 / MHZ
            row[f"E11_{tag}_MHz"] = e11 / MHZ
            row[f"J_{tag}_MHz"] = j / MHZ
        rows.append(row)
    return rows


def write_curve_csv(path, rows: list[dict]) -> None:
    key = "r_um" if "r_um" in rows[0] else "delta_MHz"
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow((key,) + CURVE_COLUMNS)
        for row in rows:
            w.writerow([f"{row[key]:.10g}"] + [f"{row[c]:.10g}" for c in CURVE_COLUMNS])
