"""Two-atom, three-level basis and the qubit-subspace operators.

Each atom has levels ``Q0 < Q1 < RYD`` (|0>, |1>, |R>).  Two-atom kets are
ordered by ``index = 3 * level(atom 1) + level(atom 2)``; every matrix in the
package uses this ordering.

State vectors are plain ``complex128`` arrays of length 9 and operators are
9x9 arrays.

Rotation convention
-------------------
A Raman pulse of area ``theta`` about the in-plane axis ``(cos phi, sin phi, 0)``
acts on each atom as ``exp[-i theta (cos phi sx + sin phi sy) / 2]``, where the
Pauli matrices are written in the ordered basis ``(|0>, |1>)`` (so that
``sz|0> = +|0>``).  The Rydberg level is left untouched.  With this choice the
sequence pi/2 - dress - pi - dress - pi/2 (all about x) composes to
``exp(-i phi_J Sy^2)`` exactly.
"""

from __future__ import annotations

import enum
from functools import lru_cache

import numpy as np


class Level(enum.IntEnum):
    Q0 = 0
    Q1 = 1
    RYD = 2


DIM = 9

#: 9-dim indices of |00>, |01>, |10>, |11> (qubit subspace, atom 1 major)
QUBIT_INDICES = (0, 1, 3, 4)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def basis_index(l1: Level, l2: Level) -> int:
    return 3 * int(Level(l1)) + int(Level(l2))


def ket(l1: Level, l2: Level) -> np.ndarray:
    psi = np.zeros(DIM, dtype=complex)
    psi[basis_index(l1, l2)] = 1.0
    return psi


def label(index: int) -> str:
    """Human readable label of a basis index, e.g. ``5 -> '1R'``."""
    names = "01R"
    return names[index // 3] + names[index % 3]


def _embed(single: np.ndarray, atom: int) -> np.ndarray:
    eye = np.eye(3, dtype=complex)
    return np.kron(single, eye) if atom == 1 else np.kron(eye, single)


def _qubit_block(m2: np.ndarray, rydberg_value: complex = 0.0) -> np.ndarray:
    out = np.zeros((3, 3), dtype=complex)
    out[:2, :2] = m2
    out[2, 2] = rydberg_value
    return out


def spin_y_single(atom: int) -> np.ndarray:
    """``s_y = i(|0><1| - |1><0|)/2`` on one atom, zero on |R>."""
    sy = np.zeros((2, 2), dtype=complex)
    sy[0, 1] = 0.5j
    sy[1, 0] = -0.5j
    return _embed(_qubit_block(sy), atom)


@lru_cache(maxsize=None)
def _spin_y_cached() -> np.ndarray:
    out = spin_y_single(1) + spin_y_single(2)
    out.setflags(write=False)
    return out


def spin_y_collective() -> np.ndarray:
    """Collective ``Sy = sy^1 + sy^2`` as a 9x9 operator."""
    return _spin_y_cached().copy()


def rydberg_number(atom: int | None = None) -> np.ndarray:
    """Diagonal of the Rydberg number operator (per atom, or summed)."""
    levels1 = np.repeat(np.arange(3), 3)
    levels2 = np.tile(np.arange(3), 3)
    n1 = (levels1 == Level.RYD).astype(float)
    n2 = (levels2 == Level.RYD).astype(float)
    if atom == 1:
        return n1
    if atom == 2:
        return n2
    return n1 + n2


def zero_count() -> np.ndarray:
    """Number of atoms in |0> for each basis state (a conserved quantity)."""
    levels1 = np.repeat(np.arange(3), 3)
    levels2 = np.tile(np.arange(3), 3)
    return (levels1 == Level.Q0).astype(int) + (levels2 == Level.Q0).astype(int)


def single_rotation(theta: float, phi: float) -> np.ndarray:
    """2x2 rotation ``exp[-i theta (cos phi sx + sin phi sy)/2]``."""
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    n = np.cos(phi) * SIGMA_X + np.sin(phi) * SIGMA_Y
    return c * np.eye(2) - 1j * s * n


def raman_rotation(theta: float, phi: float) -> np.ndarray:
    """Identical instantaneous rotation of both qubits; identity on |R>."""
    r3 = _qubit_block(single_rotation(theta, phi), 1.0)
    return np.kron(r3, r3)


def qubit_rotation(theta: float, phi: float) -> np.ndarray:
    """The 4x4 restriction of :func:`raman_rotation` to the qubit subspace."""
    r = single_rotation(theta, phi)
    return np.kron(r, r)


def to_qubit(op: np.ndarray) -> np.ndarray:
    """Restrict a 9x9 operator (or a 9-vector) to the qubit subspace."""
    idx = np.array(QUBIT_INDICES)
    op = np.asarray(op)
    if op.ndim == 1:
        return op[idx]
    return op[np.ix_(idx, idx)]


def from_qubit(vec4: np.ndarray) -> np.ndarray:
    psi = np.zeros(DIM, dtype=complex)
    psi[list(QUBIT_INDICES)] = vec4
    return psi


def swap_atoms() -> np.ndarray:
    """Permutation matrix exchanging the two atoms."""
    perm = np.zeros((DIM, DIM))
    for a in range(3):
        for b in range(3):
            perm[3 * b + a, 3 * a + b] = 1.0
    return perm
