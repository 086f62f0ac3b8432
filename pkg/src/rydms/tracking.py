"""Eigenvector continuation along a path of Hermitian matrices.

The tracked state at each step is the eigenvector with the largest overlap
with the previous one.  Eigenvalues that coincide within
``DEGENERACY_RTOL * ||H||`` form a cluster; inside a cluster the previous
vector is projected onto the degenerate subspace instead of picking an
arbitrary basis vector.  Two distinct clusters with equal overlap is an
ambiguity and raises :class:`DegeneracyError`.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import DegeneracyError

DEGENERACY_RTOL = 1e-10
TIE_ATOL = 1e-12


def follow_step(h: np.ndarray, v_prev: np.ndarray):
    """One continuation step.  Shapes: ``h (..., n, n)``, ``v_prev (..., n)``.

    Returns ``(energy, vector, full_eigenvalues, full_eigenvectors, index)``.
    """
    w, vecs = np.linalg.eigh(h)
    c = np.einsum("...ij,...i->...j", vecs.conj(), v_prev)
    a = np.abs(c)
    j = np.argmax(a, axis=-1)
    e = np.take_along_axis(w, j[..., None], axis=-1)[..., 0]
    scale = np.maximum(np.max(np.abs(w), axis=-1), 1e-300)
    cluster = np.abs(w - e[..., None]) <= DEGENERACY_RTOL * scale[..., None]

    outside = np.where(cluster, -np.inf, a)
    a_max = np.take_along_axis(a, j[..., None], axis=-1)[..., 0]
    runner_up = np.max(outside, axis=-1)
    if np.any(np.abs(a_max - runner_up) <= TIE_ATOL):
        raise DegeneracyError(
            "branch continuation is ambiguous: two eigenvectors have equal overlap")

    coeff = np.where(cluster, c, 0.0)
    v = np.einsum("...ij,...j->...i", vecs, coeff)
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    return e, v, w, vecs, j


def follow(h_at: Callable[[int], np.ndarray], n_points: int, v0: np.ndarray,
           record: bool = False):
    """Continue from ``v0`` through ``h_at(0), ..., h_at(n_points - 1)``.

    ``v0`` is broadcast against the batch shape of the matrices.  Returns the
    final ``(energy, vector)`` or, with ``record=True``, arrays stacked over
    the path (path axis last for energies, second to last for vectors).
    """
    h0 = h_at(0)
    v = np.broadcast_to(np.asarray(v0, dtype=complex), h0.shape[:-1]).copy()
    energies, vectors = [], []
    h = h0
    for k in range(n_points):
        if k:
            h = h_at(k)
        e, v, *_ = follow_step(h, v)
        if record:
            energies.append(e)
            vectors.append(v)
    if record:
        return np.stack(energies, axis=-1), np.stack(vectors, axis=-2)
    return e, v
