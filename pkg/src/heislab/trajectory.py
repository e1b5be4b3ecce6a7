"""Finite-tau randomized Trotter trajectories in a mean-field hybrid picture.

The spin register is integrated exactly through every random segment
``U^dag exp(-i H_spin tau) U``. Each mode is a coherent amplitude driven by
the spin expectation of its coupling operator,

    b <- b exp(-i D tau) + f (exp(-i D tau) - 1) / D,   f = <V_n>_midpoint,

with D = omega - omega_tilde the frame-shifted frequency left after U3.
Back-action of the modes on the spin is neglected, which is exact at zero
coupling and first-order accurate in lambda otherwise.
"""
from __future__ import annotations

import numpy as np
from scipy import linalg

from . import kernels
from .fock import _coupling_parts, _spin_part
from .gaussian import displacement_kernel
from .model import HybridHamiltonian
from .pauli import as_pauli, eigenstate_vector

LETTER_CODE = {"I": 0, "X": 1, "Y": 2, "Z": 3}
CHUNK = 8192


def segment_operators(h: HybridHamiltonian, e_b, tau: float, omega_tilde):
    """Static pieces of one segment: letters, E, midpoint-force operators, mode factors."""
    e_b = as_pauli(e_b)
    Hs = _spin_part(h)
    E = linalg.expm(-1j * tau * Hs)
    Eh = linalg.expm(-0.5j * tau * Hs)
    Vp = np.stack([Eh.conj().T @ V @ Eh for V in _coupling_parts(h)]) if h.n_modes else np.zeros((0,) + Hs.shape)
    delta = np.asarray(h.mode_freqs, dtype=float) - np.asarray(omega_tilde, dtype=float)
    phase = np.exp(-1j * delta * tau)
    kern = np.asarray(displacement_kernel(delta, tau), dtype=complex)
    letters = np.array([LETTER_CODE[c] for c in e_b.letters], dtype=np.int32)
    return letters, np.ascontiguousarray(E), np.ascontiguousarray(Vp, dtype=complex), phase, kern


def simulate(h: HybridHamiltonian, e_b, label, omega_tilde, tau: float, snap_times, trials: int,
             seed, alpha0=0.0, chunk: int = CHUNK, kernel=None) -> np.ndarray:
    """Coherent amplitudes (trials, len(snap_times), n_modes) at each snapshot time.

    Trajectory ``i`` draws its angles from the i-th child of ``SeedSequence(seed)``
    in blocks of ``chunk`` segments, so results do not depend on batching.
    """
    kernel = kernel or kernels.trotter_segments
    snap_times = np.asarray(snap_times, dtype=float)
    if np.any(np.diff(snap_times) < 0) or np.any(snap_times < 0):
        raise ValueError("snapshot times must be non-negative and sorted")
    letters, E, Vp, phase, kern = segment_operators(h, e_b, tau, omega_tilde)
    nq, D, M = h.n_qubits, 2**h.n_qubits, h.n_modes
    snap_R = np.rint(snap_times / tau).astype(np.int64)
    R_total = int(snap_R[-1]) if snap_R.size else 0

    children = np.random.SeedSequence(seed).spawn(trials)
    rngs = [np.random.default_rng(c) for c in children]
    psi = np.repeat(eigenstate_vector(e_b, label)[None], trials, axis=0).astype(complex)
    bos = np.full((trials, M), alpha0, dtype=complex)
    prev = np.repeat(np.eye(2, dtype=complex)[None, None], nq, axis=1).repeat(trials, axis=0)
    prev = np.ascontiguousarray(prev)
    out = np.empty((trials, len(snap_R), M), dtype=complex)

    done = 0
    while True:
        n = min(chunk, R_total - done)
        lo, hi = done, done + n
        mask = (snap_R >= lo) & (snap_R <= hi) if n > 0 else snap_R == lo
        if done > 0:
            mask &= snap_R > lo
        idx = np.nonzero(mask)[0]
        local = np.ascontiguousarray(snap_R[idx] - lo, dtype=np.int64)
        snaps = np.zeros((trials, len(idx), M), dtype=complex)
        angles = np.ascontiguousarray(
            np.stack([r.uniform(0.0, np.pi, size=(n, nq, 2)) for r in rngs]) if n else np.zeros((trials, 0, nq, 2)))
        kernel(psi, bos, letters, angles, prev, E, Vp, phase, kern, local, snaps)
        out[:, idx] = snaps
        done = hi
        if done >= R_total:
            break
    return out
