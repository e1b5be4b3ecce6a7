"""Pure-numpy reference implementation of the trajectory kernel.

Vectorized over trajectories; loops over segments in Python.
"""
import numpy as np


def _local_batch(letters, angles):
    """(B, Nq, 2, 2) single-qubit factors for one segment of angles (B, Nq, 2)."""
    th, ph = angles[..., 0], angles[..., 1]
    c, s = np.cos(th), np.sin(th)
    c2, s2 = np.cos(ph), np.sin(ph)
    out = np.empty(angles.shape[:2] + (2, 2), dtype=complex)
    for j, let in enumerate(letters):
        cj, sj = c[:, j], s[:, j]
        if let == 1:
            out[:, j] = np.stack([cj, -1j * sj, -1j * sj, cj], -1).reshape(-1, 2, 2)
        elif let == 2:
            out[:, j] = np.stack([cj, -sj, sj, cj], -1).reshape(-1, 2, 2)
        elif let == 3:
            z = np.zeros_like(cj)
            out[:, j] = np.stack([cj - 1j * sj, z, z, cj + 1j * sj], -1).reshape(-1, 2, 2)
        else:
            a, b = c2[:, j], s2[:, j]
            out[:, j] = np.stack([
                cj * a - 1j * sj * b,
                -cj * b - 1j * sj * a,
                -1j * sj * a + cj * b,
                1j * sj * b + cj * a,
            ], -1).reshape(-1, 2, 2)
    return out


def trotter_segments(psi, bos, letters, angles, prev, E, Vp, phase, kern, snap_at, snaps):
    """Advance B trajectories by ``angles.shape[1]`` segments in place.

    Each segment: merge the new single-qubit factors with the inverse of the
    previous ones, evaluate the mean-field force ``<psi|V'_m|psi>``, apply the
    spin propagator ``E`` and update the coherent amplitudes
    ``b <- b * phase + f * kern``.
    """
    B, D = psi.shape
    nq = angles.shape[2]
    n = angles.shape[1]
    letters = list(letters)
    si = 0
    S = len(snap_at)
    while si < S and snap_at[si] == 0:
        snaps[:, si] = bos
        si += 1
    for i in range(n):
        loc = _local_batch(letters, angles[:, i])
        step = loc @ np.conj(np.swapaxes(prev, 2, 3))
        for j in range(nq):
            lead = 2**j
            v = psi.reshape(B, lead, 2, D // (2 * lead))
            psi[:] = np.einsum("bij,bajc->baic", step[:, j], v).reshape(B, D)
        prev[:] = loc
        f = np.einsum("br,mrc,bc->bm", psi.conj(), Vp, psi).real
        bos[:] = bos * phase + f * kern
        psi[:] = psi @ E.T
        while si < S and snap_at[si] == i + 1:
            snaps[:, si] = bos
            si += 1
