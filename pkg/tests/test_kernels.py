import numpy as np
import pytest

from heislab import _kernels_py, kernels, trajectory
from heislab.gaussian import GaussianBosonState, evolve_trotter_effective
from heislab.model import HybridHamiltonian, build_gdm
from heislab.pauli import PauliString, eigenstate_vector


def _inputs(h, e_b, tau, trials=4, segs=300, seed=0):
    letters, E, Vp, phase, kern = trajectory.segment_operators(h, e_b, tau, (0.9,) * h.n_modes)
    rng = np.random.default_rng(seed)
    nq = h.n_qubits
    psi = np.repeat(eigenstate_vector(e_b, 1)[None], trials, 0).astype(complex)
    bos = np.full((trials, h.n_modes), 0.1 + 0.05j, dtype=complex)
    prev = np.ascontiguousarray(np.repeat(np.eye(2, dtype=complex)[None, None], nq, 1).repeat(trials, 0))
    angles = rng.uniform(0, np.pi, size=(trials, segs, nq, 2))
    snap_at = np.array([0, 17, segs], dtype=np.int64)
    snaps = np.zeros((trials, 3, h.n_modes), dtype=complex)
    return [psi, bos, letters, angles, prev, E, Vp, phase, kern, snap_at, snaps]


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernel not built")
@pytest.mark.parametrize("e_b", ["XXI", "IZY", "YIZ"])
def test_compiled_matches_fallback(e_b):
    args = _inputs(build_gdm(3), e_b, 0.01)
    a = [x.copy() if isinstance(x, np.ndarray) else x for x in args]
    b = [x.copy() if isinstance(x, np.ndarray) else x for x in args]
    _kernels_py.trotter_segments(*a)
    kernels.trotter_segments(*b)
    for i in (0, 1, 4, 10):
        assert np.max(np.abs(a[i] - b[i])) < 1e-12


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")


def test_frozen_spin_is_exact():
    # the Z rotation commutes with everything, so the force is exactly lambda
    h = HybridHamiltonian(1, 1, {PauliString("Z"): 0.6}, (1.0,), {(PauliString("Z"), 0): 0.03})
    out = trajectory.simulate(h, "Z", 0, (1.0,), 0.01, [0.0, 5.0, 20.0], trials=3, seed=1)
    ref = [evolve_trotter_effective(GaussianBosonState.vacuum(1), 0.03, t).alpha[0] for t in (0, 5, 20)]
    assert np.allclose(out[:, :, 0], np.array(ref)[None], atol=1e-12)


def test_chunking_does_not_change_results():
    h = build_gdm(5)
    a = trajectory.simulate(h, "XYI", 2, h.mode_freqs, 0.02, [1.0, 3.0], trials=3, seed=7, chunk=32)
    b = trajectory.simulate(h, "XYI", 2, h.mode_freqs, 0.02, [1.0, 3.0], trials=3, seed=7, chunk=8192)
    assert np.allclose(a, b, atol=1e-13)


def test_small_tau_tracks_effective_coupling():
    h = build_gdm(0)
    e_b, label, t = "ZZI", 1, 2.0
    from heislab.oracle import EvolutionOracle

    orc = EvolutionOracle(h, seed=0)
    Lam = orc._branch_coupling(e_b, label)[0]
    out = trajectory.simulate(h, e_b, label, h.mode_freqs, 1e-3, [t], trials=40, seed=2)
    mean_p = np.sqrt(2) * out[:, 0, 0].imag.mean()
    se = np.sqrt(2) * out[:, 0, 0].imag.std(ddof=1) / np.sqrt(40)
    assert abs(mean_p - (-np.sqrt(2) * Lam * t)) < 5 * se + 2e-3
