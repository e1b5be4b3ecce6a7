import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import linalg

from heislab import fock
from heislab.errors import ShapeError
from heislab.gaussian import (
    GaussianBosonState,
    SpamNoise,
    build_entangled_squeezed,
    dqs_estimate,
    dqs_predicted_rmse,
    dqs_samples,
    evolve_displaced_oscillators,
    evolve_free,
    evolve_trotter_effective,
    quadrature_variance,
    sample_copies_x,
    sample_quadrature,
    squeezed_covariance,
    squeezing_for_photons,
)
from heislab.model import HybridHamiltonian
from heislab.pauli import PauliString


def fock_displaced(lam, omega, t, alpha0=0.0, d=60):
    """Independent reference: one qubit frozen in |0>, Z-coupled mode, dense Fock."""
    h = HybridHamiltonian(1, 1, {}, (omega,), {(PauliString("Z"), 0): lam})
    psi = fock.product_state([1, 0], [fock.coherent_vector(alpha0, d)], (d,))
    out = fock.evolve(psi, fock.materialize(h, (d,)), t)
    x, _ = fock.quadrature_moments(out, 0, "X")
    p, _ = fock.quadrature_moments(out, 0, "P")
    return x, p


@pytest.mark.parametrize("lam,omega,t", [(0.3, 1.0, 2.0), (-0.5, 0.7, 5.0), (0.2, 2.0, 0.3)])
def test_displacement_matches_fock(lam, omega, t):
    st_ = evolve_displaced_oscillators(GaussianBosonState.coherent(0.4 - 0.2j), lam, omega, t)
    xg, pg = st_.quadrature_means()
    xf, pf = fock_displaced(lam, omega, t, 0.4 - 0.2j)
    assert xg[0] == pytest.approx(xf, abs=1e-9)
    assert pg[0] == pytest.approx(pf, abs=1e-9)


def test_zero_frequency_limit_is_continuous():
    s0 = GaussianBosonState.vacuum(1)
    a = evolve_displaced_oscillators(s0, 0.3, 0.0, 4.0).alpha[0]
    b = evolve_displaced_oscillators(s0, 0.3, 1e-12, 4.0).alpha[0]
    assert a == pytest.approx(-1.2j)
    assert abs(a - b) < 1e-9
    assert evolve_trotter_effective(s0, 0.3, 4.0).alpha[0] == pytest.approx(a)


def test_trotter_signal_p_mean():
    s = evolve_trotter_effective(GaussianBosonState.vacuum(2), [0.1, -0.2], 3.0)
    _, p = s.quadrature_means()
    assert np.allclose(p, -np.sqrt(2) * np.array([0.1, -0.2]) * 3.0)


def test_free_rotation():
    s = evolve_free(GaussianBosonState.coherent(1.0), 1.0, np.pi / 2)
    assert s.alpha[0] == pytest.approx(-1j)


def test_shape_checks():
    with pytest.raises(ShapeError):
        evolve_displaced_oscillators(GaussianBosonState.vacuum(2), [1, 2, 3], 1.0, 1.0)
    with pytest.raises(ShapeError):
        GaussianBosonState(np.zeros(2), np.zeros(3))


def test_squeezing_for_photons_values():
    assert squeezing_for_photons(1000) == pytest.approx(4.1473, abs=1e-4)
    assert np.sinh(squeezing_for_photons(7.5)) ** 2 == pytest.approx(7.5)


@pytest.mark.parametrize("z", [0.3, 0.8 + 0.4j])
def test_squeezed_covariance_matches_fock(z):
    d = 120
    a = fock.annihilation(d)
    S = linalg.expm(0.5 * (np.conj(z) * a @ a - z * a.conj().T @ a.conj().T))
    psi = fock.DenseHybridState(np.kron([1, 0], S[:, 0]), 1, (d,))
    cov = squeezed_covariance(z)
    assert fock.quadrature_moments(psi, 0, "X")[1] == pytest.approx(cov[0, 0], abs=1e-8)
    assert fock.quadrature_moments(psi, 0, "P")[1] == pytest.approx(cov[1, 1], abs=1e-8)
    assert np.linalg.det(cov) == pytest.approx(0.25)


def test_real_squeezing_reduces_x():
    assert squeezed_covariance(0.7)[0, 0] == pytest.approx(np.exp(-1.4) / 2)


def orthogonal_network_cov(W, v_sym):
    """Copy covariance O^T diag(v_sym, 1/2, ...) O with first row of O = 1/sqrt(W)."""
    M = np.eye(W)
    M[:, 0] = 1.0
    Q, _ = np.linalg.qr(M)
    O = Q.T * np.sign(Q[0, 0])
    assert np.allclose(O[0], 1 / np.sqrt(W))
    diag = np.full(W, 0.5)
    diag[0] = v_sym
    return O.T @ np.diag(diag) @ O


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 40), st.floats(0.0, 200.0))
def test_predicted_rmse_matches_network(W, n_pt):
    z = squeezing_for_photons(n_pt)
    cov = orthogonal_network_cov(W, squeezed_covariance(z)[0, 0])
    avg = np.full(W, 1 / W)
    assert np.sqrt(avg @ cov @ avg) == pytest.approx(dqs_predicted_rmse(W, n_pt), rel=1e-9)
    st_ = build_entangled_squeezed(1, W, z)
    assert quadrature_variance(st_, 0, "X") == pytest.approx(cov[0, 0], rel=1e-9)


def test_dqs_special_cases():
    assert dqs_predicted_rmse(1, 0) == pytest.approx(np.sqrt(0.5))
    assert dqs_predicted_rmse(100, 0) == pytest.approx(np.sqrt(0.5) / 10)


def test_dqs_samples_statistics():
    rng = np.random.default_rng(5)
    W, n_pt = 50, 4.0
    s = build_entangled_squeezed(1, W, squeezing_for_photons(n_pt)).with_alpha([0.25])
    x = dqs_samples(s, 0, 40_000, rng)
    assert x.mean() == pytest.approx(np.sqrt(2) * 0.25, abs=5 * dqs_predicted_rmse(W, n_pt) / 200)
    assert x.std() == pytest.approx(dqs_predicted_rmse(W, n_pt), rel=0.03)
    est, pred = dqs_estimate(s, W, shots_per_copy=4, rng=rng)
    assert pred == pytest.approx(dqs_predicted_rmse(W, n_pt) / 2)


def test_copy_sampler_agrees_with_symmetric_shortcut():
    rng = np.random.default_rng(9)
    W, n_pt = 12, 3.0
    s = build_entangled_squeezed(1, W, squeezing_for_photons(n_pt))
    xs = sample_copies_x(s, 0, 20_000, rng)
    cov = np.cov(xs.T)
    ref = orthogonal_network_cov(W, squeezed_covariance(squeezing_for_photons(n_pt))[0, 0])
    assert np.max(np.abs(cov - ref)) < 0.08
    assert xs.mean(1).std() == pytest.approx(dqs_predicted_rmse(W, n_pt), rel=0.05)


def test_quadrature_noise_adds_variance():
    rng = np.random.default_rng(1)
    s = GaussianBosonState.coherent(0.5)
    x = sample_quadrature(s, 0, "X", 50_000, SpamNoise(quad_sigma=0.5), rng)
    assert x.var() == pytest.approx(0.75, rel=0.03)
    assert x.mean() == pytest.approx(np.sqrt(2) * 0.5, abs=0.02)
    with pytest.raises(ValueError):
        SpamNoise(quad_sigma=-1)


def test_displacement_worked_values():
    vac = GaussianBosonState.vacuum(1)
    assert evolve_displaced_oscillators(vac, 1.0, 2.0, np.pi / 2).alpha[0] == pytest.approx(-1.0)
    assert abs(evolve_displaced_oscillators(vac, 0.7, 3.0, 2 * np.pi / 3).alpha[0]) < 1e-12
    lam, w = 0.05, 1.3
    x, _ = evolve_displaced_oscillators(vac, lam, w, np.pi / w).quadrature_means()
    assert x[0] == pytest.approx(-2 * np.sqrt(2) * lam / w)
    _, p = evolve_trotter_effective(vac, 0.02, 10.0).quadrature_means()
    assert p[0] == pytest.approx(-0.2828, abs=1e-4)


def test_free_phase_convention():
    r, w, t = 0.4, 1.0, 0.9
    x, p = evolve_free(GaussianBosonState.coherent(0.8 * np.exp(1j * r)), w, t).quadrature_means()
    assert np.angle(x[0] + 1j * p[0]) == pytest.approx(r - w * t)


def test_dqs_reference_magnitude():
    assert dqs_predicted_rmse(1000, 1000) == pytest.approx(3.54e-4, rel=2e-3)
    assert dqs_predicted_rmse(1000, 1000) / dqs_predicted_rmse(100, 100) == pytest.approx(0.1, rel=1e-2)  # 1/W asymptotically
    with pytest.raises(ShapeError):
        dqs_estimate(build_entangled_squeezed(1, 5, 0.1), 4)


def test_vacuum_homodyne_moments():
    x = sample_quadrature(GaussianBosonState.vacuum(1), 0, "X", 100_000, None, np.random.default_rng(0))
    assert abs(x.mean()) < 3 * np.sqrt(0.5 / 1e5)
    assert x.var() == pytest.approx(0.5, rel=0.02)
    y = sample_quadrature(GaussianBosonState.vacuum(1), 0, "X", 100_000, SpamNoise(0.1), np.random.default_rng(1))
    assert y.var() == pytest.approx(0.51, rel=0.02)
