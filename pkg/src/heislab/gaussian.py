"""Exact Gaussian engine for bosonic modes under linear (displacement) dynamics.

Quadratures are ``X = (b^dag + b)/sqrt(2)`` and ``P = i(b^dag - b)/sqrt(2)``,
so a coherent state has variance 1/2 in each and mean ``sqrt(2) Re(alpha)``,
``sqrt(2) Im(alpha)``.

Squeezing follows ``S(z) = exp[(z* b^2 - z b^dag^2)/2]``; for real ``z > 0``
the X quadrature is squeezed to ``exp(-2|z|)/2``. With ``copies > 1`` the
squeezing lives on the symmetric mode ``B = sum_w b_w / sqrt(W)`` and every
copy carries the same displacement ``alpha``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


@dataclass(frozen=True)
class SpamNoise:
    """State-preparation and measurement imperfections (all default to zero)."""

    quad_sigma: float = 0.0
    prep_offset: complex = 0.0
    qubit_flip_p: float = 0.0

    def __post_init__(self):
        if self.quad_sigma < 0:
            raise ValueError("quad_sigma must be >= 0")
        if not 0 <= self.qubit_flip_p < 0.5:
            raise ValueError("qubit_flip_p must lie in [0, 0.5)")


@dataclass(frozen=True)
class HomodyneSample:
    quadrature: str
    value: float
    mode: int


def _frozen(a, dtype=complex):
    a = np.array(a, dtype=dtype, ndmin=1)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GaussianBosonState:
    alpha: np.ndarray
    z: np.ndarray
    copies: int = 1

    def __post_init__(self):
        alpha = _frozen(self.alpha)
        z = _frozen(self.z) if np.ndim(self.z) else _frozen(np.full(alpha.shape, self.z))
        if alpha.shape != z.shape:
            raise ShapeError("alpha and z must have one entry per mode")
        if self.copies < 1:
            raise ValueError("copies must be >= 1")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "z", z)

    @classmethod
    def vacuum(cls, n_modes: int, copies: int = 1) -> "GaussianBosonState":
        return cls(np.zeros(n_modes), np.zeros(n_modes), copies)

    @classmethod
    def coherent(cls, alpha) -> "GaussianBosonState":
        alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
        return cls(alpha, np.zeros_like(alpha))

    @property
    def n_modes(self) -> int:
        return self.alpha.shape[0]

    @property
    def total_photons_squeezing(self) -> np.ndarray:
        """N_pt = sinh^2|z| of the symmetric mode, per mode index."""
        return np.sinh(np.abs(self.z)) ** 2

    def mean_photons(self) -> np.ndarray:
        """Mean photon number per copy, |alpha|^2 + sinh^2|z| / W."""
        return np.abs(self.alpha) ** 2 + self.total_photons_squeezing / self.copies

    def with_alpha(self, alpha) -> "GaussianBosonState":
        return GaussianBosonState(alpha, self.z, self.copies)

    def quadrature_means(self) -> tuple[np.ndarray, np.ndarray]:
        return np.sqrt(2) * self.alpha.real, np.sqrt(2) * self.alpha.imag


def _check_modes(state, *arrays):
    for a in arrays:
        if np.shape(a) not in ((), (state.n_modes,)):
            raise ShapeError(f"expected {state.n_modes} per-mode values, got shape {np.shape(a)}")


def displacement_kernel(omega, t):
    """(exp(-i omega t) - 1)/omega, continued to -i t at omega = 0."""
    omega = np.asarray(omega, dtype=float)
    small = np.abs(omega * t) < 1e-8
    safe = np.where(small, 1.0, omega)
    val = np.expm1(-1j * safe * t) / safe
    series = -1j * t - omega * t**2 / 2
    return np.where(small, series, val)


def evolve_displaced_oscillators(state: GaussianBosonState, Lam, omega, t) -> GaussianBosonState:
    """Evolve under ``Lam (b + b^dag) + omega b^dag b`` for time ``t`` (per mode)."""
    _check_modes(state, Lam, omega)
    Lam = np.broadcast_to(np.asarray(Lam, dtype=float), (state.n_modes,))
    omega = np.broadcast_to(np.asarray(omega, dtype=float), (state.n_modes,))
    phase = np.exp(-1j * omega * t)
    alpha = state.alpha * phase + Lam * displacement_kernel(omega, t)
    z = state.z * phase**2
    return GaussianBosonState(alpha, z, state.copies)


def evolve_trotter_effective(state: GaussianBosonState, Lam, t) -> GaussianBosonState:
    """Frequency-cancelled dynamics: a pure displacement by ``-i Lam t``."""
    _check_modes(state, Lam)
    Lam = np.broadcast_to(np.asarray(Lam, dtype=float), (state.n_modes,))
    return GaussianBosonState(state.alpha - 1j * Lam * t, state.z, state.copies)


def evolve_free(state: GaussianBosonState, omega, t) -> GaussianBosonState:
    _check_modes(state, omega)
    phase = np.exp(-1j * np.asarray(omega, dtype=float) * t)
    return GaussianBosonState(state.alpha * phase, state.z * phase**2, state.copies)


def build_entangled_squeezed(n_modes: int, W: int, z) -> GaussianBosonState:
    """Symmetric-mode squeezed vacuum over ``W`` copies of ``n_modes`` modes."""
    if W < 1 or n_modes < 1:
        raise ValueError("need W >= 1 and n_modes >= 1")
    return GaussianBosonState(np.zeros(n_modes), np.full(n_modes, z, dtype=complex), W)


def squeezing_for_photons(n_pt: float) -> float:
    """|z| giving sinh^2|z| = n_pt."""
    return float(np.arcsinh(np.sqrt(n_pt)))


def squeezed_covariance(z) -> np.ndarray:
    """(X, P) covariance of S(z)|0>, vacuum normalized to I/2."""
    r, phi = abs(z), np.angle(z)
    mu, nu = np.cosh(r), np.exp(1j * phi) * np.sinh(r)
    A, B = mu - nu, 1j * (mu + nu)
    S = np.array([[A.real, B.real], [A.imag, B.imag]])
    return 0.5 * S @ S.T


def quadrature_variance(state: GaussianBosonState, mode: int, quadrature: str) -> float:
    """Single-copy marginal variance of X or P on ``mode``."""
    idx = _quad_index(quadrature)
    v_sym = squeezed_covariance(state.z[mode])[idx, idx]
    W = state.copies
    return float(v_sym / W + 0.5 * (1 - 1 / W))


def _quad_index(quadrature: str) -> int:
    q = quadrature.upper()
    if q not in ("X", "P"):
        raise ValueError(f"quadrature must be 'X' or 'P', got {quadrature!r}")
    return 0 if q == "X" else 1


def sample_quadrature(state: GaussianBosonState, mode: int, quadrature: str, shots: int,
                      noise: SpamNoise | None, rng) -> np.ndarray:
    """Homodyne outcomes as a plain float array."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    noise = noise or SpamNoise()
    idx = _quad_index(quadrature)
    mean = np.sqrt(2) * (state.alpha[mode].real if idx == 0 else state.alpha[mode].imag)
    var = quadrature_variance(state, mode, quadrature) + noise.quad_sigma**2
    return mean + np.sqrt(var) * rng.standard_normal(shots)


def sample_homodyne(state, mode, quadrature, shots, noise, rng) -> list[HomodyneSample]:
    vals = sample_quadrature(state, mode, quadrature, shots, noise, rng)
    q = quadrature.upper()
    return [HomodyneSample(q, float(v), mode) for v in vals]


def dqs_predicted_rmse(W: int, n_total_photons: float) -> float:
    """RMSE of the copy-averaged X estimator for a symmetric squeezed probe."""
    s = np.sqrt(1 + n_total_photons) + np.sqrt(n_total_photons)
    return float(np.sqrt(1.0 / (2 * W * s**2)))


def dqs_samples(state: GaussianBosonState, mode: int, shots: int, rng,
                noise: SpamNoise | None = None) -> np.ndarray:
    """``shots`` independent draws of the copy-averaged X over all W copies.

    Sampled through the symmetric mode, which is exact: ``X~ = X_B / sqrt(W)``
    and the orthogonal modes do not contribute.
    """
    noise = noise or SpamNoise()
    W = state.copies
    var = squeezed_covariance(state.z[mode])[0, 0] / W + noise.quad_sigma**2 / W
    mean = np.sqrt(2) * state.alpha[mode].real
    return mean + np.sqrt(var) * rng.standard_normal(shots)


def dqs_estimate(state: GaussianBosonState, W: int, shots_per_copy: int = 1, rng=None,
                 mode: int = 0, noise: SpamNoise | None = None) -> tuple[float, float]:
    """Copy-averaged X estimate ``X~ = sum_w X_w / W`` and its ideal predicted RMSE.

    With ``shots_per_copy > 1`` the probe is re-prepared and the averages are
    pooled, shrinking the RMSE by ``sqrt(shots_per_copy)``.
    """
    if state.copies != W:
        raise ShapeError(f"state has {state.copies} copies, expected W={W}")
    if shots_per_copy < 1:
        raise ValueError("shots_per_copy must be >= 1")
    rng = rng if rng is not None else np.random.default_rng()
    x = dqs_samples(state, mode, shots_per_copy, rng, noise)
    pred = dqs_predicted_rmse(W, float(state.total_photons_squeezing[mode])) / np.sqrt(shots_per_copy)
    return float(x.mean()), pred


def sample_copies_x(state: GaussianBosonState, mode: int, shots: int, rng) -> np.ndarray:
    """Joint X outcomes of all W copies (shots, W) from the full covariance.

    Used to cross-check the symmetric-mode shortcut; cost is O(W^3).
    """
    W = state.copies
    v_sym = squeezed_covariance(state.z[mode])[0, 0]
    cov = 0.5 * np.eye(W) + (v_sym - 0.5) / W * np.ones((W, W))
    mean = np.full(W, np.sqrt(2) * state.alpha[mode].real)
    return rng.multivariate_normal(mean, cov, size=shots, method="cholesky")
