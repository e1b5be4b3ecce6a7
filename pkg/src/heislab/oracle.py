"""Metered black-box access to a hidden hybrid Hamiltonian.

Each public query is one experiment type: prepare a known state, evolve for
``t`` under a reshaping plan, measure. The hidden coefficients are never
returned; learners only see measurement records. Every query adds
``settings * shots * duration`` to ``total_time`` and the number of
single-shot readouts to ``total_shots``.

Backends
--------
``gaussian``  exact effective dynamics with Gaussian boson states. When
              ``tau`` is set, trotter-scheme coupling queries instead run
              finite-tau randomized trajectories (see :mod:`heislab.trajectory`).
``fock``      dense qubit x truncated-Fock evolution under the effective
              generator; homodyne draws use the exact first two moments.
"""
from __future__ import annotations

import threading
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from . import fock, gaussian, rut, trajectory
from .errors import ContractViolation, ShapeError
from .gaussian import SpamNoise
from .model import HybridHamiltonian
from .pauli import as_pauli, build_sb_set, eigenstate_vector, eigenvalue_gamma, support

BACKENDS = ("gaussian", "fock")


@dataclass
class Meter:
    total_time: float = 0.0
    total_shots: int = 0
    n_queries: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def charge(self, time: float, shots: int):
        if time < 0 or shots < 0:
            raise ValueError("meter charges must be non-negative")
        with self._lock:
            self.total_time += float(time)
            self.total_shots += int(shots)
            self.n_queries += 1

    def snapshot(self) -> tuple[float, int]:
        return self.total_time, self.total_shots


class EvolutionOracle:
    def __init__(self, hamiltonian: HybridHamiltonian, backend: str = "gaussian",
                 noise: SpamNoise | None = None, seed=0, tau: float | None = None,
                 cutoff: int = fock.DEFAULT_CUTOFF):
        if backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        if tau is not None and not tau > 0:
            raise ValueError("tau must be positive")
        self.__h = hamiltonian
        self.backend = backend
        self.noise = noise or SpamNoise()
        self.tau = tau
        self.cutoff = int(cutoff)
        self.seed = seed
        self.meter = Meter()
        self._counters: dict = {}

    # public structure (no coefficients)
    @property
    def n_qubits(self) -> int:
        return self.__h.n_qubits

    @property
    def n_modes(self) -> int:
        return self.__h.n_modes

    @property
    def total_time(self) -> float:
        return self.meter.total_time

    @property
    def total_shots(self) -> int:
        return self.meter.total_shots

    def stream(self, *key) -> np.random.Generator:
        """Independent RNG keyed by a task label and a per-key call counter."""
        label = zlib.crc32(repr(key).encode())
        with self.meter._lock:
            count = self._counters.get(label, 0)
            self._counters[label] = count + 1
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(label, count))
        return np.random.default_rng(ss)

    # effective quantities (private)
    def _branch_energy(self, e_b, l) -> float:
        e_b = as_pauli(e_b)
        return sum(
            self.__h.spin_terms.get(p, 0.0) * eigenvalue_gamma(p, e_b, l)
            for p in build_sb_set(e_b)
        )

    def _branch_coupling(self, e_b, l) -> np.ndarray:
        e_b = as_pauli(e_b)
        out = np.zeros(self.n_modes)
        for p in build_sb_set(e_b):
            out += self.__h.coupling_vector(p) * eigenvalue_gamma(p, e_b, l)
        return out

    def _flip(self, p):
        q = self.noise.qubit_flip_p
        return p * (1 - 2 * q) + q

    # experiments
    def spin_return_probabilities(self, e_b, l1, l2, t: float, shots: int) -> tuple[float, float]:
        """Empirical (p1, p2) for the pair (l1, l2) under the U1+U2b plan.

        p1: prepare (|l1>+|l2>)/sqrt2 and project back onto it.
        p2: same preparation, projected onto (|l1> - i|l2>)/sqrt2.
        Ideally p1 = (1 + cos Dt)/2 and p2 = (1 + sin Dt)/2 with D = Xi_l2 - Xi_l1.
        """
        e_b = as_pauli(e_b)
        if len(e_b) != self.n_qubits:
            raise ShapeError("E_b has the wrong number of qubits")
        rng = self.stream("spin", str(e_b), int(l1), int(l2))
        if self.backend == "gaussian":
            d = self._branch_energy(e_b, l2) - self._branch_energy(e_b, l1)
            p1 = (1 + np.cos(d * t)) / 2
            p2 = (1 + np.sin(d * t)) / 2
        else:
            heff = rut.effective_hamiltonian(self.__h, ["U1", "U2b"], e_b)
            U = linalg.expm(-1j * t * fock._spin_part(heff))
            v1, v2 = eigenstate_vector(e_b, l1), eigenstate_vector(e_b, l2)
            psi = U @ ((v1 + v2) / np.sqrt(2))
            p1 = abs(np.vdot((v1 + v2) / np.sqrt(2), psi)) ** 2
            p2 = abs(np.vdot((v1 - 1j * v2) / np.sqrt(2), psi)) ** 2
        p1, p2 = self._flip(np.clip(p1, 0, 1)), self._flip(np.clip(p2, 0, 1))
        k1 = rng.binomial(shots, p1)
        k2 = rng.binomial(shots, p2)
        self.meter.charge(2 * shots * t, 2 * shots)
        return k1 / shots, k2 / shots

    def free_quadrature_means(self, alpha, t: float, shots: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-mode sample means of X and P after free evolution under the U1 plan.

        Each mode starts in the coherent state ``alpha``; X and P come from
        separate preparations of ``shots`` each.
        """
        alpha = np.broadcast_to(np.asarray(alpha, dtype=complex), (self.n_modes,)) + self.noise.prep_offset
        rng = self.stream("free", float(t))
        if self.backend == "gaussian":
            st = gaussian.evolve_free(gaussian.GaussianBosonState.coherent(alpha), self.__h.mode_freqs, t)
            mx, mp = st.quadrature_means()
            vx = np.full(self.n_modes, 0.5)
            vp = np.full(self.n_modes, 0.5)
        else:
            mx, mp, vx, vp = (np.empty(self.n_modes) for _ in range(4))
            for n, (a, w) in enumerate(zip(alpha, self.__h.mode_freqs)):
                single = HybridHamiltonian(1, 1, {}, (w,))
                st = fock.product_state(np.array([1, 0]), [fock.coherent_vector(a, self.cutoff)], (self.cutoff,))
                st.check_leakage()
                st = fock.evolve(st, fock.materialize(single, self.cutoff), t)
                mx[n], vx[n] = fock.quadrature_moments(st, 0, "X")
                mp[n], vp[n] = fock.quadrature_moments(st, 0, "P")
        s2 = self.noise.quad_sigma**2
        xbar = mx + np.sqrt((vx + s2) / shots) * rng.standard_normal(self.n_modes)
        pbar = mp + np.sqrt((vp + s2) / shots) * rng.standard_normal(self.n_modes)
        self.meter.charge(2 * shots * t, 2 * shots)
        return xbar, pbar

    def trotter_p_samples(self, e_b, l, omega_tilde, t: float, shots: int) -> np.ndarray:
        """P readouts (shots, n_modes) after the U2b+U3 plan from |E_b>_l x vacuum."""
        e_b = as_pauli(e_b)
        omega_tilde = np.broadcast_to(np.asarray(omega_tilde, dtype=float), (self.n_modes,))
        rng = self.stream("trotter", str(e_b), int(l), float(t))
        s2 = self.noise.quad_sigma**2
        if self.tau is not None and self.backend == "gaussian":
            seed = int(rng.integers(2**63))
            b = trajectory.simulate(self.__h, e_b, l, omega_tilde, self.tau, [t], shots, seed,
                                    alpha0=self.noise.prep_offset)[:, 0, :]
            mean, var = np.sqrt(2) * b.imag, 0.5 + s2
        elif self.backend == "gaussian":
            delta = np.asarray(self.__h.mode_freqs) - omega_tilde
            st = gaussian.GaussianBosonState.coherent(np.full(self.n_modes, self.noise.prep_offset))
            st = gaussian.evolve_displaced_oscillators(st, self._branch_coupling(e_b, l), delta, t)
            mean, var = np.sqrt(2) * st.alpha.imag, 0.5 + s2
        else:
            mean, var = self._fock_moments(e_b, l, omega_tilde, t, "P")
            drift = self.noise.prep_offset * np.exp(-1j * (np.asarray(self.__h.mode_freqs) - omega_tilde) * t)
            mean, var = mean + np.sqrt(2) * drift.imag, var + s2
        out = mean + np.sqrt(var) * rng.standard_normal((shots, self.n_modes))
        self.meter.charge(shots * t, shots)
        return out

    def trotter_p_trajectories(self, e_b, l, omega_tilde, times, trials: int, seed=None) -> np.ndarray:
        """P readouts (trials, len(times), n_modes) from finite-tau trajectories.

        Each trajectory is read at every time in ``times``; each reading is
        charged as a separate experiment of that duration.
        """
        if self.tau is None:
            raise ContractViolation("trajectory queries need a finite tau")
        e_b = as_pauli(e_b)
        omega_tilde = np.broadcast_to(np.asarray(omega_tilde, dtype=float), (self.n_modes,))
        rng = self.stream("traj", str(e_b), int(l))
        seed = int(rng.integers(2**63)) if seed is None else seed
        b = trajectory.simulate(self.__h, e_b, l, omega_tilde, self.tau, times, trials, seed,
                                alpha0=self.noise.prep_offset)
        var = 0.5 + self.noise.quad_sigma**2
        out = np.sqrt(2) * b.imag + np.sqrt(var) * rng.standard_normal(b.shape)
        self.meter.charge(trials * float(np.sum(times)), trials * len(times))
        return out

    def dqs_samples(self, e_b, l, omega_tilde_n: float, mode: int, W: int, n_pt: float,
                    shots: int) -> np.ndarray:
        """Copy-averaged X readouts of an entangled squeezed probe after t = pi/omega_tilde_n.

        The probe carries ``N_pt = W * n_pt`` squeezing photons in its
        symmetric mode; each shot reads all W copies.
        """
        e_b = as_pauli(e_b)
        if W < 1:
            raise ShapeError("W must be >= 1")
        if not 0 <= mode < self.n_modes:
            raise ShapeError("mode out of range")
        t = np.pi / omega_tilde_n
        rng = self.stream("dqs", str(e_b), int(l), int(mode))
        z = gaussian.squeezing_for_photons(W * n_pt)
        st = gaussian.build_entangled_squeezed(self.n_modes, W, z)
        st = st.with_alpha(np.full(self.n_modes, self.noise.prep_offset))
        if self.backend == "gaussian":
            st = gaussian.evolve_displaced_oscillators(
                st, self._branch_coupling(e_b, l), self.__h.mode_freqs, t)
        else:
            mean, _ = self._fock_moments(e_b, l, np.zeros(self.n_modes), t, "X", mode=mode)
            alpha = np.array(st.alpha)
            phase = np.exp(-1j * self.__h.mode_freqs[mode] * t)
            alpha[mode] = alpha[mode] * phase + mean[0] / np.sqrt(2)
            z_rot = np.array(st.z) * np.exp(-2j * np.asarray(self.__h.mode_freqs) * t)
            st = gaussian.GaussianBosonState(alpha, z_rot, W)
        out = gaussian.dqs_samples(st, mode, shots, rng, self.noise)
        self.meter.charge(shots * W * t, shots * W)
        return out

    def _fock_moments(self, e_b, l, omega_tilde, t, quad, mode=None):
        """Dense effective evolution of |E_b>_l x vacuum; per-mode quadrature moments."""
        h = self.__h
        cut = (self.cutoff,) * h.n_modes
        H = rut.effective_dense(h, ["U2b"], e_b, cut, omega_tilde)
        st = fock.evolve(fock.vacuum_product(eigenstate_vector(e_b, l), cut), H, t)
        st.check_leakage()
        modes = range(h.n_modes) if mode is None else [mode]
        mom = np.array([fock.quadrature_moments(st, n, quad) for n in modes])
        return mom[:, 0], mom[:, 1]
