"""Random unitary transformations (RUT) and finite-R circuits.

Three layer kinds are supported:

* ``U1``  - ``exp(-i theta sum_n b_n^dag b_n)``, one theta ~ U(0, 2pi) for all modes.
  Averaging it removes every spin-boson coupling.
* ``U2b`` - a product of single-qubit rotations built from ``e_b``. Support
  qubits get ``exp(-i theta_j P_j)`` with ``P_j`` the letter of ``e_b``;
  off-support qubits get ``exp(-i theta_j X) exp(-i phi_j Y)``. All angles are
  U(0, pi). Averaging keeps exactly the terms whose string lies in S_b.
* ``U3``  - ``exp(+i omega_tilde_n b_n^dag b_n tau)``, appended on the right of
  each segment to cancel the bare mode frequency.

One segment of a finite-R circuit applies, in time order, U3, U, exp(-iH tau), U^dag.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np

from . import fock
from .errors import ContractViolation, ResourceGuardError, ShapeError
from .model import HybridHamiltonian
from .pauli import PauliString, as_pauli, in_sb, support

KINDS = ("U1", "U2b", "U3")

_I2 = np.eye(2, dtype=complex)
_P2 = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class UnitaryLayer:
    kind: str
    e_b: PauliString | None = None
    theta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    phi: np.ndarray = field(default_factory=lambda: np.zeros(0))
    omega_tilde: tuple[float, ...] = ()
    tau: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractViolation(f"unknown layer kind {self.kind!r}")
        th = np.atleast_1d(np.asarray(self.theta, dtype=float))
        ph = np.atleast_1d(np.asarray(self.phi, dtype=float))
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "phi", ph)
        if self.kind == "U1" and th.size and not (0 <= th[0] < 2 * np.pi):
            raise ValueError("U1 angle must lie in [0, 2pi)")
        if self.kind == "U2b" and (np.any(th < 0) or np.any(th >= np.pi) or np.any(ph < 0) or np.any(ph >= np.pi)):
            raise ValueError("U2b angles must lie in [0, pi)")

    def spin_matrix(self) -> np.ndarray:
        """Dense spin-space unitary of a U2b layer."""
        if self.kind != "U2b":
            raise ContractViolation("only U2b layers act on the spin register")
        ang = np.stack([self.theta, self.phi], axis=-1)[None]
        return spin_unitaries(self.e_b, ang)[0]

    def angle_sets(self) -> list[tuple[float, ...]]:
        """Per-qubit angles: (theta,) on the support, (theta, phi) elsewhere."""
        supp = support(self.e_b)
        return [
            (float(self.theta[j]),) if j in supp else (float(self.theta[j]), float(self.phi[j]))
            for j in range(len(self.e_b))
        ]


@dataclass(frozen=True)
class ReshapePlan:
    kinds: tuple[str, ...]
    R: int
    tau: float
    e_b: PauliString | None = None
    omega_tilde: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.R < 1 or not self.tau > 0:
            raise ValueError("need R >= 1 and tau > 0")
        for k in self.kinds:
            if k not in KINDS:
                raise ContractViolation(f"unknown layer kind {k!r}")
        if "U2b" in self.kinds and self.e_b is None:
            raise ContractViolation("U2b needs e_b")
        if "U3" in self.kinds and self.omega_tilde is None:
            raise ContractViolation("U3 needs omega_tilde")

    @property
    def t(self) -> float:
        return self.R * self.tau


def effective_hamiltonian(h: HybridHamiltonian, kinds, e_b=None) -> HybridHamiltonian:
    """Symbolic theta-average of U^dag H U for the given layer kinds."""
    spin = dict(h.spin_terms)
    coup = dict(h.couplings)
    for kind in kinds:
        if kind == "U1":
            coup = {}
        elif kind == "U2b":
            if e_b is None:
                raise ContractViolation("U2b needs e_b")
            e_b = as_pauli(e_b)
            spin = {p: v for p, v in spin.items() if in_sb(p, e_b)}
            coup = {k: v for k, v in coup.items() if in_sb(k[0], e_b)}
        else:
            raise ContractViolation(f"{kind!r} has no symbolic filter")
    return h.replace(spin_terms=spin, couplings=coup)


def effective_dense(h: HybridHamiltonian, kinds, e_b, cutoffs, omega_tilde=None) -> fock.DenseOperator:
    """Dense effective generator, with U3 shifting each frequency by -omega_tilde."""
    heff = effective_hamiltonian(h, kinds, e_b)
    mat = fock.materialize(heff, cutoffs).matrix
    if omega_tilde is not None:
        mat = mat - np.diag(_number_diag(h.n_qubits, cutoffs, omega_tilde))
    return fock.DenseOperator(mat)


def _number_diag(n_qubits, cutoffs, weights) -> np.ndarray:
    """Diagonal of sum_n w_n b_n^dag b_n on the composite space."""
    diag = np.zeros(1)
    for d, w in zip(cutoffs, weights):
        diag = (diag[:, None] + w * np.arange(d)[None, :]).ravel()
    return np.tile(diag, 2**n_qubits)


def sample_angles(kind: str, n_qubits: int, n: int, rng) -> np.ndarray:
    """Batch of raw angles: (n,) for U1, (n, n_qubits, 2) for U2b."""
    if kind == "U1":
        return rng.uniform(0.0, 2 * np.pi, size=n)
    if kind == "U2b":
        return rng.uniform(0.0, np.pi, size=(n, n_qubits, 2))
    raise ContractViolation(f"{kind!r} layers carry no random angles")


def sample_layer(kind: str, e_b=None, rng=None, n_qubits: int | None = None) -> UnitaryLayer:
    rng = rng if rng is not None else np.random.default_rng()
    if kind == "U1":
        return UnitaryLayer("U1", theta=sample_angles("U1", 0, 1, rng))
    if kind == "U2b":
        if e_b is None:
            raise ContractViolation("U2b needs e_b")
        e_b = as_pauli(e_b)
        ang = sample_angles("U2b", len(e_b), 1, rng)[0]
        phi = ang[:, 1].copy()
        phi[list(support(e_b))] = 0.0
        return UnitaryLayer("U2b", e_b=e_b, theta=ang[:, 0], phi=phi)
    raise ContractViolation(f"cannot sample a {kind!r} layer")


def local_unitaries(e_b, angles: np.ndarray) -> np.ndarray:
    """Single-qubit factors (n, n_qubits, 2, 2) of U2b for a batch of angles."""
    e_b = as_pauli(e_b)
    angles = np.asarray(angles, dtype=float)
    n, nq = angles.shape[:2]
    out = np.empty((n, nq, 2, 2), dtype=complex)
    for j, ch in enumerate(e_b.letters):
        th = angles[:, j, 0][:, None, None]
        if ch != "I":
            out[:, j] = np.cos(th) * _I2 - 1j * np.sin(th) * _P2[ch]
        else:
            ph = angles[:, j, 1][:, None, None]
            rx = np.cos(th) * _I2 - 1j * np.sin(th) * _P2["X"]
            ry = np.cos(ph) * _I2 - 1j * np.sin(ph) * _P2["Y"]
            out[:, j] = rx @ ry
    return out


def spin_unitaries(e_b, angles: np.ndarray) -> np.ndarray:
    """Full spin-space U2b matrices (n, 2^nq, 2^nq), qubit 0 most significant."""
    loc = local_unitaries(e_b, angles)
    n, nq = loc.shape[:2]
    u = loc[:, 0]
    for j in range(1, nq):
        u = np.einsum("bij,bkl->bikjl", u, loc[:, j]).reshape(n, 2 ** (j + 1), 2 ** (j + 1))
    return u


def _operator_terms(h: HybridHamiltonian, cutoffs):
    """H as a list of (spin matrix, boson matrix) Kronecker pairs."""
    spin_dim = 2**h.n_qubits
    bdims = list(cutoffs)
    bos_dim = prod(bdims)
    terms = [(fock._spin_part(h), np.eye(bos_dim, dtype=complex))]
    num = np.diag(_number_diag(0, bdims, h.mode_freqs)[:bos_dim]).astype(complex)
    terms.append((np.eye(spin_dim, dtype=complex), num))
    for n, V in enumerate(fock._coupling_parts(h)):
        a = fock.annihilation(bdims[n])
        x = fock._embed(a + a.conj().T, n, bdims)
        terms.append((V, x))
    return terms


def _kron_moments(varying, fixed, spin_varies: bool):
    """Mean and entrywise stderr of ``sum_t kron(V_t, F_t)`` from samples of the V_t.

    ``varying`` is a list of (N, a, a) sample stacks and ``fixed`` the matching
    (b, b) factors. Only the small varying factor is sampled, so the full
    matrix is never materialized per sample.
    """
    N = varying[0].shape[0]
    a = varying[0].shape[1]
    b = fixed[0].shape[0]
    comps = np.concatenate([np.stack([v.real, v.imag], 1) for v in varying], axis=1).reshape(N, -1, a * a)
    mean_c = comps.mean(0)
    dev = comps - mean_c
    cov = np.einsum("nqi,npi->qpi", dev, dev) / max(N - 1, 1)
    coef_re = np.concatenate([np.stack([F.real, -F.imag]) for F in fixed]).reshape(-1, b * b)
    coef_im = np.concatenate([np.stack([F.imag, F.real]) for F in fixed]).reshape(-1, b * b)
    var_re = np.einsum("qpi,qk,pk->ik", cov, coef_re, coef_re)
    var_im = np.einsum("qpi,qk,pk->ik", cov, coef_im, coef_im)
    mean = sum(np.kron(v.mean(0), F) if spin_varies else np.kron(F, v.mean(0))
               for v, F in zip(varying, fixed))

    def arrange(x):
        x = np.maximum(x, 0.0).reshape(a, a, b, b)
        if spin_varies:
            return x.transpose(0, 2, 1, 3).reshape(a * b, a * b)
        return x.transpose(2, 0, 3, 1).reshape(a * b, a * b)

    return mean, np.sqrt(arrange(var_re) / N), np.sqrt(arrange(var_im) / N)


def monte_carlo_effective(h: HybridHamiltonian, kind: str, e_b=None, cutoffs=(16,), samples=10_000,
                          rng=None):
    """Sample average of U^dag H U and its entrywise standard errors (real, imaginary).

    Returns ``(mean, stderr_re, stderr_im)`` as dense arrays over the composite space.
    """
    rng = rng if rng is not None else np.random.default_rng()
    cutoffs = list(cutoffs)[: h.n_modes]
    bos_dim = prod(cutoffs)
    if 2**h.n_qubits * bos_dim > fock.MAX_DIM:
        raise ResourceGuardError("composite dimension above guard")
    terms = _operator_terms(h, cutoffs)
    if kind == "U2b":
        u = spin_unitaries(e_b, sample_angles("U2b", h.n_qubits, samples, rng))
        ud = np.conj(np.swapaxes(u, 1, 2))
        varying = [ud @ S @ u for S, _ in terms]
        return _kron_moments(varying, [O for _, O in terms], spin_varies=True)
    if kind == "U1":
        diag_n = _number_diag(0, cutoffs, np.ones(len(cutoffs)))[:bos_dim]
        th = sample_angles("U1", 0, samples, rng)
        ph = np.exp(1j * th[:, None] * diag_n[None, :])
        varying = [ph[:, :, None] * O[None] * np.conj(ph)[:, None, :] for _, O in terms]
        return _kron_moments(varying, [S for S, _ in terms], spin_varies=False)
    raise ContractViolation(f"{kind!r} has no Monte-Carlo average")


@dataclass
class FiniteRCircuit:
    """R-segment program ``prod_i U_i^dag exp(-iH tau) U_i [U3]`` on a dense state."""

    propagator: np.ndarray
    layers: list
    n_qubits: int
    cutoffs: tuple[int, ...]
    u3_diag: np.ndarray | None = None

    @property
    def R(self) -> int:
        return len(self.layers)

    def apply(self, state: fock.DenseHybridState) -> fock.DenseHybridState:
        spin_dim = 2**self.n_qubits
        psi = state.amplitudes.copy()
        for layer in self.layers:
            if self.u3_diag is not None:
                psi = self.u3_diag * psi
            u = _layer_full_spin(layer, spin_dim)
            psi = _apply_spin(u, psi, spin_dim)
            psi = self.propagator @ psi
            psi = _apply_spin(u.conj().T, psi, spin_dim)
        return fock.DenseHybridState(psi, state.n_qubits, state.cutoffs)


def _layer_full_spin(layer, spin_dim):
    if layer is None:
        return np.eye(spin_dim, dtype=complex)
    return layer.spin_matrix()


def _apply_spin(u, psi, spin_dim):
    return (u @ psi.reshape(spin_dim, -1)).ravel()


def build_finite_r_circuit(h: HybridHamiltonian, plan: ReshapePlan, e_b=None, omega_tilde=None,
                           rng=None, cutoffs=(fock.DEFAULT_CUTOFF,)) -> FiniteRCircuit:
    """Sample R fresh U2b layers and bind them to the dense segment propagator."""
    rng = rng if rng is not None else np.random.default_rng()
    cutoffs = tuple(int(c) for c in np.broadcast_to(cutoffs, (h.n_modes,)))
    e_b = as_pauli(e_b) if e_b is not None else plan.e_b
    if "U1" in plan.kinds:
        raise ContractViolation("finite-R circuits here cover U2b/U3 plans")
    H = fock.materialize(h, cutoffs)
    E = fock.propagator(H, plan.tau)
    layers = [sample_layer("U2b", e_b, rng) if "U2b" in plan.kinds else None for _ in range(plan.R)]
    u3 = None
    if "U3" in plan.kinds:
        w = omega_tilde if omega_tilde is not None else plan.omega_tilde
        u3 = np.exp(1j * plan.tau * _number_diag(h.n_qubits, cutoffs, w))
    return FiniteRCircuit(E, layers, h.n_qubits, cutoffs, u3)


@dataclass(frozen=True)
class DeviationRow:
    t: float
    tau: float
    R: int
    mean_td: float
    var_td: float
    stderr: float
    trials: int


def _batched_segments(E, u3, e_b, n_qubits, psi, n_seg, rng, prev_u):
    """Advance a (dim, B) batch by ``n_seg`` segments, one fresh U2b per trial per segment."""
    spin_dim = 2**n_qubits
    B = psi.shape[1]
    for _ in range(n_seg):
        u = spin_unitaries(e_b, sample_angles("U2b", n_qubits, B, rng))
        # U_{i+1} U_i^dag commutes with the boson-only U3 diagonal, so merge them
        step = u @ np.conj(np.swapaxes(prev_u, 1, 2))
        if u3 is not None:
            psi = u3[:, None] * psi
        ps = psi.reshape(spin_dim, -1, B)
        psi = np.einsum("bij,jkb->ikb", step, ps).reshape(-1, B)
        psi = E @ psi
        prev_u = u
    return psi, prev_u


def deviation_study(h: HybridHamiltonian, e_b, t_grid, tau_grid, trials: int = 300, seed=0,
                    cutoffs=(fock.DEFAULT_CUTOFF,), omega_tilde=None, label=0,
                    leakage_threshold=fock.LEAKAGE_THRESHOLD) -> list[DeviationRow]:
    """Trace distance between finite-R circuits and the effective evolution.

    Every tau runs ``trials`` independent circuits up to max(t_grid) and is
    snapshotted at each t; R = round(t / tau).
    """
    from .pauli import eigenstate_vector

    if trials < 2:
        raise ValueError("need at least 2 trials")
    e_b = as_pauli(e_b)
    cutoffs = tuple(int(c) for c in np.broadcast_to(cutoffs, (h.n_modes,)))
    w_tilde = tuple(h.mode_freqs) if omega_tilde is None else tuple(omega_tilde)
    H = fock.materialize(h, cutoffs)
    Heff = effective_dense(h, ["U2b"], e_b, cutoffs, w_tilde)
    psi0 = fock.vacuum_product(eigenstate_vector(e_b, label), cutoffs)
    ts = sorted(float(t) for t in t_grid)
    ideal = {}
    for t in ts:
        st = fock.evolve(psi0, Heff, t)
        st.check_leakage(leakage_threshold)
        ideal[t] = st.amplitudes
    ss = np.random.SeedSequence(seed)
    rows = []
    spin_dim = 2**h.n_qubits
    for tau, child in zip(tau_grid, ss.spawn(len(tau_grid))):
        tau = float(tau)
        rng = np.random.default_rng(child)
        E = fock.propagator(H, tau)
        u3 = np.exp(1j * tau * _number_diag(h.n_qubits, cutoffs, w_tilde))
        psi = np.repeat(psi0.amplitudes[:, None], trials, axis=1)
        prev = np.repeat(np.eye(spin_dim, dtype=complex)[None], trials, axis=0)
        done = 0
        for t in ts:
            R = max(int(round(t / tau)), 0)
            psi, prev = _batched_segments(E, u3, e_b, h.n_qubits, psi, R - done, rng, prev)
            done = max(R, done)
            out = _apply_spin_batch(np.conj(np.swapaxes(prev, 1, 2)), psi, spin_dim)
            ov = np.abs(ideal[t].conj() @ out) ** 2
            td = np.sqrt(np.clip(1.0 - ov, 0.0, None))
            rows.append(DeviationRow(t, tau, R, float(td.mean()), float(td.var(ddof=1)),
                                     float(td.std(ddof=1) / np.sqrt(trials)), trials))
    return rows


def _apply_spin_batch(u, psi, spin_dim):
    B = psi.shape[1]
    return np.einsum("bij,jkb->ikb", u, psi.reshape(spin_dim, -1, B)).reshape(-1, B)


def deviation_rows_to_csv(rows) -> str:
    lines = ["t,tau,R,mean_td,var_td,stderr,trials"]
    for r in rows:
        lines.append(f"{r.t:.17g},{r.tau:.17g},{r.R},{r.mean_td:.17g},{r.var_td:.17g},{r.stderr:.17g},{r.trials}")
    return "\n".join(lines) + "\n"
