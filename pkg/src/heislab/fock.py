"""Brute-force qubit x truncated-Fock simulator.

Composite index layout: the spin index is the most significant part, followed
by the modes in order (mode 0 most significant), i.e.

    idx = s * prod(d) + n_0 * prod(d[1:]) + ... + n_last

which is exactly ``np.kron(spin, mode_0, mode_1, ...)``.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from math import prod

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import expm_multiply
from scipy.special import gammaln

from .errors import ContractViolation, ResourceGuardError, ShapeError, TruncationError
from .model import HybridHamiltonian
from .pauli import pauli_matrix

MAX_DIM = 2**18
# dense complex storage cap (1 GiB per matrix); larger generators are refused
DENSE_MAX_DIM = 2**13
DENSE_EXPM_MAX_DIM = 2**12
DEFAULT_CUTOFF = 32
LEAKAGE_THRESHOLD = 1e-6


def annihilation(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, d)), k=1).astype(complex)


def number_op(d: int) -> np.ndarray:
    return np.diag(np.arange(d)).astype(complex)


def quadrature_op(d: int, which: str) -> np.ndarray:
    a = annihilation(d)
    if which.upper() == "X":
        return (a + a.conj().T) / np.sqrt(2)
    if which.upper() == "P":
        return 1j * (a.conj().T - a) / np.sqrt(2)
    raise ValueError(f"unknown quadrature {which!r}")


def _check_dim(dim: int):
    if dim > MAX_DIM:
        raise ResourceGuardError(f"composite dimension {dim} exceeds guard {MAX_DIM}")


def _embed(op: np.ndarray, slot: int, dims: list[int]) -> np.ndarray:
    """Place ``op`` on tensor factor ``slot`` of ``dims``; identity elsewhere."""
    left = prod(dims[:slot])
    right = prod(dims[slot + 1:])
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


@dataclass(frozen=True)
class DenseOperator:
    matrix: np.ndarray
    hermitian: bool = True

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeError("operator must be a square matrix")
        if self.hermitian and m.size and np.max(np.abs(m - m.conj().T)) >= 1e-12:
            raise ContractViolation("operator flagged Hermitian but is not")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class DenseHybridState:
    amplitudes: np.ndarray
    n_qubits: int
    cutoffs: tuple[int, ...]

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        cut = tuple(int(c) for c in self.cutoffs)
        if amp.shape != (2**self.n_qubits * prod(cut),):
            raise ShapeError("amplitude vector does not match the declared dims")
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "cutoffs", cut)

    @property
    def dims(self) -> list[int]:
        return [2**self.n_qubits, *self.cutoffs]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def top_level_population(self) -> np.ndarray:
        """Probability in the highest Fock level of each mode."""
        probs = np.abs(self.amplitudes.reshape(self.dims)) ** 2
        out = []
        for n in range(len(self.cutoffs)):
            axis = n + 1
            out.append(float(np.take(probs, -1, axis=axis).sum()))
        return np.array(out)

    def truncation_safe(self, threshold: float = LEAKAGE_THRESHOLD) -> bool:
        return bool(np.all(self.top_level_population() < threshold))

    def check_leakage(self, threshold: float = LEAKAGE_THRESHOLD):
        pops = self.top_level_population()
        if np.any(pops >= threshold):
            raise TruncationError(f"top Fock level population {pops.max():.3g} >= {threshold:g}")

    def to_bytes(self) -> bytes:
        """Debug dump: header of dims then little-endian interleaved re/im doubles."""
        dims = self.dims
        head = struct.pack("<I", len(dims)) + struct.pack(f"<{len(dims)}I", *dims)
        return head + self.amplitudes.astype("<c16").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "DenseHybridState":
        (nd,) = struct.unpack_from("<I", blob, 0)
        dims = struct.unpack_from(f"<{nd}I", blob, 4)
        amp = np.frombuffer(blob[4 + 4 * nd:], dtype="<c16").astype(complex)
        return cls(amp, int(np.log2(dims[0])), tuple(dims[1:]))


def coherent_vector(alpha: complex, d: int) -> np.ndarray:
    """Truncated coherent state (not renormalized; leakage shows as lost norm)."""
    n = np.arange(d)
    if alpha == 0:
        v = np.zeros(d, dtype=complex)
        v[0] = 1
        return v
    logmag = -abs(alpha) ** 2 / 2 + n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(logmag) * np.exp(1j * n * np.angle(alpha))


def product_state(spin_vec, boson_vecs, cutoffs) -> DenseHybridState:
    spin_vec = np.asarray(spin_vec, dtype=complex)
    n_qubits = int(np.log2(spin_vec.size))
    amp = spin_vec
    for v in boson_vecs:
        amp = np.kron(amp, v)
    return DenseHybridState(amp, n_qubits, tuple(cutoffs))


def vacuum_product(spin_vec, cutoffs) -> DenseHybridState:
    vecs = []
    for d in cutoffs:
        v = np.zeros(d, dtype=complex)
        v[0] = 1
        vecs.append(v)
    return product_state(spin_vec, vecs, cutoffs)


def _spin_part(h: HybridHamiltonian) -> np.ndarray:
    dim = 2**h.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for p, xi in h.spin_terms.items():
        out += xi * pauli_matrix(p)
    return out


def _coupling_parts(h: HybridHamiltonian) -> list[np.ndarray]:
    """Spin operator V_n = sum_a lambda_a^n E_a multiplying (b_n + b_n^dag)."""
    dim = 2**h.n_qubits
    out = [np.zeros((dim, dim), dtype=complex) for _ in range(h.n_modes)]
    for (p, n), lam in h.couplings.items():
        out[n] += lam * pauli_matrix(p)
    return out


def materialize(h: HybridHamiltonian, cutoffs) -> DenseOperator:
    """Dense matrix of ``h`` with each mode truncated at ``cutoffs[n]`` levels."""
    cutoffs = [int(c) for c in np.broadcast_to(cutoffs, (h.n_modes,))] if h.n_modes else []
    dims = [2**h.n_qubits, *cutoffs]
    dim = prod(dims)
    _check_dim(dim)
    if dim > DENSE_MAX_DIM:
        raise ResourceGuardError(f"dense generator of dimension {dim} exceeds {DENSE_MAX_DIM}")
    mat = _embed(_spin_part(h), 0, dims)
    for n, (w, V) in enumerate(zip(h.mode_freqs, _coupling_parts(h))):
        d = cutoffs[n]
        mat = mat + w * _embed(number_op(d), n + 1, dims)
        if np.any(V):
            a = annihilation(d)
            x_slot = _embed(a + a.conj().T, n + 1, dims)
            mat = mat + _embed(V, 0, dims) @ x_slot
    return DenseOperator(mat, hermitian=True)


def boson_operator(op: np.ndarray, mode: int, n_qubits: int, cutoffs) -> DenseOperator:
    dims = [2**n_qubits, *cutoffs]
    full = _embed(op, mode + 1, dims)
    return DenseOperator(full, hermitian=bool(np.allclose(op, op.conj().T, atol=1e-13)))


def spin_operator(op: np.ndarray, cutoffs) -> DenseOperator:
    n_qubits = int(np.log2(op.shape[0]))
    return DenseOperator(_embed(op, 0, [2**n_qubits, *cutoffs]))


def propagator(op: DenseOperator, t: float) -> np.ndarray:
    if not op.hermitian:
        raise ContractViolation("evolution requires a Hermitian generator")
    return linalg.expm(-1j * t * op.matrix)


def evolve(state: DenseHybridState, op: DenseOperator, t: float) -> DenseHybridState:
    """Apply exp(-i op t); dense exponential for small dims, Krylov action otherwise."""
    if not op.hermitian:
        raise ContractViolation("evolution requires a Hermitian generator")
    if op.dim != state.amplitudes.size:
        raise ShapeError("operator and state dimensions differ")
    if t == 0:
        return state
    if op.dim <= DENSE_EXPM_MAX_DIM:
        amp = propagator(op, t) @ state.amplitudes
    else:
        amp = expm_multiply(sparse.csr_matrix(-1j * t * op.matrix), state.amplitudes)
    return DenseHybridState(amp, state.n_qubits, state.cutoffs)


def trace_distance_pure(s1, s2) -> float:
    a = s1.amplitudes if isinstance(s1, DenseHybridState) else np.asarray(s1)
    b = s2.amplitudes if isinstance(s2, DenseHybridState) else np.asarray(s2)
    if a.shape != b.shape:
        raise ShapeError("states have different shapes")
    ov = abs(np.vdot(a, b)) ** 2
    return float(np.sqrt(max(0.0, 1.0 - ov)))


def fidelity_pure(s1, s2) -> float:
    a = s1.amplitudes if isinstance(s1, DenseHybridState) else np.asarray(s1)
    b = s2.amplitudes if isinstance(s2, DenseHybridState) else np.asarray(s2)
    return float(abs(np.vdot(a, b)) ** 2)


def expectation(state: DenseHybridState, observable: DenseOperator) -> float:
    if not observable.hermitian:
        raise ContractViolation("observable must be Hermitian")
    psi = state.amplitudes
    return float(np.vdot(psi, observable.matrix @ psi).real)


def quadrature_moments(state: DenseHybridState, mode: int, which: str) -> tuple[float, float]:
    """Mean and variance of X or P on ``mode``, computed on the reduced boson state."""
    dims = state.dims
    psi = np.moveaxis(state.amplitudes.reshape(dims), mode + 1, -1).reshape(-1, dims[mode + 1])
    q = quadrature_op(dims[mode + 1], which)
    qpsi = psi @ q.T
    mean = float(np.vdot(psi, qpsi).real)
    second = float(np.vdot(qpsi, qpsi).real)
    return mean, second - mean**2


def spin_reduced(state: DenseHybridState) -> np.ndarray:
    """Reduced density matrix of the qubits."""
    m = state.amplitudes.reshape(2**state.n_qubits, -1)
    return m @ m.conj().T
