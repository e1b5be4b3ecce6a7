"""Pauli-string algebra for the spin sector.

Only the pieces the learning protocols need are here: supports, the
commuting sets ``S_b`` generated by a k-local string, eigenstate labels,
eigenvalue signs and the Hadamard-structured linear system that maps branch
eigenvalues back to term coefficients.

Conventions
-----------
* Qubit 0 is the leftmost letter and the most significant tensor factor.
* ``S_b`` is ordered by the bitstring ``s`` descending from all ones, so
  index 0 is ``E_b`` itself and the identity comes last.
* Eigenstate labels ``l`` carry one bit per support qubit; ``l_i = 1`` means
  the local eigenvalue is -1. Labels are enumerated ascending from all zeros.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .errors import (
    InvalidLocalityError,
    InvalidPauliError,
    NotSimultaneouslyDiagonalError,
    ShapeError,
)

LETTERS = "IXYZ"

_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# (+1 eigenvector, -1 eigenvector) for each non-identity letter
_EIGVECS = {
    "X": (np.array([1, 1]) / np.sqrt(2), np.array([1, -1]) / np.sqrt(2)),
    "Y": (np.array([1, 1j]) / np.sqrt(2), np.array([1, -1j]) / np.sqrt(2)),
    "Z": (np.array([1, 0]), np.array([0, 1])),
}


@dataclass(frozen=True, order=True)
class PauliString:
    """A word over {I, X, Y, Z}; serialized as the uppercase word itself."""

    letters: str

    def __post_init__(self):
        if not isinstance(self.letters, str) or len(self.letters) == 0:
            raise InvalidPauliError("Pauli string must be a non-empty word")
        if any(ch not in LETTERS for ch in self.letters):
            raise InvalidPauliError(f"invalid Pauli letters in {self.letters!r}")

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls("I" * n_qubits)

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def weight(self) -> int:
        return len(support(self))

    def is_identity(self) -> bool:
        return set(self.letters) == {"I"}

    def __str__(self):
        return self.letters

    def __len__(self):
        return len(self.letters)

    def __getitem__(self, j):
        return self.letters[j]

    def commutes_with(self, other: "PauliString") -> bool:
        n_anti = sum(
            1 for a, b in zip(self.letters, other.letters)
            if a != "I" and b != "I" and a != b
        )
        return n_anti % 2 == 0

    def matrix(self) -> np.ndarray:
        return pauli_matrix(self.letters)


def as_pauli(p) -> PauliString:
    return p if isinstance(p, PauliString) else PauliString(str(p))


@lru_cache(maxsize=4096)
def _pauli_matrix_cached(letters: str) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for ch in letters:
        out = np.kron(out, _MATRICES[ch])
    out.setflags(write=False)
    return out


def pauli_matrix(p) -> np.ndarray:
    """Dense 2^n x 2^n matrix of a Pauli string (read-only, cached)."""
    return _pauli_matrix_cached(as_pauli(p).letters)


def support(p) -> tuple[int, ...]:
    """Positions of the non-identity letters."""
    return tuple(j for j, ch in enumerate(as_pauli(p).letters) if ch != "I")


def enumerate_eb(n_qubits: int, k: int) -> list[PauliString]:
    """All Pauli strings with support exactly ``k``, in lexicographic order.

    There are ``3**k * comb(n_qubits, k)`` of them.
    """
    if not 1 <= k <= n_qubits:
        raise InvalidLocalityError(f"need 1 <= k <= n_qubits, got k={k}, n_qubits={n_qubits}")
    out = []
    for word in itertools.product(LETTERS, repeat=n_qubits):
        if sum(ch != "I" for ch in word) == k:
            out.append(PauliString("".join(word)))
    assert len(out) == 3**k * comb(n_qubits, k)
    return out


def enumerate_local(n_qubits: int, k: int) -> list[PauliString]:
    """All non-identity strings with support at most ``k``."""
    return [p for w in range(1, k + 1) for p in enumerate_eb(n_qubits, w)]


def _s_bits(e_s: PauliString, e_b: PauliString) -> tuple[int, ...]:
    """Bitstring of ``e_s`` relative to ``e_b``; raises if ``e_s`` is not in S_b."""
    if len(e_s) != len(e_b):
        raise ShapeError("Pauli strings of different length")
    supp = support(e_b)
    for j, ch in enumerate(e_s.letters):
        if ch != "I" and (j not in supp or ch != e_b.letters[j]):
            raise NotSimultaneouslyDiagonalError(f"{e_s} is not in S_b of {e_b}")
    return tuple(int(e_s.letters[j] != "I") for j in supp)


def build_sb_set(e_b) -> list[PauliString]:
    """The 2^k commuting strings obtained by replacing letters of ``e_b`` with I."""
    e_b = as_pauli(e_b)
    supp = support(e_b)
    if not supp:
        raise InvalidPauliError("E_b must not be the identity")
    k = len(supp)
    out = []
    for s in range(2**k - 1, -1, -1):
        letters = list("I" * len(e_b))
        for i, j in enumerate(supp):
            if (s >> (k - 1 - i)) & 1:
                letters[j] = e_b.letters[j]
        out.append(PauliString("".join(letters)))
    return out


def in_sb(p, e_b) -> bool:
    try:
        _s_bits(as_pauli(p), as_pauli(e_b))
    except NotSimultaneouslyDiagonalError:
        return False
    return True


@dataclass(frozen=True)
class EigenstateLabel:
    """k-bit label of a simultaneous eigenstate of S_b; bit 1 means eigenvalue -1."""

    bits: tuple[int, ...]

    @classmethod
    def from_int(cls, value: int, k: int) -> "EigenstateLabel":
        return cls(tuple((value >> (k - 1 - i)) & 1 for i in range(k)))

    def __int__(self):
        v = 0
        for b in self.bits:
            v = (v << 1) | b
        return v

    def __len__(self):
        return len(self.bits)


def eigenstate_labels(e_b) -> list[EigenstateLabel]:
    k = len(support(e_b))
    return [EigenstateLabel.from_int(v, k) for v in range(2**k)]


def _as_label(l, k: int) -> EigenstateLabel:
    if isinstance(l, EigenstateLabel):
        lab = l
    elif isinstance(l, (int, np.integer)):
        lab = EigenstateLabel.from_int(int(l), k)
    else:
        lab = EigenstateLabel(tuple(int(b) for b in l))
    if len(lab) != k:
        raise ShapeError(f"label has {len(lab)} bits, expected {k}")
    return lab


def eigenvalue_gamma(e_s, e_b, l) -> int:
    """Sign gamma_l^s = (-1)^(l.s) of ``e_s`` on the eigenstate ``l`` of ``e_b``."""
    e_s, e_b = as_pauli(e_s), as_pauli(e_b)
    s = _s_bits(e_s, e_b)
    lab = _as_label(l, len(s))
    return -1 if sum(a * b for a, b in zip(lab.bits, s)) % 2 else 1


def eigenstate_vector(e_b, l) -> np.ndarray:
    """State vector of |E_b>_l; qubits outside the support are put in |0>."""
    e_b = as_pauli(e_b)
    supp = support(e_b)
    lab = _as_label(l, len(supp))
    vec = np.ones(1, dtype=complex)
    for j, ch in enumerate(e_b.letters):
        if ch == "I":
            local = np.array([1, 0], dtype=complex)
        else:
            local = _EIGVECS[ch][lab.bits[supp.index(j)]].astype(complex)
        vec = np.kron(vec, local)
    return vec


@dataclass(frozen=True)
class GammaMatrix:
    """Signs ``entries[l, s] = (-1)^(l.s)``; rows follow labels, columns follow S_b."""

    e_b: PauliString
    entries: np.ndarray

    @property
    def k(self) -> int:
        return int(np.log2(self.entries.shape[0]))

    @property
    def sb(self) -> list[PauliString]:
        return build_sb_set(self.e_b)


@lru_cache(maxsize=64)
def _hadamard_signs(k: int) -> np.ndarray:
    ls = np.arange(2**k)
    ss = np.arange(2**k - 1, -1, -1)
    dots = np.array([[bin(a & b).count("1") for b in ss] for a in ls])
    out = np.where(dots % 2, -1, 1).astype(np.int8)
    out.setflags(write=False)
    return out


def gamma_matrix(e_b) -> GammaMatrix:
    e_b = as_pauli(e_b)
    k = len(support(e_b))
    if k == 0:
        raise InvalidPauliError("E_b must not be the identity")
    return GammaMatrix(e_b, _hadamard_signs(k))


def solve_coefficients(gamma: GammaMatrix, c_vec) -> np.ndarray:
    """Solve ``Gamma c = C`` using orthogonality, ``c = Gamma^T C / 2^k``.

    ``c_vec`` may carry extra trailing axes (e.g. one column per mode).
    """
    c_vec = np.asarray(c_vec, dtype=float)
    n = gamma.entries.shape[0]
    if c_vec.shape[0] != n:
        raise ShapeError(f"right-hand side has length {c_vec.shape[0]}, expected {n}")
    g = gamma.entries.astype(float)
    return np.tensordot(g.T, c_vec, axes=1) / n
