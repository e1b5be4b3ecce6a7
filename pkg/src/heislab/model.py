"""Hybrid spin-boson Hamiltonians and the benchmark model zoo.

A :class:`HybridHamiltonian` stores

    H = sum_a xi_a E_a + sum_n omega_n b_n^dag b_n
        + sum_{a,n} lambda_a^n E_a (b_n^dag + b_n)

with the E_a Pauli strings. The coupling multiplies ``b + b^dag`` (not the
normalized quadrature), which is the form the displacement-channel formulas
are written in. Constant offsets (e.g. the ``1`` in ``1 - Z_i``) are stored
under the identity string.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np
from scipy import integrate

from .errors import InvalidLocalityError, ShapeError, UnsupportedModelError
from .pauli import PauliString, as_pauli, support


@dataclass(frozen=True)
class HybridHamiltonian:
    n_qubits: int
    locality: int
    spin_terms: Mapping[PauliString, float]
    mode_freqs: tuple[float, ...]
    couplings: Mapping[tuple[PauliString, int], float] = field(default_factory=dict)

    def __post_init__(self):
        spin = {}
        for p, xi in dict(self.spin_terms).items():
            p = as_pauli(p)
            if p in spin:
                raise ValueError(f"duplicate spin term {p}")
            spin[p] = float(xi)
        coup = {}
        for (p, n), lam in dict(self.couplings).items():
            coup[(as_pauli(p), int(n))] = float(lam)
        freqs = tuple(float(w) for w in self.mode_freqs)
        object.__setattr__(self, "spin_terms", MappingProxyType(spin))
        object.__setattr__(self, "couplings", MappingProxyType(coup))
        object.__setattr__(self, "mode_freqs", freqs)

        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if not 1 <= self.locality <= self.n_qubits:
            raise InvalidLocalityError(f"locality {self.locality} invalid for {self.n_qubits} qubits")
        for p in list(spin) + [p for p, _ in coup]:
            if len(p) != self.n_qubits:
                raise ShapeError(f"{p} does not act on {self.n_qubits} qubits")
            if len(support(p)) > self.locality:
                raise InvalidLocalityError(f"{p} exceeds locality {self.locality}")
        if any(not w > 0 for w in freqs):
            raise ValueError("mode frequencies must be positive")
        for _, n in coup:
            if not 0 <= n < len(freqs):
                raise ShapeError(f"coupling refers to missing mode {n}")

    @property
    def n_modes(self) -> int:
        return len(self.mode_freqs)

    def coupling_vector(self, p) -> np.ndarray:
        """lambda_p^n for every mode n (zeros where absent)."""
        p = as_pauli(p)
        return np.array([self.couplings.get((p, n), 0.0) for n in range(self.n_modes)])

    def coupling_paulis(self) -> list[PauliString]:
        seen = []
        for p, _ in self.couplings:
            if p not in seen:
                seen.append(p)
        return seen

    def replace(self, **kw) -> "HybridHamiltonian":
        data = dict(
            n_qubits=self.n_qubits,
            locality=self.locality,
            spin_terms=dict(self.spin_terms),
            mode_freqs=self.mode_freqs,
            couplings=dict(self.couplings),
        )
        data.update(kw)
        return HybridHamiltonian(**data)

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "locality": self.locality,
            "spin_terms": [{"pauli": str(p), "xi": xi} for p, xi in self.spin_terms.items()],
            "modes": list(self.mode_freqs),
            "couplings": [
                {"pauli": str(p), "mode": n, "lambda": lam}
                for (p, n), lam in self.couplings.items()
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HybridHamiltonian":
        return cls(
            n_qubits=int(data["n_qubits"]),
            locality=int(data["locality"]),
            spin_terms={PauliString(t["pauli"]): t["xi"] for t in data["spin_terms"]},
            mode_freqs=tuple(data["modes"]),
            couplings={
                (PauliString(c["pauli"]), int(c["mode"])): c["lambda"]
                for c in data.get("couplings", [])
            },
        )

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "HybridHamiltonian":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SpectralDensitySpec:
    """Lorentzian-type bath J(w) = eta w / ((w^2 - Omega^2)^2 + gamma^2 w^2)."""

    eta: float = 0.01
    gamma: float = 1.0
    Omega: float = 2.0
    omega_cut: float = 4.0
    n_modes: int = 50

    def __post_init__(self):
        if not (self.eta > 0 and self.gamma > 0 and self.Omega > 0 and self.omega_cut > 0):
            raise ValueError("spectral density parameters must be positive")
        if self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")

    def J(self, w):
        w = np.asarray(w, dtype=float)
        return self.eta * w / ((w**2 - self.Omega**2) ** 2 + self.gamma**2 * w**2)

    def bin_edges(self) -> np.ndarray:
        return np.linspace(0.0, self.omega_cut, self.n_modes + 1)


def discretize_spectral_density(spec: SpectralDensitySpec) -> list[tuple[float, float]]:
    """Return ``(Lambda_n, omega_n)`` pairs from equal-width bins of ``[0, omega_cut]``.

    Lambda_n^2 is the integral of J over the bin and omega_n the J-weighted
    centroid of the bin.
    """
    edges = spec.bin_edges()
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        w2, _ = integrate.quad(spec.J, lo, hi, epsrel=1e-10, epsabs=0.0, limit=200)
        m1, _ = integrate.quad(lambda w: w * spec.J(w), lo, hi, epsrel=1e-10, epsabs=0.0, limit=200)
        out.append((float(np.sqrt(w2)), float(m1 / w2)))
    return out


GDM_TERMS = tuple(
    PauliString("".join(word))
    for pos in ((0, 1), (0, 2), (1, 2))
    for a in "XYZ"
    for b in "XYZ"
    for word in [[a if j == pos[0] else b if j == pos[1] else "I" for j in range(3)]]
)


def build_gdm(rng_seed) -> HybridHamiltonian:
    """Generalized Dicke model: 27 two-body strings on 3 qubits, one mode at omega=1."""
    rng = np.random.default_rng(rng_seed)
    xi = rng.uniform(0.5, 1.5, size=len(GDM_TERMS))
    lam = rng.uniform(0.01, 0.03, size=len(GDM_TERMS))
    return HybridHamiltonian(
        n_qubits=3,
        locality=2,
        spin_terms=dict(zip(GDM_TERMS, xi)),
        mode_freqs=(1.0,),
        couplings={(p, 0): l for p, l in zip(GDM_TERMS, lam)},
    )


def build_sbm(spec: SpectralDensitySpec, rng_seed) -> HybridHamiltonian:
    """Single qubit coupled to a discretized bath; lambda_a^n = kappa_a Lambda_n."""
    rng = np.random.default_rng(rng_seed)
    paulis = [PauliString(c) for c in "XYZ"]
    xi = rng.uniform(0.5, 1.5, size=3)
    kappa = rng.uniform(0.5, 1.5, size=3)
    modes = discretize_spectral_density(spec)
    couplings = {
        (p, n): float(k * lam_n)
        for p, k in zip(paulis, kappa)
        for n, (lam_n, _) in enumerate(modes)
    }
    return HybridHamiltonian(
        n_qubits=1,
        locality=1,
        spin_terms=dict(zip(paulis, xi)),
        mode_freqs=tuple(w for _, w in modes),
        couplings=couplings,
    )


def _param(parameters, key, size, rng, lo, hi):
    if key in parameters:
        val = np.broadcast_to(np.asarray(parameters[key], dtype=float), (size,))
        return np.array(val)
    return rng.uniform(lo, hi, size=size)


def _two_site(n, i, a, b=None):
    b = a if b is None else b
    letters = ["I"] * n
    letters[i], letters[i + 1] = a, b
    return PauliString("".join(letters))


def _one_site(n, i, a):
    letters = ["I"] * n
    letters[i] = a
    return PauliString("".join(letters))


def _accumulate(table, key, value):
    table[key] = table.get(key, 0.0) + value


def build_named_model(name: str, size: int, parameters: dict | None = None, rng_seed=0) -> HybridHamiltonian:
    """Jordan-Wigner forms of the 1D Holstein, SSH and spin-Peierls chains (open boundary).

    ``parameters`` may fix ``xi``, ``lam`` and ``omega`` (scalars or per-site /
    per-bond arrays); anything missing is drawn from the seeded RNG.
    """
    if size < 2:
        raise ValueError("size must be >= 2")
    parameters = dict(parameters or {})
    rng = np.random.default_rng(rng_seed)
    n = size
    ident = PauliString.identity(n)
    spin: dict[PauliString, float] = {}
    coup: dict[tuple[PauliString, int], float] = {}

    if name == "holstein":
        xi = _param(parameters, "xi", n - 1, rng, 0.5, 1.5)
        lam = _param(parameters, "lam", n, rng, 0.01, 0.03)
        omega = _param(parameters, "omega", n, rng, 0.5, 1.5)
        for i in range(n - 1):
            spin[_two_site(n, i, "X")] = xi[i]
            spin[_two_site(n, i, "Y")] = xi[i]
        for i in range(n):
            _accumulate(coup, (ident, i), lam[i])
            coup[(_one_site(n, i, "Z"), i)] = -lam[i]
        freqs = omega
    elif name == "ssh":
        xi = _param(parameters, "xi", n, rng, 0.5, 1.5)
        lam = _param(parameters, "lam", n - 1, rng, 0.01, 0.03)
        omega = _param(parameters, "omega", n - 1, rng, 0.5, 1.5)
        for i in range(n):
            _accumulate(spin, ident, xi[i])
            spin[_one_site(n, i, "Z")] = -xi[i]
        for i in range(n - 1):
            coup[(_two_site(n, i, "X"), i)] = lam[i]
            coup[(_two_site(n, i, "Y"), i)] = lam[i]
        freqs = omega
    elif name == "spin_peierls":
        # S_i.S_{i+1} = (XX + YY + ZZ)/4 and X_n = (b + b^dag)/sqrt(2)
        xi = _param(parameters, "xi", n - 1, rng, 0.5, 1.5)
        lam = _param(parameters, "lam", n - 1, rng, 0.01, 0.03)
        omega = _param(parameters, "omega", n, rng, 0.5, 1.5)
        for i in range(n - 1):
            for a in "XYZ":
                p = _two_site(n, i, a)
                spin[p] = xi[i] / 4
                g = lam[i] / (4 * np.sqrt(2))
                _accumulate(coup, (p, i + 1), g)
                _accumulate(coup, (p, i), -g)
        freqs = omega
    else:
        raise UnsupportedModelError(f"unknown model {name!r}")

    return HybridHamiltonian(
        n_qubits=n,
        locality=2,
        spin_terms=spin,
        mode_freqs=tuple(freqs),
        couplings=coup,
    )
