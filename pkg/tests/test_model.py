import numpy as np
import pytest
from scipy import integrate

from heislab import fock
from heislab.errors import InvalidLocalityError, UnsupportedModelError
from heislab.model import (
    GDM_TERMS,
    HybridHamiltonian,
    SpectralDensitySpec,
    build_gdm,
    build_named_model,
    build_sbm,
    discretize_spectral_density,
)
from heislab.pauli import PauliString, eigenstate_vector, eigenvalue_gamma


def test_gdm_structure():
    h = build_gdm(7)
    assert len(h.spin_terms) == 27 and len(h.couplings) == 27 and h.n_modes == 1
    assert h.mode_freqs == (1.0,)
    assert all(0.5 <= v <= 1.5 for v in h.spin_terms.values())
    assert all(0.01 <= v <= 0.03 for v in h.couplings.values())
    assert set(h.spin_terms) == set(GDM_TERMS)


def test_gdm_is_seeded():
    assert build_gdm(1).to_json() == build_gdm(1).to_json()
    assert build_gdm(1).to_json() != build_gdm(2).to_json()


def test_sbm_structure():
    spec = SpectralDensitySpec(n_modes=100)
    h = build_sbm(spec, 0)
    assert len(h.spin_terms) == 3
    assert all(0 < w < 4 for w in h.mode_freqs)
    lx, lz = h.coupling_vector("X"), h.coupling_vector("Z")
    ratio = lx / lz
    assert np.allclose(ratio, ratio[0])


def test_spectral_density_peak_value():
    assert SpectralDensitySpec().J(2.0) == pytest.approx(0.005)


def test_discretization_partitions_integral():
    spec = SpectralDensitySpec()
    modes = discretize_spectral_density(spec)
    total, _ = integrate.quad(spec.J, 0, spec.omega_cut, epsabs=0, epsrel=1e-12, limit=200)
    assert sum(lam**2 for lam, _ in modes) == pytest.approx(total, rel=1e-8)
    edges = spec.bin_edges()
    for (lam, w), lo, hi in zip(modes, edges[:-1], edges[1:]):
        assert lo <= w <= hi


def test_discretization_refinement_stable():
    a = sum(l**2 for l, _ in discretize_spectral_density(SpectralDensitySpec(n_modes=50)))
    b = sum(l**2 for l, _ in discretize_spectral_density(SpectralDensitySpec(n_modes=100)))
    assert abs(a - b) / a < 1e-8


def test_invariants_enforced():
    with pytest.raises(InvalidLocalityError):
        HybridHamiltonian(3, 1, {PauliString("XXI"): 1.0}, ())
    with pytest.raises(ValueError):
        HybridHamiltonian(1, 1, {}, (0.0,))
    with pytest.raises(ValueError):
        HybridHamiltonian(1, 1, {}, (1.0,), {(PauliString("X"), 3): 0.1})


def test_json_round_trip():
    h = build_gdm(3)
    assert HybridHamiltonian.from_json(h.to_json()) == h


def test_named_models():
    hol = build_named_model("holstein", 2, rng_seed=0)
    assert {str(p) for p in hol.spin_terms} == {"XX", "YY"}
    assert {str(p) for p, _ in hol.couplings} == {"ZI", "IZ", "II"}
    assert hol.n_modes == 2
    ssh = build_named_model("ssh", 2, rng_seed=0)
    assert ssh.n_modes == 1 and {str(p) for p, _ in ssh.couplings} == {"XX", "YY"}
    sp = build_named_model("spin_peierls", 2, {"xi": 1.0}, rng_seed=0)
    assert {str(p): v for p, v in sp.spin_terms.items()} == {"XX": 0.25, "YY": 0.25, "ZZ": 0.25}
    with pytest.raises(UnsupportedModelError):
        build_named_model("schwinger", 2)


@pytest.mark.parametrize("name", ["holstein", "ssh", "spin_peierls"])
def test_named_models_hermitian(name):
    h = build_named_model(name, 3, rng_seed=1)
    m = fock.materialize(h, 4).matrix
    assert np.allclose(m, m.conj().T)


def test_gdm_spin_spectrum_matches_gamma_sums():
    h = build_gdm(0)
    hs = fock._spin_part(h)
    for e_b in ["ZZI", "XIX"]:
        from heislab.pauli import build_sb_set
        sub = h.replace(spin_terms={p: v for p, v in h.spin_terms.items() if p in build_sb_set(e_b)},
                        couplings={})
        hsub = fock._spin_part(sub)
        for l in range(4):
            v = eigenstate_vector(e_b, l)
            energy = sum(xi * eigenvalue_gamma(p, e_b, l) for p, xi in sub.spin_terms.items())
            assert np.allclose(hsub @ v, energy * v)
    assert np.allclose(hs, hs.conj().T)
