import threading

import numpy as np
import pytest

from heislab.errors import ContractViolation, ShapeError
from heislab.gaussian import SpamNoise
from heislab.model import HybridHamiltonian, build_gdm
from heislab.oracle import EvolutionOracle, Meter
from heislab.pauli import PauliString


def small_model():
    return HybridHamiltonian(1, 1, {PauliString("X"): 0.4, PauliString("Z"): 0.9}, (1.1,),
                             {(PauliString("Z"), 0): 0.05, (PauliString("X"), 0): 0.02})


def test_meter_accounting():
    orc = EvolutionOracle(build_gdm(0), seed=1)
    orc.spin_return_probabilities("XXI", 0, 1, 2.0, 10)
    assert orc.total_time == pytest.approx(40.0) and orc.total_shots == 20
    orc.trotter_p_samples("XXI", 0, (1.0,), 3.0, 5)
    assert orc.total_time == pytest.approx(55.0) and orc.total_shots == 25
    orc.dqs_samples("XXI", 0, 1.0, 0, 10, 1.0, 3)
    assert orc.total_time == pytest.approx(55.0 + 3 * 10 * np.pi)
    orc.free_quadrature_means(1.0, 0.5, 4)
    assert orc.total_shots == 25 + 30 + 8


def test_meter_is_thread_safe():
    m = Meter()

    def work():
        for _ in range(2000):
            m.charge(0.5, 1)

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert m.total_shots == 16000 and m.total_time == 8000.0
    with pytest.raises(ValueError):
        m.charge(-1.0, 0)


def test_coefficients_are_not_exposed():
    h = build_gdm(0)
    orc = EvolutionOracle(h, seed=0)
    public = {k: v for k, v in vars(orc).items() if not k.startswith("_EvolutionOracle")}
    assert not any(isinstance(v, HybridHamiltonian) for v in public.values())
    assert not any(isinstance(getattr(orc, name, None), HybridHamiltonian)
                   for name in dir(orc) if not name.startswith("_"))


def test_seeded_queries_repeat():
    a = EvolutionOracle(build_gdm(0), seed=5)
    b = EvolutionOracle(build_gdm(0), seed=5)
    assert a.spin_return_probabilities("XYI", 0, 2, 1.0, 50) == b.spin_return_probabilities("XYI", 0, 2, 1.0, 50)
    assert np.array_equal(a.trotter_p_samples("XYI", 1, (1.0,), 2.0, 7), b.trotter_p_samples("XYI", 1, (1.0,), 2.0, 7))
    c = EvolutionOracle(build_gdm(0), seed=6)
    assert not np.array_equal(a.trotter_p_samples("XYI", 1, (1.0,), 2.0, 7),
                              c.trotter_p_samples("XYI", 1, (1.0,), 2.0, 7))


def test_backends_agree_on_spin_probabilities():
    h = small_model()
    shots = 200_000
    g = EvolutionOracle(h, "gaussian", seed=0).spin_return_probabilities("Z", 0, 1, 0.8, shots)
    f = EvolutionOracle(h, "fock", seed=1, cutoff=12).spin_return_probabilities("Z", 0, 1, 0.8, shots)
    assert np.allclose(g, f, atol=5 / np.sqrt(shots))


def test_backends_agree_on_quadratures():
    h = small_model()
    shots = 100_000
    g = EvolutionOracle(h, "gaussian", seed=0).trotter_p_samples("Z", 1, (1.1,), 3.0, shots).mean()
    f = EvolutionOracle(h, "fock", seed=1, cutoff=16).trotter_p_samples("Z", 1, (1.1,), 3.0, shots).mean()
    assert g == pytest.approx(f, abs=5 * np.sqrt(0.5 / shots))
    assert g == pytest.approx(-np.sqrt(2) * (0.05 * -1) * 3.0, abs=5 * np.sqrt(0.5 / shots))
    xg = EvolutionOracle(h, "gaussian", seed=2).dqs_samples("Z", 0, 1.1, 0, 20, 1.0, 20_000).mean()
    xf = EvolutionOracle(h, "fock", seed=3, cutoff=16).dqs_samples("Z", 0, 1.1, 0, 20, 1.0, 20_000).mean()
    assert xg == pytest.approx(xf, abs=0.01)
    assert xg == pytest.approx(-2 * np.sqrt(2) * 0.05 / 1.1, abs=0.01)


def test_free_means_rotate():
    orc = EvolutionOracle(small_model(), seed=0)
    x, p = orc.free_quadrature_means(1.0, np.pi / 2 / 1.1, 1_000_000)
    assert np.angle(x[0] + 1j * p[0]) == pytest.approx(-np.pi / 2, abs=5e-3)


def test_spam_flip_shrinks_contrast():
    h = small_model()
    clean = EvolutionOracle(h, seed=0).spin_return_probabilities("Z", 0, 1, 0.0, 100_000)
    noisy = EvolutionOracle(h, seed=0, noise=SpamNoise(qubit_flip_p=0.1)).spin_return_probabilities(
        "Z", 0, 1, 0.0, 100_000)
    assert clean[0] == 1.0 and noisy[0] == pytest.approx(0.9, abs=0.005)


def test_trajectory_queries_require_tau():
    orc = EvolutionOracle(small_model(), seed=0)
    with pytest.raises(ContractViolation):
        orc.trotter_p_trajectories("Z", 0, (1.1,), [1.0], 2)
    orc = EvolutionOracle(small_model(), seed=0, tau=0.01)
    out = orc.trotter_p_trajectories("Z", 0, (1.1,), [1.0, 2.0], 3)
    assert out.shape == (3, 2, 1)
    assert orc.total_time == pytest.approx(9.0) and orc.total_shots == 6


def test_argument_validation():
    with pytest.raises(ValueError):
        EvolutionOracle(small_model(), backend="nope")
    with pytest.raises(ValueError):
        EvolutionOracle(small_model(), tau=0.0)
    orc = EvolutionOracle(small_model())
    with pytest.raises(ShapeError):
        orc.spin_return_probabilities("ZZ", 0, 1, 1.0, 1)
    with pytest.raises(ShapeError):
        orc.dqs_samples("Z", 0, 1.0, 3, 10, 1.0, 1)
