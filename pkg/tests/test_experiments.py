import numpy as np
import pytest

from heislab import experiments as ex
from heislab.model import build_gdm


def test_fit_exact_power_law():
    x = np.array([1, 10, 100, 1000.0])
    fit = ex.fit_scaling(x, 1 / x, "T", "rmse")
    assert fit.slope == pytest.approx(-1.0, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0) and fit.n_points == 4


def test_fit_noisy_power_law():
    rng = np.random.default_rng(0)
    x = np.logspace(0, 4, 12)
    y = 3 * x**-0.5 * (1 + 0.05 * rng.standard_normal(x.size))
    assert ex.fit_scaling(x, y).slope == pytest.approx(-0.5, abs=0.05)


def test_fit_guards():
    with pytest.raises(ValueError):
        ex.fit_scaling([1, 2, 3], [1, 2, 3])
    with pytest.raises(ValueError):
        ex.fit_scaling([1, 2, 3, 4], [1, 0, 3, 4])


def test_count_model_comparison():
    eps = np.array([1e-2, 1e-3, 1e-4, 1e-5])
    logsq = 50 * np.log(1 / eps) ** 2
    assert ex.compare_count_models(eps, logsq)["log2_preferred"]
    assert not ex.compare_count_models(eps, 10 / eps)["log2_preferred"]


def test_epsilon_for_stages_gives_k_stages():
    from heislab.estimators import n_stages

    for K in range(1, 10):
        assert n_stages(ex.epsilon_for_stages(K, 2.0), 2.0) == K


def test_dqs_variance_study_small():
    rows = ex.dqs_variance_study([5, 20], [0.0, 1.0], trials=4000, seed=1)
    assert len(rows) == 4
    assert all(r["relative_deviation"] < 0.06 for r in rows)


def test_trotter_scaling_shapes_and_threads():
    h = build_gdm(0)
    rows1, table1 = ex.trotter_scaling(h, "XXI", 0, [0.0, 0.05], [4.0, 8.0], trials=3, seed=2, threads=1)
    rows2, table2 = ex.trotter_scaling(h, "XXI", 0, [0.0, 0.05], [4.0, 8.0], trials=3, seed=2, threads=3)
    assert [r.estimate for r in rows1] == [r.estimate for r in rows2]
    assert {(r["tau"], r["T"]) for r in table1} == {(0.0, 4.0), (0.0, 8.0), (0.05, 4.0), (0.05, 8.0)}
    assert table1 == table2


def test_measurement_count_study_errors_within_target():
    rows = ex.measurement_count_study([1e-2, 1e-3], seed=0)
    assert all(r["error"] < r["epsilon"] for r in rows)
    assert rows[1]["shots"] > rows[0]["shots"]


def test_deviation_model_shape():
    h = ex.deviation_model(0)
    assert h.n_qubits == 1 and h.n_modes == 1 and len(h.couplings) == 3
