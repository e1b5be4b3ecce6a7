import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heislab import estimators as est
from heislab.errors import EstimationFailure, UndefinedPhaseError


def test_chernoff_examples():
    assert est.chernoff_shots(0.1, 0.01) == 1060 == math.ceil(200 * math.log(200))
    assert est.chernoff_shots(1.0, 1 - 1e-12) == 2
    a, b = est.chernoff_shots(0.2, 1e-3), est.chernoff_shots(0.1, 1e-3)
    assert b / a == pytest.approx(4, rel=2e-3)
    with pytest.raises(ValueError):
        est.chernoff_shots(0.0, 0.1)
    with pytest.raises(ValueError):
        est.chernoff_shots(0.1, 1.0)


def exact_probs(D):
    return lambda t, m: ((1 + math.cos(D * t)) / 2, (1 + math.sin(D * t)) / 2)


def binomial_probs(D, rng):
    def f(t, m):
        p1, p2 = exact_probs(D)(t, m)
        return rng.binomial(m, p1) / m, rng.binomial(m, p2) / m
    return f


def test_rpe_zero_noiseless():
    rep = est.rpe(exact_probs(0.0), 1e-4, 0.05)
    assert rep.estimate == 0.0
    assert all(s.raw_phase == 0.0 for s in rep.stages)


def test_rpe_binomial_success_rate():
    rng = np.random.default_rng(2024)
    ok = 0
    for _ in range(200):
        rep = est.rpe(binomial_probs(0.7, rng), 1e-4, 0.05)
        ok += abs(rep.estimate - 0.7) < 1e-4
    assert ok >= 190


def test_rpe_time_is_heisenberg():
    eps = np.array([1e-2, 1e-3, 1e-4, 1e-5])
    T = [est.rpe(exact_probs(0.3), e, 0.05).total_evolution_time for e in eps]
    slope = np.polyfit(np.log(eps), np.log(T), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.1)


def test_rpe_stage_log_csv():
    rep = est.rpe(exact_probs(0.2), 1e-2, 0.1)
    lines = rep.stages_csv().splitlines()
    assert lines[0] == "stage,t_j,shots,raw_phase,window_lo,window_hi,accepted"
    assert len(lines) == len(rep.stages) + 1


def test_rfe_exact_signal():
    rep = est.rfe(lambda t, m: np.exp(-0.7j * t), 1e-6, 0.05, k_max=None)
    assert abs(rep.estimate - 0.7) <= 1e-6 and not rep.capped
    capped = est.rfe(lambda t, m: np.exp(-0.7j * t), 1e-6, 0.05, k_max=6)
    assert capped.capped and len(capped.stages) == 7
    assert abs(capped.estimate - 0.7) <= capped.floor


def test_rfe_constant_stage_shots():
    rep = est.rfe(lambda t, m: np.exp(-0.3j * t), 1e-4, 0.05, k_max=None)
    shots = {s.shots for s in rep.stages}
    assert shots == {est.chernoff_shots(est.RPE_ETA, 0.05 / (2 * len(rep.stages)))}


def test_rfe_phase_noise_below_sigma():
    rng = np.random.default_rng(7)
    sigma = 0.05
    errs = []
    for _ in range(50):
        f = lambda t, m: np.exp(-1j * (0.4 * t + sigma * rng.standard_normal() / math.sqrt(m)))
        errs.append(est.rfe(f, 1e-3, 0.05, k_max=None).estimate - 0.4)
    assert np.sqrt(np.mean(np.square(errs))) < sigma


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.99, 0.99), st.integers(2, 9))
def test_rfe_windows_nest(theta, K):
    t0 = est.base_time(1.0)
    eps = math.pi / (2 * t0 * 2**K) * (1 + 1e-9)
    rep = est.rfe(lambda t, m: np.exp(-1j * theta * t), eps, 0.05, k_max=None, prior_bound=1.0)
    for prev, cur in zip(rep.stages, rep.stages[1:]):
        assert cur.accepted
        assert abs(cur.estimate - prev.estimate) <= math.pi / (3 * cur.t) + 1e-12
    assert abs(rep.estimate - theta) <= eps


def test_rfe_failure_carries_stage_log():
    rng = np.random.default_rng(0)
    with pytest.raises(EstimationFailure) as info:
        for _ in range(50):
            est.rfe(lambda t, m: np.exp(2j * np.pi * rng.random()), 1e-4, 0.05, k_max=None, tag="x")
    assert info.value.stages and not info.value.stages[-1].accepted
    assert info.value.tag == "x"


def test_rfe_vector_signal():
    reps = est.rfe(lambda t, m: np.exp(-1j * np.array([0.1, -0.5]) * t), 1e-5, 0.05, k_max=None)
    assert [round(r.estimate, 4) for r in reps] == [0.1, -0.5]
    assert reps[0].total_evolution_time == reps[1].total_evolution_time


def test_signal_helpers():
    assert est.signal_from_p_mean([0.0, 0.0]) == 1 + 0j
    assert est.signal_from_p_mean([math.pi]) == pytest.approx(-1)
    z, mod = est.signal_from_quadratures(2.0, 0.0)
    assert np.angle(z) == 0.0 and mod == 2.0
    x, p = math.cos(-math.pi / 2), math.sin(-math.pi / 2)
    assert np.angle(est.signal_from_quadratures(x, p)[0]) == pytest.approx(-math.pi / 2)
    with pytest.raises(UndefinedPhaseError):
        est.signal_from_quadratures(0.0, 0.0)


def test_p_mean_signal_meets_chernoff_accuracy():
    eta, delta, lam, t = 0.25, 0.05, 0.02, 10.0
    M = est.chernoff_shots(eta, delta)
    rng = np.random.default_rng(3)
    target = np.exp(1j * math.sqrt(2) * lam * t)
    hits = 0
    for _ in range(2000):
        p = -math.sqrt(2) * lam * t + math.sqrt(0.5) * rng.standard_normal(M)
        hits += abs(est.signal_from_p_mean(p) - target) <= eta
    assert hits >= (1 - delta) * 2000
