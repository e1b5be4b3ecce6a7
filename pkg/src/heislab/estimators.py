"""Robust phase and frequency estimation on a doubling time ladder.

Both estimators run stages ``t_j = 2^j t0``. Stage 0 fixes the estimate
modulo ``2 pi / t0``; each later stage picks the branch of its raw phase that
lies closest to the running estimate and must land inside the window
``+-pi / (3 t_j)``. A miss raises :class:`EstimationFailure` with the log.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import EstimationFailure, UndefinedPhaseError

RPE_ETA = 0.25
DEFAULT_K_MAX = 6


def chernoff_shots(eta: float, delta: float) -> int:
    """Shots so that a +-1 sample mean is within ``eta`` w.p. ``1 - delta``."""
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return math.ceil(2.0 / eta**2 * math.log(2.0 / delta))


def base_time(prior_bound: float) -> float:
    if not prior_bound > 0:
        raise ValueError("prior_bound must be positive")
    return 1.0 / (2.0 * prior_bound)


def n_stages(epsilon: float, t0: float) -> int:
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return max(1, math.ceil(math.log2(math.pi / (2.0 * epsilon * t0))))


@dataclass
class StageLog:
    stage: int
    t: float
    shots: int
    raw_phase: float
    window_lo: float
    window_hi: float
    accepted: bool
    estimate: float = float("nan")


@dataclass
class EstimationReport:
    estimate: float
    target_epsilon: float
    total_evolution_time: float
    total_shots: int
    stages: list = field(default_factory=list)
    capped: bool = False
    floor: float = 0.0

    def stages_csv(self) -> str:
        lines = ["stage,t_j,shots,raw_phase,window_lo,window_hi,accepted"]
        for s in self.stages:
            lines.append(f"{s.stage},{s.t:.17g},{s.shots},{s.raw_phase:.17g},"
                         f"{s.window_lo:.17g},{s.window_hi:.17g},{int(s.accepted)}")
        return "\n".join(lines) + "\n"


def _unwrap(raw_phase: float, t: float, reference: float) -> float:
    """Branch ``(raw + 2 pi m) / t`` closest to ``reference`` (ties go to the lower branch)."""
    m = round((reference * t - raw_phase) / (2 * math.pi))
    return (raw_phase + 2 * math.pi * m) / t


def _ladder_step(stage, t, raw_phases, running, stages, shots, tag):
    """Turn one stage's raw phases (one per vote) into an accepted estimate."""
    if running is None:
        cands = [math.remainder(p, 2 * math.pi) / t for p in raw_phases]
        est = float(np.median(cands))
        lo, hi = -math.pi / t, math.pi / t
        stages.append(StageLog(stage, t, shots, float(np.median(raw_phases)), lo, hi, True, est))
        return est
    cands = [_unwrap(p, t, running) for p in raw_phases]
    est = float(np.median(cands))
    half = math.pi / (3 * t)
    lo, hi = running - half, running + half
    ok = lo <= est <= hi
    stages.append(StageLog(stage, t, shots, float(np.median(raw_phases)), lo, hi, ok, est))
    if not ok:
        raise EstimationFailure(
            f"stage {stage} estimate {est:.6g} left window [{lo:.6g}, {hi:.6g}]", stages, tag)
    return est


def rpe(oracle: Callable[[float, int], tuple[float, float]], epsilon: float, delta: float,
        prior_bound: float | None = None, t0: float | None = None, tag=None) -> EstimationReport:
    """Estimate ``D`` from return probabilities ``p1 = (1+cos Dt)/2``, ``p2 = (1+sin Dt)/2``.

    ``oracle(t, shots)`` returns the two empirical frequencies, each from
    ``shots`` repetitions. Every stage uses
    ``M = chernoff_shots(1/4, delta / (2K))`` shots per setting.
    """
    if t0 is None:
        t0 = base_time(prior_bound if prior_bound is not None else 1.0)
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    K = n_stages(epsilon, t0)
    M = chernoff_shots(RPE_ETA, delta / (2 * K))
    stages: list[StageLog] = []
    running = None
    total_time = 0.0
    total_shots = 0
    for j in range(K):
        t = t0 * 2**j
        p1, p2 = oracle(t, M)
        total_time += 2 * M * t
        total_shots += 2 * M
        raw = math.atan2(2 * p2 - 1, 2 * p1 - 1)
        running = _ladder_step(j, t, [raw], running, stages, 2 * M, tag)
    return EstimationReport(running, epsilon, total_time, total_shots, stages)


@dataclass
class SignalSample:
    z: np.ndarray
    evolution_time: float
    shots: int


@dataclass
class SignalOracle:
    """Wraps ``fn(t, shots) -> Z`` (scalar or per-mode array) with cost accounting.

    ``settings`` counts distinct measurement settings per shot (2 when both
    quadratures are read out), so each call costs ``settings * shots * t``.
    """

    fn: Callable[[float, int], complex | np.ndarray]
    settings: int = 1

    def query(self, t: float, shots: int) -> SignalSample:
        z = np.atleast_1d(np.asarray(self.fn(t, shots), dtype=complex))
        mod = np.abs(z)
        if np.any(mod == 0):
            raise UndefinedPhaseError("signal has zero modulus")
        return SignalSample(z / mod, self.settings * shots * t, self.settings * shots)

    def __call__(self, t: float, shots: int):
        return self.query(t, shots).z


def rfe(oracle, epsilon: float, delta: float, k_max: int | None = DEFAULT_K_MAX,
        prior_bound: float | None = None, t0: float | None = None, eta: float = RPE_ETA,
        votes: int = 1, tag=None):
    """Estimate theta from a unit signal ``Z(t) ~ exp(-i theta t)``.

    Every stage spends ``chernoff_shots(eta, delta / (2K))`` shots (per vote),
    so total time is ``O(1/eps)`` and the shot count ``O(K ln(K/delta))``.
    With ``k_max`` set, stages stop at ``j = k_max`` and the report carries
    ``capped=True`` and the floor.

    Vector signals (one component per mode) share the ladder; a list of
    reports is returned in that case.
    """
    if not isinstance(oracle, SignalOracle):
        oracle = SignalOracle(oracle)
    if votes < 1 or votes % 2 == 0:
        raise ValueError("votes must be a positive odd number")
    if t0 is None:
        t0 = base_time(prior_bound if prior_bound is not None else 1.0)
    K = n_stages(epsilon, t0)
    capped = k_max is not None and K > k_max + 1
    K_eff = k_max + 1 if capped else K
    floor = math.pi / (2 * 2**K_eff * t0)

    logs = None
    running = None
    total_time = 0.0
    total_shots = 0
    M = chernoff_shots(eta, delta / (2 * K_eff))
    for j in range(K_eff):
        t = t0 * 2**j
        raws = []
        for _ in range(votes):
            sample = oracle.query(t, M)
            total_time += sample.evolution_time
            total_shots += sample.shots
            raws.append(-np.angle(sample.z))
        raws = np.array(raws)
        if logs is None:
            logs = [[] for _ in range(raws.shape[1])]
            running = [None] * raws.shape[1]
        for c in range(raws.shape[1]):
            ctag = tag if raws.shape[1] == 1 else (tag, c)
            running[c] = _ladder_step(j, t, list(raws[:, c]), running[c], logs[c], M * votes, ctag)
    reports = [
        EstimationReport(running[c], epsilon, total_time, total_shots, logs[c], capped, floor)
        for c in range(len(logs))
    ]
    return reports[0] if len(reports) == 1 else reports


def signal_from_p_mean(p_samples) -> complex:
    p = np.asarray(p_samples, dtype=float)
    if p.size == 0:
        raise ValueError("need at least one sample")
    return complex(np.exp(-1j * p.mean()))


def signal_from_quadratures(x_mean, p_mean) -> tuple[complex, float]:
    """Unit signal ``(x + i p)/|x + i p|`` and the raw modulus (a diagnostic)."""
    z = complex(x_mean) + 1j * complex(p_mean)
    mod = abs(z)
    if mod == 0:
        raise UndefinedPhaseError("quadrature means are both zero")
    return z / mod, mod
