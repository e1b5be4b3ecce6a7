"""Scaling studies and fits behind the ``scaling``/``deviation`` commands and the acceptance suite."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from . import gaussian, protocols
from .errors import EstimationFailure
from .estimators import base_time
from .gaussian import SpamNoise
from .model import HybridHamiltonian
from .oracle import EvolutionOracle
from .pauli import PauliString, as_pauli, gamma_matrix, solve_coefficients

SQRT2 = math.sqrt(2.0)


@dataclass
class ScalingFit:
    x_name: str
    y_name: str
    slope: float
    slope_stderr: float
    intercept: float
    r2: float
    n_points: int


def fit_scaling(x, y, x_name: str = "x", y_name: str = "y") -> ScalingFit:
    """Least squares on ``log y = intercept + slope * log x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("x and y must have the same length")
    if x.size < 4:
        raise ValueError("a slope needs at least 4 points")
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(x * y)):
        raise ValueError("log-log fit needs finite positive values")
    r = stats.linregress(np.log(x), np.log(y))
    return ScalingFit(x_name, y_name, float(r.slope), float(r.stderr), float(r.intercept),
                      float(r.rvalue**2), int(x.size))


def _aic(rss: float, n: int, k: int) -> float:
    return n * math.log(max(rss, 1e-300) / n) + 2 * k


def compare_count_models(eps, counts, p_min: float = 0.5) -> dict:
    """AIC of ``c ln^2(1/eps)`` against the best ``c eps^-p`` with ``p >= p_min``.

    Both models are fit in log space.
    """
    eps = np.asarray(eps, dtype=float)
    y = np.log(np.asarray(counts, dtype=float))
    n = eps.size
    u = 2 * np.log(np.log(1 / eps))
    c_log = float(np.mean(y - u))
    rss_log = float(np.sum((y - c_log - u) ** 2))
    v = -np.log(eps)
    p = max(p_min, float(np.polyfit(v, y, 1)[0]))
    c_pow = float(np.mean(y - p * v))
    rss_pow = float(np.sum((y - c_pow - p * v) ** 2))
    aic_log, aic_pow = _aic(rss_log, n, 1), _aic(rss_pow, n, 2)
    return {"aic_log2": aic_log, "aic_power": aic_pow, "p": p, "c_log2": math.exp(c_log),
            "c_power": math.exp(c_pow), "log2_preferred": aic_log < aic_pow}


# Trotter-scheme coupling scaling at finite tau


@dataclass
class TrotterTrial:
    tau: float
    T: float
    trial: int
    estimate: float
    truth: float
    error: float


def trotter_scaling(h: HybridHamiltonian, target, mode: int = 0, tau_grid=(1e-3,), T_grid=(10, 100, 1000),
                    trials: int = 100, seed: int = 0, omega_tilde=None, noise: SpamNoise | None = None,
                    threads: int = 1) -> tuple[list[TrotterTrial], list[dict]]:
    """One P readout per eigenstate label at ``t = T / 2^k``, Gamma-solved for ``target``.

    Each trial is one randomized trajectory per label read out at every T in
    the grid (readouts are charged separately). ``tau = 0`` runs the exact
    effective dynamics instead of trajectories.
    """
    e_b = as_pauli(target)
    gam = gamma_matrix(e_b)
    col = gam.sb.index(e_b)
    n_lab = 2**gam.k
    T_grid = np.sort(np.asarray(T_grid, dtype=float))
    times = T_grid / n_lab
    w = np.asarray(h.mode_freqs, dtype=float) if omega_tilde is None else np.asarray(omega_tilde, dtype=float)
    truth = h.couplings.get((e_b, mode), 0.0)
    rows, table = [], []
    for tau in tau_grid:
        tau = float(tau)
        orc = EvolutionOracle(h, noise=noise, seed=seed, tau=tau or None)

        def run(l, orc=orc, tau=tau):
            if tau:
                p = orc.trotter_p_trajectories(e_b, l, w, times, trials)[..., mode]
            else:
                p = np.stack([orc.trotter_p_samples(e_b, l, w, t, trials)[:, mode] for t in times], axis=1)
            return -p / (SQRT2 * times)

        with ThreadPoolExecutor(max(1, threads)) as pool:
            Lam = np.stack(list(pool.map(run, range(n_lab))))
        est = solve_coefficients(gam, Lam)[col]
        for j, T in enumerate(T_grid):
            err = est[:, j] - truth
            rows.extend(TrotterTrial(tau, float(T), i, float(est[i, j]), truth, float(err[i])) for i in range(trials))
            table.append({"tau": tau, "T": float(T), "rmse": float(np.sqrt(np.mean(err**2))),
                          "ideal": 1 / (2 * T), "trials": trials})
    return rows, table


# RFE ladder depth scaling with SPAM


@dataclass
class RfeTrial:
    stages: int
    trial: int
    T: float
    estimate: float
    truth: float
    error: float
    capped: bool
    failed: bool


def epsilon_for_stages(K: int, t0: float) -> float:
    """Smallest RFE target that still needs exactly K stages."""
    return math.pi / (2 * t0 * 2**K) * (1 + 1e-9)


def rfe_scaling(h: HybridHamiltonian, target, mode: int = 0, stages=range(1, 8), trials: int = 100,
                seed: int = 0, noise: SpamNoise | None = None, k_max: int | None = 6,
                prior_bound: float = 0.25, delta: float = 0.05, omega_tilde=None) -> list[RfeTrial]:
    """Error of the RFE coupling estimate versus ladder depth."""
    e_b = as_pauli(target)
    t0 = base_time(prior_bound)
    w = np.asarray(h.mode_freqs, dtype=float) if omega_tilde is None else np.asarray(omega_tilde, dtype=float)
    truth = h.couplings.get((e_b, mode), 0.0)
    key = protocols.lambda_key(e_b, mode)
    rows = []
    for K in stages:
        eps = epsilon_for_stages(K, t0) / SQRT2
        for i in range(trials):
            orc = EvolutionOracle(h, noise=noise, seed=[seed, K, i])
            try:
                res = protocols.learn_couplings_trotter(orc, w, e_b.weight, eps, delta, k_max=k_max,
                                                        prior_bound=prior_bound, targets=[e_b])
            except EstimationFailure:
                rows.append(RfeTrial(K, i, orc.total_time, float("nan"), truth, float("nan"), False, True))
                continue
            est = res.coefficients[key].estimate
            rows.append(RfeTrial(K, i, res.total_time, est, truth, est - truth,
                                 bool(res.metadata["capped"]), False))
    return rows


def rfe_table(rows: list[RfeTrial]) -> list[dict]:
    out = []
    for K in sorted({r.stages for r in rows}):
        sel = [r for r in rows if r.stages == K]
        ok = [r for r in sel if not r.failed]
        err = np.array([r.error for r in ok])
        out.append({"stages": K, "T": float(np.mean([r.T for r in ok])) if ok else float("nan"),
                    "rmse": float(np.sqrt(np.mean(err**2))) if ok else float("nan"),
                    "failures": len(sel) - len(ok), "capped": any(r.capped for r in ok), "trials": len(sel)})
    return out


# measurement count


def measurement_count_study(eps_grid, delta: float = 0.05, omega: float = 1.0, seed: int = 0) -> list[dict]:
    """Shots and time spent by uncapped RFE frequency learning at each target epsilon."""
    h = HybridHamiltonian(1, 1, {}, (float(omega),))
    out = []
    for eps in eps_grid:
        orc = EvolutionOracle(h, seed=seed)
        res = protocols.learn_boson_frequencies(orc, float(eps), delta, k_max=None, truth=h)
        out.append({"epsilon": float(eps), "shots": res.total_shots, "T": res.total_time,
                    "error": res.max_abs_error()})
    return out


# DQS


def dqs_variance_study(W_grid, n_pt_grid, trials: int = 10_000, seed: int = 0) -> list[dict]:
    """Empirical RMSE of the copy-averaged X from joint W-copy homodyne samples."""
    ss = np.random.SeedSequence(seed)
    out = []
    pairs = [(int(W), float(n)) for n in n_pt_grid for W in W_grid]
    for (W, n_pt), child in zip(pairs, ss.spawn(len(pairs))):
        rng = np.random.default_rng(child)
        z = gaussian.squeezing_for_photons(W * n_pt)
        st = gaussian.build_entangled_squeezed(1, W, z)
        x = gaussian.sample_copies_x(st, 0, trials, rng).mean(axis=1)
        emp = float(np.sqrt(np.mean(x**2)))
        pred = gaussian.dqs_predicted_rmse(W, W * n_pt)
        out.append({"W": W, "n_pt": n_pt, "empirical_rmse": emp, "predicted_rmse": pred,
                    "relative_deviation": abs(emp - pred) / pred, "trials": trials})
    return out


# deviation


def deviation_fits(rows) -> tuple[ScalingFit | None, ScalingFit | None]:
    """Exponents of the mean trace distance in t (at the largest tau) and in tau (at the largest t)."""
    rows = list(rows)
    taus = sorted({r.tau for r in rows})
    ts = sorted({r.t for r in rows})
    by_t = [r for r in rows if r.tau == taus[-1]] if taus else []
    by_tau = [r for r in rows if r.t == ts[-1]] if ts else []
    fit_t = fit_tau = None
    if len(by_t) >= 4:
        fit_t = fit_scaling([r.t for r in by_t], [r.mean_td for r in by_t], "t", "mean_trace_distance")
    if len(by_tau) >= 4:
        fit_tau = fit_scaling([r.tau for r in by_tau], [r.mean_td for r in by_tau], "tau", "mean_trace_distance")
    return fit_t, fit_tau


def deviation_model(seed: int = 0) -> HybridHamiltonian:
    """One qubit, one mode, generic couplings on all three Paulis."""
    rng = np.random.default_rng(seed)
    xi = rng.uniform(0.5, 1.5, 3)
    lam = rng.uniform(0.01, 0.03, 3)
    ps = [PauliString(c) for c in "XYZ"]
    return HybridHamiltonian(1, 1, dict(zip(ps, xi)), (1.0,), {(p, 0): l for p, l in zip(ps, lam)})


def rows_to_dicts(rows) -> list[dict]:
    return [asdict(r) for r in rows]


__all__ = [
    "ScalingFit", "fit_scaling", "compare_count_models", "trotter_scaling", "rfe_scaling", "rfe_table",
    "measurement_count_study", "dqs_variance_study", "deviation_fits", "deviation_model",
    "epsilon_for_stages", "TrotterTrial", "RfeTrial",
]
