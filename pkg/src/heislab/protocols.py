"""Learning protocols driven through an :class:`EvolutionOracle`.

Coefficient names used in results:

* ``omega[n]``        mode frequency
* ``xi[P]``           spin term of Pauli string P
* ``lambda[P,n]``     coupling of P to mode n (P may be the identity string)
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import estimators
from .errors import EstimationFailure
from .gaussian import dqs_predicted_rmse
from .model import HybridHamiltonian
from .oracle import EvolutionOracle
from .pauli import PauliString, build_sb_set, enumerate_eb, enumerate_local, gamma_matrix, solve_coefficients

SQRT2 = math.sqrt(2.0)


def xi_key(p) -> str:
    return f"xi[{p}]"


def lambda_key(p, n) -> str:
    return f"lambda[{p},{n}]"


def omega_key(n) -> str:
    return f"omega[{n}]"


@dataclass
class CoefficientEstimate:
    estimate: float
    truth: float | None = None
    stderr: float | None = None

    @property
    def abs_error(self) -> float | None:
        return None if self.truth is None else abs(self.estimate - self.truth)


@dataclass
class LearningResult:
    coefficients: dict
    total_time: float
    total_shots: int
    scheme: str
    hamiltonian: HybridHamiltonian | None = None
    diagnostics: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def estimates(self) -> dict:
        return {k: c.estimate for k, c in self.coefficients.items()}

    def max_abs_error(self) -> float:
        errs = [c.abs_error for c in self.coefficients.values() if c.abs_error is not None]
        return max(errs) if errs else float("nan")

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "total_time": self.total_time,
            "total_shots": self.total_shots,
            "coefficients": {
                k: {"estimate": c.estimate, "truth": c.truth, "abs_error": c.abs_error, "stderr": c.stderr}
                for k, c in self.coefficients.items()
            },
            "diagnostics": self.diagnostics,
            "metadata": self.metadata,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "truth", "estimate", "abs_error"])
        for k, c in self.coefficients.items():
            w.writerow([k, _fmt(c.truth), _fmt(c.estimate), _fmt(c.abs_error)])
        return buf.getvalue()

    def merge(self, other: "LearningResult", scheme: str | None = None) -> "LearningResult":
        coeffs = dict(self.coefficients)
        coeffs.update(other.coefficients)
        return LearningResult(coeffs, self.total_time + other.total_time, self.total_shots + other.total_shots,
                              scheme or self.scheme, None, self.diagnostics + other.diagnostics,
                              {**self.metadata, **other.metadata})


def _fmt(x):
    return "" if x is None else f"{x:.17g}"


class _Meter:
    """Meter delta over a block of oracle calls."""

    def __init__(self, oracle):
        self.oracle = oracle
        self.t0, self.s0 = oracle.total_time, oracle.total_shots

    def delta(self):
        return self.oracle.total_time - self.t0, self.oracle.total_shots - self.s0


def _truth_of(truth: HybridHamiltonian | None, key: str) -> float | None:
    if truth is None:
        return None
    kind, body = key.split("[", 1)
    body = body.rstrip("]")
    if kind == "omega":
        return truth.mode_freqs[int(body)]
    if kind == "xi":
        return truth.spin_terms.get(PauliString(body), 0.0)
    p, n = body.split(",")
    return truth.couplings.get((PauliString(p), int(n)), 0.0)


def _attach_truth(coeffs: dict, truth):
    for k, c in coeffs.items():
        c.truth = _truth_of(truth, k)
    return coeffs


def _merge_duplicates(samples: dict, epsilon: float | None, diagnostics: list) -> dict:
    """Inverse-variance mean of repeated estimates of the same coefficient."""
    out = {}
    for key, vals in samples.items():
        est = np.array([v for v, _ in vals])
        var = np.array([max(s, 1e-300) for _, s in vals])
        w = 1.0 / var
        mean = float(np.sum(w * est) / np.sum(w))
        se = float(np.sqrt(1.0 / np.sum(w)))
        if epsilon is not None and len(est) > 1 and np.ptp(est) > 10 * epsilon:
            diagnostics.append({"kind": "inconsistent_duplicates", "coefficient": key,
                                "spread": float(np.ptp(est)), "count": len(est)})
        out[key] = estimators_to_coeff(mean, se)
    return out


def estimators_to_coeff(mean, se) -> CoefficientEstimate:
    return CoefficientEstimate(float(mean), None, float(se))


def learn_boson_frequencies(oracle: EvolutionOracle, epsilon: float, delta: float, alpha: complex = 1.0,
                            prior_bound: float = 4.0, k_max: int | None = None,
                            truth: HybridHamiltonian | None = None) -> LearningResult:
    """RFE on ``Z = (<X> + i<P>)/|.|`` with all modes read out in parallel."""
    if oracle.n_modes < 1:
        raise ValueError("oracle has no modes")
    alpha = np.broadcast_to(np.asarray(alpha, dtype=complex), (oracle.n_modes,))
    if np.any(alpha == 0):
        raise ValueError("alpha must be non-zero for a defined phase")
    r = np.angle(alpha)
    meter = _Meter(oracle)

    def signal(t, shots):
        x, p = oracle.free_quadrature_means(alpha, t, shots)
        return (x + 1j * p) * np.exp(-1j * r)

    sig = estimators.SignalOracle(signal, settings=2)
    reps = estimators.rfe(sig, epsilon, delta / oracle.n_modes, k_max=k_max, prior_bound=prior_bound,
                          tag="omega")
    reps = reps if isinstance(reps, list) else [reps]
    coeffs = {omega_key(n): CoefficientEstimate(rep.estimate, None, None) for n, rep in enumerate(reps)}
    t, s = meter.delta()
    res = LearningResult(_attach_truth(coeffs, truth), t, s, "frequency-rfe",
                         metadata={"capped": any(r.capped for r in reps)})
    res.metadata["stages"] = len(reps[0].stages)
    return res


def learn_spin_coefficients(oracle: EvolutionOracle, k: int, epsilon: float, delta: float,
                            coeff_bound: float = 2.0, targets=None,
                            truth: HybridHamiltonian | None = None) -> LearningResult:
    """RPE on every branch-energy gap, then a Gamma solve per E_b.

    ``targets`` restricts the E_b loop (default: every string of support k).
    """
    e_bs = [PauliString(str(p)) for p in targets] if targets else enumerate_eb(oracle.n_qubits, k)
    n_lab = 2**k
    runs = len(e_bs) * (n_lab - 1)
    d_each = delta / runs
    prior = 2 * (n_lab - 1) * coeff_bound
    meter = _Meter(oracle)
    samples: dict = {}
    diagnostics: list = []
    for e_b in e_bs:
        D = np.zeros(n_lab)
        var_D = np.zeros(n_lab)
        for l in range(1, n_lab):
            rep = estimators.rpe(lambda t, m: oracle.spin_return_probabilities(e_b, 0, l, t, m),
                                 epsilon, d_each, prior_bound=prior, tag=(str(e_b), 0, l))
            D[l] = rep.estimate
            last = rep.stages[-1]
            var_D[l] = (1.0 / (math.sqrt(last.shots) * last.t)) ** 2
        Xi = D - D.mean()
        gam = gamma_matrix(e_b)
        c = solve_coefficients(gam, Xi)
        var_c = (gam.entries.astype(float) ** 2).T @ var_D / n_lab**2
        for p, val, v in zip(gam.sb, c, var_c):
            if p.is_identity():
                continue
            samples.setdefault(xi_key(p), []).append((float(val), float(v)))
    coeffs = _merge_duplicates(samples, epsilon, diagnostics)
    if not targets:
        wanted = {xi_key(p) for p in enumerate_local(oracle.n_qubits, k)}
        assert set(coeffs) == wanted
    t, s = meter.delta()
    return LearningResult(_attach_truth(coeffs, truth), t, s, "spin-rpe", diagnostics=diagnostics)


def _solve_couplings(e_b, Lam, var_Lam, samples):
    """Gamma solve per mode; ``Lam`` is (2^k, n_modes)."""
    gam = gamma_matrix(e_b)
    c = solve_coefficients(gam, Lam)
    n_lab = Lam.shape[0]
    var_c = (gam.entries.astype(float) ** 2).T @ var_Lam / n_lab**2
    for i, p in enumerate(gam.sb):
        for n in range(Lam.shape[1]):
            samples.setdefault(lambda_key(p, n), []).append((float(c[i, n]), float(var_c[i, n])))


def learn_couplings_trotter(oracle: EvolutionOracle, omega_tilde, k: int, epsilon: float, delta: float,
                            k_max: int | None = estimators.DEFAULT_K_MAX, prior_bound: float = 1.0,
                            eta: float = estimators.RPE_ETA, votes: int = 1, targets=None,
                            truth: HybridHamiltonian | None = None) -> LearningResult:
    """RFE on ``Z = exp(-i mean P)`` for every (E_b, l), all modes sharing a ladder.

    The RFE phase is ``theta = -sqrt2 Lambda``; ``prior_bound`` bounds |theta|.
    """
    omega_tilde = np.broadcast_to(np.asarray(omega_tilde, dtype=float), (oracle.n_modes,))
    e_bs = [PauliString(str(p)) for p in targets] if targets else enumerate_eb(oracle.n_qubits, k)
    n_lab = 2 ** len([c for c in e_bs[0].letters if c != "I"])
    d_each = delta / (len(e_bs) * n_lab * oracle.n_modes)
    meter = _Meter(oracle)
    samples: dict = {}
    diagnostics: list = []
    capped = False
    for e_b in e_bs:
        Lam = np.zeros((n_lab, oracle.n_modes))
        var_Lam = np.zeros_like(Lam)
        for l in range(n_lab):
            def signal(t, shots, e_b=e_b, l=l):
                p = oracle.trotter_p_samples(e_b, l, omega_tilde, t, shots)
                return np.exp(-1j * p.mean(axis=0))

            try:
                reps = estimators.rfe(estimators.SignalOracle(signal), SQRT2 * epsilon, d_each, k_max=k_max,
                                      prior_bound=prior_bound, eta=eta, votes=votes)
            except EstimationFailure as exc:
                mode = exc.tag[1] if isinstance(exc.tag, tuple) else 0
                raise EstimationFailure(str(exc), exc.stages, (str(e_b), l, mode)) from exc
            reps = reps if isinstance(reps, list) else [reps]
            for n, rep in enumerate(reps):
                Lam[l, n] = -rep.estimate / SQRT2
                last = rep.stages[-1]
                var_Lam[l, n] = 1.0 / (2 * last.shots * last.t**2) / 2
                capped |= rep.capped
        _solve_couplings(e_b, Lam, var_Lam, samples)
    coeffs = _merge_duplicates(samples, epsilon, diagnostics)
    t, s = meter.delta()
    return LearningResult(_attach_truth(coeffs, truth), t, s, "coupling-trotter", diagnostics=diagnostics,
                          metadata={"capped": capped, "k_max": k_max})


def dqs_repetitions(epsilon: float, delta: float, omega_tilde: float, W: int, n_pt: float) -> int:
    """Repetitions so a single-branch Lambda lands within epsilon w.p. 1 - delta (Gaussian tail)."""
    sigma = omega_tilde * dqs_predicted_rmse(W, W * n_pt) / (2 * SQRT2)
    z = stats.norm.isf(delta / 2)
    return max(1, math.ceil((z * sigma / epsilon) ** 2))


def learn_couplings_dqs(oracle: EvolutionOracle, omega_tilde, k: int, W: int, n_pt: float, delta: float,
                        repetitions: int | None = None, epsilon: float | None = None, targets=None,
                        modes=None, truth: HybridHamiltonian | None = None) -> LearningResult:
    """Entangled-squeezed sensing at ``t = pi / omega_tilde_n`` for each (E_b, l, n).

    ``Lambda = -omega_tilde_n * X~ / (2 sqrt2)``. ``repetitions`` fixes the number
    of probe preparations per task; otherwise it is chosen from ``epsilon``.
    """
    if W < 1:
        raise ValueError("W must be >= 1")
    omega_tilde = np.broadcast_to(np.asarray(omega_tilde, dtype=float), (oracle.n_modes,))
    e_bs = [PauliString(str(p)) for p in targets] if targets else enumerate_eb(oracle.n_qubits, k)
    modes = list(range(oracle.n_modes)) if modes is None else list(modes)
    n_lab = 2 ** len([c for c in e_bs[0].letters if c != "I"])
    d_each = delta / (len(e_bs) * n_lab * len(modes))
    meter = _Meter(oracle)
    samples: dict = {}
    diagnostics: list = []
    rmse_report = {}
    for e_b in e_bs:
        Lam = np.zeros((n_lab, oracle.n_modes))
        var_Lam = np.ones_like(Lam)
        for l in range(n_lab):
            for n in modes:
                w = omega_tilde[n]
                reps = repetitions
                if reps is None:
                    if epsilon is None:
                        raise ValueError("give repetitions or epsilon")
                    reps = dqs_repetitions(epsilon, d_each, w, W, n_pt)
                x = oracle.dqs_samples(e_b, l, w, n, W, n_pt, reps)
                pred = dqs_predicted_rmse(W, W * n_pt)
                Lam[l, n] = -w * x.mean() / (2 * SQRT2)
                var_Lam[l, n] = (w * pred / (2 * SQRT2)) ** 2 / reps
                emp = float(x.std(ddof=1)) if reps > 1 else float("nan")
                rmse_report[(str(e_b), l, n)] = (pred, emp)
        _solve_couplings(e_b, Lam, var_Lam, samples)
    coeffs = _merge_duplicates(samples, epsilon, diagnostics)
    coeffs = {k_: v for k_, v in coeffs.items() if int(k_.rstrip("]").split(",")[1]) in modes}
    t, s = meter.delta()
    preds = np.array([v[0] for v in rmse_report.values()])
    emps = np.array([v[1] for v in rmse_report.values()])
    meta = {"W": W, "n_pt": n_pt, "predicted_rmse": float(preds.mean()),
            "empirical_rmse": float(np.nanmean(emps)) if np.any(np.isfinite(emps)) else None,
            "max_single_shot_time": float(np.pi / omega_tilde[modes].min())}
    return LearningResult(_attach_truth(coeffs, truth), t, s, "coupling-dqs", diagnostics=diagnostics, metadata=meta)


@dataclass
class SpectrumResult:
    omega: np.ndarray
    lam2_estimate: np.ndarray
    lam2_truth: np.ndarray | None
    relative_error: np.ndarray | None
    learning: LearningResult

    def peak_omega(self) -> float:
        return float(self.omega[int(np.argmax(self.lam2_estimate))])

    def to_csv(self) -> str:
        lines = ["mode,omega,lam2_estimate,lam2_truth,relative_error"]
        for n in range(len(self.omega)):
            tr = "" if self.lam2_truth is None else f"{self.lam2_truth[n]:.17g}"
            re = "" if self.relative_error is None else f"{self.relative_error[n]:.17g}"
            lines.append(f"{n},{self.omega[n]:.17g},{self.lam2_estimate[n]:.17g},{tr},{re}")
        return "\n".join(lines) + "\n"


def learn_spectrum(oracle: EvolutionOracle, W: int, n_pt: float, repetitions: int, delta: float = 0.05,
                   target: str = "X", omega_tilde=None, omega_epsilon: float = 1e-6,
                   truth: HybridHamiltonian | None = None) -> SpectrumResult:
    """Per-mode squared couplings of a one-qubit bath model via DQS.

    The profile is ``(lambda_target^n)^2``, proportional to the discretized
    ``Lambda_n^2`` because the target string's bath coupling is separable.
    Frequencies are learned first unless ``omega_tilde`` is given.
    """
    if oracle.n_qubits != 1:
        raise ValueError("spectrum reconstruction expects a one-qubit bath model")
    res = None
    if omega_tilde is None:
        res = learn_boson_frequencies(oracle, omega_epsilon, delta / 2, truth=truth)
        omega_tilde = np.array([res.coefficients[omega_key(n)].estimate for n in range(oracle.n_modes)])
    lr = learn_couplings_dqs(oracle, omega_tilde, 1, W, n_pt, delta / 2, repetitions=repetitions,
                             targets=[target], truth=truth)
    if res is not None:
        lr = res.merge(lr, scheme="spectrum-dqs")
    lam = np.array([lr.coefficients[lambda_key(target, n)].estimate for n in range(oracle.n_modes)])
    est = lam**2
    tru = rel = None
    if truth is not None:
        tru = truth.coupling_vector(target) ** 2
        rel = np.abs(est - tru) / tru
    return SpectrumResult(np.asarray(omega_tilde, dtype=float), est, tru, rel, lr)


def _build_estimate(n_qubits, k, coeffs, n_modes):
    spin, coup, freqs = {}, {}, [0.0] * n_modes
    for key, c in coeffs.items():
        kind, body = key.split("[", 1)
        body = body.rstrip("]")
        if kind == "omega":
            freqs[int(body)] = c.estimate
        elif kind == "xi":
            spin[PauliString(body)] = c.estimate
        else:
            p, n = body.split(",")
            coup[(PauliString(p), int(n))] = c.estimate
    try:
        return HybridHamiltonian(n_qubits, k, spin, tuple(freqs), coup)
    except ValueError:
        return None


def full_pipeline(oracle: EvolutionOracle, k: int, epsilon: float, delta: float, scheme: str = "trotter",
                  W: int = 1, n_pt: float = 0.0, k_max: int | None = None,
                  truth: HybridHamiltonian | None = None) -> LearningResult:
    """Frequencies (at epsilon/10), then spin terms, then couplings.

    The failure budget is split evenly over the three stages. ``k_max=None``
    lets the coupling ladder run as deep as epsilon requires.
    """
    if scheme not in ("trotter", "dqs"):
        raise ValueError("scheme must be 'trotter' or 'dqs'")
    d3 = delta / 3
    t_start, s_start = oracle.total_time, oracle.total_shots
    freq = learn_boson_frequencies(oracle, epsilon / 10, d3, truth=truth)
    w = np.array([freq.coefficients[omega_key(n)].estimate for n in range(oracle.n_modes)])
    spin = learn_spin_coefficients(oracle, k, epsilon, d3, truth=truth)
    if scheme == "trotter":
        coup = learn_couplings_trotter(oracle, w, k, epsilon, d3, k_max=k_max, truth=truth)
    else:
        coup = learn_couplings_dqs(oracle, w, k, W, n_pt, d3, epsilon=epsilon, truth=truth)
    res = freq.merge(spin).merge(coup, scheme=f"full-{scheme}")
    res.total_time = oracle.total_time - t_start
    res.total_shots = oracle.total_shots - s_start
    assert abs(res.total_time - (freq.total_time + spin.total_time + coup.total_time)) <= 1e-9 * max(1.0, res.total_time)
    res.hamiltonian = _build_estimate(oracle.n_qubits, k, res.coefficients, oracle.n_modes)
    res.metadata["stage_time"] = {"frequencies": freq.total_time, "spin": spin.total_time,
                                  "couplings": coup.total_time}
    return res
