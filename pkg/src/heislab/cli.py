"""Command-line entry point: ``heislab <command> [--config PATH] [--seed N] [--out DIR] ...``.

Exit codes: 0 ok, 2 configuration error, 3 resource guard, 4 estimation failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import experiments, protocols, rut
from .config import ExperimentConfig, load_config, parse_config
from .errors import ConfigError, EstimationFailure, ResourceGuardError
from .oracle import EvolutionOracle
from .pauli import enumerate_eb

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_ESTIMATION = 0, 2, 3, 4

DEFAULT_MODEL = {"spectrum": {"name": "sbm"}}


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    return "" if v is None else str(v)


def write_csv(path: Path, rows: list[dict], columns: list[str] | None = None):
    columns = columns or (list(rows[0]) if rows else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])


def write_json(path: Path, obj):
    def default(o):
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, complex):
            return [o.real, o.imag]
        raise TypeError(f"not serializable: {type(o).__name__}")

    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=default) + "\n")


def _oracle(cfg: ExperimentConfig, h):
    return EvolutionOracle(h, backend=cfg.backend, noise=cfg.spam(), seed=cfg.seed, tau=cfg.tau, cutoff=cfg.cutoff)


def _emit_result(out: Path, cfg: ExperimentConfig, res: protocols.LearningResult, stem: str = "result"):
    (out / f"{stem}.csv").write_text(res.to_csv())
    write_json(out / f"{stem}.json", {"config": cfg.to_dict(), "result": res.to_dict()})


def cmd_learn_omega(cfg, args, out):
    h = cfg.hamiltonian()
    res = protocols.learn_boson_frequencies(_oracle(cfg, h), cfg.epsilon, cfg.delta, k_max=cfg.k_max, truth=h)
    _emit_result(out, cfg, res)


def cmd_learn_spin(cfg, args, out):
    h = cfg.hamiltonian()
    res = protocols.learn_spin_coefficients(_oracle(cfg, h), cfg.locality(h), cfg.epsilon, cfg.delta, truth=h)
    _emit_result(out, cfg, res)


def cmd_learn_coupling(cfg, args, out):
    h = cfg.hamiltonian()
    orc = _oracle(cfg, h)
    k = cfg.locality(h)
    targets = [cfg.target] if cfg.target else None
    freq = protocols.learn_boson_frequencies(orc, cfg.epsilon / 10, cfg.delta / 2, truth=h)
    w = [freq.coefficients[protocols.omega_key(n)].estimate for n in range(h.n_modes)]
    scheme = args.scheme or cfg.scheme
    if scheme == "trotter":
        res = protocols.learn_couplings_trotter(orc, w, k, cfg.epsilon, cfg.delta / 2, k_max=cfg.k_max,
                                                targets=targets, truth=h)
    else:
        res = protocols.learn_couplings_dqs(orc, w, k, cfg.W, cfg.n_pt, cfg.delta / 2, repetitions=cfg.repetitions,
                                            epsilon=cfg.epsilon, targets=targets, truth=h)
    _emit_result(out, cfg, freq.merge(res, scheme=res.scheme))


def cmd_full(cfg, args, out):
    h = cfg.hamiltonian()
    res = protocols.full_pipeline(_oracle(cfg, h), cfg.locality(h), cfg.epsilon, cfg.delta,
                                  scheme=args.scheme or cfg.scheme, W=cfg.W, n_pt=cfg.n_pt, k_max=None, truth=h)
    _emit_result(out, cfg, res)


def cmd_spectrum(cfg, args, out):
    h = cfg.hamiltonian()
    reps = cfg.repetitions or 40_000
    spec = protocols.learn_spectrum(_oracle(cfg, h), cfg.W, cfg.n_pt, reps, delta=cfg.delta,
                                    target=cfg.target or "X", omega_tilde=None, truth=h)
    (out / "spectrum.csv").write_text(spec.to_csv())
    summary = {"peak_omega": spec.peak_omega(), "repetitions": reps,
               "max_relative_error": None if spec.relative_error is None else float(spec.relative_error.max())}
    write_json(out / "spectrum.json", {"config": cfg.to_dict(), "summary": summary,
                                       "result": spec.learning.to_dict()})


def _default_target(h, k):
    return str(enumerate_eb(h.n_qubits, k)[0])


def cmd_scaling(cfg, args, out):
    kind = args.kind
    if kind == "dqs":
        rows = experiments.dqs_variance_study([10, 30, 100, 300, 1000], [0.0, 1.0], cfg.trials, cfg.seed)
        write_csv(out / "dqs_variance.csv", rows)
        fits = {}
        for n_pt in (0.0, 1.0):
            sel = [r for r in rows if r["n_pt"] == n_pt]
            fits[f"n_pt={n_pt:g}"] = asdict(experiments.fit_scaling(
                [r["W"] for r in sel], [r["empirical_rmse"] for r in sel], "W", "rmse"))
        write_json(out / "dqs_fit.json", fits)
        return
    if kind == "shots":
        rows = experiments.measurement_count_study([1e-2, 1e-3, 1e-4, 1e-5], cfg.delta, seed=cfg.seed)
        write_csv(out / "shots.csv", rows)
        write_json(out / "shots_fit.json", experiments.compare_count_models(
            [r["epsilon"] for r in rows], [r["shots"] for r in rows]))
        return
    h = cfg.hamiltonian()
    target = cfg.target or _default_target(h, cfg.locality(h))
    if kind == "rfe":
        trials = experiments.rfe_scaling(h, target, cfg.mode, range(3, (cfg.k_max or 6) + 4), cfg.trials,
                                         cfg.seed, cfg.spam(), k_max=cfg.k_max, delta=cfg.delta)
        write_csv(out / "rfe_trials.csv", experiments.rows_to_dicts(trials))
        table = experiments.rfe_table(trials)
        write_csv(out / "rfe_rmse.csv", table)
        unc = [r for r in table if not r["capped"] and r["rmse"] > 0]
        fit = experiments.fit_scaling([r["T"] for r in unc], [r["rmse"] for r in unc], "T", "rmse") \
            if len(unc) >= 4 else None
        write_json(out / "rfe_fit.json", {"fit": asdict(fit) if fit else None})
        return
    taus = cfg.tau_grid or [1e-2, 1e-3]
    T_grid = cfg.T_grid or list(np.round(np.logspace(1, 4, 7), 6))
    rows, table = experiments.trotter_scaling(h, target, cfg.mode, taus, T_grid, cfg.trials, cfg.seed,
                                              noise=cfg.spam(), threads=args.threads)
    write_csv(out / "scaling_trials.csv", experiments.rows_to_dicts(rows))
    write_csv(out / "scaling_rmse.csv", table)
    fits = {}
    for tau in taus:
        sel = [r for r in table if r["tau"] == float(tau)]
        if len(sel) >= 4:
            fits[f"{tau:g}"] = asdict(experiments.fit_scaling([r["T"] for r in sel], [r["rmse"] for r in sel],
                                                              "T", "rmse"))
    write_json(out / "scaling_fit.json", fits)


def cmd_deviation(cfg, args, out):
    h = cfg.hamiltonian() if cfg.model else experiments.deviation_model(cfg.seed)
    e_b = cfg.target or _default_target(h, cfg.locality(h))
    t_grid = cfg.t_grid or [1, 2, 4, 6, 8, 10]
    tau_grid = cfg.tau_grid or [1e-4, 2e-4, 4e-4, 7e-4, 1e-3]
    t_max = max(t_grid)
    rows_t = rut.deviation_study(h, e_b, t_grid, [max(tau_grid)], cfg.trials, cfg.seed, (cfg.cutoff,))
    rows_tau = rut.deviation_study(h, e_b, [t_max], tau_grid, cfg.trials, cfg.seed + 1, (cfg.cutoff,))
    (out / "deviation_t.csv").write_text(rut.deviation_rows_to_csv(rows_t))
    (out / "deviation_tau.csv").write_text(rut.deviation_rows_to_csv(rows_tau))
    fit_t, _ = experiments.deviation_fits(rows_t)
    _, fit_tau = experiments.deviation_fits(rows_tau)
    write_json(out / "deviation_fit.json", {"t": asdict(fit_t) if fit_t else None,
                                            "tau": asdict(fit_tau) if fit_tau else None})


COMMANDS = {
    "learn-spin": cmd_learn_spin,
    "learn-omega": cmd_learn_omega,
    "learn-coupling": cmd_learn_coupling,
    "spectrum": cmd_spectrum,
    "full": cmd_full,
    "scaling": cmd_scaling,
    "deviation": cmd_deviation,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heislab", description="Hybrid spin-boson Hamiltonian learning experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON experiment config")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--backend", choices=["gaussian", "fock"])
        if name in ("learn-coupling", "full"):
            p.add_argument("--scheme", choices=["trotter", "dqs"])
        if name == "scaling":
            p.add_argument("--kind", choices=["trotter", "rfe", "shots", "dqs"], default="trotter")
    return ap


def _resolve_config(args) -> ExperimentConfig:
    if args.config is not None:
        cfg = load_config(args.config, args.seed)
    else:
        model = DEFAULT_MODEL.get(args.command, {"name": "gdm"})
        data = {"model": model}
        if args.seed is not None:
            data["seed"] = args.seed
        cfg = parse_config(data)
        if args.command == "deviation":
            cfg.model = {}
            cfg.trials = 300
    if args.backend:
        cfg.backend = args.backend
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        out = Path(args.out or cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceGuardError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except EstimationFailure as exc:
        print(f"estimation failed [{exc.tag}]: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
