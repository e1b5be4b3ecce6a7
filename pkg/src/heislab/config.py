"""Versioned JSON experiment configuration.

Unknown keys are rejected. Errors carry the line of the offending key so the
CLI can point at it.
"""
from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .gaussian import SpamNoise
from .model import SpectralDensitySpec, build_gdm, build_named_model, build_sbm, HybridHamiltonian

SCHEMA_VERSION = 1
NAMED = ("gdm", "sbm", "holstein", "ssh", "spin_peierls")


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _fail(msg, text=None, key=None):
    line = _line_of(text, key) if key else None
    raise ConfigError(f"line {line}: {msg}" if line else msg)


@dataclass
class ExperimentConfig:
    model: dict
    seed: int
    version: int = SCHEMA_VERSION
    scheme: str = "trotter"
    backend: str = "gaussian"
    epsilon: float = 1e-2
    delta: float = 0.05
    tau: float | None = None
    k_max: int | None = 6
    k: int | None = None
    W: int = 1000
    n_pt: float = 1.0
    repetitions: int | None = None
    noise: dict = field(default_factory=dict)
    trials: int = 100
    cutoff: int = 32
    target: str | None = None
    mode: int = 0
    tau_grid: list | None = None
    T_grid: list | None = None
    t_grid: list | None = None
    out: str = "out"

    def spam(self) -> SpamNoise:
        return SpamNoise(**self.noise)

    def hamiltonian(self) -> HybridHamiltonian:
        m = self.model
        if "file" in m:
            return HybridHamiltonian.from_json(Path(m["file"]).read_text())
        seed = m.get("seed", self.seed)
        if "spectral" in m:
            return build_sbm(SpectralDensitySpec(**m["spectral"]), seed)
        name = m["name"]
        if name == "gdm":
            return build_gdm(seed)
        if name == "sbm":
            return build_sbm(SpectralDensitySpec(**m.get("parameters", {})), seed)
        return build_named_model(name, m.get("size", 2), m.get("parameters"), seed)

    def locality(self, h: HybridHamiltonian) -> int:
        return self.k if self.k is not None else h.locality

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_MODEL_KEYS = {"name", "file", "spectral", "size", "parameters", "seed"}
_SPECTRAL_KEYS = {"eta", "gamma", "Omega", "omega_cut", "n_modes"}
_NOISE_KEYS = {"quad_sigma", "qubit_flip_p", "prep_offset"}


def parse_config(data: dict, text: str | None = None, seed_override: int | None = None) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    if not isinstance(data, dict):
        _fail("config must be a JSON object")
    for key in data:
        if key not in known:
            _fail(f"unknown key {key!r}", text, key)
    if data.get("version", SCHEMA_VERSION) != SCHEMA_VERSION:
        _fail(f"unsupported schema version {data.get('version')!r}", text, "version")
    data = dict(data)
    if seed_override is not None:
        data["seed"] = seed_override
    if "seed" not in data:
        env = os.environ.get("HEISLAB_SEED")
        if env is None:
            _fail("a seed is required (config 'seed', --seed or HEISLAB_SEED)")
        try:
            data["seed"] = int(env)
        except ValueError:
            _fail(f"HEISLAB_SEED is not an integer: {env!r}")
    if not isinstance(data["seed"], int) or isinstance(data["seed"], bool) or data["seed"] < 0:
        _fail("seed must be a non-negative integer", text, "seed")

    model = data.get("model")
    if not isinstance(model, dict):
        _fail("'model' block is required", text, "model")
    for key in model:
        if key not in _MODEL_KEYS:
            _fail(f"unknown model key {key!r}", text, key)
    sources = [s for s in ("name", "file", "spectral") if s in model]
    if len(sources) != 1:
        _fail("model needs exactly one of 'name', 'file', 'spectral'", text, "model")
    if "name" in model and model["name"] not in NAMED:
        _fail(f"unknown model name {model['name']!r}", text, "name")
    for key in model.get("spectral", {}):
        if key not in _SPECTRAL_KEYS:
            _fail(f"unknown spectral key {key!r}", text, key)
    for key in data.get("noise", {}):
        if key not in _NOISE_KEYS:
            _fail(f"unknown noise key {key!r}", text, key)

    checks = {
        "epsilon": lambda v: v > 0,
        "delta": lambda v: 0 < v < 1,
        "tau": lambda v: v is None or v > 0,
        "k_max": lambda v: v is None or (isinstance(v, int) and v >= 0),
        "W": lambda v: isinstance(v, int) and v >= 1,
        "n_pt": lambda v: v >= 0,
        "trials": lambda v: isinstance(v, int) and v >= 1,
        "cutoff": lambda v: isinstance(v, int) and v >= 2,
        "mode": lambda v: isinstance(v, int) and v >= 0,
        "scheme": lambda v: v in ("trotter", "dqs"),
        "backend": lambda v: v in ("gaussian", "fock"),
        "repetitions": lambda v: v is None or (isinstance(v, int) and v >= 1),
    }
    for key, ok in checks.items():
        if key in data:
            try:
                good = ok(data[key])
            except TypeError:
                good = False
            if not good:
                _fail(f"invalid value for {key!r}: {data[key]!r}", text, key)
    for key in ("tau_grid", "T_grid", "t_grid"):
        if key in data and data[key] is not None:
            v = data[key]
            if not isinstance(v, list) or not v or any(not isinstance(x, (int, float)) or x <= 0 for x in v):
                _fail(f"{key!r} must be a non-empty list of positive numbers", text, key)
    cfg = ExperimentConfig(**data)
    try:
        cfg.spam()
    except ValueError as exc:
        _fail(f"invalid noise block: {exc}", text, "noise")
    return cfg


def load_config(path, seed_override: int | None = None) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}: {exc.msg}") from exc
    return parse_config(data, text, seed_override)
