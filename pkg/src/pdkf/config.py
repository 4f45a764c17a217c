"""Flat key/value experiment configuration.

The file format is one dotted key per line, ``key = value``; ``#`` starts a
comment; matrices are row-major whitespace-separated number lists.  A
``preset`` key fills in defaults that explicit keys override.  The master
seed can be overridden through the PDKF_MASTER_SEED environment variable.
"""
import os
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError
from .presets import H_TYPE_A, H_TYPE_B, PRESETS
from .selection import SCHEMES
from .statespace import StateSpaceModel

SEED_ENV_VAR = "PDKF_MASTER_SEED"


def read_kv(path):
    """Parse a flat key/value file into an ordered dict of raw strings."""
    out = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = stripped.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _floats(raw, key):
    try:
        return [float(tok) for tok in raw.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: expected numbers, got {raw!r}") from exc


def _matrix(raw, rows, cols, key):
    vals = _floats(raw, key)
    if len(vals) != rows * cols:
        raise ConfigError(f"key {key!r}: expected {rows * cols} numbers, got {len(vals)}")
    return np.array(vals).reshape(rows, cols)


def _int(raw, key):
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: expected integer, got {raw!r}") from exc


def _float(raw, key):
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: expected number, got {raw!r}") from exc


def _bool(raw, key):
    low = raw.lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"key {key!r}: expected boolean, got {raw!r}")


@dataclass
class ExperimentConfig:
    """Fully resolved experiment description."""

    model: StateSpaceModel
    n_nodes: int
    avg_degree: float
    edges: list            # empty -> use the random generator
    sensor_rule: str
    h_types: tuple         # the two observation patterns assigned at random
    noise_range: tuple
    scheme: str
    L_values: list
    shared_masks: bool
    runs: int
    horizon: int
    window: int
    seed: int
    include_dkf: bool = False
    raw: dict = field(default_factory=dict)

    def validate(self):
        if self.runs < 1:
            raise ConfigError("run.runs must be >= 1")
        if not self.horizon > self.window >= 1:
            raise ConfigError("run.horizon must exceed run.window, which must be >= 1")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"selection.scheme must be one of {SCHEMES}")
        if not self.L_values:
            self.L_values = []
        M = self.model.M
        for L in self.L_values:
            if not 0 <= L <= M:
                raise ConfigError(f"selection.L value {L} outside [0, {M}]")
        if self.n_nodes < 1:
            raise ConfigError("network.nodes must be >= 1")
        if not self.edges and self.n_nodes > 1:
            if not 0 <= self.avg_degree <= self.n_nodes - 1:
                raise ConfigError("network.avg_degree outside [0, N-1]")
        lo, hi = self.noise_range
        if lo < 0 or hi < lo:
            raise ConfigError("sensors.noise_min/noise_max must satisfy 0 <= min <= max")
        return self


def from_dict(data):
    """Build and validate an ExperimentConfig from raw string key/values."""
    data = dict(data)
    preset = data.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}")
        merged = dict(PRESETS[preset])
        merged.update(data)
        data = merged

    def get(key, default=None, required=False):
        if key in data:
            return data[key]
        if required:
            raise ConfigError(f"missing required config key {key!r}")
        return default

    M = _int(get("model.M", required=True), "model.M")
    F = _matrix(get("model.F", required=True), M, M, "model.F")
    F = F * _float(get("model.F_scale", "1.0"), "model.F_scale")
    G = _matrix(get("model.G", required=True), M, M, "model.G")
    Q = _matrix(get("model.Q", required=True), M, M, "model.Q")
    Pi0 = _matrix(get("model.Pi0", required=True), M, M, "model.Pi0")
    try:
        model = StateSpaceModel(F=F, G=G, Q=Q, Pi0=Pi0)
    except ValueError as exc:
        raise ConfigError(f"invalid model matrices: {exc}") from exc

    n_nodes = _int(get("network.nodes", required=True), "network.nodes")
    avg_degree = _float(get("network.avg_degree", "2"), "network.avg_degree")
    edges = []
    if "network.edges" in data:
        flat = [int(v) for v in _floats(data["network.edges"], "network.edges")]
        if len(flat) % 2:
            raise ConfigError("network.edges must hold an even count of node indices")
        edges = list(zip(flat[::2], flat[1::2]))

    p_rows = _int(get("sensors.rows", "3"), "sensors.rows")
    if "sensors.H_type_a" in data or "sensors.H_type_b" in data:
        h_a = _matrix(get("sensors.H_type_a", required=True), p_rows, M, "sensors.H_type_a")
        h_b = _matrix(get("sensors.H_type_b", required=True), p_rows, M, "sensors.H_type_b")
    else:
        if M != 4:
            raise ConfigError("default observation patterns need model.M = 4; "
                              "supply sensors.H_type_a/H_type_b")
        h_a, h_b = H_TYPE_A, H_TYPE_B

    L_values = [int(v) for v in _floats(get("selection.L", ""), "selection.L")] \
        if get("selection.L") else []

    seed = _int(get("run.seed", "0"), "run.seed")
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        seed = _int(env_seed, SEED_ENV_VAR)

    cfg = ExperimentConfig(
        model=model,
        n_nodes=n_nodes,
        avg_degree=avg_degree,
        edges=edges,
        sensor_rule=get("sensors.rule", "paper-sec4"),
        h_types=(h_a, h_b),
        noise_range=(_float(get("sensors.noise_min", "0.0"), "sensors.noise_min"),
                     _float(get("sensors.noise_max", "0.5"), "sensors.noise_max")),
        scheme=get("selection.scheme", "sequential"),
        L_values=L_values,
        shared_masks=_bool(get("selection.shared", "true"), "selection.shared"),
        runs=_int(get("run.runs", "200"), "run.runs"),
        horizon=_int(get("run.horizon", "5000"), "run.horizon"),
        window=_int(get("run.window", "1000"), "run.window"),
        seed=seed,
        include_dkf=_bool(get("run.include_dkf", "false"), "run.include_dkf"),
        raw={**({"preset": preset} if preset else {}), **data},
    )
    return cfg.validate()


def load_config(path):
    return from_dict(read_kv(path))
