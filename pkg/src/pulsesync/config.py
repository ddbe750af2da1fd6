"""Flat key=value experiment configuration.

Configs are plain text files of ``key = value`` lines (# starts a comment),
optionally overridden by ``--key value`` pairs on the command line.  Every
run writes a manifest echoing the fully resolved configuration, so reruns
are reproducible byte for byte.  Random initial phases come from a
splitmix64 stream documented in the README, so other implementations can
reproduce the same draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict

import numpy as np


class ConfigError(ValueError):
    """Invalid experiment configuration (unknown key, bad value, bad type)."""


_MASK = (1 << 64) - 1


def splitmix64(seed: int, count: int) -> list:
    """First ``count`` outputs of the splitmix64 generator."""
    state = seed & _MASK
    out = []
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & _MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        z ^= z >> 31
        out.append(z)
    return out


def uniform_phases(seed: int, count: int, xi: float) -> np.ndarray:
    """count phases uniform in [0, xi): (output >> 11) * 2**-53 * xi."""
    return np.array([(z >> 11) * (2.0**-53) * xi for z in splitmix64(seed, count)])


# key -> (type, default); None default means the key is required if listed
_KEYS = {
    "seed": (int, 0),
    "xi": (float, 1.01),
    "w": (float, 0.1),
    "comb_range": (int, 20),
    "pulse_kind": (str, "gaussian_comb"),
    "pulse_level": (float, 1.0),
    "omega": (float, 2.0),
    "delta_t": (float, 0.01),
    "coupling_kind": (str, "all_to_all"),
    "n": (int, 2),
    "a": (float, 1.0),
    "coupling_csv": (str, ""),
    "t_end": (float, 0.0),   # 0 -> experiment picks a sensible horizon
    "h": (float, 0.0),       # 0 -> default step
    "history": (str, "constant_rate"),
    "theta0": (str, ""),     # comma list; empty -> seeded uniform draws
    "phi0": (float, 0.05),
    "theta_bar0": (float, -1.0),  # negative -> xi/2
    "jump": (float, 0.1),
    "sample_h": (float, 0.01),
    "points": (int, 200),
    "upper_frac": (float, 0.9),
    "lower_frac": (float, 0.01),
    "strong_tol": (float, 0.0),  # 0 -> 1e-3 * xi
    "sweep_min": (float, 0.002),
    "sweep_max": (float, 0.1),
    "sweep_points": (int, 8),
    "inset_delta_t": (float, 0.1),
}

_PULSE_KEYS = {"xi", "w", "comb_range", "pulse_kind", "pulse_level"}
_COUPLING_KEYS = {"coupling_kind", "n", "a", "coupling_csv"}

EXPERIMENT_KEYS: Dict[str, set] = {
    "simulate": _PULSE_KEYS | _COUPLING_KEYS
    | {"seed", "omega", "delta_t", "t_end", "h", "history", "theta0", "strong_tol"},
    "dirac": {"omega", "jump", "delta_t", "theta0", "t_end", "sample_h", "seed", "n", "xi"},
    "predict": _PULSE_KEYS | {"omega", "delta_t", "phi0", "theta_bar0", "t_end", "points", "a"},
    "spectrum": _PULSE_KEYS | _COUPLING_KEYS | {"omega", "delta_t"},
    "sweep-delay": _PULSE_KEYS
    | {"omega", "a", "phi0", "theta_bar0", "sweep_min", "sweep_max", "sweep_points",
       "upper_frac", "lower_frac", "h"},
    "fig1": {"omega", "jump", "t_end", "theta0", "sample_h"},
    "fig2": _PULSE_KEYS | {"omega", "delta_t", "inset_delta_t", "phi0", "theta_bar0",
                           "t_end", "h", "a"},
    "fig3": _PULSE_KEYS
    | {"omega", "a", "phi0", "theta_bar0", "sweep_min", "sweep_max", "sweep_points",
       "upper_frac", "lower_frac", "h"},
    "mechanism": _PULSE_KEYS | {"omega", "delta_t", "phi0", "theta_bar0", "t_end", "h", "a"},
}

EXPERIMENTS = sorted(EXPERIMENT_KEYS)


@dataclass
class ExperimentConfig:
    experiment: str
    out_dir: Path
    values: dict = field(default_factory=dict)

    def __getitem__(self, key: str):
        return self.values[key]


def _coerce(key: str, raw: str):
    typ, _ = _KEYS[key]
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return str(raw)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: cannot parse {raw!r} as {typ.__name__}") from exc


def parse_config_file(path) -> Dict[str, str]:
    """Read raw key=value pairs from a config file."""
    pairs: Dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key in pairs:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        pairs[key] = value
    return pairs


def resolve(experiment: str, out_dir, raw: Dict[str, str]) -> ExperimentConfig:
    """Validate raw pairs against the experiment's schema and fill defaults."""
    if experiment not in EXPERIMENT_KEYS:
        raise ConfigError(
            f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}"
        )
    allowed = EXPERIMENT_KEYS[experiment]
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(
            f"unknown key(s) for experiment {experiment!r}: {', '.join(unknown)}"
        )
    values = {key: _KEYS[key][1] for key in allowed}
    for key, rawval in raw.items():
        values[key] = _coerce(key, rawval)
    _check(experiment, values)
    return ExperimentConfig(experiment=experiment, out_dir=Path(out_dir), values=values)


def _check(experiment: str, values: dict) -> None:
    if "pulse_kind" in values and values["pulse_kind"] not in ("gaussian_comb", "constant"):
        raise ConfigError(f"pulse_kind must be gaussian_comb or constant, got {values['pulse_kind']!r}")
    if "coupling_kind" in values and values["coupling_kind"] not in ("all_to_all", "ring_laplacian", "csv"):
        raise ConfigError(
            f"coupling_kind must be all_to_all, ring_laplacian or csv, got {values['coupling_kind']!r}"
        )
    if values.get("coupling_kind") == "csv" and not values.get("coupling_csv"):
        raise ConfigError("coupling_kind=csv requires coupling_csv=<path>")
    if "history" in values and values["history"] not in ("constant_rate", "frozen"):
        raise ConfigError(f"history must be constant_rate or frozen, got {values['history']!r}")
    for key in ("xi", "w", "omega"):
        if key in values and not values[key] > 0.0:
            raise ConfigError(f"{key} must be positive, got {values[key]}")
    for key in ("delta_t", "t_end", "h", "sample_h", "jump", "pulse_level"):
        if key in values and values[key] < 0.0:
            raise ConfigError(f"{key} must be >= 0, got {values[key]}")


def parse_theta0(values: dict, n: int, xi: float) -> np.ndarray:
    """Explicit comma-separated phases, or seeded uniform draws in [0, xi)."""
    raw = values.get("theta0", "")
    if raw:
        try:
            arr = np.array([float(tok) for tok in raw.split(",")])
        except ValueError as exc:
            raise ConfigError(f"theta0: cannot parse {raw!r}") from exc
        if arr.size != n:
            raise ConfigError(f"theta0 needs {n} entries, got {arr.size}")
        return arr
    return uniform_phases(int(values.get("seed", 0)), n, xi)


def manifest_text(config: ExperimentConfig) -> str:
    lines = [f"experiment = {config.experiment}"]
    for key in sorted(config.values):
        val = config.values[key]
        lines.append(f"{key} = {repr(val) if isinstance(val, float) else val}")
    return "\n".join(lines) + "\n"
