"""Run configuration files and CSV output.

A configuration file is plain ``key = value`` lines, optionally under a single
``[run]`` header; ``#`` and ``;`` start comments. Every key must belong to
:data:`SCHEMA`; anything else is an error. Example::

    model = kfp
    etas = 1, 1
    temps = 1, 3
    T0 = 3
    n = 100000
    t_end = 10
    seed = 12345

Seeds: ``seed`` is one 64-bit root. Independent streams are the children of
``numpy.random.SeedSequence(seed).spawn(n)``, so stream ``i`` is determined by
``(seed, i)`` alone and reruns with the same file are bit-identical.
"""

from __future__ import annotations

import configparser
import csv
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .grids import PhaseGrid, VelocityGrid
from .model import DomainSpec, ModelConfig, ReservoirSet

TIMESERIES_HEADER = ("t", "That_f", "T_sched", "l1_to_ness", "ks_D", "tv")
SNAPSHOT_HEADER = ("x", "v", "f")
NESS_HEADER = ("v", "density")
MIXING_HEADER = ("T", "density")


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.replace(";", ",").split(",") if p.strip())


@dataclass(frozen=True)
class RunConfig:
    model: str = "kfp"
    etas: tuple[float, ...] = (1.0, 1.0)
    temps: tuple[float, ...] = (1.0, 3.0)
    alpha: float = 1.0
    T0: float = 3.0
    L: float = 1.0
    d: int = 1
    n: int = 100_000
    t_end: float = 10.0
    checkpoints: int = 20
    seed: int = 0
    n_v: int = 1024
    n_x: int = 128
    v_max: float | None = None
    dt: float | None = None
    transport: str = "spectral"
    output: str = "run"

    def __post_init__(self):
        if self.model not in ("kfp", "bgk"):
            raise ConfigError("model must be kfp or bgk")
        if len(self.etas) != len(self.temps) or not self.etas:
            raise ConfigError("etas and temps must be nonempty lists of equal length")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.n < 1 or self.checkpoints < 1:
            raise ConfigError("n and checkpoints must be positive")

    def model_config(self) -> ModelConfig:
        try:
            return ModelConfig(ReservoirSet.from_arrays(self.etas, self.temps), DomainSpec(self.L, self.d),
                               self.model, self.alpha, self.T0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def checkpoint_times(self) -> np.ndarray:
        return self.t_end * np.arange(1, self.checkpoints + 1) / self.checkpoints


_PARSERS = {
    "model": str.strip,
    "etas": _floats,
    "temps": _floats,
    "alpha": float,
    "T0": float,
    "L": float,
    "d": int,
    "n": int,
    "t_end": float,
    "checkpoints": int,
    "seed": int,
    "n_v": int,
    "n_x": int,
    "v_max": float,
    "dt": float,
    "transport": str.strip,
    "output": str.strip,
}
SCHEMA = tuple(f.name for f in fields(RunConfig))
assert set(SCHEMA) == set(_PARSERS)


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse config text; unknown keys, duplicate keys and bad values raise ``ConfigError``."""
    if not text.lstrip().startswith("["):
        text = "[run]\n" + text
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), strict=True, interpolation=None)
    cp.optionxform = str  # keys are case-sensitive (T0)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    if cp.sections() != ["run"]:
        raise ConfigError("only a single [run] section is allowed")
    values = {}
    for key, raw in cp["run"].items():
        if key not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}; allowed: {', '.join(SCHEMA)}")
        try:
            values[key] = _PARSERS[key](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return replace(base or RunConfig(), **values)


def load_config(path: str | Path, base: RunConfig | None = None) -> RunConfig:
    return parse_config(Path(path).read_text(), base)


# -- CSV ----------------------------------------------------------------------

def format_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.17g}"


def _write(path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_float(x) for x in row])
    return path


def write_timeseries(path, t, That_f, T_sched, l1_to_ness=None, ks_D=None, tv=None) -> Path:
    n = len(t)
    cols = [np.asarray(c, dtype=float) if c is not None else np.full(n, np.nan)
            for c in (t, That_f, T_sched, l1_to_ness, ks_D, tv)]
    if any(c.shape != (n,) for c in cols):
        raise ValueError("time-series columns differ in length")
    return _write(path, TIMESERIES_HEADER, zip(*cols))


def write_snapshot(path, grid: PhaseGrid) -> Path:
    X, V = np.meshgrid(grid.x, grid.v, indexing="ij")
    return _write(path, SNAPSHOT_HEADER, zip(X.ravel(), V.ravel(), grid.values.ravel()))


def write_ness(path, v, density) -> Path:
    return _write(path, NESS_HEADER, zip(np.asarray(v), np.asarray(density)))


def write_velocity_grid(path, grid: VelocityGrid) -> Path:
    return write_ness(path, grid.v, grid.values)


def write_mixing(path, T, density) -> Path:
    return _write(path, MIXING_HEADER, zip(np.asarray(T), np.asarray(density)))


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with Path(path).open() as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(x) for x in r] for r in rows[1:]])
