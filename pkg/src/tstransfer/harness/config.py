"""Experiment configuration: a single YAML file, validated up front.

Example::

    seed_root: 7
    output_dir: runs/desk
    reruns: 2
    pretrain_repeats: 2
    reduction_sizes: [300, 900]
    omega_grid: [0.1, 1.0, 2.0]
    train: {max_epochs: 60, batch_size: 32}
    datasets:
      src: {domain: synth-a, stream_max: true,
            synthetic: {kind: shared_filter_pair, role: source, seed: 11}}
      tgt: {domain: synth-a, path: data/target.tsd}
    sources: [src]
    targets: [tgt]
    architectures:
      - {family: tcn, scale: 0.25}
"""
import os
from dataclasses import dataclass, field

import yaml

from ..errors import ConfigError, ParameterError
from ..models import FAMILIES, CONVNETQUAKE_VARIANTS
from ..trainer import TrainConfig
from ..transfer import DEFAULT_OMEGA_GRID

_TOP_KEYS = {"seed_root", "output_dir", "reruns", "pretrain_repeats", "reduction_sizes",
             "omega_grid", "train", "datasets", "sources", "targets", "architectures", "workers",
             "split_min"}


@dataclass
class DatasetEntry:
    name: str
    domain: str = ""
    stream_max: bool = False
    path: str = None
    synthetic: dict = None

    @property
    def key(self):
        return self.name


@dataclass
class ArchEntry:
    name: str
    family: str
    scale: float = 1.0
    variant: str = "base"
    tcn: dict = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    datasets: dict
    sources: list
    targets: list
    architectures: list
    omega_grid: tuple = DEFAULT_OMEGA_GRID
    reruns: int = 7
    pretrain_repeats: int = 10
    reduction_sizes: tuple = (1500, 9000)
    train: TrainConfig = field(default_factory=TrainConfig)
    seed_root: int = 0
    output_dir: str = "runs"
    workers: int = None
    base_dir: str = "."

    def pairs(self):
        """(source, target) pairs to schedule; equal pairs are never scheduled."""
        return [(s, t) for s in self.sources for t in self.targets if s != t]

    def arch(self, name):
        for a in self.architectures:
            if a.name == name:
                return a
        raise ConfigError(f"unknown architecture {name!r}")

    def dataset(self, name):
        if name not in self.datasets:
            raise ConfigError(f"unknown dataset {name!r}")
        return self.datasets[name]

    @property
    def store_dir(self):
        return self.output_dir if os.path.isabs(self.output_dir) else os.path.join(
            self.base_dir, self.output_dir)

    def to_dict(self):
        return {
            "datasets": {k: {kk: vv for kk, vv in v.__dict__.items() if kk != "name" and vv is not None}
                         for k, v in self.datasets.items()},
            "sources": list(self.sources),
            "targets": list(self.targets),
            "architectures": [dict(a.__dict__) for a in self.architectures],
            "omega_grid": list(self.omega_grid),
            "reruns": self.reruns,
            "pretrain_repeats": self.pretrain_repeats,
            "reduction_sizes": list(self.reduction_sizes),
            "train": self.train.to_dict(),
            "seed_root": self.seed_root,
            "output_dir": self.output_dir,
        }


def _positive_int(raw, key, default):
    v = raw.get(key, default)
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise ConfigError(f"{key} must be a positive integer, got {v!r}")
    return v


def parse_config(raw, base_dir="."):
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    datasets = {}
    for name, d in (raw.get("datasets") or {}).items():
        if not isinstance(d, dict):
            raise ConfigError(f"dataset {name!r} must be a mapping")
        extra = set(d) - {"domain", "stream_max", "path", "synthetic"}
        if extra:
            raise ConfigError(f"dataset {name!r}: unknown keys {sorted(extra)}")
        if (d.get("path") is None) == (d.get("synthetic") is None):
            raise ConfigError(f"dataset {name!r} needs exactly one of path / synthetic")
        entry = DatasetEntry(name, str(d.get("domain", "")), bool(d.get("stream_max", False)),
                             d.get("path"), d.get("synthetic"))
        if entry.path is not None:
            full = entry.path if os.path.isabs(entry.path) else os.path.join(base_dir, entry.path)
            if not os.path.exists(full):
                raise ConfigError(f"dataset {name!r}: file {full} does not exist")
            entry.path = full
        else:
            syn = entry.synthetic
            if syn.get("kind") not in ("shared_filter_pair", "noise"):
                raise ConfigError(f"dataset {name!r}: unknown synthetic kind {syn.get('kind')!r}")
            if syn.get("role") not in ("source", "target"):
                raise ConfigError(f"dataset {name!r}: synthetic role must be source or target")
        datasets[name] = entry
    if not datasets:
        raise ConfigError("no datasets configured")
    sources = list(raw.get("sources") or [])
    targets = list(raw.get("targets") or [])
    for n in sources + targets:
        if n not in datasets:
            raise ConfigError(f"unknown dataset {n!r} in sources/targets")
    archs = []
    for a in raw.get("architectures") or []:
        if not isinstance(a, dict) or a.get("family") not in FAMILIES:
            raise ConfigError(f"architecture needs a family from {sorted(FAMILIES)}: {a!r}")
        variant = a.get("variant", "base")
        if a["family"] == "convnetquake_ingv" and variant not in CONVNETQUAKE_VARIANTS:
            raise ConfigError(f"unknown ConvNetQuake variant {variant!r}")
        archs.append(ArchEntry(a.get("name", a["family"]), a["family"], float(a.get("scale", 1.0)),
                               variant, dict(a.get("tcn") or {})))
    if not archs:
        raise ConfigError("no architectures configured")
    if len({a.name for a in archs}) != len(archs):
        raise ConfigError("architecture names must be unique")
    grid = tuple(float(w) for w in raw.get("omega_grid", DEFAULT_OMEGA_GRID))
    if not grid or any(w <= 0 for w in grid) or len(set(grid)) != len(grid):
        raise ConfigError("omega_grid must be distinct positive values")
    sizes = tuple(int(s) for s in raw.get("reduction_sizes", (1500, 9000)))
    if not sizes or any(s < 1 for s in sizes):
        raise ConfigError("reduction_sizes must be positive")
    try:
        train = TrainConfig(**(raw.get("train") or {}))
    except (TypeError, ParameterError) as exc:
        raise ConfigError(f"train: {exc}") from None
    workers = raw.get("workers")
    if workers is not None and (not isinstance(workers, int) or workers < 0):
        raise ConfigError("workers must be a non-negative integer")
    cfg = ExperimentConfig(datasets, sources, targets, archs, grid,
                           _positive_int(raw, "reruns", 7),
                           _positive_int(raw, "pretrain_repeats", 10), sizes, train,
                           int(raw.get("seed_root", 0)), str(raw.get("output_dir", "runs")),
                           workers, base_dir)
    if not cfg.pairs():
        raise ConfigError("no source/target pair with distinct datasets to schedule")
    return cfg


def load_config(path):
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from None
    return parse_config(raw, base_dir=os.path.dirname(os.path.abspath(path)))
