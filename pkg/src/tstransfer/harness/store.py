"""Result store: a directory of per-unit logs plus a sorted manifest.

Layout under the store root::

    manifest.jsonl                      one record per unit, sorted by id
    pretrain/<arch>/<source>/repeat<r>.jsonl and .bundle
    pretrain/<arch>/<source>/selected.bundle and selected.json
    baseline/<arch>/<target>/r<size>/rerun<k>.jsonl
    finetune/<arch>/<source>/<target>/r<size>/rerun<k>/omega<w>.jsonl
    timings/<unit id with / replaced by __>.json   wall-clock only
    report/                              written by the report stage

Everything except ``timings/`` and ``report/`` is a deterministic function
of the config, so an interrupted-then-resumed run reproduces it byte for byte.
"""
import json
import os
from dataclasses import dataclass

from ..autodiff import derive_seed
from ..trainer import RunHistory

MANIFEST = "manifest.jsonl"


def omega_tag(omega):
    return f"omega{omega:g}"


@dataclass(frozen=True)
class Unit:
    kind: str
    arch: str
    source: str = None
    target: str = None
    reduction: int = None
    rerun: int = None
    omega: float = None
    repeat: int = None

    @property
    def id(self):
        if self.kind == "pretrain":
            return f"pretrain/{self.arch}/{self.source}/repeat{self.repeat}"
        if self.kind == "select":
            return f"pretrain/{self.arch}/{self.source}/selected"
        if self.kind == "baseline":
            return f"baseline/{self.arch}/{self.target}/r{self.reduction}/rerun{self.rerun}"
        return (f"finetune/{self.arch}/{self.source}/{self.target}/r{self.reduction}/"
                f"rerun{self.rerun}/{omega_tag(self.omega)}")

    @property
    def log_path(self):
        return self.id + (".json" if self.kind == "select" else ".jsonl")

    def seed(self, seed_root):
        return derive_seed(seed_root, self.kind, self.arch, self.source, self.target,
                           self.reduction, self.rerun, self.omega, self.repeat)


class ResultStore:
    def __init__(self, root):
        self.root = root

    def path(self, rel):
        return os.path.join(self.root, rel)

    def ensure_parent(self, rel):
        os.makedirs(os.path.dirname(self.path(rel)), exist_ok=True)

    # -- manifest ---------------------------------------------------------
    def manifest(self):
        p = self.path(MANIFEST)
        if not os.path.exists(p):
            return {}
        with open(p) as fh:
            recs = [json.loads(line) for line in fh if line.strip()]
        return {r["unit"]: r for r in recs}

    def write_manifest(self, records):
        os.makedirs(self.root, exist_ok=True)
        tmp = self.path(MANIFEST + ".tmp")
        with open(tmp, "w") as fh:
            for key in sorted(records):
                fh.write(json.dumps(records[key], sort_keys=True) + "\n")
        os.replace(tmp, self.path(MANIFEST))

    def is_done(self, unit):
        return os.path.exists(self.path(unit.log_path))

    # -- artifacts --------------------------------------------------------
    def save_history(self, unit, history):
        self.ensure_parent(unit.log_path)
        history.save(self.path(unit.log_path), include_wall_time=False)
        self.save_timing(unit, history.wall_time)

    def history(self, unit):
        p = self.path(unit.log_path)
        return RunHistory.load(p) if os.path.exists(p) else None

    def save_timing(self, unit, seconds):
        rel = os.path.join("timings", unit.id.replace("/", "__") + ".json")
        self.ensure_parent(rel)
        with open(self.path(rel), "w") as fh:
            json.dump({"unit": unit.id, "wall_time": seconds}, fh)

    def bundle_path(self, arch, source, repeat=None):
        name = "selected.bundle" if repeat is None else f"repeat{repeat}.bundle"
        return self.path(os.path.join("pretrain", arch, source, name))

    def selection(self, arch, source):
        p = self.path(Unit("select", arch, source).log_path)
        if not os.path.exists(p):
            return None
        with open(p) as fh:
            return json.load(fh)

    def is_empty(self):
        return not self.manifest()
