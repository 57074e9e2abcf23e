"""Unit scheduling and execution for an experiment."""
import functools
import json
import logging
import multiprocessing
import os
import shutil
from concurrent.futures import ProcessPoolExecutor, as_completed

from ..dataio import load_canonical, preprocess, reduce_training, split, synth_task
from ..errors import ConfigError, NumericFailure, SurgeryError, TSTransferError
from ..models import ArchitectureSpec, TCNParams, build
from ..trainer import train
from ..transfer import adapt_channels, assign_multipliers, extract, implant, load_bundle, save_bundle
from ..autodiff import RngStream, derive_seed
from .store import ResultStore, Unit

log = logging.getLogger(__name__)

WORKERS_ENV = "TSTRANSFER_WORKERS"
_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMBA_NUM_THREADS")


# -- data ----------------------------------------------------------------
@functools.lru_cache(maxsize=16)
def _load(entry_key):
    name, path, synthetic = entry_key
    if path is not None:
        return load_canonical(path, name=name)
    syn = json.loads(synthetic)
    source, target = synth_task(syn["kind"], syn.get("params"), syn.get("seed", 0))
    ds = source if syn["role"] == "source" else target
    ds.name = name
    return ds


def load_dataset(cfg, name):
    e = cfg.dataset(name)
    syn = None if e.synthetic is None else json.dumps(e.synthetic, sort_keys=True)
    return _load((name, e.path, syn))


def split_for(cfg, name):
    # the split is fixed per dataset, shared by every rerun and architecture
    return split(load_dataset(cfg, name), derive_seed(cfg.seed_root, "split", name))


def pretrain_data(cfg, source):
    return preprocess(split_for(cfg, source))[0]


def target_variant(cfg, target, size, rerun):
    sp = split_for(cfg, target)
    reduced = reduce_training(sp, size, derive_seed(cfg.seed_root, "reduce", target, size, rerun))
    return preprocess(reduced)[0]


def arch_spec(cfg, arch_name, ds_name, seed):
    a = cfg.arch(arch_name)
    ds = load_dataset(cfg, ds_name)
    return ArchitectureSpec(family=a.family, input_channels=ds.channels, input_length=ds.length,
                            task=ds.task, num_classes=ds.num_classes,
                            stream_max=cfg.dataset(ds_name).stream_max, variant=a.variant,
                            scale=a.scale, tcn=TCNParams(**a.tcn), seed=seed)


def _train_cfg(cfg, seed):
    from dataclasses import replace
    return replace(cfg.train, seed=seed)


# -- units ---------------------------------------------------------------
def schedule(cfg):
    """All training units, grouped as (first phase, finetune phase)."""
    first, second = [], []
    for a in cfg.architectures:
        for s in sorted({s for s, _ in cfg.pairs()}):
            first += [Unit("pretrain", a.name, source=s, repeat=r)
                      for r in range(cfg.pretrain_repeats)]
        for t in sorted({t for _, t in cfg.pairs()}):
            for size in cfg.reduction_sizes:
                first += [Unit("baseline", a.name, target=t, reduction=size, rerun=k)
                          for k in range(cfg.reruns)]
        for s, t in cfg.pairs():
            for size in cfg.reduction_sizes:
                for k in range(cfg.reruns):
                    second += [Unit("finetune", a.name, s, t, size, k, w) for w in cfg.omega_grid]
    seeds = {}
    for u in first + second:
        sd = u.seed(cfg.seed_root)
        if sd in seeds:
            raise ConfigError(f"seed collision between {seeds[sd]} and {u.id}")
        seeds[sd] = u.id
    return first, second


def execute_unit(cfg, unit):
    """Train one unit and persist its artifacts. Returns the unit id."""
    store = ResultStore(cfg.store_dir)
    seed = unit.seed(cfg.seed_root)
    rng = RngStream(seed)
    if unit.kind == "pretrain":
        data = pretrain_data(cfg, unit.source)
        model = build(arch_spec(cfg, unit.arch, unit.source, derive_seed(seed, "init")))
    elif unit.kind == "baseline":
        data = target_variant(cfg, unit.target, unit.reduction, unit.rerun)
        model = build(arch_spec(cfg, unit.arch, unit.target, derive_seed(seed, "init")))
    else:
        sel = store.selection(unit.arch, unit.source)
        if sel is None:
            raise SurgeryError(f"no pre-trained bundle for {unit.arch}/{unit.source}")
        data = target_variant(cfg, unit.target, unit.reduction, unit.rerun)
        spec = arch_spec(cfg, unit.arch, unit.target, derive_seed(seed, "init"))
        try:
            bundle = adapt_channels(load_bundle(store.bundle_path(unit.arch, unit.source)),
                                    spec.input_channels)
            model = build(spec, input_replication=bundle.input_replication)
            implant(bundle, model)
        except TSTransferError as exc:
            raise SurgeryError(f"{unit.source} -> {unit.target}: {exc}") from None
        assign_multipliers(model, unit.omega)
    history = train(model, data, _train_cfg(cfg, derive_seed(seed, "train")), rng.spawn("train"))
    history.meta = {"unit": unit.id, "seed": seed, "omega": unit.omega}
    if unit.kind == "pretrain":
        store.ensure_parent(unit.log_path)
        save_bundle(extract(model, {"dataset": unit.source, "seed": seed, "repeat": unit.repeat}),
                    store.bundle_path(unit.arch, unit.source, unit.repeat))
    store.save_history(unit, history)
    return unit.id


def select_pretrained(cfg, store, arch, source):
    """Keep the repeat with the lowest best-epoch validation loss."""
    best = None
    for r in range(cfg.pretrain_repeats):
        h = store.history(Unit("pretrain", arch, source=source, repeat=r))
        if h is not None and (best is None or h.best_val_loss < best[1]):
            best = (r, h.best_val_loss)
    if best is None:
        return None
    shutil.copyfile(store.bundle_path(arch, source, best[0]), store.bundle_path(arch, source))
    unit = Unit("select", arch, source)
    with open(store.path(unit.log_path), "w") as fh:
        json.dump({"repeat": best[0], "val_loss": best[1]}, fh, sort_keys=True)
    return best


def worker_count(cfg, override=None):
    if override is not None:
        return override
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    if cfg.workers is not None:
        return cfg.workers
    return os.cpu_count() or 1


def _record(unit, status, error=None):
    rec = {"unit": unit.id, "kind": unit.kind, "status": status, "path": unit.log_path}
    if error:
        rec["error"] = error
    return rec


class Runner:
    """Executes units, skipping completed ones, and keeps the manifest current.

    ``workers == 0`` runs inline in this process; otherwise a spawned process
    pool with single-threaded BLAS in each worker.
    """

    def __init__(self, cfg, workers=None):
        self.cfg = cfg
        self.store = ResultStore(cfg.store_dir)
        self.workers = worker_count(cfg, workers)
        self.records = self.store.manifest()
        self.trained = 0
        self.failed = []

    def _finish(self, unit, error=None):
        if error is None:
            self.records[unit.id] = _record(unit, "done")
        else:
            log.warning("unit %s failed: %s", unit.id, error)
            self.records[unit.id] = _record(unit, "failed", error)
            self.failed.append(unit.id)
        self.store.write_manifest(self.records)

    def run_units(self, units):
        todo = []
        for u in units:
            if self.store.is_done(u):
                if self.records.get(u.id, {}).get("status") != "done":
                    self._finish(u)
            else:
                todo.append(u)
        if not todo:
            return
        if self.workers == 0:
            for u in todo:
                self._run_inline(u)
            return
        for var in _THREAD_VARS:
            os.environ.setdefault(var, "1")
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=self.workers, mp_context=ctx) as pool:
            futures = {pool.submit(execute_unit, self.cfg, u): u for u in todo}
            for fut in as_completed(futures):
                u = futures[fut]
                exc = fut.exception()
                self.trained += 1
                self._finish(u, None if exc is None else _describe(exc))

    def _run_inline(self, u):
        try:
            execute_unit(self.cfg, u)
            err = None
        except (NumericFailure, SurgeryError, TSTransferError) as exc:
            err = _describe(exc)
        self.trained += 1
        self._finish(u, err)

    def select(self, arch, source):
        unit = Unit("select", arch, source)
        if self.store.selection(arch, source) is not None:
            if unit.id not in self.records:
                self._finish(unit)
            return
        if select_pretrained(self.cfg, self.store, arch, source) is None:
            self._finish(unit, "every pre-training repeat failed")
        else:
            self._finish(unit)


def _describe(exc):
    return f"{type(exc).__name__}: {exc}"


def cmd_run(cfg, workers=None):
    """Everything in the config; returns the Runner (``failed`` lists failed unit ids)."""
    first, second = schedule(cfg)
    runner = Runner(cfg, workers)
    runner.run_units(first)
    for a in cfg.architectures:
        for s in sorted({s for s, _ in cfg.pairs()}):
            runner.select(a.name, s)
    runner.run_units(second)
    return runner


def cmd_pretrain(cfg, source, arch, workers=None):
    runner = Runner(cfg, workers)
    runner.run_units([Unit("pretrain", arch, source=source, repeat=r)
                      for r in range(cfg.pretrain_repeats)])
    runner.select(arch, source)
    sel = runner.store.selection(arch, source)
    if sel is None:
        raise TSTransferError(f"pre-training {arch} on {source}: every repeat failed")
    return runner


def cmd_baseline(cfg, target, reduction, arch=None, workers=None):
    archs = [arch] if arch else [a.name for a in cfg.architectures]
    runner = Runner(cfg, workers)
    runner.run_units([Unit("baseline", a, target=target, reduction=reduction, rerun=k)
                      for a in archs for k in range(cfg.reruns)])
    return runner


def cmd_finetune(cfg, source, target, reduction, arch=None, workers=None):
    archs = [arch] if arch else [a.name for a in cfg.architectures]
    runner = Runner(cfg, workers)
    for a in archs:
        if runner.store.selection(a, source) is None:
            raise SurgeryError(f"no pre-trained bundle for {a}/{source}; run pretrain first")
    runner.run_units([Unit("finetune", a, source, target, reduction, k, w)
                      for a in archs for k in range(cfg.reruns) for w in cfg.omega_grid])
    return runner
