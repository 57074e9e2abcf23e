"""Acceptance criteria, one test each; every test records a pass/fail line."""
import os
import shutil
import statistics
import time

import numpy as np
import yaml

from acceptance_log import record
from oracles import bky_bruteforce, convergence_reference, wilcoxon_bruteforce
from test_autodiff import CASES, SCALAR_CASES, run_op_gradcheck
from test_models import FAMILIES, architecture_gradcheck
from test_stats import random_deltas, random_pvalues
from test_trainer import protocol_matches_reference
from test_transfer import pre_activation_invariant, three_to_one_gap
from tstransfer.autodiff import RngStream
from tstransfer.dataio import SplitDataset, TimeSeriesDataset, minmax_scale, preprocess, split
from tstransfer.harness import run as run_mod
from tstransfer.harness.config import load_config, parse_config
from tstransfer.harness.report import MISSING, cmd_report
from tstransfer.harness.store import ResultStore
from tstransfer.metrics import convergence_rate
from tstransfer.models import ArchitectureSpec, build
from tstransfer.stats import (SIGNIFICANT_TL, bky_correct, sign_test, sign_test_critical,
                              wilcoxon)
from tstransfer.transfer import extract, implant

HERE = os.path.dirname(os.path.abspath(__file__))
DESK_CONFIG = os.path.join(HERE, os.pardir, "configs", "desk.yaml")


def test_criterion_01_gradients():
    start = time.process_time()
    failures = []
    for name in sorted(CASES) + sorted(SCALAR_CASES):
        for seed in range(20):
            try:
                run_op_gradcheck(name, seed)
            except AssertionError as exc:
                failures.append((name, seed, str(exc)[:200]))
    for family in FAMILIES:
        for seed in range(20):
            try:
                architecture_gradcheck(family, seed, "classification" if seed % 2 else "regression")
            except AssertionError as exc:
                failures.append((family, seed, str(exc)[:200]))
    cpu = time.process_time() - start
    ok = not failures and cpu < 300
    n = 20 * (len(CASES) + len(SCALAR_CASES) + len(FAMILIES))
    record(1, ok, f"{n} gradient checks, {len(failures)} failed, {cpu:.0f}s CPU (limit 300s)")
    assert ok, failures[:3]


def test_criterion_02_sign_test_anchor():
    crit = sign_test_critical(240)
    verdict = sign_test(204, 36)
    ok = crit == 136 and verdict == SIGNIFICANT_TL
    record(2, ok, f"critical(240) = {crit}, verdict(204, 36) = {verdict}")
    assert ok


def test_criterion_03_convergence_anchors():
    a = convergence_rate([0, 1, 1, 1], "classification")
    b = convergence_rate([0, 1 / 3, 2 / 3, 1], "classification")
    c = convergence_rate([4, 2, 1, 1], "regression")
    r = RngStream(3)
    out_of_range = mismatched = 0
    for i in range(10_000):
        curve = list(r.normal((int(r.integers(1, 60)),)) * float(r.uniform((), 0.01, 100)))
        task = "classification" if i % 2 else "regression"
        rate = convergence_rate(curve, task)
        out_of_range += not 0 <= rate <= 1
        mismatched += abs(rate - convergence_reference(curve, task == "classification")) > 1e-9
    ok = (a == 0.75 and abs(b - 0.5) < 1e-12 and abs(c - 2 / 3) < 1e-12 and not out_of_range
          and not mismatched)
    record(3, ok, f"anchors {a:.4f} / {b:.4f} / {c:.4f}; {out_of_range} of 10^4 random curves "
                  f"outside [0,1], {mismatched} disagree with the reference")
    assert ok


def test_criterion_04_wilcoxon_oracle():
    disagreements, total = 0, 0
    for n in range(1, 11):
        r = RngStream(100 + n)
        drawn = 0
        while drawn < 1000:
            d = random_deltas(r, n)
            if all(v == 0 for v in d):
                continue
            drawn += 1
            _, p = wilcoxon(d)
            _, p_ref = wilcoxon_bruteforce(d)
            disagreements += (p <= 0.05) != (p_ref <= 0.05)
            total += 1
    ok = disagreements == 0
    record(4, ok, f"{total} samples (n = 1..10), {disagreements} rejection disagreements at 0.05")
    assert ok


def test_criterion_05_bky_oracle():
    r = RngStream(5)
    mismatches = 0
    for _ in range(1000):
        m = int(r.integers(1, 13))
        p = random_pvalues(r, m)
        rej, _ = bky_correct(p, 0.05)
        mismatches += set(np.flatnonzero(rej)) != bky_bruteforce(p, 0.05)
    ok = mismatches == 0
    record(5, ok, f"1000 random p-vectors (m <= 12), {mismatches} rejection-set mismatches")
    assert ok


def test_criterion_06_surgery():
    worst_pre = max(pre_activation_invariant(seed) for seed in range(100))
    bitwise = True
    for family in FAMILIES:
        src = build(ArchitectureSpec(family=family, scale=0.25, seed=1))
        dst = build(ArchitectureSpec(family=family, scale=0.25, seed=2))
        b = extract(src)
        implant(b, dst)
        bitwise &= all(p.data.tobytes() == q.data.tobytes()
                       for p, q in zip(src.transferable_parameters(),
                                       dst.transferable_parameters()))
        bitwise &= extract(dst).equals(b)
    worst_31 = max(three_to_one_gap(family, seed) for family in FAMILIES for seed in range(3))
    ok = worst_pre <= 1e-6 and bitwise and worst_31 <= 1e-6
    record(6, ok, f"max |y' - (3y - 2b)| = {worst_pre:.2e} over 100 draws; round trip bitwise: "
                  f"{bitwise}; max (3->1) forward gap = {worst_31:.2e}")
    assert ok


def test_criterion_07_protocol():
    mismatches = sum(not protocol_matches_reference(seed) for seed in range(1000))
    ok = mismatches == 0
    record(7, ok, f"1000 scripted loss sequences, {mismatches} differ from the reference")
    assert ok


def test_criterion_08_preprocessing():
    worst_range = worst_mean = 0.0
    leaks = 0
    for seed in range(200):
        r = RngStream(seed)
        n, c, length = int(r.integers(10, 80)), int(r.integers(1, 4)), int(r.integers(2, 40))
        raw = r.normal((n, c, length)) * r.uniform((n, 1, 1), 0.1, 10) + r.normal((n, 1, 1))
        sp = split(TimeSeriesDataset(raw, np.zeros(n), "regression"), seed)
        scaled, _ = minmax_scale(sp.train.X)
        worst_range = max(worst_range, max(0.0, -float(scaled.min()), float(scaled.max()) - 1))
        out, state = preprocess(sp)
        worst_mean = max(worst_mean, float(np.abs(out.train.X.astype(np.float64).mean(0)).max()))
        val, test = sp.val.X.copy(), sp.test.X.copy()
        val[int(r.integers(0, len(val)))] += 50 * r.normal((c, length))
        test[int(r.integers(0, len(test)))] *= -7
        out2, state2 = preprocess(SplitDataset(sp.train, sp.val.with_arrays(val),
                                               sp.test.with_arrays(test)))
        leaks += not (np.array_equal(state.mask, state2.mask)
                      and np.array_equal(out.train.X, out2.train.X)
                      and np.array_equal(out.train.stream_max, out2.train.stream_max))
    ok = worst_range == 0 and worst_mean <= 1e-6 and leaks == 0
    record(8, ok, f"200 random datasets: scaled range overshoot {worst_range:.1e}, "
                  f"max |train mean| {worst_mean:.1e}, {leaks} leakage failures")
    assert ok


def _desk_config(store):
    cfg = load_config(DESK_CONFIG)
    raw = cfg.to_dict()
    raw["output_dir"] = str(store)
    return parse_config(raw, base_dir=os.path.dirname(os.path.abspath(DESK_CONFIG)))


def _tree(root):
    out = {}
    for dirpath, _, files in os.walk(root):
        rel = os.path.relpath(dirpath, root)
        if rel.split(os.sep)[0] in ("timings", "report"):
            continue
        for f in files:
            with open(os.path.join(dirpath, f), "rb") as fh:
                out[os.path.join(rel, f)] = fh.read()
    return out


_DESK = {}


def _desk_run(tmp_path_factory):
    if "cfg" not in _DESK:
        cfg = _desk_config(tmp_path_factory.mktemp("desk") / "store")
        start = time.perf_counter()
        runner = run_mod.cmd_run(cfg, workers=min(4, os.cpu_count() or 1))
        _DESK.update(cfg=cfg, runner=runner, seconds=time.perf_counter() - start)
    return _DESK["cfg"], _DESK["runner"], _DESK["seconds"]


def test_criterion_09_desk_end_to_end(tmp_path_factory, tmp_path):
    with open(DESK_CONFIG) as fh:
        shipped = yaml.safe_load(fh)
    shape_ok = (sorted(shipped["omega_grid"]) == [0.1, 1.0, 2.0] and shipped["reruns"] == 2
                and sorted(shipped["reduction_sizes"]) == [300, 900]
                and len(shipped["architectures"]) == 2
                and all(a["scale"] == 0.25 for a in shipped["architectures"]))
    cfg, runner, seconds = _desk_run(tmp_path_factory)
    completed = not runner.failed
    full = _tree(cfg.store_dir)

    # resume over a finished store trains nothing and changes nothing
    again = run_mod.cmd_run(cfg, workers=0)
    idle_ok = again.trained == 0 and _tree(cfg.store_dir) == full

    # interruption: drop the last finetune logs and the manifest, then resume
    partial = _desk_config(tmp_path / "store")
    shutil.copytree(cfg.store_dir, partial.store_dir)
    store = ResultStore(partial.store_dir)
    _, second = run_mod.schedule(partial)
    dropped = second[-4:]
    for u in dropped:
        os.remove(store.path(u.log_path))
    os.remove(store.path("manifest.jsonl"))
    resumed = run_mod.cmd_run(partial, workers=0)
    resume_ok = resumed.trained == len(dropped) and _tree(partial.store_dir) == full

    summary = cmd_report(cfg)
    rows_ok = all(r["wins"] + r["losses"] == r["cases"] for r in summary["win_loss"])
    flags_ok = all(
        (r["p_adjusted"] != MISSING and r["p_adjusted"] <= 0.05) if r["significant"]
        else (r["p_adjusted"] == MISSING or r["p_adjusted"] > 0.05 - 1e-12)
        for key in ("matrix_score", "matrix_convergence") for r in summary[key])
    flags_ok &= all(
        bool(r["significant"]) == bool(rej)
        for key in ("matrix_score", "matrix_convergence")
        for r, rej in zip([r for r in summary[key] if r["p_value"] != MISSING],
                          bky_correct([r["p_value"] for r in summary[key]
                                       if r["p_value"] != MISSING] or [1.0], 0.05)[0]))
    fast = seconds < 30 * 60
    ok = shape_ok and completed and fast and idle_ok and resume_ok and rows_ok and flags_ok
    record(9, ok, f"desk run {seconds / 60:.1f} min on {min(4, os.cpu_count() or 1)} worker(s) "
                  f"(limit 30), failed units {len(runner.failed)}, idle resume {idle_ok}, "
                  f"interrupted resume {resume_ok}, wins+losses==cases {rows_ok}, "
                  f"BKY-only flags {flags_ok}")
    assert ok


def test_criterion_10_directional_sanity(tmp_path_factory):
    cfg, _, _ = _desk_run(tmp_path_factory)
    summary = cmd_report(cfg)
    smallest = min(cfg.reduction_sizes)
    from tstransfer.harness.report import collect_cells
    cells = [c for c in collect_cells(cfg) if c.reduction == smallest]
    tl = [r.tl_test for c in cells for r in c.reruns]
    ref = [r.ref_test for c in cells for r in c.reruns]
    task = cells[0].task
    med_tl, med_ref = statistics.median(tl), statistics.median(ref)
    better = med_tl >= med_ref if task == "classification" else med_tl <= med_ref
    row = [r for r in summary["win_loss"] if r["metric"] == "score" and r["partition"] == "all"][0]
    record(10, better,
           f"reduction {smallest}: median TL {med_tl:.4f} vs scratch {med_ref:.4f} "
           f"({'TL at least as good' if better else 'scratch better'}); "
           f"score wins {row['wins']}/{row['cases']}, sign test: {row['verdict']}",
           asserted=False)
