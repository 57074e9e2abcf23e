"""Comparison cells, win/loss tables, per-pair statistics and report files.

Everything here reads the store and writes under ``<store>/report``; results
are never modified.
"""
import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateSampleError, ParameterError
from ..metrics import ConvergenceInput, convergence_rate_flagged
from ..stats import PairedSample, bky_correct, sign_test, sign_test_critical, wilcoxon
from .store import ResultStore, Unit

MISSING = "MISSING"
Q_LEVEL = 0.05
PCT_FLOOR = 1e-12


def oriented(task, tl, ref):
    """Positive when the transferred model is better: F1 up, or MAE down."""
    return tl - ref if task == "classification" else ref - tl


def pct_difference(task, tl_values, ref_values):
    """Mean oriented difference as a percentage of the mean referent value."""
    deltas = [oriented(task, a, b) for a, b in zip(tl_values, ref_values)]
    denom = max(abs(float(np.mean(ref_values))), PCT_FLOOR)
    return 100.0 * float(np.mean(deltas)) / denom


@dataclass
class RerunRecord:
    rerun: int
    omega: float
    tl_test: float
    ref_test: float
    tl_val: float
    tl_convergence: float
    ref_convergence: float
    convergence_degenerate: bool
    grid_test: dict = field(default_factory=dict)


@dataclass
class ComparisonCell:
    """One (architecture, source, target, reduction) comparison.

    Both sides of every rerun come from the same architecture trained on the
    same reduced target data; the constructor refuses anything else.
    """

    architecture: str
    source: str
    target: str
    reduction: int
    task: str
    intra_domain: bool
    reruns: list
    missing: list

    def __post_init__(self):
        if self.source == self.target:
            raise ParameterError("source and target must differ")

    @property
    def complete(self):
        return not self.missing and bool(self.reruns)

    def _mean(self, attr, records=None):
        recs = self.reruns if records is None else records
        return float(np.mean([getattr(r, attr) for r in recs])) if recs else float("nan")

    @property
    def tl_score(self):
        return self._mean("tl_test")

    @property
    def referent_score(self):
        return self._mean("ref_test")

    @property
    def _conv_records(self):
        return [r for r in self.reruns if not r.convergence_degenerate]

    @property
    def tl_convergence(self):
        return self._mean("tl_convergence", self._conv_records)

    @property
    def referent_convergence(self):
        return self._mean("ref_convergence", self._conv_records)

    def outcome(self, by="score"):
        """'win', 'loss', 'tie', or None if undecidable."""
        if not self.complete:
            return None
        if by == "score":
            d = oriented(self.task, self.tl_score, self.referent_score)
        else:
            if not self._conv_records:
                return None
            d = self.tl_convergence - self.referent_convergence
        return "win" if d > 0 else ("loss" if d < 0 else "tie")


def _better(task, a, b):
    return a > b if task == "classification" else a < b


def collect_cells(cfg, store=None):
    store = store or ResultStore(cfg.store_dir)
    from .run import load_dataset
    cells = []
    for a in cfg.architectures:
        for s, t in cfg.pairs():
            ds = load_dataset(cfg, t)
            intra = (cfg.dataset(s).domain == cfg.dataset(t).domain and cfg.dataset(s).domain != "")
            for size in cfg.reduction_sizes:
                reruns, missing = [], []
                for k in range(cfg.reruns):
                    base = store.history(Unit("baseline", a.name, target=t, reduction=size, rerun=k))
                    grid = {w: store.history(Unit("finetune", a.name, s, t, size, k, w))
                            for w in cfg.omega_grid}
                    if base is None or any(h is None for h in grid.values()):
                        missing.append(k)
                        continue
                    # grid selection by validation metric at the restored epoch
                    best_w = None
                    for w in cfg.omega_grid:
                        if best_w is None or _better(ds.task, grid[w].best_val_metric,
                                                     grid[best_w].best_val_metric):
                            best_w = w
                    sel = grid[best_w]
                    tl_rate, tl_deg = convergence_rate_flagged(
                        ConvergenceInput(tuple(sel.curve()), ds.task))
                    ref_rate, ref_deg = convergence_rate_flagged(
                        ConvergenceInput(tuple(base.curve()), ds.task))
                    reruns.append(RerunRecord(k, best_w, sel.final_test_score,
                                              base.final_test_score, sel.best_val_metric,
                                              tl_rate, ref_rate, tl_deg or ref_deg,
                                              {w: h.final_test_score for w, h in grid.items()}))
                cells.append(ComparisonCell(a.name, s, t, size, ds.task, intra, reruns, missing))
    return cells


def _partition(cell):
    return "intra" if cell.intra_domain else "cross"


def win_loss_rows(cells):
    rows = []
    for by in ("score", "convergence"):
        for part in ("intra", "cross", "all"):
            sel = [c for c in cells if part == "all" or _partition(c) == part]
            outcomes = [c.outcome(by) for c in sel]
            decided = [o for o in outcomes if o is not None]
            wins = sum(o == "win" for o in decided)
            ties = sum(o == "tie" for o in decided)
            n = len(decided)
            row = {"metric": by, "partition": part, "cases": n, "wins": wins,
                   "losses": n - wins, "ties": ties, "incomplete": len(sel) - n}
            if n:
                row["critical"] = sign_test_critical(n)
                row["verdict"] = sign_test(wins, n - wins)
            else:
                row["critical"], row["verdict"] = MISSING, MISSING
            rows.append(row)
    return rows


def matrix_rows(cells, by="score"):
    """Per (source, target, reduction) mean % difference with Wilcoxon and BKY flags.

    Pairs are (architecture, rerun) results; every architecture contributes.
    """
    groups = {}
    for c in cells:
        groups.setdefault((c.source, c.target, c.reduction), []).append(c)
    rows = []
    for (s, t, size), cs in sorted(groups.items()):
        task = cs[0].task
        complete = all(c.complete for c in cs)
        tl, ref = [], []
        for c in cs:
            recs = c.reruns if by == "score" else c._conv_records
            for r in recs:
                if by == "score":
                    tl.append(r.tl_test)
                    ref.append(r.ref_test)
                else:
                    tl.append(r.tl_convergence)
                    ref.append(r.ref_convergence)
        row = {"source": s, "target": t, "reduction": size, "pairs": len(tl),
               "complete": complete}
        if not complete or not tl:
            row.update(pct_diff=MISSING, wilcoxon_w=MISSING, p_value=MISSING)
        else:
            conv_task = "classification" if by == "convergence" else task
            row["pct_diff"] = pct_difference(conv_task, tl, ref)
            deltas = [oriented(conv_task, a, b) for a, b in zip(tl, ref)]
            try:
                w, p = wilcoxon(PairedSample(tuple(deltas)))
            except DegenerateSampleError:
                w, p = 0.0, 1.0
            row["wilcoxon_w"], row["p_value"] = w, p
        rows.append(row)
    tested = [i for i, r in enumerate(rows) if r["p_value"] != MISSING]
    for r in rows:
        r["p_adjusted"], r["significant"], r["direction"] = MISSING, False, ""
    if tested:
        rejected, adjusted = bky_correct([rows[i]["p_value"] for i in tested], Q_LEVEL)
        for i, rej, adj in zip(tested, rejected, adjusted):
            rows[i]["p_adjusted"] = float(adj)
            rows[i]["significant"] = bool(rej)
            if rej:
                rows[i]["direction"] = "positive" if rows[i]["pct_diff"] > 0 else "negative"
    return rows


def utilization_rows(cells):
    """Per architecture: cells in which the transferred model won, by score."""
    rows = []
    for arch in sorted({c.architecture for c in cells}):
        mine = [c for c in cells if c.architecture == arch]
        decided = [c.outcome("score") for c in mine]
        decided = [o for o in decided if o is not None]
        rows.append({"architecture": arch, "cases": len(decided),
                     "wins": sum(o == "win" for o in decided),
                     "incomplete": len(mine) - len(decided)})
    return rows


def omega_rows(cells, omega_grid):
    """Mean % gain over the referent for each multiplier, across cells and reruns."""
    rows = []
    for w in omega_grid:
        gains = []
        for c in cells:
            for r in c.reruns:
                if w in r.grid_test:
                    denom = max(abs(r.ref_test), PCT_FLOOR)
                    gains.append(100.0 * oriented(c.task, r.grid_test[w], r.ref_test) / denom)
        rows.append({"omega": w, "runs": len(gains),
                     "mean_gain_pct": float(np.mean(gains)) if gains else MISSING})
    return rows


def cell_rows(cells):
    rows = []
    for c in cells:
        rows.append({
            "architecture": c.architecture, "source": c.source, "target": c.target,
            "reduction": c.reduction, "task": c.task,
            "partition": _partition(c), "complete": c.complete,
            "missing_reruns": ";".join(map(str, c.missing)),
            "tl_score": c.tl_score if c.reruns else MISSING,
            "referent_score": c.referent_score if c.reruns else MISSING,
            "tl_convergence": c.tl_convergence if c._conv_records else MISSING,
            "referent_convergence": c.referent_convergence if c._conv_records else MISSING,
            "selected_omegas": ";".join(f"{r.omega:g}" for r in c.reruns),
            "outcome_score": c.outcome("score") or MISSING,
            "outcome_convergence": c.outcome("convergence") or MISSING,
        })
    return rows


def _write_csv(path, rows):
    if not rows:
        open(path, "w").close()
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in r.items()})


def cmd_report(cfg, out_dir=None):
    store = ResultStore(cfg.store_dir)
    if store.is_empty():
        raise ParameterError(f"result store {cfg.store_dir} is empty")
    cells = collect_cells(cfg, store)
    out_dir = out_dir or store.path("report")
    os.makedirs(out_dir, exist_ok=True)
    tables = {
        "win_loss": win_loss_rows(cells),
        "matrix_score": matrix_rows(cells, "score"),
        "matrix_convergence": matrix_rows(cells, "convergence"),
        "utilization": utilization_rows(cells),
        "omega_gain": omega_rows(cells, cfg.omega_grid),
        "cells": cell_rows(cells),
    }
    for name, rows in tables.items():
        _write_csv(os.path.join(out_dir, f"{name}.csv"), rows)
    summary = {
        "q_level": Q_LEVEL,
        "notes": ["ties count as non-wins (losses include ties)",
                  "grid entries selected by validation metric; reported scores are test scores",
                  "percentage differences are relative to the mean referent value"],
        **tables,
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True, default=float)
    return summary
