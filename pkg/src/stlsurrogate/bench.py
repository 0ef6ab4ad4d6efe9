"""Benchmark harness: strategy comparisons on test-grid RMSE.

For each (strategy, budget) cell the harness runs campaigns, evaluates the
fitted surrogate on a common test grid against true robustness (black box +
monitor), and reports RMSE -- median over seeds for the deterministic-ish
strategies, mean and standard deviation over repetitions for random. All
scheduling is derived from one master seed, so a report is reproducible
byte for byte apart from wall-clock fields.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .acquisition import FitSchedule, run_campaign
from .agm import agm_rob
from .blackbox import BlackBoxError
from .design import candidate_pool
from .stl import parse_formula

__all__ = [
    "BenchmarkConfig",
    "test_rmse",
    "true_scores",
    "run_benchmark",
    "export_field",
    "field_grid",
]

TEST_GRID_SEED_OFFSET = 990_001  # keeps the test grid clear of campaign pools


@dataclass
class BenchmarkConfig:
    scenario: str
    strategies: tuple = ("mepe", "ud", "random")
    budgets: tuple = tuple(range(10, 201, 10))
    n_init: int = 50
    pool_size: int = 4096
    test_points: int = 1000
    random_reps: int = 30
    seeds: int = 10
    master_seed: int = 0
    fit: FitSchedule = field(default_factory=FitSchedule)

    def __post_init__(self):
        self.budgets = tuple(int(b) for b in self.budgets)
        if any(b <= 0 for b in self.budgets):
            raise ValueError("budgets must be positive")
        if list(self.budgets) != sorted(set(self.budgets)):
            raise ValueError("budgets must be strictly increasing")
        if self.test_points < 1:
            raise ValueError("need at least one test point")
        if self.random_reps < 1 or self.seeds < 1:
            raise ValueError("repetitions and seeds must be >= 1")
        unknown = set(self.strategies) - {"mepe", "ud", "random"}
        if unknown:
            raise ValueError(f"unknown strategies: {sorted(unknown)}")


def true_scores(formula, blackbox, points):
    """True robustness at each point; NaN where the black box failed."""
    out = np.empty(len(points))
    failures = 0
    for i, x in enumerate(points):
        try:
            out[i] = agm_rob(formula, blackbox.evaluate(x), 0)
        except BlackBoxError:
            out[i] = np.nan
            failures += 1
    return out, failures


def test_rmse(surrogate, truth, grid_points):
    """RMSE of surrogate predictions against precomputed true scores.

    `truth` may contain NaN entries (failed black-box calls); those points
    are dropped and the divisor adjusted.
    """
    truth = np.asarray(truth, dtype=float)
    keep = np.isfinite(truth)
    if not np.any(keep):
        raise ValueError("no valid test points")
    mean, _ = surrogate.predict(np.asarray(grid_points)[keep])
    return float(np.sqrt(np.mean((truth[keep] - mean) ** 2)))


test_rmse.__test__ = False  # not a pytest case when imported into test files


def _seed_for(master, strategy, index):
    offsets = {"mepe": 10_000, "ud": 20_000, "random": 30_000}
    return master + offsets[strategy] + index


def run_benchmark(cfg, scenario_obj=None, progress=None):
    """Run the full strategy x budget comparison; returns the report dict."""
    from .blackbox import scenario as make_scenario

    sc = scenario_obj or make_scenario(cfg.scenario)
    formula = sc.formula
    dom = sc.domain
    bb = sc.blackbox

    grid = candidate_pool(
        dom, cfg.test_points, seed=cfg.master_seed + TEST_GRID_SEED_OFFSET
    ).points
    truth, grid_failures = true_scores(formula, bb, grid)

    report = {
        "scenario": cfg.scenario,
        "config": {
            "strategies": list(cfg.strategies),
            "budgets": list(cfg.budgets),
            "n_init": cfg.n_init,
            "pool_size": cfg.pool_size,
            "test_points": cfg.test_points,
            "random_reps": cfg.random_reps,
            "seeds": cfg.seeds,
            "master_seed": cfg.master_seed,
        },
        "test_grid_failures": grid_failures,
        "cells": {},
        "records": {},
    }

    max_budget = max(cfg.budgets)
    for strategy in cfg.strategies:
        if strategy == "mepe":
            # one campaign per seed at the largest budget; intermediate
            # budgets come from its snapshots (identical prefixes, since the
            # adaptive choice depends only on the past)
            per_budget = {b: [] for b in cfg.budgets}
            for s in range(cfg.seeds):
                seed = _seed_for(cfg.master_seed, strategy, s)
                t0 = time.perf_counter()
                rec = run_campaign(
                    formula,
                    dom,
                    bb,
                    budget=max_budget,
                    n_init=cfg.n_init,
                    pool_size=cfg.pool_size,
                    seed=seed,
                    strategy="mepe",
                    fit_schedule=cfg.fit,
                    snapshot_budgets=cfg.budgets,
                )
                wall = time.perf_counter() - t0
                report["records"][f"mepe-{max_budget}-{seed}"] = rec
                for b in cfg.budgets:
                    snap = (
                        rec.surrogate()
                        if b == max_budget
                        else rec.snapshot_surrogate(b)
                    )
                    per_budget[b].append(
                        {
                            "seed": seed,
                            "rmse": test_rmse(snap, truth, grid),
                            "wallclock_s": wall,
                        }
                    )
            for b in cfg.budgets:
                rmses = [c["rmse"] for c in per_budget[b]]
                report["cells"][f"mepe-{b}"] = {
                    "strategy": "mepe",
                    "budget": b,
                    "rmse_median": float(np.median(rmses)),
                    "rmse_all": rmses,
                    "runs": per_budget[b],
                }
        elif strategy == "ud":
            # the lattice is deterministic; seeds only perturb the GP restarts
            for b in cfg.budgets:
                runs = []
                for s in range(cfg.seeds):
                    seed = _seed_for(cfg.master_seed, strategy, s)
                    t0 = time.perf_counter()
                    rec = run_campaign(
                        formula,
                        dom,
                        bb,
                        budget=b,
                        seed=seed,
                        strategy="ud",
                        fit_schedule=cfg.fit,
                    )
                    wall = time.perf_counter() - t0
                    report["records"][f"ud-{b}-{seed}"] = rec
                    runs.append(
                        {
                            "seed": seed,
                            "rmse": test_rmse(rec.surrogate(), truth, grid),
                            "wallclock_s": wall,
                        }
                    )
                rmses = [c["rmse"] for c in runs]
                report["cells"][f"ud-{b}"] = {
                    "strategy": "ud",
                    "budget": b,
                    "rmse_median": float(np.median(rmses)),
                    "rmse_all": rmses,
                    "runs": runs,
                }
        else:  # random
            for b in cfg.budgets:
                runs = []
                for r in range(cfg.random_reps):
                    seed = _seed_for(cfg.master_seed, strategy, r)
                    t0 = time.perf_counter()
                    rec = run_campaign(
                        formula,
                        dom,
                        bb,
                        budget=b,
                        seed=seed,
                        strategy="random",
                        fit_schedule=cfg.fit,
                    )
                    wall = time.perf_counter() - t0
                    report["records"][f"random-{b}-{seed}"] = rec
                    runs.append(
                        {
                            "seed": seed,
                            "rmse": test_rmse(rec.surrogate(), truth, grid),
                            "wallclock_s": wall,
                        }
                    )
                rmses = [c["rmse"] for c in runs]
                report["cells"][f"random-{b}"] = {
                    "strategy": "random",
                    "budget": b,
                    "rmse_mean": float(np.mean(rmses)),
                    "rmse_std": float(np.std(rmses)),
                    "rmse_median": float(np.median(rmses)),
                    "rmse_all": rmses,
                    "runs": runs,
                }
        if progress:
            progress(strategy)

    return report


def write_report(report, out_dir):
    """Write report.json, rmse.csv, and per-cell campaign records."""
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    record_paths = {}
    for key, rec in report["records"].items():
        path = out / f"campaign-{key}.json"
        rec.save(path)
        record_paths[key] = str(path)

    doc = {k: v for k, v in report.items() if k != "records"}
    doc["record_paths"] = record_paths
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)

    with open(out / "rmse.csv", "w", encoding="utf-8") as fh:
        fh.write("strategy,budget,rmse_median,rmse_mean,rmse_std\n")
        for cell in doc["cells"].values():
            fh.write(
                f"{cell['strategy']},{cell['budget']},"
                f"{cell.get('rmse_median', '')},"
                f"{cell.get('rmse_mean', '')},{cell.get('rmse_std', '')}\n"
            )
    return out / "report.json"


# ---------------------------------------------------------------------------
# Field export


def field_grid(dom, resolution):
    """Regular grid over the domain's bounding box (row-major, last axis
    fastest); points outside the domain are dropped."""
    if isinstance(resolution, int):
        resolution = (resolution,) * dom.dim
    if len(resolution) != dom.dim:
        raise ValueError("resolution must give one count per dimension")
    lo, hi = dom.bounds()
    axes = [np.linspace(lo[j], hi[j], int(r)) for j, r in enumerate(resolution)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    keep = np.array([dom.contains(p) for p in pts])
    return pts[keep]


def export_field(surrogate, dom, resolution, path):
    """CSV of (x..., predicted mean, predicted variance) over a regular grid."""
    pts = field_grid(dom, resolution)
    mean, var = surrogate.predict(pts)
    names = list(dom.names)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(names) + ",mean,variance\n")
        for row, m, v in zip(pts, mean, var):
            fh.write(
                ",".join(repr(float(c)) for c in row)
                + f",{float(m)!r},{float(v)!r}\n"
            )
    return pts, mean, var
