"""Batch simulation harness: generate, sample, shuffle, rediscover, score.

Every (cell, repetition) derives its own seed from the master seed and the
cell's parameter values via ``SeedSequence([master, p, l, k, n, rep])``, so
results are independent of execution order and worker count, runs are
resumable, and a rerun with the same configuration reproduces the output
byte for byte.  Wall-clock timings are inherently non-deterministic and go
to a separate timings file; the results CSV holds only derived quantities.
"""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .metrics import cid, kendall
from .ordering import best_order_dp
from .probability import sample
from .randgen import GenConfig, random_staged_tree, shuffle_variables

__all__ = ["ExperimentConfig", "run_experiment", "RESULT_FIELDS"]

RESULT_FIELDS = ["p", "l", "k", "n", "rep", "method", "cid", "kd", "bic"]
TIMING_FIELDS = ["p", "l", "k", "n", "rep", "method", "seconds"]

DEFAULT_N_GRID = (100, 250, 500, 1000, 2500, 5000, 10000)


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid specification for the recovery benchmark."""

    p_values: tuple[int, ...] = (2, 3, 4, 5)
    l_values: tuple[int, ...] = (2, 3, 4)
    k_values: tuple[int, ...] = (2, 3, 4)
    n_values: tuple[int, ...] = DEFAULT_N_GRID
    reps: int = 20
    methods: tuple[str, ...] = ("bhc", "kmeans")
    seed: int = 0
    clusters: int = 2
    restarts: int = 10
    smoothing: float = 1.0

    def __post_init__(self):
        for name in ("p_values", "l_values", "k_values", "n_values", "methods"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not (self.p_values and self.l_values and self.k_values and self.n_values):
            raise ValueError("grid must be nonempty")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        bad = set(self.methods) - {"bhc", "kmeans"}
        if bad:
            raise ValueError(f"unknown methods: {sorted(bad)}")

    @staticmethod
    def from_dict(doc: dict) -> "ExperimentConfig":
        kwargs = {}
        aliases = {
            "p": "p_values",
            "l": "l_values",
            "k": "k_values",
            "n": "n_values",
        }
        for key, val in doc.items():
            name = aliases.get(key, key)
            if name.endswith("_values") or name == "methods":
                val = tuple(val) if isinstance(val, (list, tuple)) else (val,)
            kwargs[name] = val
        return ExperimentConfig(**kwargs)

    def to_json_dict(self) -> dict:
        return {
            "p_values": list(self.p_values),
            "l_values": list(self.l_values),
            "k_values": list(self.k_values),
            "n_values": list(self.n_values),
            "reps": self.reps,
            "methods": list(self.methods),
            "seed": self.seed,
            "clusters": self.clusters,
            "restarts": self.restarts,
            "smoothing": self.smoothing,
        }

    def cells(self) -> list[tuple[int, int, int, int]]:
        return [
            (p, l, k, n)
            for p in self.p_values
            for l in self.l_values
            for k in self.k_values
            for n in self.n_values
        ]


def _run_cell_rep(args: tuple) -> list[dict]:
    """One repetition of one grid cell: all methods on the same dataset."""
    p, l, k, n, rep, cfg = args
    base = np.random.SeedSequence([cfg.seed, p, l, k, n, rep])
    s_tree, s_data, s_shuffle, s_method = base.spawn(4)
    truth = random_staged_tree(GenConfig(p, l, k, seed=s_tree))
    data = sample(truth, n, seed=s_data)
    shuffled, perm = shuffle_variables(data, seed=s_shuffle)
    method_seed = int(s_method.generate_state(1, np.uint32)[0])
    rows = []
    for method in cfg.methods:
        t0 = time.perf_counter()
        result = best_order_dp(
            shuffled,
            method=method,
            k=cfg.clusters,
            restarts=cfg.restarts,
            seed=method_seed,
            smoothing=cfg.smoothing,
        )
        seconds = time.perf_counter() - t0
        est_order_true_ids = tuple(perm[c] for c in result.order)
        rows.append(
            {
                "p": p,
                "l": l,
                "k": k,
                "n": n,
                "rep": rep,
                "method": method,
                "cid": repr(cid(truth, result.tree).total),
                "kd": kendall(est_order_true_ids, tuple(range(p))),
                "bic": repr(result.score),
                "seconds": repr(seconds),
            }
        )
    return rows


def _worker_count(threads: int | None) -> int:
    cap = os.environ.get("STAGECAUSE_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    want = threads if threads is not None else limit
    return max(1, min(want, limit))


def _read_existing(path: Path) -> dict[tuple, dict]:
    if not path.exists():
        return {}
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = (
                int(row["p"]), int(row["l"]), int(row["k"]), int(row["n"]),
                int(row["rep"]), row["method"],
            )
            out[key] = row
    return out


def _write_csv(path: Path, fields: list[str], rows: list[dict]) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        w.writeheader()
        w.writerows(rows)
    tmp.replace(path)


def run_experiment(
    cfg: ExperimentConfig,
    out_csv: str | Path,
    threads: int | None = None,
    progress: bool = False,
) -> Path:
    """Run (or resume) the benchmark grid and write the results CSV.

    Rows already present in the output are skipped; the file is rewritten
    sorted by grid key either way.  A sidecar ``<out>.meta.json`` records
    the configuration, master seed and code version, and per-row
    wall-clock timings land next to it in ``<stem>_timings.csv``.
    """
    out_csv = Path(out_csv)
    timings_csv = out_csv.with_name(out_csv.stem + "_timings.csv")
    existing = _read_existing(out_csv)
    existing_t = _read_existing(timings_csv)

    tasks = []
    for cell in cfg.cells():
        for rep in range(cfg.reps):
            key0 = cell + (rep,)
            missing = [m for m in cfg.methods if key0 + (m,) not in existing]
            if missing:
                tasks.append(cell + (rep, cfg))

    workers = _worker_count(threads)
    done = 0
    results: list[dict] = []
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for rows in pool.map(_run_cell_rep, tasks, chunksize=4):
                results.extend(rows)
                done += 1
                if progress and done % 20 == 0:
                    print(f"  {done}/{len(tasks)} repetitions done", flush=True)
    else:
        for task in tasks:
            results.extend(_run_cell_rep(task))
            done += 1
            if progress and done % 20 == 0:
                print(f"  {done}/{len(tasks)} repetitions done", flush=True)

    for row in results:
        key = (row["p"], row["l"], row["k"], row["n"], row["rep"], row["method"])
        existing[key] = {f: str(row[f]) for f in RESULT_FIELDS}
        existing_t[key] = {f: str(row[f]) for f in TIMING_FIELDS}

    ordered_keys = [
        cell + (rep, m)
        for cell in cfg.cells()
        for rep in range(cfg.reps)
        for m in cfg.methods
    ]
    _write_csv(out_csv, RESULT_FIELDS, [existing[k] for k in ordered_keys if k in existing])
    _write_csv(
        timings_csv, TIMING_FIELDS, [existing_t[k] for k in ordered_keys if k in existing_t]
    )
    meta = {
        "config": cfg.to_json_dict(),
        "version": __version__,
        "seed_rule": "SeedSequence([master, p, l, k, n, rep])",
        "generator": {
            "staging_distribution": "uniform over surjective maps",
            "parameter_distribution": "Dirichlet(1,...,1) per stage",
        },
        "results": str(out_csv.name),
        "timings": str(timings_csv.name),
    }
    out_csv.with_name(out_csv.name + ".meta.json").write_text(
        json.dumps(meta, indent=2) + "\n", "utf-8"
    )
    return out_csv
