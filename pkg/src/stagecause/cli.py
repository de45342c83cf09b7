"""Command-line front end.

Subcommands: discover, fit, sample, generate, cid, sid, kendall, convert,
experiment.  All files are UTF-8; datasets are RFC-4180 CSV with a header
of variable names and level labels as values; models, DAGs and PDAGs are
JSON (schemas documented in the README).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .experiment import ExperimentConfig, run_experiment
from .metrics import cid, cid_vs_sid_experiment, kendall, sid
from .model import CsvFormatError, Dag, Dataset, StagedTree, validate_tree
from .ordering import best_order_dp, best_order_exhaustive
from .probability import EmptyStageError, sample
from .randgen import GenConfig, random_staged_tree
from .staging import fit_order
from .convert import consensus_pdag, dag_to_staged_tree, staged_tree_to_minimal_dag


def _meta(args_seed=None) -> dict:
    meta = {"tool": "stagecause", "version": __version__}
    if args_seed is not None:
        meta["seed"] = args_seed
    return meta


def _print_json(doc) -> None:
    print(json.dumps(doc, indent=2))


def _add_common(sp, method=False, mode=False, seed=False, smoothing=False, out=False):
    if method:
        sp.add_argument("--method", choices=("bhc", "kmeans"), default="bhc")
        sp.add_argument("--k", type=int, default=2, help="clusters for kmeans")
        sp.add_argument("--restarts", type=int, default=10)
    if mode:
        sp.add_argument("--mode", choices=("dp", "exhaustive"), default="dp")
    if seed:
        sp.add_argument("--seed", type=int, default=0)
    if smoothing:
        sp.add_argument("--smoothing", type=float, default=0.0)
    if out:
        sp.add_argument("--out", type=Path, default=None)


def _load_data(args) -> Dataset:
    variables = None
    if getattr(args, "levels_from", None):
        ref = StagedTree.load(args.levels_from)
        by_name = {v.name: v for v in ref.variables}
        with open(args.data, newline="", encoding="utf-8") as fh:
            import csv as _csv

            header = next(_csv.reader(fh), None)
        if header is None:
            raise CsvFormatError("empty file: no header row")
        variables = [by_name[n] for n in header]
    return Dataset.from_csv(args.data, variables)


def _cmd_discover(args) -> int:
    data = _load_data(args)
    search = best_order_dp if args.mode == "dp" else best_order_exhaustive
    result = search(
        data,
        method=args.method,
        k=args.k,
        restarts=args.restarts,
        seed=args.seed,
        smoothing=args.smoothing,
    )
    report = {
        "order": [data.variables[c].name for c in result.order],
        "score": result.score,
        "mode": args.mode,
        "method": args.method,
        "evaluations": result.cache.evaluations,
    }
    if result.tied_orders is not None:
        report["tied_orders"] = [
            [data.variables[c].name for c in o] for o in result.tied_orders
        ]
    if args.out:
        result.tree.save(args.out, meta=_meta(args.seed))
        report["model"] = str(args.out)
    _print_json(report)
    return 0


def _cmd_fit(args) -> int:
    data = _load_data(args)
    if args.order:
        names = [s.strip() for s in args.order.split(",")]
        order = [data.column(n) for n in names]
    else:
        order = list(range(data.p))
    tree = fit_order(
        data,
        order,
        method=args.method,
        k=args.k,
        restarts=args.restarts,
        seed=args.seed,
        smoothing=args.smoothing,
    )
    from .probability import bic as bic_fn

    report = {
        "order": [v.name for v in tree.variables],
        "bic": bic_fn(tree, data),
        "stages": [tree.n_stages(i) for i in range(tree.p)],
    }
    if args.out:
        tree.save(args.out, meta=_meta(args.seed))
        report["model"] = str(args.out)
    _print_json(report)
    return 0


def _cmd_sample(args) -> int:
    tree = StagedTree.load(args.model)
    data = sample(tree, args.n, args.seed)
    if args.out:
        data.to_csv(args.out)
    else:
        import csv as _csv

        w = _csv.writer(sys.stdout)
        w.writerow([v.name for v in data.variables])
        for row in data.rows:
            w.writerow([data.variables[j].levels[x] for j, x in enumerate(row)])
    return 0


def _cmd_generate(args) -> int:
    cfg = GenConfig(args.p, args.levels, args.stages, seed=args.seed)
    tree = random_staged_tree(cfg)
    rep = validate_tree(tree)
    if not rep.ok:
        raise AssertionError(f"generated tree failed validation: {rep.violations}")
    if args.out:
        tree.save(args.out, meta=_meta(args.seed) | {"gen": cfg.to_json_dict()})
        print(args.out)
    else:
        _print_json(tree.to_json_dict(meta=_meta(args.seed)))
    return 0


def _cmd_cid(args) -> int:
    t = StagedTree.load(args.model_a)
    s = StagedTree.load(args.model_b)
    _print_json(cid(t, s).to_json_dict())
    return 0


def _cmd_sid(args) -> int:
    g = Dag.load(args.dag_a)
    h = Dag.load(args.dag_b)
    print(sid(g, h))
    return 0


def _cmd_kendall(args) -> int:
    a = [int(v) for v in args.order_a.split(",")]
    b = [int(v) for v in args.order_b.split(",")]
    print(kendall(a, b))
    return 0


def _cmd_convert(args) -> int:
    chosen = sum(bool(x) for x in (args.to_dag, args.to_tree, args.consensus))
    if chosen != 1:
        raise ValueError("pick exactly one of --to-dag, --to-tree, --consensus")
    if args.to_dag:
        tree = StagedTree.load(args.to_dag)
        dag = staged_tree_to_minimal_dag(tree)
        if args.out:
            dag.save(args.out)
        _print_json(dag.to_json_dict())
        return 0
    if args.to_tree:
        dag = Dag.load(args.to_tree)
        levels = [int(v) for v in args.levels.split(",")] if "," in args.levels else int(args.levels)
        order = (
            [int(v) for v in args.order.split(",")]
            if args.order
            else list(dag.topological_order())
        )
        tree = dag_to_staged_tree(dag, order, levels)
        if args.out:
            tree.save(args.out, meta=_meta())
        _print_json({"order": [v.name for v in tree.variables],
                     "stages": [tree.n_stages(i) for i in range(tree.p)]})
        return 0
    dags = [Dag.load(p) for p in args.consensus]
    pdag = consensus_pdag(dags)
    if args.out:
        pdag.save(args.out)
    _print_json(pdag.to_json_dict())
    return 0


def _cmd_experiment(args) -> int:
    if args.cid_sid:
        seed = args.seed if args.seed is not None else 0
        rows, summary = cid_vs_sid_experiment(args.pairs, p=args.p, seed=seed)
        out = args.out or Path("cid_sid.csv")
        import csv as _csv

        with open(out, "w", newline="", encoding="utf-8") as fh:
            w = _csv.writer(fh)
            w.writerow(["pair_id", "sid", "cid"])
            for pid, s_val, c_val in rows:
                w.writerow([pid, s_val, repr(c_val)])
        Path(str(out) + ".meta.json").write_text(
            json.dumps(summary | _meta(seed), indent=2) + "\n", "utf-8"
        )
        _print_json(summary)
        return 0

    if args.config:
        import yaml

        doc = yaml.safe_load(Path(args.config).read_text("utf-8")) or {}
        cfg = ExperimentConfig.from_dict(doc)
    else:
        cfg = ExperimentConfig()
    overrides = {}
    if args.reps is not None:
        overrides["reps"] = args.reps
    if args.paper:
        overrides["reps"] = 100
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.method:
        overrides["methods"] = (args.method,)
    if overrides:
        cfg = ExperimentConfig.from_dict(cfg.to_json_dict() | overrides)
    out = args.out or Path("results.csv")
    run_experiment(cfg, out, threads=args.threads, progress=not args.quiet)
    print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="stagecause",
        description="Causal discovery on categorical data with staged event trees.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("discover", help="search stagings and the variable order")
    sp.add_argument("data", type=Path, help="dataset CSV")
    sp.add_argument("--levels-from", type=Path, metavar="MODEL",
                    help="take variable levels from a model JSON instead of inferring")
    _add_common(sp, method=True, mode=True, seed=True, smoothing=True, out=True)
    sp.set_defaults(fn=_cmd_discover)

    sp = sub.add_parser("fit", help="learn stagings for a fixed variable order")
    sp.add_argument("data", type=Path)
    sp.add_argument("--order", help="comma-separated variable names; default: CSV order")
    sp.add_argument("--levels-from", type=Path, metavar="MODEL",
                    help="take variable levels from a model JSON instead of inferring")
    _add_common(sp, method=True, seed=True, smoothing=True, out=True)
    sp.set_defaults(fn=_cmd_fit)

    sp = sub.add_parser("sample", help="forward-sample rows from a model")
    sp.add_argument("model", type=Path)
    sp.add_argument("-n", type=int, required=True)
    _add_common(sp, seed=True, out=True)
    sp.set_defaults(fn=_cmd_sample)

    sp = sub.add_parser("generate", help="draw a random staged tree model")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--levels", type=int, default=2)
    sp.add_argument("--stages", type=int, default=2, help="stages per variable")
    _add_common(sp, seed=True, out=True)
    sp.set_defaults(fn=_cmd_generate)

    sp = sub.add_parser("cid", help="interventional discrepancy of B against A")
    sp.add_argument("model_a", type=Path)
    sp.add_argument("model_b", type=Path)
    sp.set_defaults(fn=_cmd_cid)

    sp = sub.add_parser("sid", help="structural intervention distance of B against A")
    sp.add_argument("dag_a", type=Path)
    sp.add_argument("dag_b", type=Path)
    sp.set_defaults(fn=_cmd_sid)

    sp = sub.add_parser("kendall", help="inversion distance between two orders")
    sp.add_argument("order_a", help="e.g. 0,2,1")
    sp.add_argument("order_b")
    sp.set_defaults(fn=_cmd_kendall)

    sp = sub.add_parser("convert", help="model <-> DAG conversions, consensus PDAG")
    sp.add_argument("--to-dag", type=Path, metavar="MODEL")
    sp.add_argument("--to-tree", type=Path, metavar="DAG")
    sp.add_argument("--levels", default="2", help="per-variable level counts")
    sp.add_argument("--order", help="topological order for --to-tree")
    sp.add_argument("--consensus", nargs="+", type=Path, metavar="DAG")
    _add_common(sp, out=True)
    sp.set_defaults(fn=_cmd_convert)

    sp = sub.add_parser("experiment", help="run the simulation benchmark grid")
    sp.add_argument("--config", type=Path, help="YAML grid configuration")
    sp.add_argument("--reps", type=int)
    sp.add_argument("--paper", action="store_true", help="100 repetitions per cell")
    sp.add_argument("--method", choices=("bhc", "kmeans"))
    sp.add_argument("--threads", type=int)
    sp.add_argument("--quiet", action="store_true")
    sp.add_argument("--cid-sid", action="store_true",
                    help="run the DAG-pair CID/SID comparison instead")
    sp.add_argument("--pairs", type=int, default=500)
    sp.add_argument("--p", type=int, default=5)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", type=Path)
    sp.set_defaults(fn=_cmd_experiment)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (CsvFormatError, EmptyStageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
