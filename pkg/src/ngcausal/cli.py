"""Command-line interface: simulate, fit, sweep, report.

Exit codes: 0 success, 2 config error, 3 data error, 4 optimization
failure, 5 I/O failure.  All outputs are deterministic byte streams given
the same config and seed, independent of --jobs.
"""

import argparse
import concurrent.futures
import os
import sys

import numpy as np

from . import _kernels as kernels
from .datasets import SimulationError, standardize
from .evaluation import (DegenerateTruthError, assemble_graph, auc, edge_rates,
                         lag_profile, lambda_grid, lambda_max_linear,
                         roc_points, sweep_path)
from .io import (ConfigError, DataError, load_config, read_dataset_csv,
                 read_matrix_csv, read_auc_csv, save_checkpoint, save_config,
                 write_auc_csv, write_dataset_csv, write_edges_csv,
                 write_matrix_csv, write_roc_csv)
from .model import build_lagged
from .numerics import child_seed
from .optim import OptimizationError, fit
from .penalties import PenaltySpec

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_OPTIM = 4
EXIT_IO = 5


def _say(args, msg):
    if not args.quiet:
        print(msg)


def _resolved_seed(cfg, args):
    return cfg.generator.seed if args.seed is None else args.seed


def _outdir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


# ---------------------------------------------------------------- simulate


def cmd_simulate(args):
    cfg = load_config(args.config)
    seed = _resolved_seed(cfg, args)
    out = _outdir(args)
    gen = cfg.generator.instance()
    ts, truth = gen.generate(cfg.generator.T, seed)
    write_dataset_csv(os.path.join(out, "dataset.csv"), ts)
    write_matrix_csv(os.path.join(out, "truth.csv"), truth, ints=True)
    save_config(cfg, os.path.join(out, "resolved_config.yaml"))
    _say(args, f"wrote {out}/dataset.csv ({ts.shape[0]} rows x {ts.shape[1]} series) "
               f"and {out}/truth.csv (seed {seed})")
    return EXIT_OK


# --------------------------------------------------------------------- fit


def _fit_one_series(ts, K, i, kind, lam, arch, opt, seed):
    data = build_lagged(ts, K, i)
    res = fit(data, PenaltySpec(kind=kind, lam=lam), arch, opt,
              seed=child_seed(seed, i))
    return res


def _fit_series_task(payload):
    return _fit_one_series(*payload)


def cmd_fit(args):
    cfg = load_config(args.config)
    seed = _resolved_seed(cfg, args)
    out = _outdir(args)
    ts = read_dataset_csv(args.data)
    if cfg.evaluation.standardize:
        ts = standardize(ts)[0]
    p = ts.shape[1]
    K = cfg.model.K
    arch = cfg.model.architecture()
    kind, lam = cfg.penalty.kind, cfg.penalty.lam

    tasks = [(ts, K, i, kind, lam, arch, cfg.optimizer, seed) for i in range(p)]
    results = [None] * p
    failures = []
    if args.jobs > 1:
        kernels.warmup()
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futs = {pool.submit(_fit_series_task, t): i for i, t in enumerate(tasks)}
            for fut in concurrent.futures.as_completed(futs):
                i = futs[fut]
                try:
                    results[i] = fut.result()
                except OptimizationError as exc:
                    failures.append((i, str(exc)))
    else:
        for i, t in enumerate(tasks):
            try:
                results[i] = _fit_series_task(t)
            except OptimizationError as exc:
                failures.append((i, str(exc)))

    for i, res in enumerate(results):
        if res is None:
            continue
        write_matrix_csv(os.path.join(out, f"lags_series_{i}.csv"), lag_profile(res.model))
        save_checkpoint(res.model, os.path.join(out, f"checkpoint_series_{i}.json"),
                        metadata={"series_index": i, "penalty": kind, "lam": lam,
                                  "seed": seed, "iterations": res.iterations_run,
                                  "converged": bool(res.converged)})
        _say(args, f"series {i}: {res.iterations_run} iterations, "
                   f"objective {res.objective_trace[-1]:.6g}, converged={res.converged}")

    if failures:
        for i, msg in sorted(failures):
            print(f"series {i}: optimization failed: {msg}", file=sys.stderr)
        return EXIT_OPTIM

    graph = assemble_graph([r.model for r in results])
    write_matrix_csv(os.path.join(out, "graph.csv"), graph)
    _say(args, f"wrote {out}/graph.csv and {p} checkpoints")
    return EXIT_OK


# ------------------------------------------------------------------- sweep


def cmd_sweep(args):
    cfg = load_config(args.config)
    seed = _resolved_seed(cfg, args)
    out = _outdir(args)
    ts = read_dataset_csv(args.data)
    truth = read_matrix_csv(args.truth)
    if truth.shape != (ts.shape[1], ts.shape[1]):
        raise DataError(f"truth graph {truth.shape} does not match dataset with "
                        f"p={ts.shape[1]}")
    T = ts.shape[0]
    if cfg.evaluation.standardize:
        ts = standardize(ts)[0]
    K = cfg.model.K
    arch = cfg.model.architecture()
    kind = cfg.penalty.kind

    if cfg.penalty.lambdas:
        lams = np.asarray(cfg.penalty.lambdas, dtype=np.float64)
    else:
        lams = lambda_grid(lambda_max_linear(ts, K),
                           cfg.penalty.grid_size, cfg.penalty.grid_ratio)
    _say(args, f"sweeping {lams.size} lambdas in [{lams[-1]:.4g}, {lams[0]:.4g}]")

    progress = None if args.quiet else (lambda msg: print(msg))
    sweep = sweep_path(ts, K, kind, lams, arch, cfg.optimizer, seed,
                       jobs=args.jobs, progress=progress)

    graph_dir = os.path.join(out, "graphs")
    os.makedirs(graph_dir, exist_ok=True)
    for li, g in enumerate(sweep.graphs):
        write_matrix_csv(os.path.join(graph_dir, f"graph_{li:02d}.csv"), g)

    include_diag = cfg.evaluation.include_diagonal
    rates = [edge_rates(truth, g, include_diag) for g in sweep.graphs]
    write_roc_csv(os.path.join(out, "roc.csv"), sweep.lambdas, rates)
    auc_val = auc(roc_points(truth, sweep.graphs, include_diag))
    try:
        auc_nd = auc(roc_points(truth, sweep.graphs, include_diagonal=False))
    except DegenerateTruthError:
        auc_nd = float("nan")
    write_auc_csv(os.path.join(out, "auc.csv"), cfg.generator.kind, T, seed,
                  kind, auc_val, auc_nd)
    write_edges_csv(os.path.join(out, "edges.csv"), sweep.lambdas,
                    sweep.active_edges(), sweep.active_lag_pairs())
    _say(args, f"auc {auc_val:.4f} (excl. diagonal {auc_nd:.4f}); "
               f"wrote {out}/roc.csv, {out}/auc.csv, {out}/edges.csv")
    return EXIT_OK


# ------------------------------------------------------------------ report


def cmd_report(args):
    rows = []
    bad = []
    for d in args.dirs:
        path = os.path.join(d, "auc.csv")
        try:
            rows.append(read_auc_csv(path))
        except (DataError, OSError) as exc:
            bad.append(f"{path}: {exc}")
    for msg in bad:
        print(msg, file=sys.stderr)
    if not rows:
        print("no readable sweep outputs; nothing to report", file=sys.stderr)
        return EXIT_DATA
    rows.sort(key=lambda r: (r["generator"], r["T"], r["seed"], r["penalty"]))
    with open(args.out, "w") as fh:
        fh.write("generator,T,seed,penalty,auc,auc_excl_diag\n")
        for r in rows:
            fh.write(f"{r['generator']},{r['T']},{r['seed']},{r['penalty']},"
                     f"{r['auc']:.17g},{r['auc_excl_diag']:.17g}\n")
    _say(args, f"wrote {args.out} ({len(rows)} rows)")
    return EXIT_DATA if bad else EXIT_OK


# -------------------------------------------------------------------- main


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ngcausal",
        description="Nonlinear Granger-causal graph discovery with "
                    "sparsity-penalized per-series MLPs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, jobs=True):
        sp.add_argument("--config", required=True, help="YAML experiment config")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=None,
                        help="override generator.seed from the config")
        if jobs:
            sp.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                            help="parallel fit workers (default: all cores)")
        sp.add_argument("--quiet", action="store_true", help="suppress progress output")

    sp = sub.add_parser("simulate", help="generate a dataset and its truth graph")
    common(sp, jobs=False)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fit", help="fit all series at one penalty strength")
    common(sp)
    sp.add_argument("--data", required=True, help="dataset CSV")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("sweep", help="fit a descending lambda grid and score ROC/AUC")
    common(sp)
    sp.add_argument("--data", required=True, help="dataset CSV")
    sp.add_argument("--truth", required=True, help="ground-truth graph CSV")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("report", help="aggregate sweep AUC summaries into one table")
    sp.add_argument("dirs", nargs="+", help="sweep output directories")
    sp.add_argument("--out", required=True, help="aggregate CSV path")
    sp.add_argument("--quiet", action="store_true", help="suppress progress output")
    sp.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, SimulationError, DegenerateTruthError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OptimizationError as exc:
        print(f"optimization error: {exc}", file=sys.stderr)
        return EXIT_OPTIM
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
