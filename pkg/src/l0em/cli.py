"""Command-line interface.

Subcommands
-----------
fit        one penalized fit from CSV data, JSON output
path       fits along a penalty grid, plot-ready CSV output
cv         cross-validated penalty selection plus a full-data refit
graph      nodewise network estimation, edge-list CSV output
sim-table  replicated simulation protocols (tables 1-5), aggregate CSV

Exit codes: 0 success, 1 input error, 2 non-convergence (fit),
3 excessive replicate failures (sim-table).

CSV inputs are UTF-8 with a header row and '.' decimal points.  Every JSON
output embeds the resolved configuration and seed; numbers are written in
shortest round-trip form.  The L0EM_THREADS environment variable supplies the
default for --threads.
"""

import argparse
import csv
import datetime
import json
import sys

import numpy as np

from . import __version__
from ._parallel import THREADS_ENV  # noqa: F401  (documented above)
from .exceptions import NumericError
from .graph import SYM_RULES, graph_metrics, nodewise_network, write_edge_csv
from .metrics import coherence
from .selection import IC_RULES, CV_RULES, cv_mse, lambda_ic, make_grid, select_lambda
from .simulate import (
    ExperimentSpec,
    run_experiment,
    write_stats_csv,
)
from .solver import (
    SolverOptions,
    fit_lpem,
    reg_path,
    stationarity_residual,
)
from .validate import as_design, column_norms


def read_matrix_csv(path):
    """Read a numeric CSV with a header row; returns (column names, array)."""
    rows = []
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ValueError(f"{path}: empty file") from None
            width = len(header)
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != width:
                    raise ValueError(
                        f"{path}: line {lineno}: expected {width} fields, got {len(row)}"
                    )
                try:
                    rows.append([float(cell) for cell in row])
                except ValueError:
                    raise ValueError(f"{path}: line {lineno}: non-numeric value") from None
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return header, np.asarray(rows, dtype=np.float64)


def write_matrix_csv(path, names, X) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in np.asarray(X, dtype=np.float64):
            writer.writerow([repr(float(v)) for v in row])


def _load_design_response(args):
    names, X = read_matrix_csv(args.design)
    if args.response_col is not None:
        if args.response_col not in names:
            raise ValueError(f"response column {args.response_col!r} not in design header")
        j = names.index(args.response_col)
        y = X[:, j]
        X = np.delete(X, j, axis=1)
        names = names[:j] + names[j + 1:]
    elif args.response is not None:
        _, Y = read_matrix_csv(args.response)
        if Y.shape[1] != 1:
            raise ValueError(f"{args.response}: response file must have one column")
        y = Y[:, 0]
    else:
        raise ValueError("provide --response FILE or --response-col NAME")
    X = as_design(X)
    if y.shape[0] != X.shape[0]:
        raise ValueError(
            f"response length {y.shape[0]} does not match {X.shape[0]} design rows"
        )
    return names, X, y


def _standardize(X, y):
    norms = column_norms(X, require_nonzero=True)
    return X / norms, y - y.mean(), norms, float(y.mean())


def _resolve_fit_lam(args, n, m):
    if args.ic is not None:
        return lambda_ic(args.ic, n, m)
    if args.lam is None:
        raise ValueError("provide --lam VALUE or --ic {aic,bic,ric}")
    return float(args.lam)


def _solver_options(args) -> SolverOptions:
    return SolverOptions(p=args.p, tol=args.tol, threshold=args.threshold,
                         max_iter=args.max_iter, nonneg=args.nonneg)


def _sparse_coefs(theta) -> dict:
    return {str(j): float(theta[j]) for j in np.flatnonzero(theta)}


def write_json(path, config, seed, results, failures=None) -> None:
    payload = {
        "config": config,
        "seed": seed,
        "results": results,
        "failures": failures if failures is not None else [],
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)


def cmd_fit(args) -> int:
    names, X, y = _load_design_response(args)
    norms, intercept = None, 0.0
    if args.standardize:
        X, y, norms, intercept = _standardize(X, y)
    n, m = X.shape
    lam = _resolve_fit_lam(args, n, m)
    fit = fit_lpem(X, y, lam, _solver_options(args))
    theta = fit.theta if norms is None else fit.theta / norms
    results = {
        "coefficients": _sparse_coefs(theta),
        "support": fit.support.tolist(),
        "n_selected": fit.n_selected,
        "objective": fit.objective,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "stationarity_residual_max": float(
            np.max(np.abs(stationarity_residual(X, y, fit.theta, lam)))
        ),
        "intercept": intercept,
        "lambda": lam,
        "n": n,
        "m": m,
        "column_names": names,
        "coherence": coherence(X) if m >= 2 else 0.0,
    }
    write_json(args.output, _config_echo(args), args.seed, results)
    return 0 if fit.converged else 2


def cmd_path(args) -> int:
    names, X, y = _load_design_response(args)
    if args.standardize:
        X, y, norms, _ = _standardize(X, y)
    else:
        norms = None
    if args.lambdas:
        grid = np.asarray(sorted(float(v) for v in args.lambdas.split(",")))
    else:
        grid = make_grid(X, y, args.grid_size, args.lam_min, args.p).values
    fits = reg_path(X, y, grid, _solver_options(args), warm_start=args.warm_start)
    with open(args.output, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "n_selected", "objective", "iterations", "converged"])
        for lam, fit in zip(grid, fits):
            writer.writerow([repr(float(lam)), fit.n_selected, repr(fit.objective),
                             fit.iterations, int(fit.converged)])
    if args.coef_output:
        with open(args.coef_output, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lambda", "column", "coefficient"])
            for lam, fit in zip(grid, fits):
                theta = fit.theta if norms is None else fit.theta / norms
                for j in fit.support:
                    writer.writerow([repr(float(lam)), j, repr(float(theta[j]))])
    return 0


def cmd_cv(args) -> int:
    names, X, y = _load_design_response(args)
    if args.standardize:
        X, y, norms, intercept = _standardize(X, y)
    else:
        norms, intercept = None, 0.0
    options = _solver_options(args)
    grid = make_grid(X, y, args.grid_size, args.lam_min, args.p)
    report = cv_mse(X, y, grid, args.folds, args.seed, options, threads=args.threads)
    selection = select_lambda(report, args.rule)
    fit = fit_lpem(X, y, selection.lambda_final, options)
    theta = fit.theta if norms is None else fit.theta / norms
    results = {
        "grid": [
            {
                "lambda": float(report.lambdas[i]),
                "mse_mean": _nan_none(report.mse_mean[i]),
                "mse_sd": _nan_none(report.mse_sd[i]),
                "nonzero_mean": _nan_none(report.nonzero_mean[i]),
                "nonzero_sd": _nan_none(report.nonzero_sd[i]),
                "valid": bool(report.valid[i]),
            }
            for i in range(report.lambdas.size)
        ],
        "selection": {
            "lambda_mse": selection.lambda_mse,
            "lambda_ss": selection.lambda_ss,
            "lambda_final": selection.lambda_final,
            "rule": selection.rule,
            "stability_exact": selection.stability_exact,
        },
        "refit_on_full_data": True,
        "fit": {
            "coefficients": _sparse_coefs(theta),
            "support": fit.support.tolist(),
            "n_selected": fit.n_selected,
            "objective": fit.objective,
            "converged": fit.converged,
            "intercept": intercept,
        },
    }
    write_json(args.output, _config_echo(args), args.seed, results)
    return 0 if fit.converged else 2


def cmd_graph(args) -> int:
    names, X = read_matrix_csv(args.data)
    X = as_design(X)
    lam = args.ic if args.ic is not None else float(args.lam) if args.lam is not None else "bic"
    options = SolverOptions(tol=args.tol, threshold=args.threshold, max_iter=args.max_iter)
    est = nodewise_network(X, lam, positive_only=args.positive_only, options=options,
                           rule=args.sym_rule, scale_ic=not args.no_scale_ic,
                           threads=args.threads)
    n_edges = write_edge_csv(est, args.output, names)
    results = {
        "nodes": X.shape[1],
        "samples": X.shape[0],
        "edges": n_edges,
        "lambda_rule": lam if isinstance(lam, str) else float(lam),
        "lambda_used_mean": float(est.lambda_used.mean()),
        "positive_only": est.positive_only,
        "sym_rule": est.rule,
        "failed_nodes": list(est.failed_nodes),
        "edge_list": args.output,
    }
    if args.truth:
        _, T = read_matrix_csv(args.truth)
        gm = graph_metrics(T.astype(bool), est)
        results["metrics"] = {"auc": gm.auc, "fdr": gm.fdr, "fnr": gm.fnr,
                              "auc_defined": gm.auc_defined}
    if args.summary:
        write_json(args.summary, _config_echo(args), args.seed, results,
                   failures=list(est.failed_nodes))
    return 0


TABLE_DEFAULT_REPS = {1: 100, 2: 100, 3: 20, 4: 100, 5: 100}


def _table_specs(table: int, replicates: int, seed: int, threads) -> list[tuple[dict, ExperimentSpec]]:
    specs = []
    if table in (1, 2, 3):
        rule = "cv_mse" if table == 1 else "combined_max"
        m = 50 if table in (1, 2) else 1000
        r_values = (0.0, 0.3, 0.6, 0.8) if table in (1, 2) else (0.0, 0.3, 0.6)
        for r in r_values:
            for method, p in (("l0", 0.0), ("l1", 1.0)):
                label = {"table": table, "r": r, "method": method, "rule": rule}
                specs.append((label, ExperimentSpec(
                    design="ar1", n=100, m=m, r=r, replicates=replicates, rule=rule,
                    seed=seed, options=SolverOptions(p=p), threads=threads)))
    elif table == 4:
        for criterion in ("aic", "bic"):
            for r in (0.0, 0.3, 0.6):
                label = {"table": table, "r": r, "method": "l0", "rule": criterion}
                specs.append((label, ExperimentSpec(
                    design="ar1", n=100, m=1000, r=r, replicates=replicates,
                    rule=criterion, seed=seed, threads=threads)))
    elif table == 5:
        for design in ("band1", "band2"):
            for criterion in ("aic", "bic"):
                for n in (50, 100, 200):
                    label = {"table": table, "design": design, "n": n, "rule": criterion}
                    specs.append((label, ExperimentSpec(
                        design=design, n=n, m=100, replicates=replicates, rule=criterion,
                        seed=seed, positive_only=True, sym_rule="and", threads=threads)))
    else:
        raise ValueError(f"table must be 1..5, got {table}")
    return specs


def cmd_sim_table(args) -> int:
    replicates = args.replicates or TABLE_DEFAULT_REPS[args.table]
    specs = _table_specs(args.table, replicates, args.seed, args.threads)
    rows = []
    details = []
    total = failed = 0
    for label, spec in specs:
        stats = run_experiment(spec)
        row = dict(label)
        row.update({k: v for k, v in sorted(stats.summary.items())})
        row["recovered"] = stats.recovered
        row["failures"] = stats.failures
        row["replicates"] = replicates
        rows.append(row)
        total += replicates
        failed += stats.failures
        for rec in stats.records:
            det = dict(label)
            det.update(rec)
            details.append(det)
    columns = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    with open(args.output, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _csv_value(row.get(k)) for k in columns})
    if args.detail:
        det_columns = []
        for det in details:
            for key in det:
                if key not in det_columns:
                    det_columns.append(key)
        with open(args.detail, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=det_columns)
            writer.writeheader()
            for det in details:
                writer.writerow({k: _csv_value(det.get(k)) for k in det_columns})
    return 0 if failed <= 0.1 * total else 3


def _csv_value(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, float):
        return repr(value)
    return value


def _nan_none(value):
    value = float(value)
    return None if np.isnan(value) else value


def _config_echo(args) -> dict:
    skip = {"func"}
    config = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        config[key] = value
    return config


def _add_io_arguments(parser, response=True):
    parser.add_argument("--design", required=True, help="design matrix CSV (header row)")
    if response:
        group = parser.add_mutually_exclusive_group()
        group.add_argument("--response", help="single-column response CSV")
        group.add_argument("--response-col", help="name of the response column inside the design CSV")
    parser.add_argument("--standardize", action="store_true",
                        help="center the response and scale columns to unit norm "
                             "(coefficients are reported on the original scale)")


def _add_solver_arguments(parser):
    parser.add_argument("--p", type=float, default=0.0, help="penalty exponent in [0, 2]")
    parser.add_argument("--tol", type=float, default=1e-6)
    parser.add_argument("--threshold", type=float, default=1e-3)
    parser.add_argument("--max-iter", type=int, default=1000)
    parser.add_argument("--nonneg", action="store_true", help="clamp coefficients at zero from below")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="l0em", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="single penalized fit")
    _add_io_arguments(p_fit)
    _add_solver_arguments(p_fit)
    p_fit.add_argument("--lam", type=float, help="penalty strength")
    p_fit.add_argument("--ic", choices=IC_RULES, help="closed-form penalty rule")
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--output", required=True, help="JSON output path")
    p_fit.set_defaults(func=cmd_fit)

    p_path = sub.add_parser("path", help="fits along a penalty grid")
    _add_io_arguments(p_path)
    _add_solver_arguments(p_path)
    p_path.add_argument("--grid-size", type=int, default=100)
    p_path.add_argument("--lam-min", type=float, default=1e-4)
    p_path.add_argument("--lambdas", help="explicit comma-separated penalty values")
    p_path.add_argument("--warm-start", action="store_true",
                        help="chain each fit from the previous solution")
    p_path.add_argument("--seed", type=int, default=0)
    p_path.add_argument("--output", required=True, help="per-penalty summary CSV")
    p_path.add_argument("--coef-output", help="long-format nonzero-coefficient CSV")
    p_path.set_defaults(func=cmd_path)

    p_cv = sub.add_parser("cv", help="cross-validated penalty selection")
    _add_io_arguments(p_cv)
    _add_solver_arguments(p_cv)
    p_cv.add_argument("--folds", type=int, default=5)
    p_cv.add_argument("--rule", choices=CV_RULES, default="combined_max")
    p_cv.add_argument("--grid-size", type=int, default=100)
    p_cv.add_argument("--lam-min", type=float, default=1e-4)
    p_cv.add_argument("--seed", type=int, default=0)
    p_cv.add_argument("--threads", type=int, default=None,
                      help=f"worker threads (default ${THREADS_ENV} or 1)")
    p_cv.add_argument("--output", required=True, help="JSON output path")
    p_cv.set_defaults(func=cmd_cv)

    p_graph = sub.add_parser("graph", help="nodewise network estimation")
    p_graph.add_argument("--data", required=True, help="data matrix CSV (header row)")
    p_graph.add_argument("--lam", type=float, help="fixed per-node penalty")
    p_graph.add_argument("--ic", choices=IC_RULES, help="per-node criterion (default bic)")
    p_graph.add_argument("--positive-only", action="store_true")
    p_graph.add_argument("--sym-rule", choices=SYM_RULES, default="or")
    p_graph.add_argument("--no-scale-ic", action="store_true",
                         help="disable noise-variance scaling of criterion penalties")
    p_graph.add_argument("--truth", help="true adjacency matrix CSV for recovery metrics")
    p_graph.add_argument("--tol", type=float, default=1e-6)
    p_graph.add_argument("--threshold", type=float, default=1e-3)
    p_graph.add_argument("--max-iter", type=int, default=1000)
    p_graph.add_argument("--seed", type=int, default=0)
    p_graph.add_argument("--threads", type=int, default=None)
    p_graph.add_argument("--output", required=True, help="edge-list CSV path")
    p_graph.add_argument("--summary", help="summary JSON path")
    p_graph.set_defaults(func=cmd_graph)

    p_sim = sub.add_parser("sim-table", help="replicated simulation protocols")
    p_sim.add_argument("--table", type=int, required=True, choices=(1, 2, 3, 4, 5))
    p_sim.add_argument("--replicates", type=int, default=None,
                       help="override the protocol's replicate count")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--threads", type=int, default=None)
    p_sim.add_argument("--output", required=True, help="aggregate CSV path")
    p_sim.add_argument("--detail", help="per-replicate CSV path")
    p_sim.set_defaults(func=cmd_sim_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, NumericError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
