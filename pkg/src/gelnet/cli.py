"""Command-line front end: ``generate``, ``fit``, ``bench`` and ``prox-selftest``.

Settings come from, in increasing precedence, the built-in defaults, a JSON
config file (``--config``) and individual flags. Relative output paths
resolve against ``--out-dir``, then ``output.dir`` from the config, then the
``GELNET_OUTPUT_DIR`` environment variable, then the working directory.

Exit codes
----------
0  success (``fit``: converged; ``bench``: no failed trial)
1  ``fit`` did not converge, or some ``bench`` trials failed or broke an
   acceptance invariant
2  command-line usage error
3  invalid configuration
4  unreadable or malformed data / I/O failure
5  inner solver failure
6  ``prox-selftest`` found a violated property
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import bench as gbench
from . import data as gdata
from .driver import fit
from .exceptions import ConfigurationError, InputDomainError, LibsvmParseError, SolverFailure
from .runconfig import RunConfig
from .selftest import run_prox_selftest

EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_DATA = 4
EXIT_SOLVER = 5
EXIT_SELFTEST = 6

ENV_OUTPUT_DIR = "GELNET_OUTPUT_DIR"


# ---------------------------------------------------------------------------
# configuration assembly


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", help="directory for relative output paths")
    g = p.add_argument_group("data")
    g.add_argument("--libsvm", metavar="PATH", help="read a LIBSVM file instead of simulating")
    g.add_argument("--csv-dir", metavar="DIR", help="read a directory written by 'generate'")
    g.add_argument("--degree", type=int, help="polynomial expansion degree for file data")
    g.add_argument("--include-bias", action="store_true", default=None,
                   help="keep the constant monomial in the expansion")
    g.add_argument("--standardize", action="store_true", default=None,
                   help="center and scale file data")
    g.add_argument("--n", type=int)
    g.add_argument("--p", type=int)
    g.add_argument("--kappa", type=float)
    g.add_argument("--K", type=int)
    g.add_argument("--R", type=float)
    g.add_argument("--noise", dest="noise_kind", choices=["LN", "GN", "UN"])
    g.add_argument("--alpha", type=float)
    g.add_argument("--fixed-design", action="store_true", default=None,
                   help="plant the ten-sparse fixed coefficient vector")
    m = p.add_argument_group("model")
    m.add_argument("--r", choices=["1", "2", "inf"])
    m.add_argument("--q", type=float)
    m.add_argument("--lambda1", type=float)
    m.add_argument("--lambda2", type=float)
    m.add_argument("--epsilon", type=float)
    s = p.add_argument_group("solver")
    s.add_argument("--solver", choices=["pmm_ssn", "admm"])
    s.add_argument("--mu", type=float)
    s.add_argument("--sigma", type=float)
    s.add_argument("--tau", type=float)
    s.add_argument("--max-outer-iters", type=int)
    s.add_argument("--outer-tol", type=float, help="eta2 tolerance")
    s.add_argument("--stop-on", choices=["eta2", "eta1"])
    s.add_argument("--max-inner-iters", type=int, help="ADMM sweeps / Newton steps per subproblem")


def build_config(args) -> RunConfig:
    """Defaults, then ``--config``, then flags."""
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)

    data = cfg.data
    if args.libsvm and args.csv_dir:
        raise ConfigurationError("--libsvm and --csv-dir are mutually exclusive")
    if args.libsvm:
        data = replace(data, kind="libsvm", path=args.libsvm)
    elif args.csv_dir:
        data = replace(data, kind="csv", path=args.csv_dir)
    if args.degree is not None:
        data = replace(data, degree=args.degree)
    if args.include_bias:
        data = replace(data, include_bias=True)
    if args.standardize:
        data = replace(data, standardize=True)
    syn = dict(data.synthetic)
    for key in ("n", "p", "kappa", "K", "R", "noise_kind", "alpha"):
        val = getattr(args, key)
        if val is not None:
            syn[key] = val
    if args.fixed_design:
        syn["beta"] = "fixed"
    data = replace(data, synthetic=syn)
    data.__post_init__()

    pen = cfg.penalty
    pen_over = {k: getattr(args, k) for k in ("r", "q", "lambda1", "lambda2", "epsilon")
                if getattr(args, k) is not None}
    if pen_over:
        pen = replace(pen, **pen_over)

    opts = cfg.solver
    admm, pmm = opts.admm, opts.pmm_ssn
    if args.mu is not None:
        pmm = replace(pmm, mu=args.mu)
    if args.sigma is not None:
        admm = replace(admm, sigma=args.sigma)
    if args.tau is not None:
        admm = replace(admm, tau=args.tau)
    if args.max_inner_iters is not None:
        admm = replace(admm, max_inner_iters=args.max_inner_iters)
        pmm = replace(pmm, max_newton_iters=args.max_inner_iters)
    over = {}
    if args.solver is not None:
        over["solver"] = args.solver
    if args.max_outer_iters is not None:
        over["max_outer_iters"] = args.max_outer_iters
    if args.outer_tol is not None:
        over["outer_tol_eta2"] = args.outer_tol
    if args.stop_on is not None:
        over["stop_on"] = args.stop_on
    opts = replace(opts, admm=admm, pmm_ssn=pmm, **over)

    output = cfg.output
    if args.out_dir:
        output = replace(output, dir=args.out_dir)
    return replace(cfg, data=data, penalty=pen, solver=opts, output=output)


def output_path(cfg: RunConfig, name: str) -> Path:
    path = Path(name)
    if path.is_absolute():
        return path
    base = cfg.output.dir or os.environ.get(ENV_OUTPUT_DIR) or "."
    return Path(base) / path


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


# ---------------------------------------------------------------------------
# commands


def _matrix_csv(M: np.ndarray, header: List[str]) -> str:
    lines = [",".join(header)]
    for row in np.atleast_2d(M):
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def cmd_generate(cfg: RunConfig, directory: Optional[str] = None, fmt: str = "csv") -> Path:
    """Write ``X.csv``, ``y.csv``, ``beta_true.csv`` and ``manifest.json``.

    With ``fmt="libsvm"`` the design and response go to ``data.libsvm``
    instead of the two CSV files.
    """
    if cfg.data.kind != "synthetic":
        raise ConfigurationError("generate needs a synthetic data source")
    syn = cfg.data.synthetic_config(cfg.seed)
    ds = gdata.generate(syn)
    out = output_path(cfg, directory or "dataset")
    files = {}
    if fmt == "libsvm":
        out.mkdir(parents=True, exist_ok=True)
        gdata.write_libsvm(out / "data.libsvm", ds.X, ds.y)
        files["libsvm"] = "data.libsvm"
    else:
        _write(out / "X.csv", _matrix_csv(ds.X, [f"x{j + 1}" for j in range(ds.p)]))
        _write(out / "y.csv", _matrix_csv(ds.y[:, None], ["y"]))
        files.update(X="X.csv", y="y.csv")
    _write(out / "beta_true.csv", _matrix_csv(ds.beta_true[:, None], ["beta"]))
    files["beta_true"] = "beta_true.csv"
    manifest = {
        "schema": "gelnet-dataset/1",
        "seed": cfg.seed,
        "synthetic": syn.to_dict(),
        "config": cfg.to_dict(),
        "shape": [ds.n, ds.p],
        "files": files,
    }
    _write(out / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    return out


def fit_summary(rep, ds) -> List[str]:
    lines = [
        f"solver            {rep.solver}",
        f"converged         {'yes' if rep.converged else 'no'}",
        f"outer iterations  {rep.outer_iters}",
        f"inner iterations  {rep.inner_iters_total}",
        f"eta1              {rep.eta1_final:.3e}",
        f"eta2              {rep.eta2_final:.3e}",
        f"objective F_eps   {rep.objective_trace[-1]:.10g}",
        f"support size      {rep.support.size}",
        f"wall time         {rep.wall_time:.3f} s",
    ]
    if rep.stationarity is not None:
        lines.append(f"stationarity      {rep.stationarity.max_abs_residual:.3e}")
    if ds.beta_true is not None:
        m = gdata.metrics([(rep.beta_hat, ds.beta_true, ds.p)])
        lines.append(f"RE                {m.re:.3e}")
    if rep.failure:
        lines.append(f"failure           {rep.failure}")
    return lines


def cmd_fit(cfg: RunConfig, json_path: Optional[str] = None, stream=None):
    """Run one fit; returns ``(report, dataset)`` after printing a summary."""
    stream = stream or sys.stdout
    ds = gbench.load_dataset(cfg, cfg.seed)
    rep = fit(ds, cfg.penalty.spec(), cfg.solver)
    for line in fit_summary(rep, ds):
        print(line, file=stream)
    payload = {"config": cfg.to_dict(), "report": rep.to_dict()}
    if ds.beta_true is not None:
        m = gdata.metrics([(rep.beta_hat, ds.beta_true, ds.p)])
        payload["metrics"] = {"re": m.re, "mse": m.mse, "sd": m.sd}
    target = json_path if json_path is not None else cfg.output.json
    if target == "-":
        print(json.dumps(payload), file=stream)
    elif target:
        _write(output_path(cfg, target), json.dumps(payload, indent=2) + "\n")
    return rep, ds


def cmd_bench(cfg: RunConfig, csv_path: Optional[str] = None, workers: Optional[int] = None,
              timing: Optional[bool] = None, stream=None):
    """Run the benchmark grid and write the summary CSV; returns the rows."""
    stream = stream or sys.stdout
    rows, results = gbench.run_bench(cfg, workers=workers)
    timing = cfg.bench.timing if timing is None else timing
    text = gbench.rows_to_csv(rows, timing=timing)
    target = csv_path or cfg.output.csv
    if target == "-":
        stream.write(text)
    else:
        _write(output_path(cfg, target), text)
        print(f"wrote {len(rows)} rows to {output_path(cfg, target)}", file=stream)
    if cfg.output.trials_csv:
        cells, _ = gbench.build_jobs(cfg)
        _write(output_path(cfg, cfg.output.trials_csv), gbench.trials_to_csv(results, cells))
    return rows


def bench_ok(rows) -> bool:
    """No failures, and descent / lower-bound invariants held on every fit."""
    return all(r["failures"] == 0 and r.get("monotone_all") is not False
               and r.get("lower_bound_all") is not False for r in rows)


# ---------------------------------------------------------------------------
# entry point


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gelnet", description="Generalized elastic-net solvers and benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="simulate a dataset and write it to disk")
    _add_common(g)
    g.add_argument("--output", default=None, help="dataset directory (default: dataset)")
    g.add_argument("--format", choices=["csv", "libsvm"], default="csv")

    f = sub.add_parser("fit", help="run one fit and print a summary")
    _add_common(f)
    f.add_argument("--json", default=None, help="report path, or '-' for stdout")

    b = sub.add_parser("bench", help="run repeated-trial benchmark cells")
    _add_common(b)
    b.add_argument("--trials", type=int)
    b.add_argument("--workers", type=int)
    b.add_argument("--csv", default=None, help="summary CSV path, or '-' for stdout")
    b.add_argument("--trials-csv", default=None, help="optional per-trial CSV path")
    b.add_argument("--no-timing", action="store_true", help="omit the time_mean column")

    s = sub.add_parser("prox-selftest", help="randomized property checks of the prox maps")
    s.add_argument("--pairs", type=int, default=1000)
    s.add_argument("--competitors", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "prox-selftest":
            results = run_prox_selftest(args.pairs, args.competitors, args.seed)
            for r in results:
                print(r.line())
            return EXIT_OK if all(r.passed for r in results) else EXIT_SELFTEST
        cfg = build_config(args)
        if args.command == "generate":
            out = cmd_generate(cfg, args.output, args.format)
            print(f"wrote dataset to {out}")
            return EXIT_OK
        if args.command == "fit":
            rep, _ = cmd_fit(cfg, args.json)
            if rep.failure:
                return EXIT_SOLVER
            return EXIT_OK if rep.converged else EXIT_NOT_CONVERGED
        bench_over = {}
        if args.trials is not None:
            bench_over["trials"] = args.trials
        if args.workers is not None:
            bench_over["workers"] = args.workers
        if bench_over:
            cfg = replace(cfg, bench=replace(cfg.bench, **bench_over))
        if args.trials_csv:
            cfg = replace(cfg, output=replace(cfg.output, trials_csv=args.trials_csv))
        rows = cmd_bench(cfg, args.csv, timing=False if args.no_timing else None)
        return EXIT_OK if bench_ok(rows) else EXIT_NOT_CONVERGED
    except (ConfigurationError, InputDomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (LibsvmParseError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MemoryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
