"""Joint low-rank and graph Laplacian estimation: ``lge gen | solve | rpca | sweep``.

Exit codes: 0 success/converged, 1 usage or input error, 2 iteration cap hit
(results are still written).
"""
import argparse
import contextlib
import logging
import os
import shlex
import sys
import time
from pathlib import Path

from lge import __version__, experiments
from lge.graph import is_valid_laplacian, knn_graph, laplacian_from_adjacency
from lge.io import (
    MatrixFormatError, atomic_write_text, config_to_kv, fixed_threads, format_kv, load_config,
    read_matrix, write_matrix, write_table,
)
from lge.kernels import DegenerateInputError, InvalidInputError
from lge.solver import DivergenceError, SolverConfig, lge, rpca
from lge.synth import AMPLITUDE_LAWS, SIGNED_UNIT, make_dataset

log = logging.getLogger("lge")

CONFIG_ENV = "LGE_CONFIG"
EXIT_OK, EXIT_INPUT, EXIT_MAXITER = 0, 1, 2

TRACE_HEADER = ("outer_iter", "objective", "step1_residual", "step2_residual", "rank_L")

# flag name -> SolverConfig field
CONFIG_FLAGS = {
    "gamma": ("gamma", float), "delta": ("delta", float), "beta": ("beta", float),
    "r1": ("r1", float), "r2": ("r2", float), "rho": ("rho", float),
    "tol": ("step1_tol", float), "step2_tol": ("step2_tol", float), "outer_tol": ("outer_tol", float),
    "max_iter": ("step1_max_iter", int), "step2_max_iter": ("step2_max_iter", int),
    "outer": ("outer_max_iter", int),
}

class UsageError(Exception):
    pass

def _add_config_flags(p):
    d = SolverConfig()
    g = p.add_argument_group("solver settings (override the config file)")
    for flag, (field, typ) in CONFIG_FLAGS.items():
        g.add_argument(f"--{flag.replace('_', '-')}", dest=flag, type=typ, default=None,
                       help=f"{field} (default {getattr(d, field)})")
    g.add_argument("--config", default=None,
                   help=f"key=value config file; falls back to ${CONFIG_ENV} when unset")

def build_parser():
    parser = argparse.ArgumentParser(prog="lge", description=__doc__.splitlines()[0],
                                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("--version", action="version", version=f"lge {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed")
    common.add_argument("--jobs", type=int, default=1, help="parallel sweep cells")
    common.add_argument("--fixed-threads", action="store_true",
                        help="pin BLAS pools to one thread for bitwise reproducibility")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("gen", parents=[common], formatter_class=fmt, help="generate a synthetic dataset")
    p.add_argument("--p", type=int, default=30, help="graph nodes (rows)")
    p.add_argument("--n", type=int, default=50, help="samples (columns)")
    p.add_argument("--r", type=int, default=3, help="rank")
    p.add_argument("--q", type=float, default=0.3, help="edge probability")
    p.add_argument("--mu", type=float, default=0.0, help="coefficient mean")
    p.add_argument("--d", type=float, default=0.0, help="corruption density")
    p.add_argument("--amp-model", choices=AMPLITUDE_LAWS, default=SIGNED_UNIT)
    p.add_argument("--c", type=float, default=1.0, help="uniform amplitude bound")

    p = sub.add_parser("solve", parents=[common], formatter_class=fmt, help="run LGE on a data matrix")
    p.add_argument("x_csv")
    p.add_argument("graph_csv", nargs="?", default=None, help="initial Laplacian CSV")
    p.add_argument("--knn", type=int, default=None, help="initialize with a k-NN graph instead")
    _add_config_flags(p)

    p = sub.add_parser("rpca", parents=[common], formatter_class=fmt, help="run robust PCA")
    p.add_argument("x_csv")
    _add_config_flags(p)

    p = sub.add_parser("sweep", parents=[common], formatter_class=fmt, help="run a benchmark sweep")
    p.add_argument("kind", help="one of: " + ", ".join(experiments.KINDS))
    p.add_argument("--seeds", type=int, default=5, help="runs averaged per cell")
    _add_config_flags(p)
    return parser

def resolve_config(args):
    path = args.config or os.environ.get(CONFIG_ENV)
    cfg, extra = (load_config(path) if path else (SolverConfig(), {}))
    if extra:
        log.warning("ignoring unknown config keys: %s", ", ".join(sorted(extra)))
    changes = {field: getattr(args, flag) for flag, (field, _) in CONFIG_FLAGS.items()
               if getattr(args, flag) is not None}
    return cfg.replace(**changes), path

def write_manifest(out, args, argv, cfg, wall, extra=None):
    entries = {
        "command": shlex.join(["lge", *argv]),
        "seed": args.seed,
        "software_version": __version__,
        "wall_time_seconds": f"{wall:.3f}",
        "fixed_threads": int(args.fixed_threads),
    }
    entries.update(extra or {})
    text = format_kv(entries)
    if cfg is not None:
        text += "".join(f"config.{line}\n" for line in config_to_kv(cfg).splitlines())
    atomic_write_text(Path(out) / "manifest.txt", text)

def cmd_gen(args):
    if not 1 <= args.r <= args.p:
        raise UsageError(f"--r must lie in [1, --p]; got r={args.r}, p={args.p}")
    ds = make_dataset(args.p, args.n, args.r, args.q, args.mu, args.d, args.amp_model, args.c, seed=args.seed)
    out = Path(args.out)
    for name, M in (("X", ds.X), ("L0", ds.L0), ("M", ds.M), ("Phi0", ds.laplacian0),
                    ("W", ds.adjacency0), ("P", ds.basis), ("Y", ds.coefficients)):
        write_matrix(out / f"{name}.csv", M)
    return EXIT_OK, None, {f"data.{k}": v for k, v in ds.params.items()}

def cmd_solve(args):
    cfg, _ = resolve_config(args)
    X = read_matrix(args.x_csv)
    if (args.graph_csv is None) == (args.knn is None):
        raise UsageError("give exactly one of graph_csv or --knn")
    if args.knn is not None:
        phi = laplacian_from_adjacency(knn_graph(X, args.knn))
    else:
        phi = read_matrix(args.graph_csv)
        if phi.shape != (X.shape[0], X.shape[0]):
            raise UsageError(f"graph is {phi.shape[0]}x{phi.shape[1]}, expected {X.shape[0]}x{X.shape[0]}")
        if not is_valid_laplacian(phi, 1e-8):
            raise UsageError(f"{args.graph_csv}: not a valid graph Laplacian")
    sol = lge(X, phi, cfg)
    out = Path(args.out)
    write_matrix(out / "L.csv", sol.lowrank)
    write_matrix(out / "M.csv", sol.sparse)
    write_matrix(out / "Phi.csv", sol.laplacian)
    write_table(out / "trace.csv", TRACE_HEADER,
                [tuple(t[h] for h in TRACE_HEADER) for t in sol.trace])
    return (EXIT_OK if sol.converged else EXIT_MAXITER), cfg, {"converged": int(sol.converged)}

def cmd_rpca(args):
    cfg, _ = resolve_config(args)
    X = read_matrix(args.x_csv)
    L, M, converged = rpca(X, cfg.delta, cfg)
    out = Path(args.out)
    write_matrix(out / "L.csv", L)
    write_matrix(out / "M.csv", M)
    return (EXIT_OK if converged else EXIT_MAXITER), cfg.replace(gamma=0.0), {"converged": int(converged)}

def cmd_sweep(args):
    if args.kind not in experiments.KINDS:
        raise UsageError(f"unknown sweep kind {args.kind!r}; valid kinds: {', '.join(experiments.KINDS)}")
    if args.seeds < 1:
        raise UsageError("--seeds must be at least 1")
    path = args.config or os.environ.get(CONFIG_ENV)
    overrides = any(getattr(args, f) is not None for f in CONFIG_FLAGS)
    cfg = resolve_config(args)[0] if (path or overrides or args.kind != "sensitivity") else None
    kw = dict(seeds=args.seeds, master_seed=args.seed, cfg=cfg)
    out = Path(args.out)
    if args.kind == "sensitivity":
        header, rows = experiments.sensitivity(**kw)
        for k in sorted({r[5] for r in rows}):
            write_table(out / f"sensitivity_k{k}.csv", header, [r for r in rows if r[5] == k])
    else:
        fn = getattr(experiments, args.kind)
        header, rows = fn(jobs=args.jobs, **kw)
        write_table(out / f"{args.kind}.csv", header, rows)
    if cfg is None:
        from lge.analysis import analysis_config

        cfg = analysis_config()
    return EXIT_OK, cfg, {"kind": args.kind, "seeds": args.seeds}

COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "rpca": cmd_rpca, "sweep": cmd_sweep}

def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; 2 is reserved for max-iter here
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    ctx = fixed_threads(1) if args.fixed_threads else contextlib.nullcontext()
    try:
        with ctx:
            code, cfg, extra = COMMANDS[args.command](args)
    except (UsageError, MatrixFormatError, InvalidInputError, DegenerateInputError, DivergenceError,
            FileNotFoundError, IsADirectoryError, PermissionError, ValueError) as exc:
        print(f"lge {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    write_manifest(args.out, args, argv, cfg, time.perf_counter() - t0, extra)
    if code == EXIT_MAXITER:
        print(f"lge {args.command}: iteration cap reached before convergence", file=sys.stderr)
    return code

if __name__ == "__main__":
    sys.exit(main())
