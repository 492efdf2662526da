"""Command-line interface.

::

    tcdmap generate barbell --n 2000 --m 9 --seed 7 --out runs/bb
    tcdmap generate circle --n 2000 --r0 1 --rate 0.5 --horizon 1 --m 100 --out runs/c
    tcdmap embed runs/bb --method tc --t 9 --rank 3 --out runs/bb_tc
    tcdmap distance runs/bb --t 9 --pairs 0,1 5,9 --out runs/bb_dist
    tcdmap validate heat --out runs/val
    tcdmap report runs/bb_tc

Exit codes: 0 success, 1 usage error, 2 data error, 3 solver
non-convergence, 4 validation failure.
"""
from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
import time
import warnings

import numpy as np

from . import __version__
from .baselines import concat_map, static_map
from .chain import ChainOperator, decompose, pairwise_distances, tc_distance
from .errors import IndexOutOfRangeError, TcdmError
from .kernels import KernelParams, build_operators, default_epsilon, squared_distances
from .synthetic import BarbellConfig, MetricFamily, barbell_tensor, circle_tensor
from .tensor_store import FLOAT_FORMAT, load_tensor, save_tensor

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SOLVER, EXIT_VALIDATION = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _epsilon(value):
    if value == "auto":
        return value
    try:
        eps = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"epsilon must be a positive number or 'auto', got {value!r}")
    if not eps > 0:
        raise argparse.ArgumentTypeError(f"epsilon must be positive, got {value!r}")
    return eps


def _pair(value):
    try:
        j, k = (int(v) for v in value.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"pairs look like J,K; got {value!r}")
    return j, k


def write_embedding(path, emb, prefix="psi"):
    header = ",".join(f"{prefix}_{i}" for i in range(1, emb.shape[1] + 1))
    np.savetxt(path, emb, fmt=FLOAT_FORMAT, delimiter=",", header=header, comments="")


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


# -- generate ---------------------------------------------------------------

def cmd_generate(args):
    if args.kind == "barbell":
        tensor = barbell_tensor(BarbellConfig(args.n, args.m, args.seed))
    else:
        family = MetricFamily(args.r0, args.rate, args.horizon)
        tensor = circle_tensor(family, args.n, args.m)
    path = save_tensor(tensor, args.out)
    print(path)
    return EXIT_OK


# -- embed ------------------------------------------------------------------

def _resolve_t(args, tensor):
    t = tensor.m if args.t is None else args.t
    if not 1 <= t <= tensor.m:
        raise UsageError(f"--t must lie in 1..{tensor.m}, got {t}")
    return t


def compute_embedding(tensor, method, t, rank, epsilon="auto", steps=1, knn=None, threshold=None,
                      per_snapshot=False):
    """Run one embedding method; returns ``(embedding, report_dict)``."""
    if rank < 1 or rank + 1 > tensor.n:
        raise UsageError(f"--rank must lie in 1..{tensor.n - 1}, got {rank}")
    report = {"method": method, "t": t, "rank": rank}
    if method == "tc":
        ops, eps = build_operators(tensor.snapshots[:t], epsilon, knn, threshold, per_snapshot)
        dec = decompose(ChainOperator(ops), rank + 1)
        emb = dec.embedding
        report.update(epsilon=eps if per_snapshot else eps[0], singular_values=dec.singular_values,
                      residuals=dec.residuals, iterations=dec.iterations,
                      stationary=dec.info.get("stationary"), rank_deficient=dec.rank_deficient)
    elif method == "static":
        snap = tensor.snapshot(t)
        eps = default_epsilon([snap]) if epsilon == "auto" else float(epsilon)
        sm = static_map(snap, KernelParams(eps, knn, threshold), steps, rank + 1)
        emb = sm.embedding
        report.update(epsilon=eps, steps=steps, eigenvalues=sm.eigenvalues,
                      singular_values=sm.decomposition.singular_values,
                      residuals=sm.decomposition.residuals, iterations=sm.decomposition.iterations)
    elif method == "concat":
        if epsilon == "auto":
            traj = np.concatenate([tensor.snapshot(i).points for i in range(1, t + 1)], axis=1)
            sq = squared_distances(traj)[np.triu_indices(tensor.n, 1)]
            med = float(np.median(sq)) if sq.size else 0.0
            eps = 4 * 0.5 * med if med > 0 else 4.0
        else:
            eps = float(epsilon)
        cm = concat_map(tensor, t, eps, rank + 1)
        emb = cm.embedding
        report.update(epsilon=eps, eigenvalues=cm.eigenvalues,
                      singular_values=cm.decomposition.singular_values,
                      residuals=cm.decomposition.residuals, iterations=cm.decomposition.iterations)
    else:
        raise UsageError(f"unknown method {method!r}")
    return emb, report


def _copy_labels(manifest, out):
    root = manifest if os.path.isdir(manifest) else os.path.dirname(manifest)
    src = os.path.join(root, "labels.csv")
    if os.path.isfile(src):
        shutil.copyfile(src, os.path.join(out, "labels.csv"))


def cmd_embed(args):
    tensor = load_tensor(args.manifest)
    t = _resolve_t(args, tensor)
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        emb, report = compute_embedding(tensor, args.method, t, args.rank, args.epsilon, args.steps,
                                        args.knn, args.threshold, args.per_snapshot)
    os.makedirs(args.out, exist_ok=True)
    write_embedding(os.path.join(args.out, "embedding.csv"), emb)
    _copy_labels(args.manifest, args.out)
    report.update(version=__version__, wall_time=time.perf_counter() - t0, n=tensor.n,
                  warnings=[str(w.message) for w in caught], config=_config(args))
    write_json(os.path.join(args.out, "report.json"), report)
    print(os.path.join(args.out, "embedding.csv"))
    return EXIT_OK


def _config(args):
    return {k: v for k, v in vars(args).items() if k != "func"}


# -- distance ---------------------------------------------------------------

def cmd_distance(args):
    tensor = load_tensor(args.manifest)
    t = _resolve_t(args, tensor)
    pairs = list(args.pairs or [])
    if args.pairs_file:
        with open(args.pairs_file) as fh:
            pairs += [_pair(line.strip()) for line in fh if line.strip()]
    if not pairs:
        raise UsageError("no pairs given")
    for j, k in pairs:
        for idx in (j, k):
            if not 0 <= idx < tensor.n:
                raise IndexOutOfRangeError(f"point index {idx} outside 0..{tensor.n - 1}")
    rank = tensor.n if args.rank is None else args.rank + 1
    ops, eps = build_operators(tensor.snapshots[:t], args.epsilon)
    chain = ChainOperator(ops)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        dec = decompose(chain, rank)
    emb = dec.embedding
    rows = []
    for j, k in pairs:
        direct = tc_distance(chain, dec.stationary, j, k)
        via = float(np.linalg.norm(emb[j] - emb[k]))
        rows.append((j, k, direct, via))
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "distances.csv")
    with open(path, "w") as fh:
        fh.write("j,k,direct,embedding\n")
        for j, k, a, b in rows:
            fh.write(f"{j},{k},{FLOAT_FORMAT % a},{FLOAT_FORMAT % b}\n")
    write_json(os.path.join(args.out, "report.json"),
               {"version": __version__, "epsilon": eps[0], "t": t, "rank": rank,
                "singular_values": dec.singular_values, "config": _config(args)})
    for j, k, a, b in rows:
        print(f"{j},{k},{a:.17g},{b:.17g}")
    return EXIT_OK


# -- validate ---------------------------------------------------------------

def cmd_validate(args):
    from . import validation

    checks = validation.run_suite(args.suite)
    for c in checks:
        print(c.line())
    ok = all(c.passed for c in checks)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_json(os.path.join(args.out, "validation.json"),
                   {"version": __version__, "suite": args.suite, "passed": ok,
                    "checks": [c.to_dict() for c in checks]})
        for c in checks:
            if "table" in c.details:
                _write_heat_table(os.path.join(args.out, "heat_sweep.csv"), c.details["table"])
    return EXIT_OK if ok else EXIT_VALIDATION


def _write_heat_table(path, table):
    cols = ["epsilon", "n", "steps", "rel_l2_error", "fitted_slope"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in table:
            fh.write(",".join(str(row[c]) if c in ("n", "steps") else FLOAT_FORMAT % row[c]
                              for c in cols) + "\n")


# -- report -----------------------------------------------------------------

def cmd_report(args):
    from . import plotting

    written = plotting.render_run(args.run_dir, fmt=args.format)
    if not written:
        raise UsageError(f"nothing to render in {args.run_dir}")
    for path in written:
        print(path)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="tcdmap", description="Time-coupled diffusion maps.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic tensor")
    g.add_argument("kind", choices=["barbell", "circle"])
    g.add_argument("--n", type=int, default=2000)
    g.add_argument("--m", type=int, default=9)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--r0", type=float, default=1.0)
    g.add_argument("--rate", type=float, default=0.0)
    g.add_argument("--horizon", type=float, default=1.0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    def common(p):
        p.add_argument("manifest", help="manifest.json or the directory holding it")
        p.add_argument("--t", type=int, default=None, help="chain length (default: all snapshots)")
        p.add_argument("--epsilon", type=_epsilon, default="auto")
        p.add_argument("--out", required=True)

    e = sub.add_parser("embed", help="embed points with one method")
    common(e)
    e.add_argument("--method", choices=["tc", "static", "concat"], required=True)
    e.add_argument("--rank", type=int, default=3, help="embedding dimension")
    e.add_argument("--steps", type=int, default=1, help="diffusion steps (static only)")
    sp = e.add_mutually_exclusive_group()
    sp.add_argument("--knn", type=int, default=None)
    sp.add_argument("--threshold", type=float, default=None)
    e.add_argument("--per-snapshot", action="store_true", help="auto bandwidth per snapshot")
    e.add_argument("--seed", type=int, default=0, help="recorded in the report")
    e.set_defaults(func=cmd_embed)

    d = sub.add_parser("distance", help="time-coupled distances between point pairs")
    common(d)
    d.add_argument("--pairs", type=_pair, nargs="*")
    d.add_argument("--pairs-file", default=None)
    d.add_argument("--rank", type=int, default=None, help="embedding dimension (default: full)")
    d.set_defaults(func=cmd_distance)

    v = sub.add_parser("validate", help="run self-generating numerical checks")
    v.add_argument("suite", choices=["heat", "lemma1", "norm1", "barbell", "operators", "all"])
    v.add_argument("--out", default=None)
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("report", help="render figures for a run directory")
    r.add_argument("run_dir")
    r.add_argument("--format", default="png", choices=["png", "pdf", "svg"])
    r.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"tcdmap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TcdmError as exc:
        print(f"tcdmap: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"tcdmap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
