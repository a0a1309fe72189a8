"""Command-line entry point: ``btdcorcondia <subcommand> ...``.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import io
from .datagen import SimSpec, apply_block_transform, generate, random_transforms, snr_sweep
from .diagnostics import btd_corcondia
from .ll1 import BlockStructure, FitOptions, Ll1Warning, check_structure_fits, fit_ll1
from .search import SearchSpace, grid_search

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


def _dims(text: str) -> tuple[int, int, int]:
    try:
        dims = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dims {text!r}; expected I,J,K")
    if len(dims) != 3 or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"dims must be three positive integers, got {text!r}")
    return dims


def _structure(text: str) -> BlockStructure:
    try:
        return BlockStructure.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad block ranks {text!r}: {exc}")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}")


def truth_path(out: Path) -> Path:
    return out.with_name(out.stem + ".truth.json")


def cmd_simulate(args) -> int:
    spec = SimSpec(args.dims, args.L, args.seed, args.snr)
    t, truth = generate(spec)
    out = Path(args.out)
    io.save_tensor(t, out)
    io.save_model(truth, truth_path(out))
    print(f"wrote {out} and {truth_path(out)}")
    return EXIT_OK


def _fit_options(args) -> FitOptions:
    return FitOptions(tol=args.tol, max_iter=args.max_iter, restarts=args.restarts,
                      init=args.init, seed=args.seed)


def cmd_decompose(args) -> int:
    t = io.load_tensor(args.input)
    check_structure_fits(t.shape, args.L)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", Ll1Warning)
        model = fit_ll1(t, args.L, _fit_options(args))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    io.save_model(model, args.out)
    f = model.fit
    print(f"structure {model.structure}")
    print(f"cost {f.final_cost:.6e}")
    print(f"relative_error {f.relative_error:.6e}")
    print(f"iterations {f.iterations}")
    print(f"init {f.init}{' (fallback)' if f.init_fallback else ''}")
    print(f"converged {str(f.converged).lower()}")
    return EXIT_OK if f.restarts_converged > 0 else EXIT_NUMERIC


def cmd_diagnose(args) -> int:
    t = io.load_tensor(args.input)
    model = io.load_model(args.model)
    if model.dims != t.shape:
        raise UsageError(f"model dims {model.dims} do not match tensor dims {t.shape}")
    res = btd_corcondia(t, model)
    if args.dump_core:
        io.save_tensor(res.core.values, args.dump_core)
    print(f"{res.percentage:.2f}")
    return EXIT_OK


def cmd_search(args) -> int:
    t = io.load_tensor(args.input)
    opts = FitOptions(tol=args.tol, max_iter=args.max_iter, restarts=args.restarts,
                      init=args.init)
    report = grid_search(t, SearchSpace(args.max_R, args.max_L), repeats=args.repeats,
                         seed=args.seed, fit_opts=opts, threads=args.threads)
    Path(args.out).write_text(io.report_to_csv(report))
    if args.json:
        Path(args.json).write_text(io.report_to_json(report))
    for s, why in report.skipped:
        print(f"skipped {s}: {why}", file=sys.stderr)
    for row in report.top(args.show):
        mean = "n/a" if row.mean_pct is None else f"{row.mean_pct:.2f}"
        print(f"{str(row.structure):<16} {mean:>8}")
    return EXIT_OK


def cmd_sweep_snr(args) -> int:
    result = snr_sweep(SimSpec(args.dims, args.L, args.seed), args.snr_list)
    Path(args.out).write_text(io.sweep_to_csv(result))
    for r in result.rows:
        print(f"{r.snr_db:g} dB  {r.consistency_pct:.2f}")
    return EXIT_OK


def cmd_transform(args) -> int:
    model = io.load_model(args.model)
    rng = np.random.default_rng(args.seed)
    out = apply_block_transform(model, random_transforms(model.structure, rng, args.max_cond))
    io.save_model(out, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _add_fit_flags(p, restarts: int):
    p.add_argument("--init", choices=["gevd", "random"], default="gevd")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--restarts", type=int, default=restarts)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="btdcorcondia",
                                     description="Core consistency for rank-(Lr,Lr,1) BTD.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic LL1 tensor")
    p.add_argument("--dims", type=_dims, required=True)
    p.add_argument("--L", type=_structure, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--snr", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("decompose", help="fit an LL1 model")
    p.add_argument("--input", required=True)
    p.add_argument("--L", type=_structure, required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_fit_flags(p, restarts=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("diagnose", help="print the core consistency of a model")
    p.add_argument("--input", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--dump-core", default=None)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("search", help="grid search over block structures")
    p.add_argument("--input", required=True)
    p.add_argument("--max-R", dest="max_R", type=int, default=6)
    p.add_argument("--max-L", dest="max_L", type=int, default=6)
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    _add_fit_flags(p, restarts=1)
    p.add_argument("--out", required=True)
    p.add_argument("--json", default=None, help="also write the report as JSON")
    p.add_argument("--show", type=int, default=10, help="rows to print")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("sweep-snr", help="consistency vs. noise added to true factors")
    p.add_argument("--dims", type=_dims, required=True)
    p.add_argument("--L", type=_structure, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snr-list", type=_floats, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep_snr)

    p = sub.add_parser("transform", help="apply random block transforms F_r to a model")
    p.add_argument("--model", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-cond", type=float, default=1e4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transform)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except np.linalg.LinAlgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
