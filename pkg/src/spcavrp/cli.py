"""Command-line interface.

Exit codes: 0 success, 2 input error, 3 configuration error, 4 numeric failure.
"""
import argparse
import csv
import json
import math
import sys
from math import ceil

import numpy as np

from . import __version__
from .covariance import STRATEGIES
from .deflation import DeflationConfig, deflate_fit
from .errors import DegenerateDeflation, InvalidInput, RankDeficient, TooLarge, Unreachable
from .estimator import SpcavrpConfig, default_A, fit
from .evaluation import choose_B
from .harness import RESULT_COLUMNS, VAR_COLUMNS, ExperimentSpec, aggregate, fmt, run_experiment, write_rows
from .models import model_from_spec, sample_gaussian

EXIT_INPUT = 2
EXIT_CONFIG = 3
EXIT_NUMERIC = 4


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def read_csv_matrix(path, header=False):
    """Parse a numeric CSV (rows are observations); errors carry the line number."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise CliError(f"cannot open {path}: {exc.strerror}", EXIT_INPUT) from None
    rows = []
    width = None
    with fh:
        reader = csv.reader(fh)
        for row in reader:
            line = reader.line_num
            if header and line == 1:
                continue
            try:
                values = [float(x) for x in row]
            except ValueError:
                raise CliError(f"{path}:{line}: non-numeric field", EXIT_INPUT) from None
            if not values:
                raise CliError(f"{path}:{line}: empty row", EXIT_INPUT)
            if not all(math.isfinite(v) for v in values):
                raise CliError(f"{path}:{line}: non-finite value", EXIT_INPUT)
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise CliError(
                    f"{path}:{line}: expected {width} fields, found {len(values)}", EXIT_INPUT
                )
            rows.append(values)
    if not rows:
        raise CliError(f"{path}: no data rows", EXIT_INPUT)
    return np.array(rows, dtype=float)


def write_csv_matrix(X, fh):
    for row in X:
        fh.write(",".join(fmt(float(x)) for x in row))
        fh.write("\n")


def _dump_json(doc, path):
    text = json.dumps(doc, indent=2, allow_nan=False) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _floats(a):
    return [float(x) for x in np.asarray(a).ravel()]


def cmd_fit(args):
    X = read_csv_matrix(args.input, header=args.header)
    n, p = X.shape
    A = args.A if args.A is not None else default_A(p)
    B = args.B if args.B is not None else ceil(A / 3)
    echo = {
        "algorithm": args.algorithm, "A": A, "B": B, "m": args.m,
        "seed": args.seed, "strategy": args.strategy,
        "exhaustive": args.exhaustive, "center": args.center, "n": n, "p": p,
    }
    if args.algorithm == "deflate":
        if args.l_per_component:
            try:
                ls = [int(x) for x in args.l_per_component.split(",")]
            except ValueError:
                raise CliError("--l-per-component must be a comma-separated list of integers", EXIT_CONFIG) from None
        elif args.l is not None:
            ls = [args.l] * args.m
        else:
            raise CliError("deflation needs --l-per-component or --l", EXIT_CONFIG)
        d = args.d if args.d is not None else max(ls)
        cfg = DeflationConfig(
            tuple(ls), d=d, A=A, B=B, seed=args.seed, strategy=args.strategy,
            exhaustive=args.exhaustive, center=args.center,
        )
        echo.update(d=d, l_per_component=ls, m=len(ls))
        res = deflate_fit(X, cfg, threads=args.threads)
        doc = {
            "config": echo,
            "seed": args.seed,
            "eigenvectors": [_floats(res.components[:, r]) for r in range(res.m)],
            "support": [int(j) for j in np.flatnonzero(np.any(res.components != 0, axis=1))],
            "supports": [[int(j) for j in S] for S in res.supports],
            "eigenvalues": _floats(res.eigenvalues),
            "scores": [_floats(w) for w in res.scores],
        }
    else:
        if args.l is None and args.d is None:
            raise CliError("need --l or --d", EXIT_CONFIG)
        l = args.l if args.l is not None else args.d
        d = args.d if args.d is not None else l
        cfg = SpcavrpConfig(
            d=d, l=l, A=A, B=B, m=args.m, seed=args.seed, strategy=args.strategy,
            exhaustive=args.exhaustive, center=args.center,
        )
        echo.update(d=d, l=l)
        est = fit(X, cfg, threads=args.threads)
        doc = {
            "config": echo,
            "seed": args.seed,
            "eigenvectors": [_floats(est.vectors[:, r]) for r in range(est.m)],
            "support": [int(j) for j in est.support],
            "eigenvalues": _floats(est.eigenvalues),
            "scores": _floats(est.scores),
            "short_scores": est.short_scores,
        }
    _dump_json(doc, args.output)
    return 0


def _model_spec_from_args(args):
    if args.model_spec:
        try:
            with open(args.model_spec) as fh:
                return json.load(fh)
        except OSError as exc:
            raise CliError(f"cannot open {args.model_spec}: {exc.strerror}", EXIT_INPUT) from None
        except json.JSONDecodeError as exc:
            raise CliError(f"{args.model_spec}:{exc.lineno}: {exc.msg}", EXIT_INPUT) from None
    if args.model is None:
        raise CliError("need --model or --model-spec", EXIT_CONFIG)
    spec = {"kind": args.model}
    for key in ("p", "k", "theta", "profile"):
        value = getattr(args, key)
        if value is not None:
            spec[key] = value
    if args.disjoint:
        spec["overlapping"] = False
    return spec


def cmd_simulate(args):
    spec = _model_spec_from_args(args)
    model = model_from_spec(spec)
    X = sample_gaussian(model, args.n, args.seed)
    with open(args.output, "w", newline="") as fh:
        write_csv_matrix(X, fh)
    truth = args.truth or args.output + ".truth.json"
    _dump_json(
        {
            "model": model.spec,
            "n": args.n,
            "seed": args.seed,
            "thetas": _floats(model.thetas),
            "vectors": [_floats(model.vectors[:, r]) for r in range(model.m)],
            "support": [int(j) for j in model.support],
        },
        truth,
    )
    return 0


def cmd_benchmark(args):
    try:
        with open(args.spec) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot open {args.spec}: {exc.strerror}", EXIT_INPUT) from None
    except json.JSONDecodeError as exc:
        raise CliError(f"{args.spec}:{exc.lineno}: {exc.msg}", EXIT_INPUT) from None
    if not isinstance(doc, dict):
        raise CliError("experiment spec must be a JSON object", EXIT_CONFIG)
    spec = ExperimentSpec.from_dict(doc)
    rows = run_experiment(spec, threads=args.threads, record_time=args.record_time)
    if spec.mode == "var-curve":
        columns = VAR_COLUMNS
    else:
        columns = RESULT_COLUMNS
        rows = rows + aggregate(rows, spec)
    if args.output == "-":
        write_rows(rows, columns, sys.stdout)
    else:
        with open(args.output, "w", newline="") as fh:
            write_rows(rows, columns, fh)
    return 0


def cmd_choose_b(args):
    print(choose_B(args.t, args.d, args.k, args.p))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spcavrp", description="Sparse PCA via random projections."
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="estimate sparse principal components of a CSV data file")
    f.add_argument("--input", required=True)
    f.add_argument("--output", default="-")
    f.add_argument("--header", action="store_true", help="first CSV row is a header")
    f.add_argument("--A", type=int)
    f.add_argument("--B", type=int)
    f.add_argument("--d", type=int)
    f.add_argument("--l", type=int)
    f.add_argument("--l-per-component", dest="l_per_component")
    f.add_argument("--m", type=int, default=1)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--center", action="store_true")
    f.add_argument("--strategy", choices=STRATEGIES, default="auto")
    f.add_argument("--exhaustive", action="store_true")
    f.add_argument("--algorithm", choices=("rp", "deflate"), default="rp")
    f.add_argument("--deflate", dest="algorithm", action="store_const", const="deflate")
    f.add_argument("--threads", type=int, default=1)
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("simulate", help="sample Gaussian data from a covariance model")
    s.add_argument("--model", choices=(
        "single-spike", "sigma1", "sigma2", "intro", "two-spike", "three-spike", "signed-pair",
    ))
    s.add_argument("--model-spec", help="JSON model description (overrides --model)")
    s.add_argument("--p", type=int)
    s.add_argument("--k", type=int)
    s.add_argument("--theta", type=float)
    s.add_argument("--profile", choices=("homogeneous", "linear"))
    s.add_argument("--disjoint", action="store_true", help="disjoint supports for two-spike/three-spike")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output", required=True)
    s.add_argument("--truth", help="sidecar JSON path (default: OUTPUT.truth.json)")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("benchmark", help="run a Monte Carlo experiment from a JSON spec")
    b.add_argument("spec")
    b.add_argument("--output", default="-")
    b.add_argument("--threads", type=int, default=1)
    b.add_argument(
        "--record-time", action="store_true",
        help="record wall-clock times (otherwise written as nan, keeping output reproducible)",
    )
    b.set_defaults(func=cmd_benchmark)

    c = sub.add_parser("choose-b", help="group size B for a target overlap t")
    c.add_argument("--t", type=int, required=True)
    c.add_argument("--d", type=int, required=True)
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--p", type=int, required=True)
    c.set_defaults(func=cmd_choose_b)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be at least 1")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (InvalidInput, TooLarge, Unreachable) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateDeflation, RankDeficient, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
