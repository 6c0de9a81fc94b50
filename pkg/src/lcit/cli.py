"""Command-line interface: ``lcit {test,simulate,bench,calibrate}``.

Exit codes: 0 success (``test``: independent), 1 dependent (``test`` only),
2 error.
"""

import argparse
import contextlib
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import benchmark as bm
from .citest import lcit
from .data import load_csv, preprocess, write_csv
from .flow import TrainConfig

SCHEMA_VERSION = 1
EXIT_INDEPENDENT, EXIT_DEPENDENT, EXIT_ERROR = 0, 1, 2

PROFILES = {
    "desk": {"cells": [(500, 5)], "runs": 100},
    "n1000-d25": {"cells": [(1000, 25)], "runs": 100},
    "full-grid": {
        "cells": [(250, 25), (500, 25), (750, 25), (1000, 25), (1000, 50), (1000, 75), (1000, 100)],
        "runs": 250,
    },
}


class StageError(Exception):
    def __init__(self, stage, exc):
        super().__init__(f"{stage}: {exc}")
        self.stage = stage


@contextlib.contextmanager
def _stage(name):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def _alpha(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return v


def _grid(text):
    cells = []
    for part in text.split(","):
        try:
            n, d = part.lower().split("x")
            cells.append((int(n), int(d)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad grid cell {part!r}; expected NxD") from None
    return cells


def _names(text):
    return [s.strip() for s in text.split(",") if s.strip()]


def _pair(text):
    names = _names(text)
    if len(names) != 2 or any(nm not in bm.FUNCTION_NAMES for nm in names):
        raise argparse.ArgumentTypeError(
            f"expected two of {', '.join(bm.FUNCTION_NAMES)} separated by a comma")
    return tuple(names)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--alpha", type=_alpha, default=0.05)
    common.add_argument("--output", "-o", default="-", help="output path, '-' for stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    parser = argparse.ArgumentParser(prog="lcit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", parents=[common], help="test x _||_ y | z on a CSV file")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--z", type=_names, default=[], help="comma-separated conditioning columns")
    p.add_argument("--no-preprocess", action="store_true")

    p = sub.add_parser("simulate", parents=[common], help="write one synthetic dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--label", choices=bm.LABELS, default="H0")
    p.add_argument("--out", dest="output", help="alias of --output")

    p = sub.add_parser("bench", parents=[common], help="run the synthetic benchmark")
    p.add_argument("--grid", type=_grid, help="cells as NxD,NxD,...")
    p.add_argument("--profile", choices=sorted(PROFILES))
    p.add_argument("--runs", type=int, help="runs per label per cell")
    p.add_argument("--methods", type=_names, default=["lcit", "pcorr"])
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=int(os.environ.get("LCIT_THREADS", "1")))
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock seconds (makes output non-reproducible)")
    p.add_argument("--functions", type=_pair, help="pin the generator's f,g (e.g. linear,linear)")

    p = sub.add_parser("calibrate", parents=[common], help="p-value calibration under H0")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--method", choices=sorted(bm.METHODS), default="lcit")
    p.add_argument("--functions", type=_pair, help="pin the generator's f,g (e.g. linear,linear)")
    return parser


@contextlib.contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _emit(obj, fmt, path, columns=None, rows=None):
    with _open_out(path) as fh:
        if fmt == "json":
            fh.write(json.dumps(obj, indent=2) + "\n")
        else:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            w.writerows(rows)


def cmd_test(args):
    with _stage("load"):
        ds = load_csv(args.input, args.x, args.y, args.z)
    if not args.no_preprocess:
        with _stage("preprocess"):
            ds = preprocess(ds)
    with _stage("lcit"):
        res = lcit(ds.x, ds.y, ds.z, args.alpha, TrainConfig(seed=args.seed), preprocessing=False)
    body = {"version": SCHEMA_VERSION, **res.to_dict()}
    cols = list(body)
    _emit(body, args.format, args.output, cols, [[body[c] for c in cols]])
    return EXIT_INDEPENDENT if res.independent else EXIT_DEPENDENT


def cmd_simulate(args):
    if args.output in (None, "-"):
        raise StageError("simulate", "--out is required")
    with _stage("simulate"):
        cfg = bm.SimConfig.random(args.n, args.d, args.label, args.seed)
        ds = bm.generate_instance(cfg)
    with _stage("write"):
        out = Path(args.output)
        write_csv(ds, out)
        side = {"version": SCHEMA_VERSION, **cfg.to_dict()}
        out.with_suffix(".json").write_text(json.dumps(side, indent=2) + "\n", encoding="utf-8")
    return 0


def cmd_bench(args):
    if args.profile:
        prof = PROFILES[args.profile]
        cells = args.grid or prof["cells"]
        runs = args.runs or prof["runs"]
    elif args.grid:
        cells, runs = args.grid, args.runs or 10
    else:
        raise StageError("bench", "give --grid or --profile")
    unknown = [m for m in args.methods if m not in bm.METHODS]
    if unknown:
        raise StageError("bench", f"unknown method(s): {', '.join(unknown)}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with _stage("bench"), open(out / "runs.csv", "w", newline="", encoding="utf-8") as fh:
        reports = bm.run_benchmark(cells, runs, args.methods, args.alpha, args.seed, fh,
                                   n_jobs=max(1, args.jobs), timing=args.timing,
                                   functions=args.functions)
    rows = [r.summary_row() for r in reports]
    summary = {
        "version": SCHEMA_VERSION,
        "alpha": args.alpha,
        "seed": args.seed,
        "runs_per_label": runs,
        "cells": [r.to_dict() for r in reports],
    }
    summary_path = out / ("summary." + args.format)
    _emit(summary, args.format, summary_path, bm.SUMMARY_COLUMNS, rows)
    if args.output not in (None, "-"):
        _emit(summary, args.format, args.output, bm.SUMMARY_COLUMNS, rows)
    else:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows([bm.SUMMARY_COLUMNS, *rows])
        sys.stdout.write(buf.getvalue())
    return 0


def cmd_calibrate(args):
    if args.n < 20:
        raise StageError("calibrate", f"n={args.n} is below the minimum of 20")
    with _stage("calibrate"):
        rep = bm.calibrate(args.n, args.d, args.runs, args.alpha, args.seed, args.method,
                           functions=args.functions)
    body = {"version": SCHEMA_VERSION, "method": args.method, **rep}
    counts = rep["histogram"]["counts"]
    edges = rep["histogram"]["edges"]
    rows = [[edges[i], edges[i + 1], counts[i]] for i in range(len(counts))]
    _emit(body, args.format, args.output, ["lo", "hi", "count"], rows)
    return 0


COMMANDS = {"test": cmd_test, "simulate": cmd_simulate, "bench": cmd_bench,
            "calibrate": cmd_calibrate}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except StageError as exc:
        print(f"lcit {args.command}: error in {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        print(f"lcit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
