"""trsbench: run the matched-accuracy solver comparison on Matrix Market files."""

from __future__ import annotations

import argparse
import logging
import sys

from .bench import DEFAULT_SIZE_CAP, HARD_SIZE_CAP, BenchConfig, all_converged, emit_table, run_bench
from .sparse import MatrixMarketError

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _deltas(text):
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad delta list {text!r}") from None
    if not vals or any(not v > 0 for v in vals):
        raise argparse.ArgumentTypeError("deltas must be positive")
    return vals


def build_parser():
    ap = _Parser(prog="trsbench", description=__doc__)
    ap.add_argument("--matrix", nargs="+", required=True, metavar="PATH", help="Matrix Market files (G; A = G + G^T)")
    ap.add_argument("--b", default="identity", help="identity | tridiag:a,b,c | path to an SPD Matrix Market file")
    ap.add_argument("--delta", type=_deltas, default=(1.0, 100.0), help="comma-separated trust radii")
    ap.add_argument("--tol", type=float, default=1e-12)
    ap.add_argument("--dim", type=int, default=30, help="Krylov subspace dimension m")
    ap.add_argument("--max-restarts", type=int, default=600)
    ap.add_argument("--solver", choices=("all", "gltr", "ira", "irra"), default="all")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--format", choices=("csv", "md"), default="csv")
    ap.add_argument("--out", default=None, help="write the table here instead of stdout")
    ap.add_argument(
        "--max-n", type=int, default=DEFAULT_SIZE_CAP, help=f"reject matrices above this order (at most {HARD_SIZE_CAP})"
    )
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = BenchConfig(
            matrices=list(args.matrix),
            b_spec=args.b,
            deltas=args.delta,
            tol=args.tol,
            m=args.dim,
            max_restarts=args.max_restarts,
            solver=args.solver,
            seed=args.seed,
            fmt=args.format,
            size_cap=args.max_n,
        )
        records = run_bench(cfg)
    except (ValueError, MatrixMarketError, OSError) as exc:
        print(f"trsbench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = emit_table(records, cfg.fmt)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if all_converged(records) else EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
