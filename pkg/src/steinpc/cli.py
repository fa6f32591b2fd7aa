"""Command-line interface.

    steinpc estimate --input data.csv [--layout rows-are-observations] [--q 1] [--output out.json] [--raw]
    steinpc simulate --p 256 --n 4 --seed 7 --out-data Y.csv --out-truth truth.json
    steinpc sweep [--config default|mu_zero|path.json] --out results/
    steinpc validate --quick | --full

Exit codes: 0 success, 1 usage / input format error, 2 data or numerical
error, 3 a convergence verdict or validation suite failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from importlib import resources

import numpy as np

from . import harness, model, shrink, validate
from .errors import SteinPCError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERDICT = 0, 1, 2, 3
LAYOUTS = ("rows-are-observations", "rows-are-variables")
BUNDLED_CONFIGS = ("default", "mu_zero")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_matrix_csv(path) -> np.ndarray:
    """Read a comma-separated real matrix; a non-numeric first row is taken as a header."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [(i + 1, r) for i, r in enumerate(csv.reader(fh)) if r and any(c.strip() for c in r)]
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    if rows and not all(_is_number(c) for c in rows[0][1]):
        rows = rows[1:]
    if not rows:
        raise UsageError(f"{path}: no numeric rows")
    width = len(rows[0][1])
    out = np.empty((len(rows), width))
    for k, (line, row) in enumerate(rows):
        if len(row) != width:
            raise UsageError(f"{path}: line {line}: expected {width} columns, got {len(row)}")
        for col, cell in enumerate(row):
            try:
                x = float(cell)
            except ValueError:
                raise UsageError(f"{path}: line {line}, column {col + 1}: not a number: {cell!r}") from None
            if not math.isfinite(x):
                raise UsageError(f"{path}: line {line}, column {col + 1}: non-finite value {cell!r}")
            out[k, col] = x
    return out


def write_matrix_csv(path, M, header=None):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(header)
        for row in np.atleast_2d(M):
            w.writerow([repr(float(x)) for x in row])


def to_data_matrix(M, layout):
    """p x n data matrix from a file-layout matrix."""
    if layout == "rows-are-observations":
        return M.T.copy()
    return M


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_estimate(args):
    Y = to_data_matrix(read_matrix_csv(args.input), args.layout)
    p, n = Y.shape
    if not 1 <= args.q < min(n, p):
        raise UsageError(f"--q must satisfy 1 <= q < min(n, p) = {min(n, p)} (p={p}, n={n})")
    est = shrink.js_estimate(Y, args.q)
    print(f"p={p} n={n} q={args.q} c={est.c!r}" + (" (clamped)" if est.clamped else ""), file=sys.stderr)

    fmt = args.format or ("json" if args.output and args.output.endswith(".json") else "csv")
    if fmt == "json":
        obj = {"h_js": est.h_js.tolist()}
        if args.raw:
            obj.update(h=est.h.tolist(), s2=est.s2, nu_hat_sq=est.nu_hat_sq, c=est.c,
                       c_raw=est.c_raw, p=p, n=n, q=args.q)
        text = json.dumps(obj, indent=2) + "\n"
        if args.output:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    else:
        cols = [est.h_js, est.h] if args.raw else [est.h_js]
        header = ["h_js", "h"] if args.raw else ["h_js"]
        M = np.column_stack(cols)
        if args.raw:
            print(f"s2={est.s2!r} nu_hat_sq={est.nu_hat_sq!r} c_raw={est.c_raw!r}", file=sys.stderr)
        if args.output:
            write_matrix_csv(args.output, M, header)
        else:
            w = csv.writer(sys.stdout, lineterminator="\n")
            w.writerow(header)
            for row in M:
                w.writerow([repr(float(x)) for x in row])
    return EXIT_OK


def cmd_simulate(args):
    try:
        spec = model.SpikedModelSpec(p=args.p, n=args.n, mu=args.mu, sigma=args.sigma,
                                     delta=args.delta, score_dist=args.dist, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    data, truth = model.generate(spec)
    write_matrix_csv(args.out_data, data.values.T)
    with open(args.out_truth, "w", encoding="utf-8") as fh:
        json.dump(truth.to_dict(spec), fh, indent=2)
        fh.write("\n")
    print(f"p={spec.p} n={spec.n} chi_n={truth.chi_n!r}", file=sys.stderr)
    return EXIT_OK


def load_config(ref) -> harness.ExperimentConfig:
    if ref is None or ref in BUNDLED_CONFIGS:
        name = ref or "default"
        text = resources.files("steinpc").joinpath("configs", f"{name}.json").read_text(encoding="utf-8")
    else:
        try:
            with open(ref, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read config {ref}: {exc}") from None
    try:
        return harness.ExperimentConfig.from_json(text)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid config {ref}: {exc}") from None


def cmd_sweep(args):
    cfg = load_config(args.config)
    report = harness.run_sweep(cfg)
    report.write(args.out)
    for v in report.verdicts:
        mark = "PASS" if v["passed"] else "FAIL"
        print(f"{mark} {v['check']}: final {v['statistic']} {v['final']:.4g}"
              f" (tol {v['final_tol']}) monotone={v['monotone_ok']}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_VERDICT


def cmd_validate(args):
    result = validate.run(full=args.full)
    json.dump(result, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK if result["passed"] else EXIT_VERDICT


def build_parser():
    ap = _Parser(prog="steinpc", description="James-Stein corrected leading principal component.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("estimate", help="corrected principal component of a CSV data matrix")
    e.add_argument("--input", required=True)
    e.add_argument("--layout", choices=LAYOUTS, default="rows-are-observations")
    e.add_argument("--q", type=int, default=1)
    e.add_argument("--output", help="output path; .json selects JSON (default: CSV to stdout)")
    e.add_argument("--format", choices=("csv", "json"))
    e.add_argument("--raw", action="store_true", help="also emit h, s2, nu_hat_sq, c, c_raw")
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("simulate", help="draw data from the single-spike model")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--mu", type=float, default=1.0)
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument("--delta", type=float, default=1.0)
    s.add_argument("--dist", choices=model.SCORE_DISTS, default="gaussian")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-data", required=True)
    s.add_argument("--out-truth", required=True)
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="Monte Carlo convergence sweep over p")
    w.add_argument("--config", help="JSON config path or bundled name (default, mu_zero)")
    w.add_argument("--out", required=True, help="output directory for trials.csv and report.json")
    w.set_defaults(func=cmd_sweep)

    v = sub.add_parser("validate", help="run the self-check suites")
    g = v.add_mutually_exclusive_group()
    g.add_argument("--quick", action="store_true", help="identity/oracle/duality/perturbation suites (default)")
    g.add_argument("--full", action="store_true", help="also the convergence sweeps")
    v.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"steinpc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SteinPCError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"steinpc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"steinpc: I/O error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
