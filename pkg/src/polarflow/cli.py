"""Command line entry point.

Exit codes: 0 success, 1 usage or parse error, 2 numerical failure,
3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bench import ExperimentConfig, fmt, run_experiment, write_outputs
from .errors import IoError, NotConverged, NumericalError, PolarFlowError
from .flow import FlowOptions, integrate
from .geometry import MongeInstance
from .polar import polar_oracle, polar_via_flow, verify_decomposition

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3

log = logging.getLogger("polarflow")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_json(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror or exc}", path=str(path)) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc


def read_matrix(path) -> np.ndarray:
    """Matrix file: JSON array of rows, e.g. ``[[0,-2],[1,0]]``."""
    data = read_json(path)
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise UsageError(f"{path}: expected a JSON array of rows")
    n = len(data)
    if any(len(r) != n for r in data):
        raise UsageError(f"{path}: matrix must be square, got {n} rows of lengths {[len(r) for r in data]}")
    try:
        m = np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{path}: non-numeric entry ({exc})") from exc
    if not np.all(np.isfinite(m)):
        raise UsageError(f"{path}: entries must be finite")
    return m


def _write_json(path, obj):
    try:
        with open(path, "w") as fh:
            json.dump(obj, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}", path=str(path)) from exc


def _instance(args) -> MongeInstance:
    a = read_matrix(args.input)
    sigma0 = read_matrix(args.sigma0) if args.sigma0 else np.eye(a.shape[0])
    if sigma0.shape != a.shape:
        raise UsageError(f"sigma0 is {sigma0.shape}, A is {a.shape}")
    return MongeInstance(sigma0=sigma0, a=a, allow_negative_det=args.allow_negative_det)


def cmd_polar(args) -> int:
    inst = _instance(args)
    if args.method == "oracle":
        factors = polar_oracle(inst)
    else:
        opts = FlowOptions(h=args.h, max_steps=args.max_steps, omega_tol=args.tol)
        try:
            factors = polar_via_flow(inst, opts)
        except NotConverged as exc:
            if exc.factors is not None:
                _write_json(args.output, _polar_payload(inst, exc.factors, converged=False))
            raise
    _write_json(args.output, _polar_payload(inst, factors, converged=True))
    return EXIT_OK


def _polar_payload(inst, factors, converged):
    out = {
        "method": factors.method,
        "converged": converged,
        "p": factors.p.tolist(),
        "q": factors.q.tolist(),
        "verification": verify_decomposition(inst.a, factors, inst.sigma0),
    }
    if factors.trace is not None:
        out["steps"] = factors.trace.final.step_index
        out["omega_norm"] = factors.trace.omega_norm[-1]
    return out


def cmd_flow(args) -> int:
    inst = _instance(args)
    p = polar_oracle(inst).p
    opts = FlowOptions(h=args.h, max_steps=args.steps, omega_tol=None)
    trace = integrate(inst, opts, reference=p)
    try:
        with open(args.trace, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "time", "cost_j", "omega_norm", "fiber_residual", "sq_dist_to_p"])
            for st, j, om, res, d in zip(
                trace.states, trace.cost, trace.omega_norm, trace.fiber_res, trace.dist_to_ref_sq
            ):
                w.writerow([st.step_index, fmt(st.time), fmt(j), fmt(om), fmt(res), fmt(d)])
    except OSError as exc:
        raise IoError(f"cannot write {args.trace}: {exc.strerror or exc}", path=str(args.trace)) from exc
    return EXIT_OK


def cmd_experiment(args) -> int:
    raw = read_json(args.config)
    if not isinstance(raw, dict):
        raise UsageError(f"{args.config}: expected a JSON object")
    try:
        config = ExperimentConfig.from_dict(raw)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{args.config}: {exc}") from exc
    report = run_experiment(config, workers=args.workers)
    paths = write_outputs(report, args.out_dir)
    log.info("wrote %s", ", ".join(str(p) for p in paths.values()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="polarflow", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def matrix_args(p):
        p.add_argument("--input", required=True, type=Path, help="JSON matrix file with A")
        p.add_argument("--sigma0", type=Path, help="JSON matrix file with the source covariance (default I)")
        p.add_argument("--allow-negative-det", action="store_true")

    p = sub.add_parser("polar", help="polar factors of a matrix")
    matrix_args(p)
    p.add_argument("--method", choices=["flow", "oracle"], default="flow")
    p.add_argument("--h", type=float, default=0.1)
    p.add_argument("--max-steps", type=int, default=300)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--output", required=True, type=Path)
    p.set_defaults(func=cmd_polar)

    p = sub.add_parser("flow", help="single-trajectory trace")
    matrix_args(p)
    p.add_argument("--h", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--trace", required=True, type=Path)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("experiment", help="ensemble convergence study")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out-dir", required=True, type=Path)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"polarflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IoError as exc:
        print(f"polarflow: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericalError as exc:
        print(f"polarflow: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (PolarFlowError, ValueError) as exc:
        # shape mismatches and option validation
        print(f"polarflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
