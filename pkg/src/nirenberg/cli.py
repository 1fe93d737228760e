"""Command-line entry point.

Exit codes: 0 success, 2 validation failure (or a failed hypothesis without
--force), 3 indeterminate verdict, 4 I/O or schema error.  Errors are written
to stderr as a JSON object.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .conditions import INDETERMINATE, NO, check_all
from .constants import constants_table
from .degree import REQUIRED, compute_degree
from .errors import (CapExceeded, IndeterminateEigenvalue, IndeterminateHypothesis, NirenbergError,
                     SchemaError, UnsupportedDimension)
from .flow import (Thresholds, classify_terminal, integrate_flow, random_initial_config, sweep,
                   write_trace_csv)
from .infinity import catalog_critical_points_at_infinity
from .landscape import Landscape, validate

EXIT_OK, EXIT_INVALID, EXIT_INDETERMINATE, EXIT_IO = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, code, kind, message, **extra):
        super().__init__(message)
        self.code, self.kind, self.extra = code, kind, extra


# -- canonical JSON ----------------------------------------------------------------

def _canon(obj) -> str:
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ",".join(json.dumps(k) + ":" + _canon(v) for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_canon(v) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return json.dumps(str(x))
        return format(x, ".17g")
    return json.dumps(str(obj))


def canonical_json(obj) -> str:
    """Sorted keys, no whitespace, floats at 17 significant digits."""
    return _canon(obj)


def landscape_hash(landscape: Landscape) -> str:
    return hashlib.sha256(canonical_json(landscape.to_dict()).encode()).hexdigest()


@dataclass
class RunManifest:
    tool_version: str
    landscape_hash: str | None
    thresholds: dict
    seed: int | None
    timestamp: str


def _timestamp(arg: str | None) -> str:
    if arg:
        return arg
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    moment = (datetime.fromtimestamp(int(epoch), tz=timezone.utc) if epoch
              else datetime.now(timezone.utc))
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")


def _emit(obj) -> None:
    sys.stdout.write(canonical_json(obj) + "\n")


# -- shared steps ------------------------------------------------------------------

def _load(path) -> Landscape:
    try:
        return Landscape.load(path)
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot read {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_IO, "schema", f"{path} is not valid JSON: {exc}") from None
    except (SchemaError, UnsupportedDimension) as exc:
        raise CliError(EXIT_IO, "schema", str(exc)) from None


def _load_valid(path) -> Landscape:
    landscape = _load(path)
    report = validate(landscape)
    if not report.ok:
        messages = [v.message for v in report.violations]
        raise CliError(EXIT_INVALID, "validation", "; ".join(messages),
                       violations=report.as_dict()["violations"])
    return landscape


def _thresholds(path) -> Thresholds:
    if path is None:
        return Thresholds()
    try:
        with open(path, encoding="utf-8") as fh:
            return Thresholds.from_dict(json.load(fh))
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot read {path}: {exc.strerror or exc}") from None
    except (json.JSONDecodeError, ValueError, TypeError) as exc:
        raise CliError(EXIT_IO, "schema", f"bad thresholds file {path}: {exc}") from None


def _manifest(args, landscape=None) -> dict:
    return asdict(RunManifest(__version__, landscape_hash(landscape) if landscape else None,
                              _thresholds(args.thresholds).as_dict(), getattr(args, "seed", None),
                              _timestamp(args.timestamp)))


def _verdict_dict(verdicts) -> dict:
    return {name: v.as_dict() for name, v in verdicts.items()}


def _catalog(landscape):
    try:
        return [c.as_dict() for c in catalog_critical_points_at_infinity(landscape)], []
    except IndeterminateEigenvalue as exc:
        return [c.as_dict() for c in exc.decided], [list(a) for a in exc.undecided]


# -- subcommands -------------------------------------------------------------------

def cmd_validate(args) -> int:
    landscape = _load(args.landscape)
    report = validate(landscape)
    if args.emit:
        Path(args.emit).write_text(json.dumps(landscape.to_dict(), indent=2) + "\n", encoding="utf-8")
    out = report.as_dict()
    out["landscape_hash"] = landscape_hash(landscape)
    _emit(out)
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_constants(args) -> int:
    try:
        table = constants_table(args.n)
        for beta in args.beta or []:
            table.c_beta(beta)
    except (UnsupportedDimension, ValueError) as exc:
        raise CliError(EXIT_INVALID, "validation", str(exc)) from None
    _emit(table.as_dict())
    return EXIT_OK


def cmd_conditions(args) -> int:
    landscape = _load_valid(args.landscape)
    verdicts = check_all(landscape)
    _emit(_verdict_dict(verdicts))
    return EXIT_INDETERMINATE if any(v.holds == INDETERMINATE for v in verdicts.values()) else EXIT_OK


def cmd_infinity(args) -> int:
    landscape = _load_valid(args.landscape)
    decided, undecided = _catalog(landscape)
    if undecided:
        raise CliError(EXIT_INDETERMINATE, "indeterminate",
                       "some subsets have a least eigenvalue inside the zero band",
                       decided=decided, undecided=undecided)
    _emit(decided)
    return EXIT_OK


def cmd_degree(args) -> int:
    landscape = _load_valid(args.landscape)
    collection = args.collection.replace("-", "_")
    verdicts = check_all(landscape)
    failed = [name for name in REQUIRED[collection] if verdicts[name].holds == NO]
    if failed and not args.force:
        raise CliError(EXIT_INVALID, "hypothesis",
                       f"hypotheses {failed} fail; use --force to compute the formula anyway",
                       verdicts={k: v.holds for k, v in verdicts.items()})
    try:
        report = compute_degree(landscape, collection, verdicts)
    except IndeterminateHypothesis as exc:
        raise CliError(EXIT_INDETERMINATE, "indeterminate", str(exc)) from None
    out = report.as_dict()
    if failed:
        out["forced"] = failed
    _emit(out)
    indeterminate = report.d is None or any(v.holds == INDETERMINATE for v in verdicts.values())
    return EXIT_INDETERMINATE if indeterminate else EXIT_OK


def cmd_flow(args) -> int:
    landscape = _load_valid(args.landscape)
    th = _thresholds(args.thresholds)
    seed = 0 if args.seed is None else args.seed
    try:
        catalog = catalog_critical_points_at_infinity(landscape)
    except IndeterminateEigenvalue:
        catalog = None
    out = Path(args.out)
    try:
        if args.sweep:
            traces, outcomes = sweep(landscape, args.p, args.sweep, seed, args.lambda0, args.max_s, th)
            for k, tr in enumerate(traces):
                write_trace_csv(tr, out.with_name(f"{out.stem}_{k}{out.suffix}"))
            _emit({"landscape": str(args.landscape), "p": args.p, "outcomes": outcomes})
            return EXIT_OK
        cfg = random_initial_config(landscape, args.p, np.random.default_rng(seed), args.lambda0, th)
        tr = integrate_flow(cfg, landscape, {"max_s": args.max_s}, th)
        write_trace_csv(tr, out)
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot write trace: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise CliError(EXIT_INVALID, "validation", str(exc)) from None
    verdict = None
    if catalog is not None and tr.terminal != "MAX_STEPS":
        verdict = classify_terminal(tr, catalog)
    _emit({"terminal": tr.terminal, "members": list(tr.members or ()), "verdict": verdict,
           "s": tr.final.s, "steps": tr.steps, "out": str(out)})
    return EXIT_OK


def cmd_report(args) -> int:
    landscape = _load_valid(args.landscape)
    verdicts = check_all(landscape)
    catalog, undecided = _catalog(landscape)
    try:
        degree = compute_degree(landscape, "lambda_tilde", verdicts).as_dict()
    except IndeterminateHypothesis as exc:
        degree = {"error": str(exc)}
    out = {"manifest": _manifest(args, landscape),
           "validation": validate(landscape).as_dict(),
           "conditions": _verdict_dict(verdicts),
           "infinity": {"catalog": catalog, "undecided": undecided},
           "degree": degree}
    _emit(out)
    indeterminate = undecided or "error" in degree or degree.get("d") is None \
        or any(v.holds == INDETERMINATE for v in verdicts.values())
    return EXIT_INDETERMINATE if indeterminate else EXIT_OK


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--thresholds", help="JSON file overriding flow threshold defaults")
    common.add_argument("--timestamp", help="manifest timestamp (default SOURCE_DATE_EPOCH or now)")

    parser = argparse.ArgumentParser(prog="nirenberg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check a landscape file")
    p.add_argument("landscape")
    p.add_argument("--emit", help="write the normalized landscape JSON here")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("constants", parents=[common], help="print the constants table")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta", type=float, action="append", help="flatness order (repeatable)")
    p.set_defaults(func=cmd_constants)

    for name, func, text in [("conditions", cmd_conditions, "hypothesis verdicts"),
                             ("infinity", cmd_infinity, "critical points at infinity"),
                             ("report", cmd_report, "full JSON report with manifest")]:
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("landscape")
        p.set_defaults(func=func)

    p = sub.add_parser("degree", parents=[common], help="degree counting formula")
    p.add_argument("landscape")
    p.add_argument("--collection", choices=["lambda", "lambda-tilde"], default="lambda-tilde")
    p.add_argument("--force", action="store_true", help="compute even if a hypothesis fails")
    p.set_defaults(func=cmd_degree)

    p = sub.add_parser("flow", parents=[common], help="integrate the pseudogradient flow")
    p.add_argument("landscape")
    p.add_argument("--p", type=int, required=True, help="number of bubbles")
    p.add_argument("--seed", type=int)
    p.add_argument("--lambda0", type=float)
    p.add_argument("--max-s", type=float, default=60.0)
    p.add_argument("--sweep", type=int, help="run this many seeded trajectories")
    p.add_argument("--out", required=True, help="trace CSV (sweeps append _<k> to the stem)")
    p.set_defaults(func=cmd_flow)
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        err = {"error": exc.kind, "message": str(exc), **exc.extra}
        sys.stderr.write(canonical_json(err) + "\n")
        return exc.code
    except CapExceeded as exc:
        sys.stderr.write(canonical_json({"error": "cap", "message": str(exc)}) + "\n")
        return EXIT_INDETERMINATE
    except NirenbergError as exc:
        sys.stderr.write(canonical_json({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())
