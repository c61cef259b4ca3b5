"""Command-line front end.

One subcommand per pipeline stage; machine-readable JSON on stdout (all
numbers as exact rational strings, byte-deterministic for a given input
file and flags), optional human-readable table with decimal
approximations on stderr.  Exit codes: 0 ok, 2 arbitrage detected,
3 validation failure, 1 internal error, 64 usage.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from conehedge._rat import approx_str, parse_rat, rat, rat_str
from conehedge.cones import normalized_section
from conehedge.market import (
    MarketValidationError,
    load_market,
    polar_classification,
)
from conehedge.pricing import (
    POS_INF,
    NEG_INF,
    SemiStaticSpec,
    dual_scps,
    duality_report,
    primal_superhedge,
    semistatic_price,
    value_str,
)
from conehedge.randomized import (
    build_enlarged_market,
    dp_value,
    equality_check,
    terminal_values,
)
from conehedge.recursion import (
    backward_dual_cones,
    interior_diagnostic,
    strict_arbitrage_search,
    tilde_decomposition_check,
)

log = logging.getLogger("conehedge")

VERBS = ("validate", "polar", "recursion", "arbitrage", "price", "duality",
         "randomize", "semistatic")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_ARBITRAGE = 2
EXIT_INVALID = 3
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser():
    parser = _Parser(prog="conehedge", add_help=True)
    sub = parser.add_subparsers(dest="verb", metavar="|".join(VERBS))
    for verb in VERBS:
        p = sub.add_parser(verb, add_help=True)
        p.add_argument("inputs", nargs="+", metavar="MARKET_FILE")
        p.add_argument("--pretty", action="store_true",
                       help="render a human-readable table on stderr")
        p.add_argument("--seed", type=int, default=None,
                       help="seed for the bundled random-instance generator "
                            "(used by the test batteries; ignored here)")
        if verb == "price":
            p.add_argument("--method", choices=("primal", "dual", "dp", "all"),
                           default="all")
            p.add_argument("--cones", choices=("K", "K-tilde"), default="K")
            p.add_argument("--epsilon", default="1/100",
                           help="shrink factor for the dp enlargement")
        if verb == "duality":
            p.add_argument("--epsilon-schedule", default=None,
                           help="comma-separated shrink factors; adds the "
                                "enlargement cross-check")
            p.add_argument("--options", default=None,
                           help="options file for semi-static duality")
        if verb == "randomize":
            p.add_argument("--epsilon-schedule", default="1/10,1/100,1/1000")
        if verb == "semistatic":
            p.add_argument("--options", required=True,
                           help="JSON file with option payoffs and quotes")
    return parser


def load_options(path, spec):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh, parse_float=lambda s: (_ for _ in ()).throw(
            MarketValidationError(f"decimal literal rejected: {s}", invariant="options")))
    opts = []
    for entry in doc["options"]:
        payoff = {leaf: [parse_rat(x) for x in v] for leaf, v in entry["payoff"].items()}
        for leaf in spec.tree.leaves():
            if leaf not in payoff:
                raise MarketValidationError(f"option payoff missing leaf {leaf}",
                                            invariant="options")
        opts.append((payoff, parse_rat(entry["bid"]), parse_rat(entry["ask"])))
    return SemiStaticSpec(opts)


def _witness_doc(witness):
    return {
        "time": witness.time,
        "transfers": {n: [rat_str(x) for x in k] for n, k in witness.transfers.items()},
        "positions": {n: [rat_str(x) for x in p] for n, p in witness.positions.items()},
        "nonzero_node": witness.nonzero_node,
    }


def _report_doc(report):
    doc = {}
    doc["na_status"] = report.na_status
    if report.witness is not None:
        doc["witness"] = _witness_doc(report.witness)
    for key in ("primal_value", "primal_value_reduced", "dual_value",
                "dual_value_unreduced", "gap"):
        v = getattr(report, key)
        if v is not None:
            doc[key] = value_str(v)
    if report.interior is not None:
        doc["interior"] = report.interior
    if report.checks:
        doc["checks"] = {k: v for k, v in sorted(report.checks.items())}
    certs = {}
    if report.strategy is not None:
        certs["strategy"] = report.strategy.to_doc()
    if report.price_system is not None:
        certs["price_system"] = report.price_system.to_doc()
    if certs:
        doc["certificates"] = certs
    if report.extras:
        doc["extras"] = {k: (value_str(v) if hasattr(v, "denominator") else v)
                         for k, v in sorted(report.extras.items())}
    return doc


def _run_validate(spec, args, timings):
    return EXIT_OK, {"status": "ok", "dimension": spec.dimension,
                     "horizon": spec.tree.horizon,
                     "nodes": len(spec.tree.nodes)}


def _run_polar(spec, args, timings):
    polar = polar_classification(spec.tree)
    return EXIT_OK, {
        "status": "ok",
        "non_polar": sorted(polar.non_polar_nodes),
        "polar": sorted(polar.polar_nodes),
    }


def _run_recursion(spec, args, timings):
    t0 = time.perf_counter()
    rec = backward_dual_cones(spec)
    timings["recursion"] = time.perf_counter() - t0
    cones = {}
    for nid, cone in rec.tilde_dual.items():
        cones[nid] = {
            "generators": [[rat_str(x) for x in g] for g in cone.generators],
        }
    return EXIT_OK, {
        "status": "ok",
        "reduced_duals": cones,
        "interior": interior_diagnostic(rec),
        "decomposition_check": tilde_decomposition_check(rec, spec),
    }


def _run_arbitrage(spec, args, timings):
    t0 = time.perf_counter()
    verdict, witness = strict_arbitrage_search(spec)
    timings["arbitrage"] = time.perf_counter() - t0
    if verdict:
        return EXIT_OK, {"status": "ok", "no_strict_arbitrage": True}
    return EXIT_ARBITRAGE, {
        "status": "arbitrage",
        "no_strict_arbitrage": False,
        "witness": _witness_doc(witness),
    }


def _run_price(spec, args, timings):
    doc = {"status": "ok", "cones": args.cones}
    rec = backward_dual_cones(spec) if args.cones == "K-tilde" else None
    if args.method in ("primal", "all"):
        t0 = time.perf_counter()
        value, strategy = primal_superhedge(spec, args.cones, rec)
        timings["primal"] = time.perf_counter() - t0
        doc["primal_value"] = value_str(value)
        if strategy is not None:
            doc.setdefault("certificates", {})["strategy"] = strategy.to_doc()
    if args.method in ("dual", "all"):
        t0 = time.perf_counter()
        value, system, status = dual_scps(spec, args.cones, rec)
        timings["dual"] = time.perf_counter() - t0
        if status == "infeasible":
            doc["status"] = "infeasible"
            doc["dual_value"] = None
        else:
            doc["dual_value"] = value_str(value)
            if system is not None:
                doc.setdefault("certificates", {})["price_system"] = system.to_doc()
    if args.method in ("dp", "all"):
        t0 = time.perf_counter()
        verdict, _ = strict_arbitrage_search(spec)
        if not verdict:
            return EXIT_ARBITRAGE, {"status": "arbitrage",
                                    "detail": "enlargement requires no strict arbitrage"}
        enlarged = build_enlarged_market(spec, epsilon=parse_rat(args.epsilon))
        doc["dp_value"] = value_str(dp_value(enlarged, terminal_values(enlarged)))
        doc["dp_epsilon"] = args.epsilon
        timings["dp"] = time.perf_counter() - t0
    return EXIT_OK, doc


def _run_duality(spec, args, timings):
    options = load_options(args.options, spec) if args.options else None
    t0 = time.perf_counter()
    report = duality_report(spec, options=options)
    timings["duality"] = time.perf_counter() - t0
    doc = {"status": "ok" if report.na_status == "pass" else "arbitrage"}
    doc.update(_report_doc(report))
    if report.na_status != "pass":
        return EXIT_ARBITRAGE, doc
    if args.epsilon_schedule:
        schedule = [parse_rat(tok) for tok in args.epsilon_schedule.split(",")]
        t0 = time.perf_counter()
        doc["randomized_check"] = equality_check(spec, schedule)
        timings["randomize"] = time.perf_counter() - t0
    return EXIT_OK, doc


def _run_randomize(spec, args, timings):
    verdict, witness = strict_arbitrage_search(spec)
    if not verdict:
        return EXIT_ARBITRAGE, {"status": "arbitrage",
                                "witness": _witness_doc(witness)}
    schedule = [parse_rat(tok) for tok in args.epsilon_schedule.split(",")]
    t0 = time.perf_counter()
    doc = equality_check(spec, schedule)
    timings["randomize"] = time.perf_counter() - t0
    doc = {"status": "ok", **doc}
    return EXIT_OK, doc


def _run_semistatic(spec, args, timings):
    options = load_options(args.options, spec)
    t0 = time.perf_counter()
    report = semistatic_price(spec, options)
    timings["semistatic"] = time.perf_counter() - t0
    doc = {"status": "ok" if report.na_status == "pass" else "arbitrage"}
    doc.update(_report_doc(report))
    if report.na_status != "pass":
        return EXIT_ARBITRAGE, doc
    return EXIT_OK, doc


_RUNNERS = {
    "validate": _run_validate,
    "polar": _run_polar,
    "recursion": _run_recursion,
    "arbitrage": _run_arbitrage,
    "price": _run_price,
    "duality": _run_duality,
    "randomize": _run_randomize,
    "semistatic": _run_semistatic,
}


def _pretty_lines(doc, prefix=""):
    lines = []
    for key, value in doc.items():
        if isinstance(value, dict):
            lines.append(f"{prefix}{key}:")
            lines.extend(_pretty_lines(value, prefix + "  "))
        elif isinstance(value, str) and _is_rational_string(value):
            approx = approx_str(parse_rat(value))
            lines.append(f"{prefix}{key:<24} {value:>16}   {approx} (approx)")
        else:
            lines.append(f"{prefix}{key:<24} {value}")
    return lines


def _is_rational_string(s):
    try:
        parse_rat(s)
        return True
    except Exception:
        return False


def run(argv):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if args.verb is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    level = os.environ.get("FRICTION_LOG", "error").upper()
    logging.basicConfig(stream=sys.stderr,
                        level=getattr(logging, level, logging.ERROR))

    reports = []
    worst = EXIT_OK
    for path in args.inputs:
        timings = {}
        started = time.perf_counter()
        try:
            spec = load_market(path)
            code, doc = _RUNNERS[args.verb](spec, args, timings)
        except MarketValidationError as exc:
            code = EXIT_INVALID
            doc = {"status": "error", "error": str(exc)}
            if exc.node is not None:
                doc["node"] = exc.node
            if exc.invariant is not None:
                doc["invariant"] = exc.invariant
        except Exception as exc:  # pragma: no cover - internal failure path
            log.exception("internal error on %s", path)
            code = EXIT_INTERNAL
            doc = {"status": "error", "error": f"internal: {exc}"}
        timings["total"] = time.perf_counter() - started
        report = {"verb": args.verb, "input": path}
        report.update(doc)
        reports.append(report)
        worst = max(worst, code)
        if args.pretty:
            print(f"== {path} ==", file=sys.stderr)
            for line in _pretty_lines(report):
                print(line, file=sys.stderr)
            for stage, seconds in timings.items():
                print(f"  [time] {stage:<20} {seconds:.3f}s", file=sys.stderr)

    payload = reports[0] if len(reports) == 1 else reports
    print(json.dumps(payload, indent=1))
    return worst


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
