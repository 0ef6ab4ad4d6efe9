"""Command-line front end.

Verbs: `monitor` (robustness of a trace against a formula), `design` (emit
uniform/random designs), `campaign` (one strategy run), `bench` (full
strategy comparison), `field` (export a fitted surrogate over a grid), and
`protocol-check` (validate an external black box). Exit codes: 0 success,
1 benchmark assertion failure / violated formula, 2 configuration error,
3 black-box or protocol error.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys

import numpy as np

from . import bench as bench_mod
from .acquisition import run_campaign
from .agm import agm_rob
from .blackbox import (
    BlackBoxError,
    BuiltinBlackBox,
    ExternalBlackBox,
    Scenario,
    scenario,
)
from .design import (
    DesignError,
    load_domain,
    random_design,
    uniform_design,
)
from .gp import Surrogate
from .stl import StlError, bool_sat, load_formula, read_trace

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2
EXIT_BLACKBOX = 3


def _make_blackbox(spec, timeout):
    if spec.startswith("builtin:"):
        return BuiltinBlackBox(spec.split(":", 1)[1])
    if spec.startswith("external:"):
        return ExternalBlackBox(shlex.split(spec.split(":", 1)[1]), timeout=timeout)
    raise DesignError(
        f"bad black-box spec {spec!r}; use builtin:<name> or external:<command>"
    )


def _load_scenario(args):
    """Scenario from --scenario, or assembled from --formula/--domain/--blackbox."""
    if getattr(args, "scenario", None):
        return scenario(args.scenario)
    if not (args.formula and args.domain and args.blackbox):
        raise DesignError(
            "need --scenario or all of --formula/--domain/--blackbox"
        )
    dom = load_domain(args.domain)
    formula = load_formula(args.formula)
    bb = _make_blackbox(args.blackbox, args.timeout)
    from .stl import pretty_print

    return Scenario("custom", pretty_print(formula), dom, bb)


def cmd_monitor(args):
    formula = load_formula(args.formula)
    trace = read_trace(args.trace)
    rob = agm_rob(formula, trace, args.time)
    sat = bool_sat(formula, trace, args.time)
    print(f"robustness: {rob!r}")
    print(f"verdict: {'satisfied' if sat else 'violated'}")
    return EXIT_OK if sat else EXIT_ASSERTION


def cmd_design(args):
    dom = load_domain(args.domain)
    if args.method == "glp":
        dm = uniform_design(dom, args.n)
    else:
        dm = random_design(dom, args.n, args.seed)
    out = sys.stdout if args.out == "-" else open(args.out, "w", encoding="utf-8")
    try:
        out.write(",".join(dom.names) + "\n")
        for row in dm.points:
            out.write(",".join(repr(float(v)) for v in row) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_campaign(args):
    sc = _load_scenario(args)
    record = run_campaign(
        sc.formula,
        sc.domain,
        sc.blackbox,
        budget=args.budget,
        n_init=args.n_init,
        pool_size=args.pool_size,
        seed=args.seed,
        strategy=args.strategy,
    )
    record.save(args.out)
    if args.csv:
        record.write_csv(args.csv)
    n_failed = sum(1 for h in record.history if h["y"] is None)
    print(f"campaign complete: {len(record.history)} evaluations "
          f"({n_failed} failed), record in {args.out}")
    return EXIT_OK


def _read_config_file(path):
    if path.endswith(".toml"):
        try:
            import tomllib as toml
        except ImportError:
            import tomli as toml
        with open(path, "rb") as fh:
            return toml.load(fh)
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def cmd_bench(args):
    doc = _read_config_file(args.config) if args.config else {}
    if args.scenario:
        doc["scenario"] = args.scenario
    if "scenario" not in doc:
        raise DesignError("bench needs a scenario (config file or --scenario)")
    # CLI flags override config-file fields
    for key, flag in [
        ("budgets", "budget"),
        ("seeds", "seeds"),
        ("random_reps", "random_reps"),
        ("pool_size", "pool_size"),
        ("n_init", "n_init"),
        ("test_points", "test_points"),
        ("master_seed", "seed"),
        ("strategies", "strategy"),
    ]:
        val = getattr(args, flag, None)
        if val is not None:
            doc[key] = val
    cfg = bench_mod.BenchmarkConfig(
        scenario=doc["scenario"],
        strategies=tuple(doc.get("strategies", ("mepe", "ud", "random"))),
        budgets=tuple(doc.get("budgets", (10, 20, 50, 100, 200))),
        n_init=doc.get("n_init", 50),
        pool_size=doc.get("pool_size", 4096),
        test_points=doc.get("test_points", 1000),
        random_reps=doc.get("random_reps", 30),
        seeds=doc.get("seeds", 10),
        master_seed=doc.get("master_seed", 0),
    )
    report = bench_mod.run_benchmark(cfg, progress=lambda s: print(f"[{s}] done"))
    path = bench_mod.write_report(report, args.out)
    print(f"report written to {path}")
    return EXIT_OK


def cmd_field(args):
    record_path = args.campaign
    from .acquisition import CampaignRecord

    record = CampaignRecord.load(record_path)
    surr = Surrogate.from_dict(record.final_surrogate)
    from .design import domain_from_dict

    dom = domain_from_dict(record.config["domain"])
    resolution = tuple(int(r) for r in args.resolution.split("x"))
    if len(resolution) == 1:
        resolution = resolution[0]
    bench_mod.export_field(surr, dom, resolution, args.out)
    print(f"field written to {args.out}")
    return EXIT_OK


def cmd_protocol_check(args):
    bb = ExternalBlackBox(shlex.split(args.cmd), timeout=args.timeout)
    try:
        dom = load_domain(args.domain) if args.domain else None
        if dom is not None:
            probe = dom.transform(np.full(dom.dim, 0.5))
        else:
            probe = np.array([float(v) for v in args.probe.split(",")])
        trace = bb.evaluate(probe)
        print(
            f"protocol ok: trace with {len(trace.channels)} channels, "
            f"T={trace.length}, dt={trace.dt}"
        )
        return EXIT_OK
    finally:
        bb.close()


def build_parser():
    p = argparse.ArgumentParser(
        prog="stlsurrogate",
        description="Budgeted robustness testing of black-box systems "
        "against STL specifications.",
    )
    sub = p.add_subparsers(dest="verb", required=True)

    m = sub.add_parser("monitor", help="robustness of a trace against a formula")
    m.add_argument("--formula", required=True, help="formula file")
    m.add_argument("--trace", required=True, help="trace file (CSV or JSONL)")
    m.add_argument("--time", type=int, default=0, help="evaluation step index")
    m.set_defaults(fn=cmd_monitor)

    d = sub.add_parser("design", help="emit a uniform or random design")
    d.add_argument("--domain", required=True, help="domain file (JSON/TOML)")
    d.add_argument("--n", type=int, required=True)
    d.add_argument("--method", choices=("glp", "random"), default="glp")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", default="-", help="output CSV ('-' for stdout)")
    d.set_defaults(fn=cmd_design)

    c = sub.add_parser("campaign", help="run one experiment-selection campaign")
    c.add_argument("--scenario", help="builtin scenario name")
    c.add_argument("--formula", help="formula file")
    c.add_argument("--domain", help="domain file")
    c.add_argument("--blackbox", help="builtin:<name> or external:<command>")
    c.add_argument("--budget", type=int, required=True)
    c.add_argument("--n-init", type=int, default=50, dest="n_init")
    c.add_argument("--pool-size", type=int, default=4096, dest="pool_size")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--strategy", choices=("mepe", "ud", "random"), default="mepe")
    c.add_argument("--timeout", type=float, default=30.0)
    c.add_argument("--out", required=True, help="campaign record JSON path")
    c.add_argument("--csv", help="optional per-iteration CSV path")
    c.set_defaults(fn=cmd_campaign)

    b = sub.add_parser("bench", help="full strategy comparison")
    b.add_argument("--config", help="JSON/TOML benchmark config")
    b.add_argument("--scenario", help="builtin scenario name")
    b.add_argument("--budget", type=int, nargs="+",
                   help="budget list override (default 10,20,...,200)")
    b.add_argument("--seeds", type=int)
    b.add_argument("--random-reps", type=int, dest="random_reps")
    b.add_argument("--pool-size", type=int, dest="pool_size")
    b.add_argument("--n-init", type=int, dest="n_init")
    b.add_argument("--test-points", type=int, dest="test_points")
    b.add_argument("--seed", type=int, help="master seed override")
    b.add_argument("--strategy", nargs="+", help="strategy list override")
    b.add_argument("--out", required=True, help="output directory")
    b.set_defaults(fn=cmd_bench)

    f = sub.add_parser("field", help="export a fitted field over a grid")
    f.add_argument("--campaign", required=True, help="campaign record JSON")
    f.add_argument("--resolution", default="50x50", help="e.g. 50x50")
    f.add_argument("--out", required=True, help="output CSV")
    f.set_defaults(fn=cmd_field)

    pc = sub.add_parser(
        "protocol-check", help="validate an external black-box process"
    )
    pc.add_argument("--cmd", required=True, help="child process command line")
    pc.add_argument("--timeout", type=float, default=30.0)
    pc.add_argument("--domain", help="domain file; probe at its center")
    pc.add_argument("--probe", default="0.5", help="comma-separated probe point")
    pc.set_defaults(fn=cmd_protocol_check)

    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except BlackBoxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BLACKBOX
    except (StlError, DesignError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
