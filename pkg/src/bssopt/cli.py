"""Command-line entry point.

Exit status: 0 success/feasible, 1 ran but infeasible/failed, 2 usage or input error.
An instance directory holds ``cells.csv``, ``stations.csv`` and ``config.json``.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .agents import (
    ENDPOINT_ENV,
    ExternalProposer,
    min_coverage,
    run_claba,
    run_laba,
    scripted,
)
from .agents.scripted import SCRIPTED
from .coverage import check_constraints
from .dataio import (
    GeneratorConfig,
    config_from_dict,
    generate_instance,
    load_config,
    load_deployment,
    read_instance_dir,
    save_deployment,
    write_instance_dir,
)
from .experiment import METHODS, run_experiment
from .model import InputError
from .rag import Retriever, VectorStore, build_store, load_kb
from .render import render
from .solvers import SolverConfig, SolverConfigError, solve

OK, INFEASIBLE, USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


def _print_report(report, out=None):
    out = out or sys.stdout
    print(f"coverage_ratio {report.coverage_ratio:.6f}", file=out)
    print(f"covered_traffic {report.covered_traffic:.6f} of {report.total_weak_traffic:.6f}", file=out)
    print(f"cost {report.cost:g}", file=out)
    print(f"feasible {'yes' if report.feasible else 'no'}", file=out)
    for v in report.violations:
        print(f"violation {v.kind.value} measure={v.measure:.6f} {v.detail}", file=out)


# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    base = load_config(args.config).to_dict() if args.config else {}
    for key in ("width", "height", "seed", "hotspots"):
        if getattr(args, key) is not None:
            base[key] = getattr(args, key)
    if args.stations is not None:
        base["existing_stations"] = args.stations
    config = config_from_dict(base)
    instance = generate_instance(config)
    write_instance_dir(instance, args.out, config)
    print(f"wrote {args.out}: {instance.width}x{instance.height}, {len(instance.xs)} cells, "
          f"{int(instance.weak.sum())} weak, {len(instance.existing)} existing stations, "
          f"total weak traffic {instance.total_weak_traffic():.3f}")
    return OK


def cmd_solve(args) -> int:
    instance = read_instance_dir(args.instance)
    config = SolverConfig(algorithm=args.algo, seed=args.seed, max_evaluations=args.max_evals,
                          objective_mode=args.objective)
    result = solve(instance, config, args.candidates)
    if args.out:
        save_deployment(result.deployment, args.out)
    print(f"algorithm {args.algo} evaluations {result.evaluations_used} "
          f"stations {len(result.deployment)} wall_ms {result.wall_time * 1000:.1f}")
    _print_report(result.report)
    return OK if result.report.feasible else INFEASIBLE


def cmd_eval(args) -> int:
    instance = read_instance_dir(args.instance)
    report = check_constraints(instance, load_deployment(args.deployment))
    if args.json:
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    else:
        _print_report(report)
    return OK if report.feasible else INFEASIBLE


def cmd_render(args) -> int:
    instance = read_instance_dir(args.instance)
    deployment = load_deployment(args.deployment) if args.deployment else None
    render(instance, deployment, args.out, args.scale)
    print(f"wrote {args.out}")
    return OK


def cmd_experiment(args) -> int:
    if args.instance:
        parent = read_instance_dir(args.instance)
    else:
        config = load_config(args.gen_config) if args.gen_config else GeneratorConfig(
            width=2500, height=2500, hotspots=2500, existing_stations=1200, seed=2024)
        parent = generate_instance(config)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    report = run_experiment(parent, methods, args.regions, args.size, args.seed, args.max_evals,
                            args.jobs, args.proposer, args.cap, args.rag, args.topk)
    text = report.to_csv()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(report.table())
    failed = [r for r in report.rows if r.error]
    for r in failed:
        print(f"region {r.region} {r.method}: {r.error}", file=sys.stderr)
    return OK


def _proposer(args):
    if args.proposer == "external":
        return lambda: ExternalProposer(args.endpoint, args.timeout)
    return lambda: scripted(args.script)


def cmd_agent(args) -> int:
    instance = read_instance_dir(args.instance)
    retriever = None
    if args.rag:
        retriever = Retriever(build_store(load_kb(args.rag)), args.topk)
    predicates = [min_coverage(args.require_coverage)] if args.require_coverage else []
    make = _proposer(args)
    bindings = []
    try:
        if args.strategy == "laba":
            bindings = [make()]
            result = run_laba(instance, bindings[0], args.cap, retriever=retriever, predicates=predicates)
        else:
            bindings = [make(), make()]
            result = run_claba(instance, {"agent1": bindings[0], "agent2": bindings[1]}, args.cap,
                               retriever=retriever, predicates=predicates)
    finally:
        for b in bindings:
            b.close()
    if args.transcript:
        Path(args.transcript).write_text("".join(l + "\n" for l in result.transcript_lines()),
                                         encoding="utf-8")
    if args.out and result.deployment is not None:
        save_deployment(result.deployment, args.out)
    print(f"strategy {args.strategy} success {'yes' if result.success else 'no'} "
          f"iterations {result.iterations_used}")
    if result.report is not None:
        _print_report(result.report)
    return OK if result.success else INFEASIBLE


def cmd_rag_index(args) -> int:
    store = build_store(load_kb(args.kb))
    store.save(args.store)
    print(f"indexed {len(store)} documents into {args.store}")
    return OK


def cmd_rag_query(args) -> int:
    store = VectorStore.load(args.store)
    for hit in store.retrieve(args.query, args.k):
        print(f"{hit.score:.6f}\t{hit.document.id}\t{hit.document.text.splitlines()[0]}")
    return OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bssopt", description="Base-station siting toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a synthetic instance directory")
    g.add_argument("--out", required=True)
    g.add_argument("--config", help="JSON config (radio params and generator fields)")
    g.add_argument("--width", type=int)
    g.add_argument("--height", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--hotspots", type=int)
    g.add_argument("--stations", type=int, help="existing station count")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="run a solver on an instance directory")
    s.add_argument("--instance", required=True)
    s.add_argument("--algo", choices=("greedy", "sa", "pso"), default="greedy")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-evals", type=int, default=20000)
    s.add_argument("--objective", choices=("cost", "coverage"), default="cost")
    s.add_argument("--candidates", choices=("weak", "all"), default="weak")
    s.add_argument("--out", help="deployment CSV to write")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("eval", help="check a deployment against an instance")
    e.add_argument("--instance", required=True)
    e.add_argument("--deployment", required=True)
    e.add_argument("--json", action="store_true")
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("render", help="draw an instance and optional deployment (.ppm or .svg)")
    r.add_argument("--instance", required=True)
    r.add_argument("--deployment")
    r.add_argument("--out", required=True)
    r.add_argument("--scale", type=int, default=4)
    r.set_defaults(func=cmd_render)

    x = sub.add_parser("experiment", help="multi-region method comparison")
    x.add_argument("--instance", help="parent instance directory")
    x.add_argument("--gen-config", help="generate the parent instance from this config instead")
    x.add_argument("--methods", default="greedy,sa,pso", help=f"comma list from {','.join(METHODS)}")
    x.add_argument("--regions", type=int, default=25)
    x.add_argument("--size", type=int, default=100)
    x.add_argument("--seed", type=int, default=0)
    x.add_argument("--max-evals", type=int, default=10000)
    x.add_argument("--jobs", type=int, default=1)
    x.add_argument("--proposer", choices=sorted(SCRIPTED), default="budget-doubling",
                   help="scripted proposer for agent methods")
    x.add_argument("--cap", type=int, default=10)
    x.add_argument("--rag", help="knowledge-base file or directory for agent methods")
    x.add_argument("--topk", type=int, default=3)
    x.add_argument("--out", help="report CSV to write")
    x.set_defaults(func=cmd_experiment)

    a = sub.add_parser("agent", help="autonomous agent runs")
    asub = a.add_subparsers(dest="agent_command", required=True, parser_class=_Parser)
    ar = asub.add_parser("run")
    ar.add_argument("--instance", required=True)
    ar.add_argument("--strategy", choices=("laba", "claba"), default="laba")
    ar.add_argument("--proposer", choices=("scripted", "external"), default="scripted")
    ar.add_argument("--script", choices=sorted(SCRIPTED), default="greedy",
                    help="rule table for the scripted proposer")
    ar.add_argument("--endpoint", help=f"external proposer command or tcp://host:port "
                                       f"(default ${ENDPOINT_ENV})")
    ar.add_argument("--timeout", type=float, default=30.0)
    ar.add_argument("--cap", type=int, default=10)
    ar.add_argument("--rag", help="knowledge-base file or directory")
    ar.add_argument("--topk", type=int, default=3)
    ar.add_argument("--require-coverage", type=float, help="extra user test criterion")
    ar.add_argument("--transcript", help="write the transcript as JSON lines")
    ar.add_argument("--out", help="deployment CSV to write")
    ar.set_defaults(func=cmd_agent)

    q = sub.add_parser("rag", help="knowledge-base indexing and retrieval")
    qsub = q.add_subparsers(dest="rag_command", required=True, parser_class=_Parser)
    qi = qsub.add_parser("index")
    qi.add_argument("kb", help="knowledge-base file or directory")
    qi.add_argument("--store", required=True)
    qi.set_defaults(func=cmd_rag_index)
    qq = qsub.add_parser("query")
    qq.add_argument("query")
    qq.add_argument("--store", required=True)
    qq.add_argument("--k", type=int, default=3)
    qq.set_defaults(func=cmd_rag_query)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, SolverConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"bssopt: error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
