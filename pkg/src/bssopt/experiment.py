"""The multi-region comparison protocol: sample regions, run every method on
each, tabulate coverage, cost, feasibility and solver time."""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .agents import run_claba, run_laba, scripted
from .dataio import sample_regions
from .model import InputError, ProblemInstance
from .rag import Retriever, build_store, format_kb, load_kb, parse_kb
from .solvers import SolverConfig, solve

REPORT_HEADER = ("region", "method", "coverage", "cost", "feasible", "wall_ms", "iterations")
SOLVER_METHODS = {
    "greedy": dict(algorithm="greedy"),
    "sa": dict(algorithm="sa"),
    "pso": dict(algorithm="pso"),
    "pso-coverage": dict(algorithm="pso", objective_mode="coverage"),
}
AGENT_METHODS = ("laba", "claba")
METHODS = tuple(SOLVER_METHODS) + AGENT_METHODS


@dataclass(frozen=True)
class ExperimentRow:
    region: int
    method: str
    coverage: float
    cost: float
    feasible: bool
    wall_ms: float
    iterations: int | None = None
    error: str | None = None


@dataclass(frozen=True)
class AggregateRow:
    method: str
    mean_coverage: float
    mean_cost: float
    success_rate: float
    mean_wall_ms: float
    mean_iterations: float | None


@dataclass
class ExperimentReport:
    rows: list[ExperimentRow]
    origins: list[tuple[int, int]] = field(default_factory=list)

    @property
    def methods(self) -> list[str]:
        return list(dict.fromkeys(r.method for r in self.rows))

    def aggregates(self) -> list[AggregateRow]:
        out = []
        for m in self.methods:
            rows = [r for r in self.rows if r.method == m]
            its = [r.iterations for r in rows if r.iterations is not None]
            out.append(AggregateRow(
                method=m,
                mean_coverage=float(np.mean([r.coverage for r in rows])),
                mean_cost=float(np.mean([r.cost for r in rows])),
                success_rate=sum(r.feasible for r in rows) / len(rows),
                mean_wall_ms=float(np.mean([r.wall_ms for r in rows])),
                mean_iterations=float(np.mean(its)) if its else None,
            ))
        return out

    def aggregate(self, method: str) -> AggregateRow:
        return next(a for a in self.aggregates() if a.method == method)

    def to_csv(self, include_wall: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        wall = (lambda v: f"{v:.3f}") if include_wall else (lambda v: "")
        for r in self.rows:
            w.writerow((r.region, r.method, repr(r.coverage), repr(r.cost), int(r.feasible),
                        wall(r.wall_ms), "" if r.iterations is None else r.iterations))
        for a in self.aggregates():
            w.writerow(("mean", a.method, repr(a.mean_coverage), repr(a.mean_cost),
                        repr(a.success_rate), wall(a.mean_wall_ms),
                        "" if a.mean_iterations is None else repr(a.mean_iterations)))
        return buf.getvalue()

    def table(self) -> str:
        lines = [f"{'method':<14}{'coverage':>10}{'cost':>10}{'success':>10}{'wall ms':>12}{'iters':>8}"]
        for a in self.aggregates():
            its = "-" if a.mean_iterations is None else f"{a.mean_iterations:.2f}"
            lines.append(f"{a.method:<14}{a.mean_coverage:>10.4f}{a.mean_cost:>10.2f}"
                         f"{a.success_rate:>10.2f}{a.mean_wall_ms:>12.1f}{its:>8}")
        return "\n".join(lines)


def region_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence([master, index]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class _AgentOptions:
    proposer: str = "budget-doubling"
    cap: int = 10
    kb_text: str | None = None
    topk: int = 3


def _run_one(args):
    index, region, method, max_evals, seed, agent = args
    start = time.perf_counter()
    try:
        if method in SOLVER_METHODS:
            config = SolverConfig(seed=seed, max_evaluations=max_evals, **SOLVER_METHODS[method])
            res = solve(region, config)
            return ExperimentRow(index, method, res.report.coverage_ratio, res.report.cost,
                                 res.report.feasible, res.wall_time * 1000.0)
        retriever = None
        if agent.kb_text is not None:
            retriever = Retriever(build_store(parse_kb(agent.kb_text)), agent.topk)
        kwargs = {"seed": seed} if agent.proposer == "budget-doubling" else {}
        if method == "laba":
            run = run_laba(region, scripted(agent.proposer, **kwargs), agent.cap, retriever=retriever)
        else:
            roles = {"agent1": scripted(agent.proposer, **kwargs),
                     "agent2": scripted(agent.proposer, **kwargs)}
            run = run_claba(region, roles, agent.cap, retriever=retriever)
        wall = (time.perf_counter() - start) * 1000.0
        rep = run.report
        return ExperimentRow(index, method, rep.coverage_ratio if rep else 0.0,
                             rep.cost if rep else 0.0, run.success, wall, run.iterations_used)
    except Exception as exc:  # recorded, not fatal
        return ExperimentRow(index, method, math.nan, math.nan, False,
                             (time.perf_counter() - start) * 1000.0, error=f"{type(exc).__name__}: {exc}")


def run_experiment(parent: ProblemInstance, methods=("greedy", "sa", "pso"), regions: int = 25,
                   size: int = 100, seed: int = 0, max_evaluations: int = 10000, jobs: int = 1,
                   agent_proposer: str = "budget-doubling", cap: int = 10, kb_path=None,
                   topk: int = 3) -> ExperimentReport:
    """Run each method on ``regions`` sampled ``size`` x ``size`` regions.

    Region origins come from ``seed``; each region gets its own derived
    solver seed, so results do not depend on ``jobs``. Rows are ordered by
    region, then by the order of ``methods``.
    """
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise InputError(f"unknown methods {unknown}; choose from {list(METHODS)}")
    sampled = sample_regions(parent, regions, size, size, seed)
    kb_text = None
    if kb_path is not None:
        kb_text = format_kb(load_kb(kb_path))
    agent = _AgentOptions(agent_proposer, cap, kb_text, topk)
    tasks = [(i, inst, m, max_evaluations, region_seed(seed, i), agent)
             for i, (_, inst) in enumerate(sampled) for m in methods]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_one, tasks))
    else:
        rows = [_run_one(t) for t in tasks]
    return ExperimentReport(rows, [spec.origin for spec, _ in sampled])


def read_report_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))
