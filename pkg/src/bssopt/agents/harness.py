"""Feedback loops driving a proposer toward a feasible deployment.

``run_laba`` uses one proposer for modelling and planning. ``run_claba``
splits the work: agent1 models once, agent2 plans and revises, agent3
executes plans, agent4 tests results. Plans are always executed by the
built-in solvers and results are always re-checked here; a proposer's own
claims are never trusted.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from ..coverage import ConstraintViolation, EvaluationReport, ViolationKind, check_constraints
from ..model import (
    CandidateFilter,
    Deployment,
    InputError,
    ProblemInstance,
    candidate_sites,
)
from ..solvers import SolveResult, SolverConfig, solve
from .protocol import (
    Feedback,
    ModelSpec,
    Proposer,
    ProposerError,
    SolverPlan,
    make_request,
    parse_response,
)

DEFAULT_CAP = 10
DEFAULT_TASK = (
    "Deploy new macro and micro base stations in weak coverage areas so that at least "
    "theta_cp of the weak-area traffic is covered, at minimum deployment cost, keeping "
    "every new station at least D_min from all other new and existing base stations."
)

# (instance, deployment, report) -> violation or None
Predicate = Callable[[ProblemInstance, Deployment, EvaluationReport], "ConstraintViolation | None"]


class ExecutionError(Exception):
    """A plan could not be run (unknown algorithm, bad config, solver refusal)."""


@dataclass(frozen=True)
class ProblemSummary:
    width: int
    height: int
    weak_cells: int
    total_weak_traffic: float
    existing_stations: int
    params: dict
    candidates: int
    task: str

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "weak_cells": self.weak_cells,
            "total_weak_traffic": self.total_weak_traffic,
            "existing_stations": self.existing_stations,
            "params": dict(self.params),
            "candidates": self.candidates,
            "task": self.task,
        }


def summarize_problem(instance: ProblemInstance, task: str = DEFAULT_TASK,
                      candidate_filter=None) -> ProblemSummary:
    return ProblemSummary(
        width=instance.width,
        height=instance.height,
        weak_cells=int(instance.weak.sum()),
        total_weak_traffic=instance.total_weak_traffic(),
        existing_stations=len(instance.existing),
        params=instance.params.to_dict(),
        candidates=len(candidate_sites(instance, CandidateFilter.parse(candidate_filter))),
        task=task,
    )


@dataclass(frozen=True)
class TranscriptEntry:
    iteration: int
    role: str
    phase: str
    request: dict | None = None
    response: dict | None = None
    error: str | None = None
    report: dict | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass
class AgentRunResult:
    strategy: str
    success: bool
    iterations_used: int
    deployment: Deployment | None
    report: EvaluationReport | None
    transcript: list[TranscriptEntry] = field(default_factory=list)

    def transcript_lines(self) -> list[str]:
        return [json.dumps(e.to_dict(), sort_keys=True) for e in self.transcript]


def success_rate(results: Iterable[AgentRunResult]) -> float:
    results = list(results)
    if not results:
        raise InputError("success_rate needs at least one run")
    return sum(1 for r in results if r.success) / len(results)


def min_coverage(theta: float) -> Predicate:
    """User test criterion: weak-area coverage must reach ``theta``."""

    def check(instance, deployment, report):
        if report.coverage_ratio < theta:
            return ConstraintViolation(
                ViolationKind.COVERAGE_SHORTFALL,
                f"user criterion: coverage {report.coverage_ratio:.4f} below {theta}",
                theta - report.coverage_ratio,
            )
        return None

    return check


def execute_plan(instance: ProblemInstance, plan: SolverPlan, model: ModelSpec | None = None) -> SolveResult:
    """Run a plan with the built-in solvers; the model may tighten the target."""
    try:
        config = SolverConfig.from_dict(plan.config, algorithm=plan.algorithm)
        cf = CandidateFilter.parse(plan.candidate_filter)
        target = instance
        if model is not None:
            if "objective_mode" not in plan.config:
                config = config.replace(objective_mode=model.objective_mode)
            theta = instance.params.theta_cp
            if "C1" not in model.constraints:
                theta = math.ulp(0.0)
            elif model.theta_cp is not None:
                theta = model.theta_cp
            if theta != instance.params.theta_cp:
                target = instance.with_params(instance.params.replace(theta_cp=theta))
        result = solve(target, config, cf)
    except (InputError, TypeError, ValueError) as exc:
        raise ExecutionError(str(exc)) from None
    return result


class Tester:
    """Agent4: constraint check on the real instance plus user predicates."""

    __test__ = False  # not a pytest class

    def __init__(self, predicates: Sequence[Predicate] = ()):
        self.predicates = tuple(predicates)

    def __call__(self, instance, deployment, iteration) -> tuple[EvaluationReport, Feedback | None]:
        report = check_constraints(instance, deployment)
        extra = tuple(v for v in (p(instance, deployment, report) for p in self.predicates) if v is not None)
        if report.feasible and not extra:
            return report, None
        return report, Feedback.from_report(report, iteration, extra)


class _Recorder:
    def __init__(self):
        self.entries: list[TranscriptEntry] = []

    def exchange(self, proposer, iteration, role, phase, request, expect):
        """One proposer round trip; returns the parsed artifact or raises ProposerError."""
        response = None
        try:
            response = proposer(request)
            artifact = parse_response(response, expect)
        except ProposerError as exc:
            self.entries.append(TranscriptEntry(iteration, role, phase, request,
                                                response if isinstance(response, dict) else None,
                                                error=str(exc)))
            raise
        except Exception as exc:  # a misbehaving binding counts as a failed exchange
            self.entries.append(TranscriptEntry(iteration, role, phase, request, None,
                                                error=f"{type(exc).__name__}: {exc}"))
            raise ProposerError(str(exc)) from exc
        self.entries.append(TranscriptEntry(iteration, role, phase, request, response))
        return artifact

    def note(self, iteration, role, phase, error=None, report=None):
        self.entries.append(TranscriptEntry(iteration, role, phase, error=error,
                                            report=report.to_dict() if report else None))


def _context(instance, retriever, task):
    summary = summarize_problem(instance, task).to_dict()
    retrieved = None
    if retriever is not None:
        prompt, hits = retriever(task)
        summary["task"] = prompt
        retrieved = [h.document.text for h in hits]
    return summary, retrieved


def run_laba(instance: ProblemInstance, proposer: Proposer | Callable[[dict], dict],
             cap: int = DEFAULT_CAP, *, retriever=None, predicates: Sequence[Predicate] = (),
             task: str = DEFAULT_TASK) -> AgentRunResult:
    """Single-agent loop: model, plan, execute, test, revise until feasible or ``cap``.

    Every iteration performs exactly one plan attempt. A failed exchange
    (error reply, malformed reply, timeout) or a plan that cannot be executed
    uses up the iteration and is fed back as the next revision's feedback.
    """
    if cap < 1:
        raise InputError("cap must be at least 1")
    rec = _Recorder()
    tester = Tester(predicates)
    summary, retrieved = _context(instance, retriever, task)
    model = plan = feedback = None
    deployment = report = None

    for it in range(1, cap + 1):
        try:
            if model is None:
                model = rec.exchange(proposer, it, "solo", "model",
                                     make_request("model", "solo", summary, retrieved=retrieved), "model")
            if feedback is None and plan is None:
                req = make_request("plan", "solo", summary, model=model, retrieved=retrieved)
                plan = rec.exchange(proposer, it, "solo", "plan", req, "plan")
            elif feedback is not None:
                req = make_request("revise", "solo", summary, model=model, feedback=feedback,
                                   plan=plan, retrieved=retrieved)
                plan = rec.exchange(proposer, it, "solo", "revise", req, "plan")
        except ProposerError as exc:
            feedback = Feedback.from_error(str(exc), it)
            continue
        try:
            result = execute_plan(instance, plan, model)
        except ExecutionError as exc:
            rec.note(it, "solo", "execute", error=str(exc))
            feedback = Feedback.from_error(str(exc), it, kind="execution")
            continue
        deployment = result.deployment
        report, feedback = tester(instance, deployment, it)
        rec.note(it, "solo", "test", report=report)
        if feedback is None:
            return AgentRunResult("laba", True, it, deployment, report, rec.entries)
    return AgentRunResult("laba", False, cap, deployment, report, rec.entries)


def run_claba(instance: ProblemInstance, proposers: Mapping[str, object], cap: int = DEFAULT_CAP,
              *, retriever=None, predicates: Sequence[Predicate] = (), task: str = DEFAULT_TASK,
              max_exec_retries: int | None = None) -> AgentRunResult:
    """Four-role loop.

    ``proposers`` maps ``agent1`` (modeller) and ``agent2`` (planner) to
    proposer bindings; ``agent3`` (executor, ``(instance, plan, model) ->
    SolveResult``) and ``agent4`` (tester, see :class:`Tester`) are optional
    and default to the built-in ones, with ``predicates`` handed to the
    default tester. Execution errors go straight back to agent2 without
    using up a test iteration, at most ``max_exec_retries`` times (default
    ``cap``) per iteration.
    """
    if cap < 1:
        raise InputError("cap must be at least 1")
    for role in ("agent1", "agent2"):
        if role not in proposers:
            raise InputError(f"missing binding for {role}")
    agent1, agent2 = proposers["agent1"], proposers["agent2"]
    agent3 = proposers.get("agent3") or execute_plan
    agent4 = proposers.get("agent4") or Tester(predicates)
    retries = cap if max_exec_retries is None else max_exec_retries
    rec = _Recorder()
    summary, retrieved = _context(instance, retriever, task)

    try:
        model = rec.exchange(agent1, 0, "agent1", "model",
                             make_request("model", "agent1", summary, retrieved=retrieved), "model")
    except ProposerError:
        return AgentRunResult("claba", False, 1, None, None, rec.entries)

    plan = feedback = None
    deployment = report = None
    for it in range(1, cap + 1):
        result = None
        for _ in range(retries + 1):
            phase = "plan" if feedback is None and plan is None else "revise"
            req = make_request(phase, "agent2", summary, model=model, feedback=feedback,
                               plan=plan, retrieved=retrieved)
            try:
                plan = rec.exchange(agent2, it, "agent2", phase, req, "plan")
            except ProposerError as exc:
                feedback = Feedback.from_error(str(exc), it)
                break
            try:
                result = agent3(instance, plan, model)
                rec.note(it, "agent3", "execute")
                break
            except ExecutionError as exc:
                rec.note(it, "agent3", "execute", error=str(exc))
                feedback = Feedback.from_error(str(exc), it, kind="execution")
        if result is None:
            continue
        deployment = result.deployment
        report, feedback = agent4(instance, deployment, it)
        rec.note(it, "agent4", "test", report=report)
        if feedback is None:
            verified = check_constraints(instance, deployment)
            if verified.feasible:
                return AgentRunResult("claba", True, it, deployment, verified, rec.entries)
            report, feedback = verified, Feedback.from_report(verified, it)
    return AgentRunResult("claba", False, cap, deployment, report, rec.entries)
