"""Deterministic rule tables standing in for an LLM proposer."""
from __future__ import annotations

import copy

from .protocol import ScriptedProposer

RAG_MARKER = "algorithm=greedy"

DEFAULT_MODEL = {
    "objective_mode": "cost",
    "constraints": ["C1", "C2", "C3", "C4", "C5"],
    "theta_cp": None,
    "notes": "minimize setup cost subject to weak-area traffic coverage and spacing",
}


def _model_rule(model=None):
    model = copy.deepcopy(model or DEFAULT_MODEL)
    return lambda request: {"model": model}


def fixed_plan_proposer(plan: dict, model: dict | None = None) -> ScriptedProposer:
    """Always proposes ``plan``; revisions repeat it unchanged."""
    plan = copy.deepcopy(plan)
    return ScriptedProposer({
        "model": _model_rule(model),
        "plan": lambda request: {"plan": plan},
        "revise": lambda request: {"plan": plan},
    })


def greedy_proposer() -> ScriptedProposer:
    return fixed_plan_proposer({"algorithm": "greedy", "config": {}, "candidate_filter": "weak"})


def budget_doubling_proposer(initial_evaluations: int = 16, seed: int = 0,
                             algorithm: str = "sa") -> ScriptedProposer:
    """Starts with a small solver budget and doubles it whenever the feedback
    reports a coverage shortfall."""

    def plan(request):
        return {"plan": {"algorithm": algorithm, "candidate_filter": "weak",
                         "config": {"seed": seed, "max_evaluations": initial_evaluations}}}

    def revise(request):
        previous = request.get("plan") or plan(request)["plan"]
        new = copy.deepcopy(previous)
        kinds = {v["kind"] for v in request.get("feedback", {}).get("violations", [])}
        if "CoverageShortfall" in kinds:
            new["config"]["max_evaluations"] = 2 * int(previous["config"]["max_evaluations"])
        return {"plan": new}

    return ScriptedProposer({"model": _model_rule(), "plan": plan, "revise": revise})


def rag_gated_proposer(marker: str = RAG_MARKER) -> ScriptedProposer:
    """Emits a working greedy plan only when a retrieved document contains
    ``marker``. Without it the proposer has no idea where stations may go and
    proposes an empty candidate list, which cannot cover any weak traffic."""

    def choose(request):
        if any(marker in text for text in request.get("retrieved") or ()):
            return {"plan": {"algorithm": "greedy", "config": {}, "candidate_filter": "weak"}}
        return {"plan": {"algorithm": "greedy", "config": {}, "candidate_filter": []}}

    return ScriptedProposer({"model": _model_rule(), "plan": choose, "revise": choose})


SCRIPTED = {
    "greedy": greedy_proposer,
    "budget-doubling": budget_doubling_proposer,
    "rag-gated": rag_gated_proposer,
}


def scripted(name: str, **kwargs) -> ScriptedProposer:
    try:
        factory = SCRIPTED[name]
    except KeyError:
        raise ValueError(f"unknown scripted proposer {name!r}; choose from {sorted(SCRIPTED)}") from None
    return factory(**kwargs)


# Knowledge base whose first record unlocks the rag-gated proposer.
DEFAULT_KB = """\
#id bss-greedy-recipe tags:solver,recipe
To deploy base stations in weak coverage areas, rank every candidate site and
station type by newly covered weak-area traffic per unit setup cost and add the
best one while keeping the minimum distance to other stations; stop once the
traffic coverage threshold is met. Plan: algorithm=greedy candidate_filter=weak.
#id sa-cooling tags:solver
Simulated annealing accepts worse deployments with probability exp(-delta/T)
and cools the temperature geometrically; small budgets stop before coverage
targets are reached.
#id pso-binary tags:solver
Binary particle swarm optimization samples each bit with probability
sigmoid(velocity); it tends to over-provision stations and inflate cost.
#id interference-spacing tags:constraint
Keep every new station at least D_min from all existing and new stations to
limit interference.
#id macro-micro tags:parameters
Macro stations cover a radius of 30 grids at cost 10; micro stations cover 10
grids at cost 1.
"""
