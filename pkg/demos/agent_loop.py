"""
Feedback loops with a scripted proposer
=======================================

The agent harness talks to a proposer (normally a language model) through
JSON requests. Here a deterministic rule table stands in for it: it starts
simulated annealing with a tiny evaluation budget and doubles the budget
whenever the feedback reports a coverage shortfall.
"""

import json

from bssopt.agents import budget_doubling_proposer, run_claba, run_laba
from bssopt.fixtures import standard_region

region = standard_region()

# %%
# Single agent: model once, plan, then revise until the checks pass.

res = run_laba(region, budget_doubling_proposer(), cap=10)
print("LaBa success:", res.success, "after", res.iterations_used, "iterations")
for entry in res.transcript:
    if entry.phase == "test":
        print("  iteration", entry.iteration, "coverage", round(entry.report["coverage_ratio"], 4),
              "feasible", entry.report["feasible"])

# %%
# Four roles: agent1 models, agent2 plans and revises, agent3 executes and
# agent4 tests. Only agent1 and agent2 need a proposer.

roles = {"agent1": budget_doubling_proposer(), "agent2": budget_doubling_proposer()}
res = run_claba(region, roles)
print("CLaBa success:", res.success, "after", res.iterations_used, "iterations")

# The transcript is plain JSON lines.
print(json.loads(res.transcript_lines()[0])["phase"])
