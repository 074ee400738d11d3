import json
import socketserver
import sys
import textwrap
import threading

import pytest

from bssopt import GridCell, InputError, ProblemInstance, ViolationKind, check_constraints
from bssopt.agents import (
    ExecutionError,
    ExternalProposer,
    ModelSpec,
    ProposerError,
    ProposerTimeout,
    ProtocolError,
    ScriptedProposer,
    SolverPlan,
    Tester,
    execute_plan,
    min_coverage,
    parse_response,
    run_claba,
    run_laba,
    success_rate,
    summarize_problem,
)
from bssopt.agents.harness import AgentRunResult
from bssopt.agents.scripted import (
    DEFAULT_KB,
    budget_doubling_proposer,
    fixed_plan_proposer,
    greedy_proposer,
    rag_gated_proposer,
    scripted,
)
from bssopt.fixtures import single_cluster, standard_region
from bssopt.rag import Retriever, build_store, parse_kb
from bssopt.solvers import SolverConfig, solve

GREEDY_PLAN = {"algorithm": "greedy", "config": {}, "candidate_filter": "weak"}
EMPTY_PLAN = {"algorithm": "greedy", "config": {}, "candidate_filter": []}


@pytest.fixture(scope="module")
def region():
    return standard_region()


def split_92_8():
    """Two weak cells far apart: greedy stops after the 92-unit cell."""
    return ProblemInstance(60, 10, [GridCell(2, 5, 92.0, True), GridCell(57, 5, 8.0, True)])


# --- summary -----------------------------------------------------------------

def test_summary_counts(region):
    s = summarize_problem(region)
    assert s.weak_cells == int(region.weak.sum())
    assert s.existing_stations == len(region.existing_stations)
    assert s.total_weak_traffic == region.total_weak_traffic()


def test_summary_empty_and_arithmetic():
    s = summarize_problem(ProblemInstance(5, 5))
    assert (s.weak_cells, s.existing_stations, s.total_weak_traffic) == (0, 0, 0)
    inst = ProblemInstance(5, 5, [GridCell(0, 0, 3, True), GridCell(1, 0, 7, True)])
    assert summarize_problem(inst).total_weak_traffic == 10


def test_success_rate():
    def runs(k, n):
        return [AgentRunResult("laba", i < k, 1, None, None) for i in range(n)]

    assert success_rate(runs(20, 25)) == 0.8
    assert success_rate(runs(0, 25)) == 0.0
    assert success_rate(runs(25, 25)) == 1.0
    with pytest.raises(InputError):
        success_rate([])


# --- protocol ----------------------------------------------------------------

def test_parse_response_variants():
    assert parse_response({"model": {}}, "model") == ModelSpec()
    plan = parse_response({"plan": GREEDY_PLAN, "extra": 1}, "plan")
    assert plan == SolverPlan("greedy", {}, "weak")
    with pytest.raises(ProtocolError):
        parse_response({"plan": GREEDY_PLAN}, "model")
    with pytest.raises(ProtocolError):
        parse_response([1], "plan")
    with pytest.raises(ProtocolError):
        parse_response({"plan": {"config": {}}}, "plan")
    with pytest.raises(ProposerError):
        parse_response({"error": "busy"}, "plan")
    with pytest.raises(ProtocolError):
        parse_response({"model": {"constraints": ["C9"]}}, "model")


def test_execute_plan_errors(region):
    with pytest.raises(ExecutionError):
        execute_plan(region, SolverPlan("tabu"))
    with pytest.raises(ExecutionError):
        execute_plan(region, SolverPlan("sa", {"max_evaluations": -3}))
    with pytest.raises(ExecutionError):
        execute_plan(region, SolverPlan("greedy", {}, "nearby"))


def test_execute_plan_model_theta_override():
    inst = split_92_8()
    plain = execute_plan(inst, SolverPlan("greedy"))
    strict = execute_plan(inst, SolverPlan("greedy"), ModelSpec(theta_cp=1.0))
    assert plain.report.coverage_ratio == 0.92
    assert strict.report.coverage_ratio == 1.0


def test_tester_with_predicate():
    inst = split_92_8()
    dep = solve(inst, SolverConfig("greedy")).deployment
    report, fb = Tester()(inst, dep, 1)
    assert report.feasible and fb is None
    report, fb = Tester([min_coverage(0.95)])(inst, dep, 1)
    assert fb is not None and fb.has(ViolationKind.COVERAGE_SHORTFALL)


# --- LaBa --------------------------------------------------------------------

def test_laba_greedy_first_iteration(region):
    res = run_laba(region, greedy_proposer())
    assert res.success and res.iterations_used == 1
    assert res.report == check_constraints(region, res.deployment)


def test_laba_infeasible_runs_to_cap(region):
    res = run_laba(region, fixed_plan_proposer(EMPTY_PLAN))
    assert not res.success and res.iterations_used == 10
    assert sum(e.phase == "test" for e in res.transcript) == 10


def test_laba_budget_doubling(region):
    # direct runs: 16 and 32 evaluations fall short, 64 suffice
    budgets = [16, 32, 64]
    ok = [solve(region, SolverConfig("sa", seed=0, max_evaluations=b)).report.feasible for b in budgets]
    assert ok == [False, False, True]
    prop = budget_doubling_proposer()
    res = run_laba(region, prop)
    assert res.success and res.iterations_used <= 4
    sent = [c["plan"]["config"]["max_evaluations"] for c in prop.calls if c["phase"] == "revise"]
    assert sent == [16, 32][:len(sent)]


def test_laba_transcript_records_every_exchange(region):
    prop = budget_doubling_proposer()
    res = run_laba(region, prop)
    exchanges = [e for e in res.transcript if e.request is not None]
    assert len(exchanges) == len(prop.calls)
    assert [e.request for e in exchanges] == prop.calls
    lines = res.transcript_lines()
    assert all(json.loads(l) for l in lines)


def test_laba_protocol_errors_consume_iterations(region):
    state = {"n": 0}

    def flaky_plan(request):
        state["n"] += 1
        if state["n"] <= 2:
            return {"nonsense": True}
        return {"plan": GREEDY_PLAN}

    prop = ScriptedProposer({"model": lambda r: {"model": {}}, "plan": flaky_plan, "revise": flaky_plan})
    res = run_laba(region, prop)
    assert res.success and res.iterations_used == 3
    errors = [e for e in res.transcript if e.error]
    assert len(errors) == 2
    revise = [c for c in prop.calls if c["phase"] == "revise"]
    assert "protocol error" in revise[0]["feedback"]["hint"]


def test_laba_proposer_exception_is_contained(region):
    def boom(request):
        raise RuntimeError("model crashed")

    res = run_laba(region, ScriptedProposer({"model": boom}), cap=3)
    assert not res.success and res.iterations_used == 3 and res.deployment is None


def test_laba_cap_validation(region):
    with pytest.raises(InputError):
        run_laba(region, greedy_proposer(), cap=0)


# --- CLaBa -------------------------------------------------------------------

def test_claba_single_agent1_exchange(region):
    a1, a2 = greedy_proposer(), greedy_proposer()
    res = run_claba(region, {"agent1": a1, "agent2": a2})
    assert res.success and res.iterations_used == 1
    assert sum(e.role == "agent1" for e in res.transcript) == 1
    assert [c["phase"] for c in a1.calls] == ["model"]
    assert [c["phase"] for c in a2.calls] == ["plan"]


def test_claba_execution_error_routed_to_agent2(region):
    def plan(request):
        return {"plan": {"algorithm": "quantum-annealing", "config": {}}}

    def revise(request):
        assert "execution error" in request["feedback"]["hint"]
        return {"plan": GREEDY_PLAN}

    a2 = ScriptedProposer({"plan": plan, "revise": revise})
    res = run_claba(region, {"agent1": greedy_proposer(), "agent2": a2})
    assert res.success and res.iterations_used == 1
    phases = [(e.role, e.phase, bool(e.error)) for e in res.transcript]
    assert ("agent3", "execute", True) in phases
    assert [c["phase"] for c in a2.calls] == ["plan", "revise"]


def test_claba_stricter_predicate_fails_at_cap():
    inst = split_92_8()
    # the plan family is the single greedy plan; its coverage is fixed
    assert solve(inst, SolverConfig("greedy")).report.coverage_ratio == 0.92
    res = run_claba(inst, {"agent1": greedy_proposer(), "agent2": greedy_proposer()},
                    predicates=[min_coverage(0.95)])
    assert not res.success and res.iterations_used == 10
    res = run_claba(inst, {"agent1": greedy_proposer(), "agent2": greedy_proposer()},
                    predicates=[min_coverage(0.9)])
    assert res.success


def test_claba_custom_roles(region):
    calls = []

    def agent3(instance, plan, model):
        calls.append(plan.algorithm)
        return execute_plan(instance, plan, model)

    res = run_claba(region, {"agent1": greedy_proposer(), "agent2": greedy_proposer(),
                             "agent3": agent3, "agent4": Tester()})
    assert res.success and calls == ["greedy"]


def test_claba_lying_tester_is_overruled(region):
    def lenient(instance, deployment, iteration):
        return check_constraints(instance, deployment), None

    res = run_claba(region, {"agent1": greedy_proposer(), "agent2": fixed_plan_proposer(EMPTY_PLAN),
                             "agent4": lenient}, cap=2)
    assert not res.success


def test_claba_agent1_failure():
    res = run_claba(single_cluster(), {"agent1": ScriptedProposer({}), "agent2": greedy_proposer()})
    assert not res.success and res.iterations_used == 1


def test_claba_missing_role(region):
    with pytest.raises(InputError):
        run_claba(region, {"agent1": greedy_proposer()})


# --- RAG gating ----------------------------------------------------------------

def test_rag_gated_needs_retrieval(region):
    retriever = Retriever(build_store(parse_kb(DEFAULT_KB)), k=3)
    assert run_laba(region, rag_gated_proposer(), retriever=retriever).success
    assert not run_laba(region, rag_gated_proposer(), cap=3).success
    roles = {"agent1": rag_gated_proposer(), "agent2": rag_gated_proposer()}
    assert run_claba(region, roles, retriever=retriever).success


def test_scripted_registry():
    assert isinstance(scripted("greedy"), ScriptedProposer)
    with pytest.raises(ValueError):
        scripted("oracle")


# --- external bindings ---------------------------------------------------------

ECHO = textwrap.dedent("""
    import json, sys
    for line in sys.stdin:
        req = json.loads(line)
        if req["phase"] == "model":
            out = {"model": {"objective_mode": "cost"}}
        else:
            out = {"plan": {"algorithm": "greedy", "config": {}, "candidate_filter": "weak"}}
        sys.stdout.write(json.dumps(out) + "\\n")
        sys.stdout.flush()
""")


def _script(tmp_path, name, body):
    p = tmp_path / name
    p.write_text(body)
    return [sys.executable, str(p)]


def test_external_subprocess_proposer(tmp_path, region):
    prop = ExternalProposer(_script(tmp_path, "echo.py", ECHO), timeout=20)
    try:
        res = run_laba(region, prop)
    finally:
        prop.close()
    assert res.success and res.iterations_used == 1


def test_external_timeout_and_garbage(tmp_path):
    slow = ExternalProposer(_script(tmp_path, "slow.py", "import time\ntime.sleep(30)\n"), timeout=0.3)
    with pytest.raises(ProposerTimeout):
        slow({"phase": "model"})
    slow.close()
    junk = ExternalProposer(_script(tmp_path, "junk.py", "import sys\nsys.stdin.readline()\nprint('hi')\n"),
                            timeout=10)
    with pytest.raises(ProtocolError):
        junk({"phase": "model"})
    junk.close()


def test_external_env_endpoint(monkeypatch):
    monkeypatch.delenv("BSSOPT_PROPOSER", raising=False)
    with pytest.raises(InputError):
        ExternalProposer()
    monkeypatch.setenv("BSSOPT_PROPOSER", "tcp://127.0.0.1:9")
    assert ExternalProposer().endpoint == "tcp://127.0.0.1:9"


def test_external_tcp_proposer(region):
    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            for line in self.rfile:
                req = json.loads(line)
                key = "model" if req["phase"] == "model" else "plan"
                body = {} if key == "model" else GREEDY_PLAN
                self.wfile.write((json.dumps({key: body}) + "\n").encode())

    server = socketserver.TCPServer(("127.0.0.1", 0), Handler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    try:
        prop = ExternalProposer(f"tcp://127.0.0.1:{server.server_address[1]}", timeout=10)
        res = run_claba(region, {"agent1": prop, "agent2": prop})
        prop.close()
    finally:
        server.shutdown()
        server.server_close()
    assert res.success
