"""Autonomous feedback loops over a pluggable proposer backend."""
from .harness import (
    DEFAULT_CAP,
    DEFAULT_TASK,
    AgentRunResult,
    ExecutionError,
    ProblemSummary,
    Tester,
    TranscriptEntry,
    execute_plan,
    min_coverage,
    run_claba,
    run_laba,
    success_rate,
    summarize_problem,
)
from .protocol import (
    ENDPOINT_ENV,
    ExternalProposer,
    Feedback,
    ModelSpec,
    Proposer,
    ProposerError,
    ProposerTimeout,
    ProtocolError,
    ScriptedProposer,
    SolverPlan,
    make_request,
    parse_response,
)
from .scripted import (
    DEFAULT_KB,
    RAG_MARKER,
    budget_doubling_proposer,
    fixed_plan_proposer,
    greedy_proposer,
    rag_gated_proposer,
    scripted,
)
