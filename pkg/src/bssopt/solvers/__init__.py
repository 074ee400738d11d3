"""Deployment solvers: greedy coverage-per-cost, simulated annealing, binary PSO."""
from .anneal import solve_sa
from .config import (
    Algorithm,
    ObjectiveMode,
    PSOParams,
    SAParams,
    SolveResult,
    SolverConfig,
    SolverConfigError,
)
from .greedy import solve_greedy
from .pso import solve_pso
from .space import SearchSpace

_SOLVERS = {Algorithm.GREEDY: solve_greedy, Algorithm.SA: solve_sa, Algorithm.PSO: solve_pso}


def solve(instance, config: SolverConfig, candidate_filter=None) -> SolveResult:
    """Dispatch on ``config.algorithm``."""
    return _SOLVERS[config.algorithm](instance, config, candidate_filter)


__all__ = [
    "Algorithm",
    "ObjectiveMode",
    "PSOParams",
    "SAParams",
    "SearchSpace",
    "SolveResult",
    "SolverConfig",
    "SolverConfigError",
    "solve",
    "solve_greedy",
    "solve_pso",
    "solve_sa",
]
