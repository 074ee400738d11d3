from __future__ import annotations

import math
import time

import numpy as np

from ..coverage import check_constraints
from .config import SolverConfig, SolveResult
from .space import EMPTY, SearchSpace


def solve_greedy(instance, config: SolverConfig | None = None, candidate_filter=None) -> SolveResult:
    """Add the station with the best newly-covered-traffic per unit cost until
    the coverage threshold is met or nothing admissible adds coverage.

    A site is admissible while it is unused and at least D_min from every
    placed station. Ties go to the cheaper kind, then to row-major order.
    One selection round (a sweep over all admissible pairs) counts as one
    evaluation against ``config.max_evaluations``.
    """
    config = config or SolverConfig()
    start = time.perf_counter()
    space = SearchSpace(instance, candidate_filter)
    kinds = np.full(space.n, EMPTY, dtype=np.int64)
    blocked = np.zeros(space.n, dtype=bool)
    covered = np.zeros(space.n_weak, dtype=bool)
    covered_traffic = 0.0
    cost = 0.0
    evals = 0
    trace = [(0, space.energy(cost, covered_traffic, config.penalty_weight))]
    ratios = [space.ratio(covered_traffic)]

    while space.ratio(covered_traffic) < space.theta and evals < config.max_evaluations:
        evals += 1
        uncovered = np.where(covered, 0.0, space.wt)
        gains = np.vstack([m @ uncovered for m in space.cover]) if space.n_weak else np.zeros((2, space.n))
        score = gains / space.cost[:, None]
        ok = (gains > 0) & ~blocked[None, :]
        if not ok.any():
            break
        kind_idx, site_idx = np.nonzero(ok)
        cand_score = score[kind_idx, site_idx]
        # primary: score desc; then cost asc; then row-major site order
        pick = np.lexsort((space.order_key[site_idx], space.cost[kind_idx], -cand_score))[0]
        k, s = int(kind_idx[pick]), int(site_idx[pick])
        kinds[s] = k
        blocked[s] = True
        blocked[space.conflicts[s]] = True
        covered[space.covered_cells(s, k)] = True
        covered_traffic = math.fsum(space.wt[covered])
        cost += space.cost[k]
        trace.append((evals, space.energy(cost, covered_traffic, config.penalty_weight)))
        ratios.append(space.ratio(covered_traffic))

    deployment = space.deployment(kinds)
    report = check_constraints(instance, deployment)
    return SolveResult(
        deployment=deployment,
        report=report,
        evaluations_used=evals,
        wall_time=time.perf_counter() - start,
        trace=tuple(trace),
        coverage_trace=tuple(ratios),
    )
