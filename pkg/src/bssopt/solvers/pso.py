from __future__ import annotations

import math
import time

import numpy as np
from scipy.special import expit

from ..coverage import check_constraints
from .config import Algorithm, ObjectiveMode, SolverConfig, SolverConfigError, SolveResult
from .space import EMPTY, SearchSpace


def solve_pso(instance, config: SolverConfig | None = None, candidate_filter=None) -> SolveResult:
    """Binary particle swarm over a macro bit and a micro bit per candidate site.

    Positions are decoded with macro taking precedence when both bits are
    set, then repaired for spacing by keeping stations in decreasing order of
    the weak traffic they cover; the repaired bits are written back into the
    particle. Each particle draws from its own seeded stream.
    """
    config = config or SolverConfig(algorithm=Algorithm.PSO)
    start = time.perf_counter()
    space = SearchSpace(instance, candidate_filter)
    if space.n == 0 and space.total > 0:
        raise SolverConfigError("no admissible candidate sites but weak traffic is present")

    if space.total == 0:
        deployment = space.deployment(np.full(space.n, EMPTY, dtype=np.int64))
        return SolveResult(deployment, check_constraints(instance, deployment), 0,
                           time.perf_counter() - start, trace=((0, 0.0),))

    p = config.pso
    n, dim = space.n, 2 * space.n
    streams = np.random.SeedSequence(config.seed).spawn(p.swarm_size)
    rngs = [np.random.default_rng(s) for s in streams]
    # keep-order for repair: heavier coverage first, then site index
    priority = np.lexsort((np.tile(np.arange(n), 2), -space.weight.ravel()))

    def fitness(bits):
        kinds = _decode(bits, n)
        kinds = _repair(space, kinds, priority)
        bits[:n] = kinds == 0
        bits[n:] = kinds == 1
        covered = np.zeros(space.n_weak, dtype=bool)
        for s in np.flatnonzero(kinds != EMPTY):
            covered[space.covered_cells(s, kinds[s])] = True
        traffic = math.fsum(space.wt[covered])
        cost = float(space.cost[kinds[kinds != EMPTY]].sum())
        if config.objective_mode is ObjectiveMode.COVERAGE_FIRST:
            return -traffic + config.coverage_epsilon * cost
        return space.energy(cost, traffic, config.penalty_weight)

    pos = np.vstack([rng.random(dim) < 0.5 for rng in rngs])
    vel = np.zeros((p.swarm_size, dim))
    fit = np.array([fitness(pos[i]) for i in range(p.swarm_size)])
    evals = p.swarm_size
    pbest, pbest_fit = pos.copy(), fit.copy()
    g = int(np.argmin(fit))
    gbest, gbest_fit = pos[g].copy(), float(fit[g])
    trace = [(evals, gbest_fit)]

    while evals + p.swarm_size <= config.max_evaluations:
        for i, rng in enumerate(rngs):
            x = pos[i].astype(float)
            r1, r2 = rng.random(dim), rng.random(dim)
            vel[i] = (p.inertia * vel[i]
                      + p.c1 * r1 * (pbest[i] - x)
                      + p.c2 * r2 * (gbest - x))
            np.clip(vel[i], -p.v_max, p.v_max, out=vel[i])
            pos[i] = rng.random(dim) < expit(vel[i])
            fit[i] = fitness(pos[i])
            if fit[i] < pbest_fit[i]:
                pbest_fit[i] = fit[i]
                pbest[i] = pos[i]
        evals += p.swarm_size
        g = int(np.argmin(pbest_fit))
        if pbest_fit[g] < gbest_fit:
            gbest_fit = float(pbest_fit[g])
            gbest = pbest[g].copy()
            trace.append((evals, gbest_fit))

    if trace[-1][0] != evals:
        trace.append((evals, gbest_fit))
    kinds = _decode(gbest, n)
    deployment = space.deployment(kinds)
    return SolveResult(
        deployment=deployment,
        report=check_constraints(instance, deployment),
        evaluations_used=evals,
        wall_time=time.perf_counter() - start,
        trace=tuple(trace),
    )


def _decode(bits, n) -> np.ndarray:
    kinds = np.full(n, EMPTY, dtype=np.int64)
    kinds[bits[n:].astype(bool)] = 1
    kinds[bits[:n].astype(bool)] = 0
    return kinds


def _repair(space: SearchSpace, kinds: np.ndarray, priority: np.ndarray) -> np.ndarray:
    """Drop stations that sit closer than D_min to a station covering more traffic."""
    n = space.n
    flat = np.where(kinds == 0, np.arange(n), np.where(kinds == 1, np.arange(n) + n, -1))
    chosen = np.zeros(2 * n, dtype=bool)
    chosen[flat[flat >= 0]] = True
    out = np.full(n, EMPTY, dtype=np.int64)
    blocked = np.zeros(n, dtype=bool)
    for f in priority[chosen[priority]]:
        s = f % n
        if blocked[s]:
            continue
        out[s] = f // n
        blocked[s] = True
        blocked[space.conflicts[s]] = True
    return out
