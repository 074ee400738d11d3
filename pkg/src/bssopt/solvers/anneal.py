from __future__ import annotations

import math
import time

import numpy as np

from ..coverage import check_constraints
from .config import Algorithm, SolverConfig, SolveResult
from .space import EMPTY, SearchSpace

_ADD, _REMOVE, _MOVE, _TOGGLE = range(4)
_ADD_ATTEMPTS = 20


class _State:
    """Mutable annealing state with incremental coverage bookkeeping."""

    def __init__(self, space: SearchSpace):
        self.space = space
        self.kinds = np.full(space.n, EMPTY, dtype=np.int64)
        self.placed: list[int] = []
        self.slot: dict[int, int] = {}
        self.counts = np.zeros(space.n_weak, dtype=np.int64)
        self.conflict_count = np.zeros(space.n, dtype=np.int64)
        self.covered = 0.0
        self.cost = 0.0

    def add(self, site, kind):
        sp = self.space
        self.kinds[site] = kind
        self.slot[site] = len(self.placed)
        self.placed.append(site)
        self.conflict_count[sp.conflicts[site]] += 1
        cells = sp.covered_cells(site, kind)
        fresh = cells[self.counts[cells] == 0]
        self.covered += sp.wt[fresh].sum()
        self.counts[cells] += 1
        self.cost += sp.cost[kind]

    def remove(self, site):
        sp = self.space
        kind = int(self.kinds[site])
        self.kinds[site] = EMPTY
        pos = self.slot.pop(site)
        last = self.placed.pop()
        if last != site:
            self.placed[pos] = last
            self.slot[last] = pos
        self.conflict_count[sp.conflicts[site]] -= 1
        cells = sp.covered_cells(site, kind)
        self.counts[cells] -= 1
        lost = cells[self.counts[cells] == 0]
        self.covered -= sp.wt[lost].sum()
        self.cost -= sp.cost[kind]
        return kind

    def resync(self):
        self.covered = math.fsum(self.space.wt[self.counts > 0])


def solve_sa(instance, config: SolverConfig | None = None, candidate_filter=None) -> SolveResult:
    """Simulated annealing over station sets with geometric cooling.

    Moves add, remove, relocate (to one of the nearest candidate sites) or
    toggle the kind of a station. Proposals that would break the spacing rule
    are discarded, so every visited state satisfies it; each proposal, kept or
    not, consumes one evaluation. Returns the lowest-energy state seen.
    """
    config = config or SolverConfig(algorithm=Algorithm.SA)
    start = time.perf_counter()
    space = SearchSpace(instance, candidate_filter)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    lam = config.penalty_weight
    temp = config.sa.t0 if config.sa.t0 is not None else 10.0 * instance.params.C_h
    state = _State(space)

    energy = space.energy(state.cost, state.covered, lam)
    best_energy = energy
    best_kinds = state.kinds.copy()
    trace = [(0, best_energy)]
    evals = 0

    while evals < config.max_evaluations:
        evals += 1
        undo = _propose(state, rng)
        if undo is not None:
            new_energy = space.energy(state.cost, state.covered, lam)
            delta = new_energy - energy
            if delta <= 0 or rng.random() < math.exp(-delta / temp):
                energy = new_energy
                if energy < best_energy:
                    best_energy = energy
                    best_kinds = state.kinds.copy()
                    trace.append((evals, best_energy))
            else:
                undo()
        if evals % config.sa.moves_per_temp == 0:
            temp *= config.sa.alpha
            state.resync()
            energy = space.energy(state.cost, state.covered, lam)

    if trace[-1][0] != evals:
        trace.append((evals, best_energy))
    deployment = space.deployment(best_kinds)
    return SolveResult(
        deployment=deployment,
        report=check_constraints(instance, deployment),
        evaluations_used=evals,
        wall_time=time.perf_counter() - start,
        trace=tuple(trace),
    )


def _propose(state: _State, rng):
    """Apply one random move in place; return a callable undoing it, or None."""
    sp = state.space
    if sp.n == 0:
        return None
    move = _ADD if not state.placed else int(rng.integers(4))

    if move == _ADD:
        for _ in range(_ADD_ATTEMPTS):
            site = int(rng.integers(sp.n))
            if state.kinds[site] == EMPTY and state.conflict_count[site] == 0:
                state.add(site, int(rng.integers(2)))
                return lambda: state.remove(site)
        return None

    site = state.placed[int(rng.integers(len(state.placed)))]

    if move == _REMOVE:
        kind = state.remove(site)
        return lambda: state.add(site, kind)

    if move == _TOGGLE:
        kind = state.remove(site)
        state.add(site, 1 - kind)

        def undo_toggle():
            state.remove(site)
            state.add(site, kind)
        return undo_toggle

    nbrs = sp.neighbors[site]
    if not nbrs.size:
        return None
    target = int(nbrs[int(rng.integers(nbrs.size))])
    if state.kinds[target] != EMPTY:
        return None
    kind = state.remove(site)
    if state.conflict_count[target] != 0:
        state.add(site, kind)
        return None
    state.add(target, kind)

    def undo_move():
        state.remove(target)
        state.add(site, kind)
    return undo_move
