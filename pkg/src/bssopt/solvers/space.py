"""Precomputed candidate geometry shared by the solvers.

Kind index 0 is macro, 1 is micro throughout.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from ..coverage import within
from ..model import (
    CandidateFilter,
    Deployment,
    PlacedStation,
    ProblemInstance,
    StationKind,
    candidate_sites,
)

KINDS = (StationKind.MACRO, StationKind.MICRO)
EMPTY = -1


class SearchSpace:
    """Candidate sites with their coverage sets and spacing conflicts.

    Sites closer than D_min to an existing station are dropped up front, so
    every deployment built from this space satisfies the existing-station
    spacing rule by construction.
    """

    def __init__(self, instance: ProblemInstance, candidate_filter=None, n_neighbors: int = 8):
        self.instance = instance
        params = instance.params
        sites = candidate_sites(instance, CandidateFilter.parse(candidate_filter))
        sites = list(dict.fromkeys(sites))
        pts = np.asarray(sites, dtype=np.int64).reshape(-1, 2)
        if len(pts) and len(instance.existing):
            tree = cKDTree(instance.existing)
            near = tree.query_ball_point(pts, params.D_min + 0.5)
            keep = np.ones(len(pts), dtype=bool)
            for i, js in enumerate(near):
                if js:
                    d2 = ((instance.existing[js] - pts[i]) ** 2).sum(axis=1).astype(float)
                    keep[i] = not np.any(np.sqrt(d2) < params.D_min)
            pts = pts[keep]
        self.sites = pts
        self.n = len(pts)
        self.order_key = pts[:, 1] * instance.width + pts[:, 0]

        wx, wy, wt = instance.weak_cells()
        self.wt = wt
        self.n_weak = len(wt)
        self.total = math.fsum(wt)
        self.theta = params.theta_cp
        self.cost = np.array([params.C_h, params.C_d])
        weak_pts = np.column_stack([wx, wy])
        weak_tree = cKDTree(weak_pts) if self.n_weak else None
        self.cover = [self._cover_matrix(weak_tree, weak_pts, params.radius(k)) for k in KINDS]
        self.weight = np.vstack([m @ wt if self.n_weak else np.zeros(self.n) for m in self.cover])
        self.conflicts = self._conflicts(params.D_min)
        self.neighbors = self._neighbors(n_neighbors)

    def _cover_matrix(self, weak_tree, weak_pts, radius) -> sparse.csr_matrix:
        if self.n == 0 or weak_tree is None:
            return sparse.csr_matrix((self.n, self.n_weak), dtype=bool)
        pairs = cKDTree(self.sites).sparse_distance_matrix(
            weak_tree, radius + 0.5, output_type="ndarray")
        i, j = pairs["i"].astype(np.int64), pairs["j"].astype(np.int64)
        d2 = ((self.sites[i] - weak_pts[j]) ** 2).sum(axis=1).astype(float)
        keep = within(d2, radius)
        m = sparse.csr_matrix(
            (np.ones(int(keep.sum()), dtype=bool), (i[keep], j[keep])),
            shape=(self.n, self.n_weak),
        )
        m.sort_indices()
        return m

    def _conflicts(self, d_min) -> list[np.ndarray]:
        if self.n < 2:
            return [np.zeros(0, dtype=np.int64) for _ in range(self.n)]
        pairs = cKDTree(self.sites).query_pairs(d_min + 0.5, output_type="ndarray")
        i, j = pairs[:, 0].astype(np.int64), pairs[:, 1].astype(np.int64)
        d2 = ((self.sites[i] - self.sites[j]) ** 2).sum(axis=1).astype(float)
        close = np.sqrt(d2) < d_min
        a = np.concatenate([i[close], j[close]])
        b = np.concatenate([j[close], i[close]])
        order = np.lexsort((b, a))
        a, b = a[order], b[order]
        bounds = np.searchsorted(a, np.arange(self.n + 1))
        return [b[bounds[k]:bounds[k + 1]] for k in range(self.n)]

    def _neighbors(self, k) -> list[np.ndarray]:
        if self.n < 2:
            return [np.zeros(0, dtype=np.int64) for _ in range(self.n)]
        k = min(k + 1, self.n)
        _, idx = cKDTree(self.sites).query(self.sites, k=k)
        idx = np.asarray(idx).reshape(self.n, -1)
        return [row[row != i] for i, row in enumerate(idx)]

    def covered_cells(self, site: int, kind: int) -> np.ndarray:
        m = self.cover[kind]
        return m.indices[m.indptr[site]:m.indptr[site + 1]]

    def ratio(self, covered_traffic: float) -> float:
        return 1.0 if self.total == 0 else covered_traffic / self.total

    def energy(self, cost: float, covered_traffic: float, penalty_weight: float,
               spacing_excess: float = 0.0) -> float:
        """Penalized objective: cost plus weighted coverage shortfall and spacing excess."""
        shortfall = max(0.0, self.theta - self.ratio(covered_traffic))
        return cost + penalty_weight * shortfall * self.total + penalty_weight * spacing_excess

    def deployment(self, kinds: np.ndarray) -> Deployment:
        """Stations for a per-site kind vector (EMPTY where nothing is built)."""
        placed = np.flatnonzero(kinds != EMPTY)
        return Deployment(tuple(
            PlacedStation(int(self.sites[i, 0]), int(self.sites[i, 1]), KINDS[int(kinds[i])])
            for i in placed
        ))
