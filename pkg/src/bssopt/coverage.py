"""Coverage indicators, the traffic-coverage constraint and spacing checks.

Coverage uses a disk model: a point is served by a station when its
Euclidean distance (grid units) is at most the station's radius. Only newly
placed stations serve weak cells; existing stations take part in the spacing
check alone.
"""
from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .model import Deployment, PlacedStation, ProblemInstance, RadioParams, deployment_cost


class ViolationKind(enum.Enum):
    COVERAGE_SHORTFALL = "CoverageShortfall"
    NEW_NEW_DISTANCE = "NewNewDistance"
    NEW_EXISTING_DISTANCE = "NewExistingDistance"
    DUPLICATE_SITE = "DuplicateSite"
    OUT_OF_BOUNDS = "OutOfBounds"


@dataclass(frozen=True)
class ConstraintViolation:
    kind: ViolationKind
    detail: str
    measure: float
    subjects: tuple[tuple[int, int], ...] = ()

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "detail": self.detail,
            "measure": self.measure,
            "subjects": [list(s) for s in self.subjects],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConstraintViolation":
        return cls(
            ViolationKind(d["kind"]),
            str(d.get("detail", "")),
            float(d.get("measure", 0.0)),
            tuple(tuple(s) for s in d.get("subjects", ())),
        )


@dataclass(frozen=True)
class EvaluationReport:
    coverage_ratio: float
    covered_traffic: float
    total_weak_traffic: float
    cost: float
    violations: tuple[ConstraintViolation, ...] = field(default=())

    @property
    def feasible(self) -> bool:
        return not self.violations

    def by_kind(self, kind: ViolationKind) -> list[ConstraintViolation]:
        return [v for v in self.violations if v.kind is kind]

    def to_dict(self) -> dict:
        return {
            "coverage_ratio": self.coverage_ratio,
            "covered_traffic": self.covered_traffic,
            "total_weak_traffic": self.total_weak_traffic,
            "cost": self.cost,
            "feasible": self.feasible,
            "violations": [v.to_dict() for v in self.violations],
        }


def within(dist_sq, radius: float):
    """Inclusive distance test shared by every coverage and spacing check.

    Squared distances of integer points are exact in float64, and sqrt is
    correctly rounded, so scalar and vectorized callers agree bit-for-bit.
    """
    return np.sqrt(dist_sq) <= radius


def distance(a: tuple[int, int], b: tuple[int, int]) -> float:
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    return math.sqrt(dx * dx + dy * dy)


def is_covered(point: tuple[int, int], station: PlacedStation, params: RadioParams) -> bool:
    return bool(within(float((point[0] - station.x) ** 2 + (point[1] - station.y) ** 2),
                       params.radius(station.kind)))


def covered_weak_cells(instance: ProblemInstance, deployment: Deployment) -> np.ndarray:
    """Boolean vector over the instance's weak cells (row-major)."""
    wx, wy, _ = instance.weak_cells()
    covered = np.zeros(len(wx), dtype=bool)
    if not len(wx):
        return covered
    for st in deployment:
        r = instance.params.radius(st.kind)
        # bounding-box prefilter; the exact test runs on the survivors
        box = (np.abs(wx - st.x) <= r) & (np.abs(wy - st.y) <= r)
        idx = np.flatnonzero(box & ~covered)
        if idx.size:
            d2 = ((wx[idx] - st.x) ** 2 + (wy[idx] - st.y) ** 2).astype(float)
            covered[idx[within(d2, r)]] = True
    return covered


def coverage_map(instance: ProblemInstance, deployment: Deployment) -> np.ndarray:
    """``(height, width)`` grid, True where a weak cell is served by a new station."""
    grid = np.zeros((instance.height, instance.width), dtype=bool)
    wx, wy, _ = instance.weak_cells()
    covered = covered_weak_cells(instance, deployment)
    grid[wy[covered], wx[covered]] = True
    return grid


def _ratio(covered: float, total: float) -> float:
    # no weak traffic means nothing to remediate
    return 1.0 if total == 0 else covered / total


def coverage_ratio(instance: ProblemInstance, deployment: Deployment) -> float:
    _, _, wt = instance.weak_cells()
    covered = covered_weak_cells(instance, deployment)
    return _ratio(math.fsum(wt[covered]), math.fsum(wt))


def ratio_from_map(instance: ProblemInstance, cov_map: np.ndarray) -> float:
    """Coverage ratio recomputed from a :func:`coverage_map` grid."""
    wx, wy, wt = instance.weak_cells()
    return _ratio(math.fsum(wt[cov_map[wy, wx]]), math.fsum(wt))


def spacing_violations(instance: ProblemInstance, deployment: Deployment) -> list[ConstraintViolation]:
    d_min = instance.params.D_min
    out: list[ConstraintViolation] = []
    sites = [s.xy for s in deployment]
    for site, n in sorted(Counter(sites).items(), key=lambda kv: (kv[0][1], kv[0][0])):
        if n > 1:
            out.append(ConstraintViolation(
                ViolationKind.DUPLICATE_SITE,
                f"{n} stations share site {site}",
                float(n - 1),
                (site,),
            ))
    for st in deployment:
        if not instance.in_bounds(st.x, st.y):
            out.append(ConstraintViolation(
                ViolationKind.OUT_OF_BOUNDS,
                f"station {st.xy} outside {instance.width}x{instance.height} grid",
                1.0,
                (st.xy,),
            ))
    if len(sites) > 1:
        pts = np.asarray(sites, dtype=np.int64)
        d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2).astype(float)
        # strict "< D_min": exactly D_min apart is allowed; co-located pairs
        # are already reported as duplicates
        dist = np.sqrt(d2)
        close = (dist < d_min) & (d2 > 0)
        for i, j in zip(*np.nonzero(np.triu(close, k=1))):
            out.append(ConstraintViolation(
                ViolationKind.NEW_NEW_DISTANCE,
                f"new stations {sites[i]} and {sites[j]} are {dist[i, j]:.4f} apart (< {d_min})",
                float(d_min - dist[i, j]),
                (sites[i], sites[j]),
            ))
    if sites and len(instance.existing):
        pts = np.asarray(sites, dtype=np.int64)
        ex = instance.existing
        dist = np.sqrt(((pts[:, None, :] - ex[None, :, :]) ** 2).sum(axis=2).astype(float))
        for i, j in zip(*np.nonzero(dist < d_min)):
            e = (int(ex[j, 0]), int(ex[j, 1]))
            out.append(ConstraintViolation(
                ViolationKind.NEW_EXISTING_DISTANCE,
                f"new station {sites[i]} is {dist[i, j]:.4f} from existing station {e} (< {d_min})",
                float(d_min - dist[i, j]),
                (sites[i], e),
            ))
    return out


def check_constraints(instance: ProblemInstance, deployment: Deployment) -> EvaluationReport:
    """Evaluate a deployment against coverage, uniqueness, bounds and spacing."""
    _, _, wt = instance.weak_cells()
    covered = covered_weak_cells(instance, deployment)
    covered_traffic = math.fsum(wt[covered])
    total = math.fsum(wt)
    ratio = _ratio(covered_traffic, total)
    theta = instance.params.theta_cp
    violations = []
    if ratio < theta:
        violations.append(ConstraintViolation(
            ViolationKind.COVERAGE_SHORTFALL,
            f"weak-area traffic coverage {ratio:.4f} below threshold {theta}",
            theta - ratio,
        ))
    violations.extend(spacing_violations(instance, deployment))
    return EvaluationReport(
        coverage_ratio=ratio,
        covered_traffic=covered_traffic,
        total_weak_traffic=total,
        cost=deployment_cost(deployment, instance.params),
        violations=tuple(violations),
    )
