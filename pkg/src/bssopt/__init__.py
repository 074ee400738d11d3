"""Base-station siting: grid model, coverage checks, solvers, agent loops and retrieval."""
from .coverage import (
    ConstraintViolation,
    EvaluationReport,
    ViolationKind,
    check_constraints,
    coverage_map,
    coverage_ratio,
    covered_weak_cells,
    is_covered,
    ratio_from_map,
    spacing_violations,
)
from .model import (
    ALL_CELLS,
    WEAK_CELLS_ONLY,
    CandidateFilter,
    Deployment,
    GridCell,
    InputError,
    PlacedStation,
    ProblemInstance,
    RadioParams,
    StationKind,
    candidate_sites,
    deployment_cost,
)

__version__ = "0.1.0"
