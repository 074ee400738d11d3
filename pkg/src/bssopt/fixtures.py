"""Small named instances shared by the tests and demos."""
from __future__ import annotations

from .dataio import GeneratorConfig, generate_instance
from .model import GridCell, ProblemInstance, RadioParams

STANDARD_REGION = GeneratorConfig(seed=7)
PAPER_SCALE = GeneratorConfig(width=2500, height=2500, hotspots=2500, existing_stations=1200, seed=2024)


def standard_region() -> ProblemInstance:
    """100x100 synthetic region: four hotspots, two existing stations."""
    return generate_instance(STANDARD_REGION)


def paper_scale() -> ProblemInstance:
    """2500x2500 synthetic city used for the 25-region protocol."""
    return generate_instance(PAPER_SCALE)


def _disk(cx, cy, r, peak):
    cells = []
    for y in range(cy - r, cy + r + 1):
        for x in range(cx - r, cx + r + 1):
            d2 = (x - cx) ** 2 + (y - cy) ** 2
            if d2 <= r * r:
                cells.append(GridCell(x, y, float(peak - d2 % 3), True))
    return cells


def single_cluster(params: RadioParams | None = None) -> ProblemInstance:
    """One compact weak cluster of radius 3 around (15, 15) on a 30x30 grid."""
    return ProblemInstance(30, 30, _disk(15, 15, 3, 5), [(2, 2)], params)


def two_clusters(params: RadioParams | None = None) -> ProblemInstance:
    """Two radius-2 weak clusters about 18 grids apart on a 20x20 grid."""
    return ProblemInstance(20, 20, _disk(3, 3, 2, 4) + _disk(16, 16, 2, 6), [], params)
