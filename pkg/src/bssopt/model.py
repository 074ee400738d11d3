"""Grid model for base-station siting: cells, radio/cost parameters, stations."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class InputError(ValueError):
    """Invalid input to a model-level operation."""


@dataclass(frozen=True)
class RadioParams:
    """Coverage radii, setup costs, minimum spacing and coverage threshold.

    Distances are in grid units. Defaults are the macro/micro settings used
    throughout the experiments (radius 30/10, cost 10/1, spacing 10, 90%).
    """

    d_h: float = 30.0
    d_d: float = 10.0
    C_h: float = 10.0
    C_d: float = 1.0
    D_min: float = 10.0
    theta_cp: float = 0.9

    def __post_init__(self):
        for name in ("d_h", "d_d", "C_h", "C_d", "D_min"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InputError(f"{name} must be a positive finite number, got {value!r}")
        if not self.d_h > self.d_d:
            raise InputError("macro radius d_h must exceed micro radius d_d")
        if not self.C_h > self.C_d:
            raise InputError("macro cost C_h must exceed micro cost C_d")
        if not 0 < self.theta_cp <= 1:
            raise InputError(f"theta_cp must lie in (0, 1], got {self.theta_cp!r}")

    def radius(self, kind: "StationKind") -> float:
        return self.d_h if kind is StationKind.MACRO else self.d_d

    def cost(self, kind: "StationKind") -> float:
        return self.C_h if kind is StationKind.MACRO else self.C_d

    def replace(self, **changes) -> "RadioParams":
        values = {k: getattr(self, k) for k in PARAM_KEYS}
        values.update(changes)
        return RadioParams(**values)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in PARAM_KEYS}


PARAM_KEYS = ("d_h", "d_d", "C_h", "C_d", "D_min", "theta_cp")


class StationKind(enum.Enum):
    MACRO = "macro"
    MICRO = "micro"


@dataclass(frozen=True)
class GridCell:
    x: int
    y: int
    traffic: float = 0.0
    weak: bool = False


@dataclass(frozen=True)
class PlacedStation:
    x: int
    y: int
    kind: StationKind

    @property
    def xy(self) -> tuple[int, int]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Deployment:
    """A set of newly placed stations.

    Construction does not reject duplicate or out-of-bounds sites; those are
    reported as violations by :func:`bssopt.coverage.check_constraints`.
    """

    stations: tuple[PlacedStation, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "stations", tuple(self.stations))

    def __len__(self):
        return len(self.stations)

    def __iter__(self):
        return iter(self.stations)

    def count(self, kind: StationKind) -> int:
        return sum(1 for s in self.stations if s.kind is kind)

    def canonical(self) -> "Deployment":
        """Same stations in row-major order (y, then x)."""
        order = sorted(self.stations, key=lambda s: (s.y, s.x, s.kind.value))
        return Deployment(tuple(order))

    def with_station(self, station: PlacedStation) -> "Deployment":
        return Deployment(self.stations + (station,))


class ProblemInstance:
    """A rectangular grid with sparse traffic cells and existing stations.

    Cells are held in row-major order as parallel numpy arrays (``xs``,
    ``ys``, ``traffic``, ``weak``); coordinates missing from the cell list
    carry zero traffic and are not weak. Instances are immutable.
    """

    def __init__(
        self,
        width: int,
        height: int,
        cells: Iterable[GridCell] = (),
        existing_stations: Iterable[tuple[int, int]] = (),
        params: RadioParams | None = None,
    ):
        cells = list(cells)
        xs = np.fromiter((c.x for c in cells), dtype=np.int64, count=len(cells))
        ys = np.fromiter((c.y for c in cells), dtype=np.int64, count=len(cells))
        traffic = np.fromiter((c.traffic for c in cells), dtype=float, count=len(cells))
        weak = np.fromiter((bool(c.weak) for c in cells), dtype=bool, count=len(cells))
        self._init(width, height, xs, ys, traffic, weak, existing_stations, params)

    @classmethod
    def from_arrays(cls, width, height, xs, ys, traffic, weak, existing_stations=(), params=None):
        obj = cls.__new__(cls)
        obj._init(
            width,
            height,
            np.asarray(xs, dtype=np.int64),
            np.asarray(ys, dtype=np.int64),
            np.asarray(traffic, dtype=float),
            np.asarray(weak, dtype=bool),
            existing_stations,
            params,
        )
        return obj

    def _init(self, width, height, xs, ys, traffic, weak, existing, params):
        if int(width) != width or int(height) != height or width <= 0 or height <= 0:
            raise InputError(f"grid dimensions must be positive integers, got {width}x{height}")
        self.width = int(width)
        self.height = int(height)
        self.params = params if params is not None else RadioParams()
        if not (len(xs) == len(ys) == len(traffic) == len(weak)):
            raise InputError("cell arrays must have equal length")
        if len(xs):
            if xs.min() < 0 or ys.min() < 0 or xs.max() >= self.width or ys.max() >= self.height:
                raise InputError("cell coordinate outside the grid")
            if not np.all(np.isfinite(traffic)) or traffic.min() < 0:
                raise InputError("cell traffic must be finite and non-negative")
        keys = ys * self.width + xs
        order = np.argsort(keys, kind="stable")
        keys = keys[order]
        if len(keys) > 1 and np.any(keys[1:] == keys[:-1]):
            dup = int(keys[1:][keys[1:] == keys[:-1]][0])
            raise InputError(f"duplicate cell at ({dup % self.width}, {dup // self.width})")
        self.xs = xs[order]
        self.ys = ys[order]
        self.traffic = traffic[order]
        self.weak = weak[order]
        ex = np.asarray([tuple(p) for p in existing], dtype=np.int64).reshape(-1, 2)
        if len(ex):
            if (ex[:, 0].min() < 0 or ex[:, 1].min() < 0
                    or ex[:, 0].max() >= self.width or ex[:, 1].max() >= self.height):
                raise InputError("existing station outside the grid")
        self.existing = ex
        for arr in (self.xs, self.ys, self.traffic, self.weak, self.existing):
            arr.setflags(write=False)

    @property
    def cells(self) -> tuple[GridCell, ...]:
        return tuple(
            GridCell(int(x), int(y), float(t), bool(w))
            for x, y, t, w in zip(self.xs, self.ys, self.traffic, self.weak)
        )

    @property
    def existing_stations(self) -> tuple[tuple[int, int], ...]:
        return tuple((int(x), int(y)) for x, y in self.existing)

    @property
    def weak_mask(self) -> np.ndarray:
        return self.weak

    def weak_cells(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Coordinates and traffic of weak cells, row-major."""
        m = self.weak
        return self.xs[m], self.ys[m], self.traffic[m]

    def total_weak_traffic(self) -> float:
        return math.fsum(self.traffic[self.weak])

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def with_params(self, params: RadioParams) -> "ProblemInstance":
        return ProblemInstance.from_arrays(
            self.width, self.height, self.xs, self.ys, self.traffic, self.weak,
            self.existing, params,
        )

    def __eq__(self, other):
        if not isinstance(other, ProblemInstance):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.params == other.params
            and np.array_equal(self.xs, other.xs)
            and np.array_equal(self.ys, other.ys)
            and np.array_equal(self.traffic, other.traffic)
            and np.array_equal(self.weak, other.weak)
            and self.existing_stations == other.existing_stations
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"ProblemInstance({self.width}x{self.height}, cells={len(self.xs)}, "
            f"weak={int(self.weak.sum())}, existing={len(self.existing)})"
        )


@dataclass(frozen=True)
class CandidateFilter:
    """Which grid coordinates may host a new station.

    ``kind`` is ``"weak"`` (weak cells only, the default), ``"all"`` or
    ``"explicit"``, the latter with ``sites`` listing the coordinates.
    """

    kind: str = "weak"
    sites: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        if self.kind not in ("weak", "all", "explicit"):
            raise InputError(f"unknown candidate filter {self.kind!r}")
        object.__setattr__(self, "sites", tuple((int(x), int(y)) for x, y in self.sites))

    @classmethod
    def explicit(cls, sites: Sequence[tuple[int, int]]) -> "CandidateFilter":
        return cls("explicit", tuple(sites))

    @classmethod
    def parse(cls, value) -> "CandidateFilter":
        """Accepts a filter, ``"weak"``/``"all"``, or a list of ``[x, y]`` pairs."""
        if isinstance(value, CandidateFilter):
            return value
        if value is None:
            return WEAK_CELLS_ONLY
        if isinstance(value, str):
            aliases = {"weak": "weak", "weakcellsonly": "weak", "all": "all", "allcells": "all"}
            key = value.replace("_", "").replace("-", "").lower()
            if key not in aliases:
                raise InputError(f"unknown candidate filter {value!r}")
            return cls(aliases[key])
        return cls.explicit([tuple(p) for p in value])

    def to_wire(self):
        return [list(p) for p in self.sites] if self.kind == "explicit" else self.kind


WEAK_CELLS_ONLY = CandidateFilter("weak")
ALL_CELLS = CandidateFilter("all")


def deployment_cost(deployment: Deployment, params: RadioParams) -> float:
    """Total setup cost: C_h per macro plus C_d per micro."""
    n_macro = deployment.count(StationKind.MACRO)
    n_micro = len(deployment) - n_macro
    return n_macro * params.C_h + n_micro * params.C_d


def candidate_sites(
    instance: ProblemInstance, filter: CandidateFilter = WEAK_CELLS_ONLY
) -> list[tuple[int, int]]:
    """Coordinates eligible for new stations, in row-major order.

    An explicit list is returned as given (order preserved) after a bounds
    check.
    """
    filter = CandidateFilter.parse(filter)
    if filter.kind == "weak":
        m = instance.weak
        return [(int(x), int(y)) for x, y in zip(instance.xs[m], instance.ys[m])]
    if filter.kind == "all":
        return [(x, y) for y in range(instance.height) for x in range(instance.width)]
    for x, y in filter.sites:
        if not instance.in_bounds(x, y):
            raise InputError(
                f"candidate site ({x}, {y}) outside {instance.width}x{instance.height} grid"
            )
    return list(filter.sites)
