"""Instance files, synthetic instance generation and region sampling.

File layout (all UTF-8):

* cells CSV, header ``x,y,traffic,weak``; one row per populated cell,
  row-major; traffic written with ``repr`` so floats round-trip exactly.
* stations CSV, header ``x,y``.
* config JSON: ``d_h, d_d, C_h, C_d, D_min, theta_cp`` plus generator fields
  (``width``, ``height``, ...). Unknown keys are rejected.
* deployment CSV, header ``x,y,kind`` with kind ``macro`` or ``micro``.
"""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .model import (
    PARAM_KEYS,
    Deployment,
    InputError,
    PlacedStation,
    ProblemInstance,
    RadioParams,
    StationKind,
)

CELLS_HEADER = ("x", "y", "traffic", "weak")
STATIONS_HEADER = ("x", "y")
DEPLOYMENT_HEADER = ("x", "y", "kind")


class InstanceFormatError(InputError):
    """A malformed or inconsistent instance file."""

    def __init__(self, path, line, reason, column=None):
        self.path = str(path)
        self.line = line
        self.column = column
        self.reason = reason
        where = f"{self.path}:{line}" + (f" column {column}" if column else "")
        super().__init__(f"{where}: {reason}")


class GenerationError(InputError):
    pass


# ---------------------------------------------------------------------------
# CSV


def _read_rows(path, header):
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InstanceFormatError(path, 0, f"cannot read file: {exc.strerror or exc}") from None
    if not rows or tuple(c.strip() for c in rows[0]) != header:
        raise InstanceFormatError(path, 1, f"expected header {','.join(header)}")
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(header):
            raise InstanceFormatError(path, lineno, f"expected {len(header)} fields, got {len(row)}")
        yield lineno, [c.strip() for c in row]


def _parse_int(path, lineno, col, text):
    try:
        return int(text)
    except ValueError:
        raise InstanceFormatError(path, lineno, f"not an integer: {text!r}", col) from None


def load_instance(cells_path, stations_path, params: RadioParams | None = None,
                  width: int | None = None, height: int | None = None) -> ProblemInstance:
    """Read an instance from its cells and stations files.

    ``width``/``height`` default to one past the largest coordinate seen.
    """
    xs, ys, traffic, weak = [], [], [], []
    seen: dict[tuple[int, int], int] = {}
    for lineno, (sx, sy, st, sw) in _read_rows(cells_path, CELLS_HEADER):
        x = _parse_int(cells_path, lineno, 1, sx)
        y = _parse_int(cells_path, lineno, 2, sy)
        try:
            t = float(st)
        except ValueError:
            raise InstanceFormatError(cells_path, lineno, f"not a number: {st!r}", 3) from None
        if not math.isfinite(t) or t < 0:
            raise InstanceFormatError(cells_path, lineno, f"traffic must be finite and >= 0, got {st}", 3)
        if sw not in ("0", "1"):
            raise InstanceFormatError(cells_path, lineno, f"weak flag must be 0 or 1, got {sw!r}", 4)
        if x < 0 or y < 0:
            raise InstanceFormatError(cells_path, lineno, f"negative coordinate ({x}, {y})")
        if (x, y) in seen:
            raise InstanceFormatError(
                cells_path, lineno, f"duplicate cell ({x}, {y}), first on line {seen[(x, y)]}")
        seen[(x, y)] = lineno
        xs.append(x)
        ys.append(y)
        traffic.append(t)
        weak.append(sw == "1")
    stations = []
    for lineno, (sx, sy) in _read_rows(stations_path, STATIONS_HEADER):
        x = _parse_int(stations_path, lineno, 1, sx)
        y = _parse_int(stations_path, lineno, 2, sy)
        if x < 0 or y < 0:
            raise InstanceFormatError(stations_path, lineno, f"negative coordinate ({x}, {y})")
        stations.append((x, y))

    max_x = max([x for x in xs] + [x for x, _ in stations], default=-1)
    max_y = max([y for y in ys] + [y for _, y in stations], default=-1)
    width = width if width is not None else max(max_x + 1, 1)
    height = height if height is not None else max(max_y + 1, 1)
    if max_x >= width or max_y >= height:
        raise InstanceFormatError(
            cells_path, 0, f"coordinates exceed the {width}x{height} grid (max x={max_x}, y={max_y})")
    return ProblemInstance.from_arrays(width, height, xs, ys, traffic, weak, stations, params)


def save_instance(instance: ProblemInstance, cells_path, stations_path) -> None:
    try:
        with open(cells_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CELLS_HEADER)
            for x, y, t, k in zip(instance.xs, instance.ys, instance.traffic, instance.weak):
                w.writerow((int(x), int(y), repr(float(t)), 1 if k else 0))
        with open(stations_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(STATIONS_HEADER)
            for x, y in instance.existing_stations:
                w.writerow((x, y))
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write instance file: {exc.strerror}", exc.filename) from None


def save_deployment(deployment: Deployment, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DEPLOYMENT_HEADER)
        for s in deployment.canonical():
            w.writerow((s.x, s.y, s.kind.value))


def load_deployment(path) -> Deployment:
    stations = []
    for lineno, (sx, sy, kind) in _read_rows(path, DEPLOYMENT_HEADER):
        try:
            k = StationKind(kind.lower())
        except ValueError:
            raise InstanceFormatError(path, lineno, f"kind must be macro or micro, got {kind!r}", 3) from None
        stations.append(PlacedStation(_parse_int(path, lineno, 1, sx), _parse_int(path, lineno, 2, sy), k))
    return Deployment(tuple(stations))


# ---------------------------------------------------------------------------
# generator


@dataclass(frozen=True)
class GeneratorConfig:
    """Synthetic instance recipe: radially decaying traffic hotspots plus
    existing stations placed by rejection sampling."""

    width: int = 100
    height: int = 100
    hotspots: int = 4
    peak_min: float = 1.0
    peak_max: float = 10.0
    radius_min: float = 6.0
    radius_max: float = 18.0
    existing_stations: int = 2
    seed: int = 0
    traffic_decimals: int = 3
    max_attempts: int = 10000
    params: RadioParams = field(default_factory=RadioParams)

    def __post_init__(self):
        for name in ("width", "height"):
            if not isinstance(getattr(self, name), int) or getattr(self, name) <= 0:
                raise InputError(f"{name} must be a positive integer")
        for name in ("hotspots", "existing_stations", "traffic_decimals", "max_attempts", "seed"):
            if not isinstance(getattr(self, name), int) or getattr(self, name) < 0:
                raise InputError(f"{name} must be a non-negative integer")
        if not 0 < self.peak_min <= self.peak_max:
            raise InputError("need 0 < peak_min <= peak_max")
        if not 0 < self.radius_min <= self.radius_max:
            raise InputError("need 0 < radius_min <= radius_max")

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "params"}
        d.update(self.params.to_dict())
        return d


_GENERATOR_KEYS = tuple(f.name for f in fields(GeneratorConfig) if f.name != "params")


def config_from_dict(d: dict) -> GeneratorConfig:
    """Parse a config document; unknown keys are an error."""
    unknown = set(d) - set(_GENERATOR_KEYS) - set(PARAM_KEYS)
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
    params = RadioParams(**{k: float(d[k]) for k in PARAM_KEYS if k in d})
    gen = {k: d[k] for k in _GENERATOR_KEYS if k in d}
    return GeneratorConfig(params=params, **gen)


def load_config(path) -> GeneratorConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(doc, dict):
        raise InputError(f"{path}: config must be a JSON object")
    return config_from_dict(doc)


def save_config(config: GeneratorConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def generate_instance(config: GeneratorConfig) -> ProblemInstance:
    """Build a synthetic instance.

    Each hotspot adds ``peak * (1 - d / radius)`` to cells within its radius.
    A cell is weak when it carries traffic and no existing station lies
    within the macro radius of it.
    """
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    p = config.params
    w, h = config.width, config.height
    grid = np.zeros((h, w))
    for _ in range(config.hotspots):
        cx, cy = rng.uniform(0, w), rng.uniform(0, h)
        peak = rng.uniform(config.peak_min, config.peak_max)
        radius = rng.uniform(config.radius_min, config.radius_max)
        x0, x1 = max(0, int(cx - radius)), min(w, int(cx + radius) + 2)
        y0, y1 = max(0, int(cy - radius)), min(h, int(cy + radius) + 2)
        yy, xx = np.mgrid[y0:y1, x0:x1]
        d = np.hypot(xx - cx, yy - cy)
        grid[y0:y1, x0:x1] += peak * np.clip(1.0 - d / radius, 0.0, None)
    grid = np.round(grid, config.traffic_decimals)

    stations = _place_stations(rng, config)
    ys, xs = np.nonzero(grid > 0)
    traffic = grid[ys, xs]
    weak = np.ones(len(xs), dtype=bool)
    if stations:
        from scipy.spatial import cKDTree

        dist, _ = cKDTree(np.asarray(stations)).query(np.column_stack([xs, ys]))
        weak = dist > p.d_h
    return ProblemInstance.from_arrays(w, h, xs, ys, traffic, weak, stations, p)


def _place_stations(rng, config: GeneratorConfig) -> list[tuple[int, int]]:
    d_min = config.params.D_min
    cell = max(d_min, 1.0)
    buckets: dict[tuple[int, int], list[tuple[int, int]]] = {}
    placed: list[tuple[int, int]] = []
    attempts = 0
    while len(placed) < config.existing_stations:
        if attempts >= config.max_attempts:
            raise GenerationError(
                f"placed only {len(placed)} of {config.existing_stations} existing stations "
                f"after {attempts} attempts at spacing {d_min}; request fewer stations")
        attempts += 1
        x, y = int(rng.integers(config.width)), int(rng.integers(config.height))
        bx, by = int(x // cell), int(y // cell)
        ok = True
        for nx in (bx - 1, bx, bx + 1):
            for ny in (by - 1, by, by + 1):
                for ox, oy in buckets.get((nx, ny), ()):
                    if math.sqrt((ox - x) ** 2 + (oy - y) ** 2) < d_min:
                        ok = False
        if ok:
            placed.append((x, y))
            buckets.setdefault((bx, by), []).append((x, y))
    return placed


# ---------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class RegionSpec:
    origin: tuple[int, int]
    width: int
    height: int

    @property
    def region_id(self) -> str:
        return f"{self.origin[0]}_{self.origin[1]}"


def extract_region(instance: ProblemInstance, region: RegionSpec) -> ProblemInstance:
    """Sub-instance with coordinates re-based to the region origin."""
    ox, oy = region.origin
    if ox < 0 or oy < 0 or ox + region.width > instance.width or oy + region.height > instance.height:
        raise InputError(f"region {region} does not fit inside {instance.width}x{instance.height}")
    m = ((instance.xs >= ox) & (instance.xs < ox + region.width)
         & (instance.ys >= oy) & (instance.ys < oy + region.height))
    ex = instance.existing
    em = ((ex[:, 0] >= ox) & (ex[:, 0] < ox + region.width)
          & (ex[:, 1] >= oy) & (ex[:, 1] < oy + region.height)) if len(ex) else np.zeros(0, bool)
    return ProblemInstance.from_arrays(
        region.width, region.height,
        instance.xs[m] - ox, instance.ys[m] - oy, instance.traffic[m], instance.weak[m],
        [(int(x) - ox, int(y) - oy) for x, y in ex[em]],
        instance.params,
    )


def sample_regions(instance: ProblemInstance, count: int, width: int, height: int,
                   seed: int = 0) -> list[tuple[RegionSpec, ProblemInstance]]:
    """``count`` distinct region origins drawn uniformly without replacement."""
    if count <= 0:
        raise InputError("count must be positive")
    if width <= 0 or height <= 0 or width > instance.width or height > instance.height:
        raise InputError(f"{width}x{height} region does not fit inside {instance.width}x{instance.height}")
    nx = instance.width - width + 1
    ny = instance.height - height + 1
    if count > nx * ny:
        raise InputError(f"requested {count} distinct regions but only {nx * ny} exist")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    flat = rng.choice(nx * ny, size=count, replace=False)
    out = []
    for f in flat:
        spec = RegionSpec((int(f % nx), int(f // nx)), width, height)
        out.append((spec, extract_region(instance, spec)))
    return out


# ---------------------------------------------------------------------------
# instance directories (cells.csv, stations.csv, config.json)


def instance_paths(directory) -> tuple[Path, Path, Path]:
    d = Path(directory)
    return d / "cells.csv", d / "stations.csv", d / "config.json"


def write_instance_dir(instance: ProblemInstance, directory, config: GeneratorConfig | None = None) -> None:
    os.makedirs(directory, exist_ok=True)
    cells, stations, cfg = instance_paths(directory)
    save_instance(instance, cells, stations)
    config = config or GeneratorConfig(width=instance.width, height=instance.height,
                                       hotspots=0, existing_stations=0, params=instance.params)
    save_config(config, cfg)


def read_instance_dir(directory) -> ProblemInstance:
    cells, stations, cfg = instance_paths(directory)
    config = load_config(cfg) if cfg.exists() else None
    if config is None:
        return load_instance(cells, stations)
    return load_instance(cells, stations, config.params, config.width, config.height)
