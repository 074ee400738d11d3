"""Brute-force reference implementations.

Written against the problem definition only: plain Python loops, squared
distances and bitmask enumeration. Nothing here calls into bssopt's coverage
or solver code.
"""
from __future__ import annotations

import itertools
import math

from bssopt.model import Deployment, PlacedStation, StationKind


def covers(px, py, sx, sy, radius) -> bool:
    return (px - sx) ** 2 + (py - sy) ** 2 <= radius * radius


def brute_covered_flags(instance, deployment):
    """Per weak cell (row-major), whether any new station reaches it."""
    p = instance.params
    flags = []
    for cell in instance.cells:
        if not cell.weak:
            continue
        hit = False
        for st in deployment:
            r = p.d_h if st.kind is StationKind.MACRO else p.d_d
            if covers(cell.x, cell.y, st.x, st.y, r):
                hit = True
                break
        flags.append(hit)
    return flags


def brute_ratio(instance, deployment) -> float:
    weak = [c for c in instance.cells if c.weak]
    flags = brute_covered_flags(instance, deployment)
    total = math.fsum(c.traffic for c in weak)
    if total == 0:
        return 1.0
    return math.fsum(c.traffic for c, f in zip(weak, flags) if f) / total


def too_close(a, b, d_min) -> bool:
    return math.dist(a, b) < d_min


def brute_cost(deployment, params) -> float:
    total = 0.0
    for st in deployment:
        total += params.C_h if st.kind is StationKind.MACRO else params.C_d
    return total


def optimal_deployment(instance, max_stations: int = 4):
    """Cheapest feasible deployment over weak-cell sites with at most
    ``max_stations`` stations, by exhaustive enumeration.

    Returns ``(cost, deployment)`` or ``(inf, None)``.
    """
    p = instance.params
    weak = [c for c in instance.cells if c.weak]
    sites = [(c.x, c.y) for c in weak]
    sites = [s for s in sites if all(not too_close(s, e, p.D_min) for e in instance.existing_stations)]
    total = math.fsum(c.traffic for c in weak)
    if total == 0:
        return 0.0, Deployment(())
    masks = {}
    for s in sites:
        for kind, r in ((StationKind.MACRO, p.d_h), (StationKind.MICRO, p.d_d)):
            m = 0
            for i, c in enumerate(weak):
                if covers(c.x, c.y, s[0], s[1], r):
                    m |= 1 << i
            masks[(s, kind)] = m

    best = (math.inf, None)
    for k in range(1, max_stations + 1):
        for combo in itertools.combinations(sites, k):
            if any(too_close(a, b, p.D_min) for a, b in itertools.combinations(combo, 2)):
                continue
            for kinds in itertools.product((StationKind.MACRO, StationKind.MICRO), repeat=k):
                cost = sum(p.C_h if kd is StationKind.MACRO else p.C_d for kd in kinds)
                if cost >= best[0]:
                    continue
                m = 0
                for s, kd in zip(combo, kinds):
                    m |= masks[(s, kd)]
                covered = math.fsum(c.traffic for i, c in enumerate(weak) if m >> i & 1)
                if covered / total >= p.theta_cp:
                    best = (cost, Deployment(tuple(PlacedStation(s[0], s[1], kd)
                                                   for s, kd in zip(combo, kinds))))
    return best


def brute_cosine(a, b) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0 or nb == 0:
        return 0.0
    return dot / (na * nb)
