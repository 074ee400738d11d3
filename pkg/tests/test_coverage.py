import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bssopt import (
    ConstraintViolation,
    Deployment,
    GridCell,
    PlacedStation,
    ProblemInstance,
    RadioParams,
    StationKind,
    ViolationKind,
    check_constraints,
    coverage_map,
    coverage_ratio,
    covered_weak_cells,
    is_covered,
    ratio_from_map,
    spacing_violations,
)

from oracles import brute_covered_flags, brute_ratio, covers, too_close

MACRO, MICRO = StationKind.MACRO, StationKind.MICRO
P = RadioParams()


def _dep(*stations):
    return Deployment(tuple(PlacedStation(x, y, k) for x, y, k in stations))


@pytest.mark.parametrize("point, station, expected", [
    ((5, 5), PlacedStation(5, 5, MICRO), True),
    ((5, 16), PlacedStation(5, 5, MICRO), False),
    ((3, 4), PlacedStation(0, 0, MACRO), True),
    ((5, 15), PlacedStation(5, 5, MICRO), True),  # exactly on the radius
    ((6, 8), PlacedStation(0, 0, MICRO), True),
    ((7, 8), PlacedStation(0, 0, MICRO), False),
])
def test_is_covered(point, station, expected):
    assert is_covered(point, station, P) is expected


def test_ratio_single_cell():
    inst = ProblemInstance(5, 5, [GridCell(2, 2, 10.0, True)])
    assert coverage_ratio(inst, _dep((2, 2, MICRO))) == 1.0


def test_ratio_empty_deployment():
    inst = ProblemInstance(5, 5, [GridCell(2, 2, 10.0, True)])
    assert coverage_ratio(inst, Deployment(())) == 0.0


def test_ratio_two_cells():
    inst = ProblemInstance(40, 5, [GridCell(0, 0, 3.0, True), GridCell(25, 0, 7.0, True)])
    d = _dep((25, 0, MICRO))
    assert coverage_ratio(inst, d) == pytest.approx(0.7, abs=1e-12)
    assert brute_ratio(inst, d) == coverage_ratio(inst, d)


def test_ratio_ignores_non_weak_and_existing():
    cells = [GridCell(0, 0, 5.0, True), GridCell(1, 0, 100.0, False)]
    inst = ProblemInstance(30, 30, cells, [(0, 0)])
    assert coverage_ratio(inst, Deployment(())) == 0.0
    assert coverage_ratio(inst, _dep((20, 20, MICRO))) == 0.0


def test_ratio_no_weak_traffic_is_one():
    inst = ProblemInstance(5, 5, [GridCell(0, 0, 5.0, False)])
    assert coverage_ratio(inst, Deployment(())) == 1.0
    assert check_constraints(inst, Deployment(())).feasible


def test_boundary_six_eight_ten_feasible():
    inst = ProblemInstance(20, 20)
    assert spacing_violations(inst, _dep((0, 0, MICRO), (6, 8, MICRO))) == []


def test_new_new_violation_measure():
    inst = ProblemInstance(20, 20)
    (v,) = spacing_violations(inst, _dep((0, 0, MICRO), (5, 5, MICRO)))
    assert v.kind is ViolationKind.NEW_NEW_DISTANCE
    assert v.measure == pytest.approx(10 - math.sqrt(50), abs=1e-12)
    assert v.subjects == ((0, 0), (5, 5))


def test_new_existing_violation():
    inst = ProblemInstance(20, 20, existing_stations=[(3, 4)])
    (v,) = spacing_violations(inst, _dep((0, 0, MACRO)))
    assert v.kind is ViolationKind.NEW_EXISTING_DISTANCE
    assert v.measure == pytest.approx(5.0)
    assert spacing_violations(inst, _dep((9, 12, MICRO))) == []


def test_duplicate_and_out_of_bounds():
    inst = ProblemInstance(10, 10)
    vs = spacing_violations(inst, _dep((1, 1, MICRO), (1, 1, MACRO), (10, 9, MICRO)))
    kinds = sorted(v.kind.value for v in vs)
    assert kinds == ["DuplicateSite", "OutOfBounds"]


def test_shortfall_measure():
    # 85 of 100 units covered
    cells = [GridCell(0, 0, 85.0, True), GridCell(39, 0, 15.0, True)]
    inst = ProblemInstance(40, 1, cells)
    rep = check_constraints(inst, _dep((0, 0, MICRO)))
    (v,) = rep.by_kind(ViolationKind.COVERAGE_SHORTFALL)
    assert v.measure == pytest.approx(0.05, abs=1e-12)
    assert not rep.feasible and rep.cost == 1


def test_report_round_trip():
    v = ConstraintViolation(ViolationKind.NEW_NEW_DISTANCE, "x", 1.5, ((0, 0), (1, 1)))
    assert ConstraintViolation.from_dict(v.to_dict()) == v


def test_coverage_map_empty_and_full():
    cells = [GridCell(x, y, 1.0, True) for x in range(10) for y in range(10)]
    inst = ProblemInstance(10, 10, cells)
    assert not coverage_map(inst, Deployment(())).any()
    assert coverage_map(inst, _dep((5, 5, MACRO))).all()


def test_coverage_map_mixed_brute_force():
    rng = np.random.default_rng(3)
    cells = [GridCell(x, y, float(rng.integers(1, 9)), bool(rng.random() < 0.6))
             for y in range(20) for x in range(20)]
    inst = ProblemInstance(20, 20, cells)
    d = _dep((2, 3, MICRO), (15, 15, MICRO), (10, 1, MICRO))
    grid = coverage_map(inst, d)
    for c in cells:
        expect = c.weak and any(covers(c.x, c.y, s.x, s.y, P.radius(s.kind)) for s in d)
        assert grid[c.y, c.x] == expect
    assert ratio_from_map(inst, grid) == coverage_ratio(inst, d)


def _random_instance(rng, size=30):
    n = int(rng.integers(1, 60))
    flat = rng.choice(size * size, n, replace=False)
    cells = [GridCell(int(k % size), int(k // size), float(rng.random() * 10), bool(rng.random() < 0.8))
             for k in flat]
    return ProblemInstance(size, size, cells)


def _random_deployment(rng, size=30, k=None):
    k = int(rng.integers(0, 6)) if k is None else k
    return Deployment(tuple(
        PlacedStation(int(rng.integers(size)), int(rng.integers(size)),
                      MACRO if rng.random() < 0.2 else MICRO)
        for _ in range(k)))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ratio_equals_brute_force(seed):
    rng = np.random.default_rng(seed)
    inst = _random_instance(rng)
    d = _random_deployment(rng)
    assert covered_weak_cells(inst, d).tolist() == brute_covered_flags(inst, d)
    assert coverage_ratio(inst, d) == brute_ratio(inst, d)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ratio_monotone_and_bounded(seed):
    rng = np.random.default_rng(seed)
    inst = _random_instance(rng)
    d = _random_deployment(rng)
    extra = _random_deployment(rng, k=1).stations[0]
    r0, r1 = coverage_ratio(inst, d), coverage_ratio(inst, d.with_station(extra))
    assert 0.0 <= r0 <= r1 <= 1.0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 25), st.integers(0, 25)), min_size=0, max_size=6),
       st.lists(st.tuples(st.integers(0, 25), st.integers(0, 25)), max_size=3))
def test_spacing_matches_pairwise_oracle(sites, existing):
    inst = ProblemInstance(26, 26, existing_stations=set(existing))
    d = Deployment(tuple(PlacedStation(x, y, MICRO) for x, y in sites))
    vs = spacing_violations(inst, d)
    got_nn = {v.subjects for v in vs if v.kind is ViolationKind.NEW_NEW_DISTANCE}
    want_nn = {(a, b) for i, a in enumerate(sites) for b in sites[i + 1:]
               if a != b and too_close(a, b, P.D_min)}
    got_nn = {tuple(sorted(s)) for s in got_nn}
    want_nn = {tuple(sorted(s)) for s in want_nn}
    assert got_nn == want_nn
    got_ne = [v.subjects for v in vs if v.kind is ViolationKind.NEW_EXISTING_DISTANCE]
    want_ne = [(s, e) for s in sites for e in inst.existing_stations if too_close(s, e, P.D_min)]
    assert sorted(got_ne) == sorted(want_ne)
