import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bssopt import (
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

from oracles import brute_cost

MACRO, MICRO = StationKind.MACRO, StationKind.MICRO


def _dep(n_macro, n_micro):
    st_ = [PlacedStation(i, 0, MACRO) for i in range(n_macro)]
    st_ += [PlacedStation(i, 1, MICRO) for i in range(n_micro)]
    return Deployment(tuple(st_))


def test_cost_empty():
    assert deployment_cost(Deployment(()), RadioParams()) == 0


def test_cost_one_macro_three_micro():
    assert deployment_cost(_dep(1, 3), RadioParams()) == 13


def test_cost_two_macro_five_micro():
    assert deployment_cost(_dep(2, 5), RadioParams()) == 25


@given(st.integers(0, 50), st.integers(0, 50))
def test_cost_matches_counting(kh, kd):
    d = _dep(kh, kd)
    assert deployment_cost(d, RadioParams()) == 10 * kh + kd == brute_cost(d, RadioParams())


def test_params_defaults():
    p = RadioParams()
    assert (p.d_h, p.d_d, p.C_h, p.C_d, p.D_min, p.theta_cp) == (30, 10, 10, 1, 10, 0.9)
    assert p.radius(MACRO) == 30 and p.cost(MICRO) == 1


@pytest.mark.parametrize("changes", [
    dict(d_h=5), dict(C_h=0.5), dict(theta_cp=0), dict(theta_cp=1.5),
    dict(D_min=-1), dict(d_d=math.nan),
])
def test_params_validation(changes):
    with pytest.raises(InputError):
        RadioParams().replace(**changes)


def test_candidates_weak_row_major():
    cells = [GridCell(3, 2, 1.0, True), GridCell(0, 0, 1.0, False),
             GridCell(1, 2, 5.0, True), GridCell(4, 0, 2.0, True)]
    inst = ProblemInstance(5, 5, cells)
    assert candidate_sites(inst, WEAK_CELLS_ONLY) == [(4, 0), (1, 2), (3, 2)]


def test_candidates_all_cells():
    inst = ProblemInstance(4, 4)
    sites = candidate_sites(inst, ALL_CELLS)
    assert len(sites) == 16 and sites[:2] == [(0, 0), (1, 0)]


def test_candidates_explicit_identity_and_bounds():
    inst = ProblemInstance(100, 100)
    assert candidate_sites(inst, CandidateFilter.explicit([(0, 0), (99, 99)])) == [(0, 0), (99, 99)]
    with pytest.raises(InputError):
        candidate_sites(inst, CandidateFilter.explicit([(100, 0)]))


def test_candidate_filter_parse():
    assert CandidateFilter.parse("WeakCellsOnly") == WEAK_CELLS_ONLY
    assert CandidateFilter.parse("all") == ALL_CELLS
    assert CandidateFilter.parse([[1, 2]]).sites == ((1, 2),)
    assert CandidateFilter.parse([[1, 2]]).to_wire() == [[1, 2]]
    with pytest.raises(InputError):
        CandidateFilter.parse("nearby")


def test_instance_sorted_and_readonly():
    cells = [GridCell(1, 1, 2.0, True), GridCell(0, 1, 1.0, False), GridCell(2, 0, 3.0, True)]
    inst = ProblemInstance(3, 2, cells, [(0, 0)])
    assert list(zip(inst.xs, inst.ys)) == [(2, 0), (0, 1), (1, 1)]
    with pytest.raises(ValueError):
        inst.traffic[0] = 9
    assert inst.total_weak_traffic() == 5.0
    assert inst.existing_stations == ((0, 0),)


def test_instance_rejects_bad_input():
    with pytest.raises(InputError):
        ProblemInstance(3, 3, [GridCell(3, 0, 1.0, True)])
    with pytest.raises(InputError):
        ProblemInstance(3, 3, [GridCell(0, 0, -1.0, True)])
    with pytest.raises(InputError):
        ProblemInstance(3, 3, [GridCell(0, 0, 1.0, True), GridCell(0, 0, 2.0, True)])
    with pytest.raises(InputError):
        ProblemInstance(0, 3)
    with pytest.raises(InputError):
        ProblemInstance(3, 3, existing_stations=[(5, 5)])


def test_instance_equality_and_from_arrays():
    a = ProblemInstance(4, 4, [GridCell(1, 1, 2.5, True)], [(3, 3)])
    b = ProblemInstance.from_arrays(4, 4, [1], [1], [2.5], [True], [(3, 3)])
    assert a == b
    assert a != a.with_params(RadioParams(theta_cp=0.8))


def test_deployment_canonical_and_count():
    d = Deployment((PlacedStation(5, 1, MICRO), PlacedStation(0, 0, MACRO), PlacedStation(2, 1, MICRO)))
    assert [s.xy for s in d.canonical()] == [(0, 0), (2, 1), (5, 1)]
    assert d.count(MICRO) == 2 and len(d) == 3
    assert len(d.with_station(PlacedStation(0, 0, MICRO))) == 4


def test_weak_cells_arrays():
    inst = ProblemInstance(3, 3, [GridCell(0, 0, 3, True), GridCell(1, 0, 7, False)])
    x, y, t = inst.weak_cells()
    assert x.tolist() == [0] and t.tolist() == [3.0]
    assert np.array_equal(inst.weak_mask, [True, False])
