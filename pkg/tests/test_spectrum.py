import pytest
from hypothesis import given
from hypothesis import strategies as st

from eonbench.heuristics import msf_solve, MsfConfig
from eonbench.spectrum import (
    COLLISION,
    OUTSIDE_GRID,
    UNSERVED,
    WRONG_WIDTH,
    BROKEN_PATH,
    ENDPOINT_MISMATCH,
    AvailabilityVector,
    Channel,
    SpectrumAssignment,
    SpectrumGrid,
    UnknownLinkError,
    assignment_from_json,
    channel_count,
    first_fit_channel,
    fitness,
    path_availability,
    used_slice_count,
    validate_assignment,
)
from eonbench.topology import Path
from eonbench.traffic import Demand, TrafficMatrix, generate_traffic

bits = st.lists(st.integers(0, 1), min_size=1, max_size=24)


def av(b):
    return AvailabilityVector.from_bits(b)


def test_channel_membership_and_count():
    ch = Channel(3, 2)
    assert [s for s in range(1, 7) if ch.contains(s)] == [3, 4]
    grid = SpectrumGrid(5, 12.5)
    assert channel_count(grid, 2) == 4
    assert ch.fits(grid) and not Channel(5, 2).fits(grid) and not Channel(0, 1).fits(grid)


def test_path_availability_and(triangle):
    grid = SpectrumGrid(3, 12.5)
    # link 0 occupies slice 2, link 1 occupies slice 3
    a = SpectrumAssignment(
        grid,
        {0: (Path((0,), 0, 1), Channel(2, 1)), 1: (Path((2,), 1, 2), Channel(3, 1))},
        triangle.n_links,
    )
    assert path_availability(a, Path((0,), 0, 1)).bits == [1, 0, 1]
    assert path_availability(a, Path((2,), 1, 2)).bits == [1, 1, 0]
    assert path_availability(a, Path((0, 2), 0, 2)).bits == [1, 0, 0]


def test_path_availability_empty_and_unknown(triangle):
    a = SpectrumAssignment(SpectrumGrid(4, 12.5), {}, triangle.n_links)
    assert path_availability(a, Path((0, 2), 0, 2)).bits == [1, 1, 1, 1]
    with pytest.raises(UnknownLinkError):
        path_availability(a, Path((99,), 0, 1))


@pytest.mark.parametrize(
    "vector,width,expected",
    [([1, 1, 0, 1, 1, 1], 2, 1), ([0, 1, 0, 1, 1, 0], 2, 4), ([0, 0, 0], 2, None), ([1], 2, None)],
)
def test_first_fit_examples(vector, width, expected):
    assert first_fit_channel(av(vector), width) == expected


@given(bits, st.integers(1, 5))
def test_first_fit_is_minimal(b, width):
    start = first_fit_channel(av(b), width)
    feasible = [s for s in range(1, len(b) - width + 2) if all(b[s - 1 : s - 1 + width])]
    assert start == (feasible[0] if feasible else None)


@given(st.lists(bits, min_size=1, max_size=4))
def test_and_is_elementwise(vectors):
    size = len(vectors[0])
    vectors = [(v * size)[:size] for v in vectors]
    combined = av(vectors[0])
    for v in vectors[1:]:
        combined = combined & av(v)
    assert combined.bits == [int(all(v[i] for v in vectors)) for i in range(size)]


def _assignment(six_node, routes, slots=8):
    return SpectrumAssignment(SpectrumGrid(slots, 12.5), routes, six_node.n_links)


def test_fitness_and_used_count(six_node):
    empty = _assignment(six_node, {})
    assert fitness(empty) == 0 and used_slice_count(empty) == 0
    a = _assignment(six_node, {0: (Path((0,), 0, 1), Channel(1, 2)), 1: (Path((2,), 1, 2), Channel(4, 2))})
    assert used_slice_count(a) == 4 and fitness(a) == 5
    b = _assignment(six_node, {0: (Path((0,), 0, 1), Channel(1, 2)), 1: (Path((2,), 1, 2), Channel(1, 1)),
                               2: (Path((2,), 1, 2), Channel(3, 1))})
    assert fitness(b) == 3


def test_single_demand_on_two_link_path(six_node):
    p = Path((0, 2), 0, 2)
    assert six_node.is_valid_path(p)
    a = _assignment(six_node, {0: (p, Channel(1, 4))})
    assert fitness(a) == 4 and used_slice_count(a) == 4


def _tm(*demands):
    return TrafficMatrix(tuple(Demand(i, s, d, n, 25.0 * n) for i, (s, d, n) in enumerate(demands)))


def test_validator_collision(triangle):
    tm = _tm((0, 1, 2), (0, 1, 2))
    p = Path((0,), 0, 1)
    a = SpectrumAssignment(SpectrumGrid(4, 12.5), {0: (p, Channel(1, 2)), 1: (p, Channel(1, 2))}, triangle.n_links)
    kinds = {v.kind for v in validate_assignment(triangle, tm, a)}
    assert kinds == {COLLISION}


def test_validator_unserved(triangle):
    tm = _tm((0, 1, 2), (1, 2, 1))
    a = SpectrumAssignment(SpectrumGrid(4, 12.5), {0: (Path((0,), 0, 1), Channel(1, 2))}, triangle.n_links)
    assert [(v.kind, v.demand) for v in validate_assignment(triangle, tm, a)] == [(UNSERVED, 1)]


def test_validator_other_kinds(triangle):
    tm = _tm((0, 1, 2))
    grid = SpectrumGrid(4, 12.5)

    def kinds(path, ch):
        return {v.kind for v in validate_assignment(triangle, tm, SpectrumAssignment(grid, {0: (path, ch)}))}

    assert kinds(Path((0,), 0, 1), Channel(1, 3)) == {WRONG_WIDTH}
    assert kinds(Path((0,), 0, 1), Channel(4, 2)) == {OUTSIDE_GRID}
    assert kinds(Path((0, 0), 0, 1), Channel(1, 2)) == {BROKEN_PATH}
    assert kinds(Path((2,), 0, 1), Channel(1, 2)) == {ENDPOINT_MISMATCH}
    assert kinds(Path((0,), 0, 1), Channel(1, 2)) == set()


def test_heuristic_output_validates(six_node, cost239):
    for topo, n in ((six_node, 8), (cost239, 45)):
        for seed in range(5):
            tm = generate_traffic(topo, n, 1, 4, seed)
            a = msf_solve(topo, tm, MsfConfig())
            assert validate_assignment(topo, tm, a) == []
            assert max(d.slices for d in tm.demands) <= used_slice_count(a) <= fitness(a) <= a.grid.slot_count


def test_assignment_json_round_trip(cost239):
    tm = generate_traffic(cost239, 45, 1, 4, 2)
    a = msf_solve(cost239, tm)
    b = assignment_from_json(a.to_json(), cost239, tm)
    assert b.routes == a.routes and b.grid == a.grid


def test_link_occupancy_is_fold_of_routes(six_node):
    tm = generate_traffic(six_node, 8, 1, 4, 4)
    a = msf_solve(six_node, tm)
    occ = a.link_occupancy
    assert set(occ) == set(range(six_node.n_links))
    for lid, vec in occ.items():
        used = set()
        for path, ch in a.routes.values():
            if lid in path.links:
                used |= set(range(ch.start, ch.end + 1))
        assert {i + 1 for i, b in enumerate(vec.bits) if not b} == used
