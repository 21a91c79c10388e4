import pytest

from signalsim.network import (
    IntersectionConfig,
    NetworkError,
    NetworkGraph,
    Phase,
    RoadSegment,
)
from signalsim.scenario import make_grid


def test_road_defaults_derive_capacity_and_sat_flow():
    r = RoadSegment(1, None, 5, length=140.0, lanes=2)
    assert r.capacity == 40  # floor(140 / 7) * 2
    assert r.saturation_flow == 1.0
    assert r.travel_time == pytest.approx(140.0 / 13.9)


def test_road_validation():
    with pytest.raises(NetworkError):
        RoadSegment(1, None, None, length=100.0)
    with pytest.raises(NetworkError):
        RoadSegment(1, None, 5, length=0.0)
    with pytest.raises(NetworkError):
        RoadSegment(1, None, 5, length=100.0, lanes=0)


def test_intersection_validation():
    with pytest.raises(NetworkError):
        IntersectionConfig(1, [Phase(1, [])], changeover=-1.0)
    with pytest.raises(NetworkError):
        IntersectionConfig(1, [Phase(1, [])], min_green=10.0, max_green=5.0)


def test_grid_road_id_scheme():
    g, _priors, info = make_grid(1, 2, link_length=100.0, lanes=1)
    # internal a -> b is a*100+b; boundary ids encode node and side
    assert set(g.intersections) == {1, 2}
    assert 102 in g.roads and 201 in g.roads
    assert g.roads[102].from_node == 1 and g.roads[102].to_node == 2
    # node 1 is a west-edge corner: north/south/west sources, same sinks
    assert info[9010] == ("north", 1)
    assert info[9011] == ("south", 1)
    assert info[9013] == ("west", 1)
    assert 9012 not in g.roads  # east side of node 1 is interior
    assert g.roads[8022].from_node == 2 and g.roads[8022].to_node is None
    assert sorted(info) == sorted(g.source_roads())


def test_grid_phases_split_by_heading():
    g, _priors, _info = make_grid(1, 2, link_length=100.0, lanes=1)
    # phase 1 serves north/south entries, phase 2 east/west
    assert g.phase_of_entry(1, 9010) == 1
    assert g.phase_of_entry(1, 9011) == 1
    assert g.phase_of_entry(1, 9013) == 2
    assert g.phase_of_entry(1, 201) == 2
    assert g.phase_of_entry(2, 102) == 2


def test_grid_no_u_turns():
    g, priors, _info = make_grid(2, 2, link_length=100.0)
    for i in g.intersections:
        for entry, exits in g.exits_by_entry(i).items():
            frm = g.roads[entry].from_node
            for x in exits:
                if frm is not None:
                    assert g.roads[x].to_node != frm


def test_grid_priors_are_normalized_with_straight_bias():
    g, priors, _info = make_grid(3, 3, straight_bias=0.7)
    center = 5  # node(1,1) in a 3x3 grid
    by_entry = {}
    for (entry, x), p in priors[center].items():
        by_entry.setdefault(entry, []).append(p)
    for entry, ps in by_entry.items():
        assert sum(ps) == pytest.approx(1.0)
        assert max(ps) == pytest.approx(0.7)  # the straight movement


def test_neighbors_and_road_between():
    g, _priors, _info = make_grid(1, 3, link_length=100.0)
    assert g.upstream(2) == [1, 3]
    assert g.downstream(2) == [1, 3]
    assert g.road_between(1, 2) == 102
    assert g.road_between(2, 1) == 201
    with pytest.raises(NetworkError):
        g.road_between(1, 3)
    names = g.neighbors(2)
    assert (1, "downstream", 201) in names
    assert (1, "upstream", 102) in names


def test_phase_of_neighbor():
    g, _priors, _info = make_grid(1, 2)
    # road 1 -> 2 heads east, so at node 2 it is served by phase 2
    assert g.phase_of_neighbor(1, 2) == 2
    assert g.phase_of_neighbor(2, 1) == 2


def test_weights_scale_with_entry_capacity():
    g, _priors, _info = make_grid(1, 3, link_length=100.0)
    ws = [g.intersections[i].weight for i in sorted(g.intersections)]
    assert all(w > 0 for w in ws)
    assert sum(ws) / len(ws) == pytest.approx(1.0)
    # middle node has four full entries, corners have boundary entries of the
    # same length here, so weights tie unless geometry differs
    g2, _p, _i = make_grid(1, 3, link_length=100.0, boundary_length=300.0)
    assert g2.intersections[2].weight < g2.intersections[1].weight


def test_graph_round_trip():
    g, _priors, _info = make_grid(2, 2, link_length=90.0, lanes=2)
    d = g.to_dict()
    g2 = NetworkGraph.from_dict(d)
    assert g2.to_dict() == d
    assert set(g2.roads) == set(g.roads)
    assert all(
        g2.roads[r].capacity == g.roads[r].capacity for r in g.roads
    )


def test_graph_rejects_dangling_references():
    roads = {
        1: RoadSegment(1, None, 1, 100.0),
        2: RoadSegment(2, 1, None, 100.0),
    }
    inter = {
        1: IntersectionConfig(1, [Phase(1, [(1, 2)]), Phase(2, [(3, 2)])])
    }
    with pytest.raises(NetworkError, match="unknown road"):
        NetworkGraph(intersections=inter, roads=dict(roads))


def test_graph_rejects_entry_in_two_phases():
    roads = {
        1: RoadSegment(1, None, 1, 100.0),
        2: RoadSegment(2, 1, None, 100.0),
    }
    inter = {
        1: IntersectionConfig(1, [Phase(1, [(1, 2)]), Phase(2, [(1, 2)])])
    }
    with pytest.raises(NetworkError, match="multiple phases"):
        NetworkGraph(intersections=inter, roads=dict(roads))


def test_graph_rejects_uncovered_entry():
    roads = {
        1: RoadSegment(1, None, 1, 100.0),
        2: RoadSegment(2, 1, None, 100.0),
        3: RoadSegment(3, None, 1, 100.0),
    }
    inter = {1: IntersectionConfig(1, [Phase(1, [(1, 2)])])}
    with pytest.raises(NetworkError, match="not in any phase"):
        NetworkGraph(intersections=inter, roads=dict(roads))


def test_graph_rejects_bad_phase_ids():
    roads = {
        1: RoadSegment(1, None, 1, 100.0),
        2: RoadSegment(2, 1, None, 100.0),
    }
    inter = {1: IntersectionConfig(1, [Phase(3, [(1, 2)])])}
    with pytest.raises(NetworkError, match="phase ids"):
        NetworkGraph(intersections=inter, roads=dict(roads))


def test_graph_requires_two_way_neighbors():
    # 1 -> 2 with no return road: rejected so feedback always has a channel
    roads = {
        1: RoadSegment(1, None, 1, 100.0),
        12: RoadSegment(12, 1, 2, 100.0),
        2: RoadSegment(2, 2, None, 100.0),
        3: RoadSegment(3, None, 2, 100.0),
    }
    inter = {
        1: IntersectionConfig(1, [Phase(1, [(1, 12)])]),
        2: IntersectionConfig(2, [Phase(1, [(12, 2), (3, 2)])]),
    }
    with pytest.raises(NetworkError, match="2-way"):
        NetworkGraph(intersections=inter, roads=dict(roads))
