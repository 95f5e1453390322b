import random

import pytest

from amoegrid.errors import DomainError
from amoegrid.generator import generate_random
from amoegrid.grid import AmoebotStructure, GridPoint
from amoegrid.oracle import bfs_distances
from amoegrid.portals import AXES, Axis, compute_portals, portal_distance, portal_graph
from amoegrid.split import Region

from test_grid import hexagon, parallelogram, random_structure


def as_region(pts) -> Region:
    return Region.from_structure(AmoebotStructure(pts))


def test_horizontal_line_portals():
    k = 5
    line = as_region([GridPoint(a, 0) for a in range(k)])
    assert len(compute_portals(line, Axis.X)) == 1
    assert len(compute_portals(line, Axis.Y)) == k
    assert len(compute_portals(line, Axis.Z)) == k


def test_hexagon_y_portals_sizes():
    region = as_region(hexagon(1))
    sizes = sorted(len(p) for p in compute_portals(region, Axis.Y))
    assert sizes == [2, 3, 2] or sizes == sorted([2, 3, 2])


def test_portal_partition_matches_component_oracle():
    rng = random.Random(5)
    for _ in range(25):
        region = Region.from_structure(random_structure(rng, rng.randint(1, 70)))
        for axis in AXES:
            portals = compute_portals(region, axis)
            # membership partition
            seen = set()
            for p in portals:
                assert not (p.node_set & seen)
                seen |= p.node_set
            assert seen == set(region.nodes)
            # chains are maximal: no axis edge joins two different portals
            owner = {}
            for p in portals:
                for node in p.nodes:
                    owner[node] = p.id
            for u in region.nodes:
                v = u.neighbor(axis.up)
                if v in region.nodes and region.has_edge(u, v):
                    assert owner[u] == owner[v]


def test_portal_graph_single_portal():
    line = as_region([GridPoint(a, 0) for a in range(4)])
    g = portal_graph(line, Axis.X)
    assert len(g.portals) == 1
    assert g.adjacency == frozenset()


def test_portal_graphs_of_simple_regions_are_trees():
    rng = random.Random(9)
    for _ in range(20):
        s = generate_random(rng.randint(20, 120), 0, rng.randint(0, 10_000))
        region = Region.from_structure(s)
        for axis in AXES:
            g = portal_graph(region, axis)
            assert g.is_tree()


def test_annulus_y_portal_graph_has_cycle():
    pts = [p for p in hexagon(2) if p != GridPoint(0, 0)]
    g = portal_graph(as_region(pts), Axis.Y)
    assert not g.is_tree()
    assert len(g.adjacency) >= len(g.portals)


def test_portal_distance_same_node():
    region = as_region(hexagon(1))
    p = GridPoint(0, 0)
    for axis in AXES:
        assert portal_distance(region, p, p, axis) == 0


def test_portal_distance_adjacent_along_x():
    region = as_region(parallelogram(4, 3))
    u, v = GridPoint(1, 1), GridPoint(2, 1)
    assert portal_distance(region, u, v, Axis.X) == 0
    assert portal_distance(region, u, v, Axis.Y) == 1
    assert portal_distance(region, u, v, Axis.Z) == 1


def test_portal_distance_outside_raises():
    region = as_region(parallelogram(2, 2))
    with pytest.raises(DomainError):
        portal_distance(region, GridPoint(0, 0), GridPoint(9, 9), Axis.X)


def test_half_sum_distance_identity_on_simple_structures():
    rng = random.Random(21)
    for _ in range(12):
        s = generate_random(rng.randint(20, 160), 0, rng.randint(0, 10_000))
        region = Region.from_structure(s)
        graphs = {axis: portal_graph(region, axis) for axis in AXES}
        nodes = sorted(s.nodes)
        sources = rng.sample(nodes, min(6, len(nodes)))
        for u in sources:
            dist = bfs_distances(s, u)
            per_axis = {
                axis: graphs[axis].distances_from([graphs[axis].portal_of(u).id])
                for axis in AXES
            }
            for v in nodes:
                total = sum(
                    per_axis[axis][graphs[axis].portal_of(v).id] for axis in AXES
                )
                assert total == 2 * dist[v], (u, v)
