import random

import networkx as nx
import numpy as np
import pytest

from amoegrid.circuits import World
from amoegrid.errors import ContractViolation
from amoegrid.generator import generate_random
from amoegrid.grid import AmoebotStructure, Direction, GridPoint, find_holes
from amoegrid.oracle import global_maxima_oracle
from amoegrid.portals import AXES, Axis, portal_graph
from amoegrid.primitives import (
    boundary_test,
    closest_on_portal,
    degree_check,
    elect,
    election_iters,
    election_trials,
    global_maxima_boundary,
    global_maxima_general,
    region_has,
    root_and_prune,
    tree_pasc_distances,
)
from amoegrid.primitives.pasc import Meter
from amoegrid.split import Region

from test_grid import hexagon


def test_election_single_candidate():
    s = AmoebotStructure([GridPoint(a, 0) for a in range(8)])
    leaders, trace = elect(s, [3], seed=1)
    assert list(leaders) == [3]
    assert trace.rounds <= 4 * election_iters(s.n)


def test_election_unique_leader_many_seeds():
    s = AmoebotStructure([GridPoint(a, 0) for a in range(16)])
    fails = 0
    for seed in range(60):
        leaders, _ = elect(s, list(range(16)), seed=seed)
        if len(leaders) != 1:
            fails += 1
    assert fails <= 2  # w.h.p. unique; the pipeline budget makes this rarer


def test_election_trials_failure_rate_within_bound():
    for n in (16, 64):
        unique, failed, iters = election_trials(n, 400, seed=1, c0=2)
        assert unique + failed == 400
        assert failed <= max(2, int(1.5 * 400 / n))


def test_election_rounds_concentrate_near_log():
    # two candidates: expected ~2 coin iterations to separate, budget-bound
    s = AmoebotStructure([GridPoint(a, 0) for a in range(4)])
    outcomes = set()
    for seed in range(30):
        leaders, _ = elect(s, [0, 3], seed=seed)
        outcomes.add(tuple(leaders))
    assert all(len(l) == 1 for l in outcomes)
    assert len(outcomes) == 2  # both candidates win across seeds


def test_boundary_test_matches_flood_fill():
    for seed in range(6):
        s = generate_random(90, seed % 3, seed)
        classes, _ = boundary_test(s, seed=seed)
        outer, inner = find_holes(s)
        got_inner = sorted(nodes for kind, nodes in classes if kind == "inner")
        want_inner = sorted(frozenset(h.boundary) for h in inner)
        assert got_inner == want_inner
        got_outer = [nodes for kind, nodes in classes if kind == "outer"]
        assert got_outer == [frozenset(outer.boundary)]


def test_boundary_test_single_amoebot_outer():
    s = AmoebotStructure([GridPoint(0, 0)])
    classes, trace = boundary_test(s, seed=0)
    assert classes == [("outer", frozenset({GridPoint(0, 0)}))]


def test_pasc_distances_on_path_of_portals():
    # a horizontal bar: its y-portals form a path
    s = AmoebotStructure([GridPoint(a, b) for a in range(5) for b in range(2)])
    region = Region.from_structure(s)
    pg = portal_graph(region, Axis.Y)
    root = pg.portals[0].id
    got, trace = tree_pasc_distances(region, Axis.Y, root, seed=3)
    want = pg.distances_from([root])
    assert got == {k: int(v) for k, v in want.items()}
    assert max(got.values()) == 4


def test_pasc_distances_match_bfs_on_random_trees():
    rng = random.Random(11)
    for trial in range(12):
        s = generate_random(rng.randint(25, 90), 0, trial + 40)
        region = Region.from_structure(s)
        axis = AXES[trial % 3]
        pg = portal_graph(region, axis)
        root = rng.choice(pg.portals).id
        got, trace = tree_pasc_distances(region, axis, root, seed=trial)
        want = {k: int(v) for k, v in pg.distances_from([root]).items()}
        assert got == want
        m = max(want.values())
        assert trace.rounds <= 40 * (max(m, 2).bit_length() + 2)


def test_root_and_prune_matches_union_of_paths():
    rng = random.Random(2)
    for trial in range(15):
        s = generate_random(rng.randint(25, 90), 0, trial + 70)
        region = Region.from_structure(s)
        axis = AXES[trial % 3]
        pg = portal_graph(region, axis)
        ids = [p.id for p in pg.portals]
        q = rng.sample(ids, rng.randint(1, min(6, len(ids))))
        survivors, parents, _ = root_and_prune(region, axis, q, q[0], seed=trial)
        g = nx.Graph(list(pg.adjacency))
        g.add_nodes_from(ids)
        want = set()
        for qa in q:
            for qb in q:
                want |= set(nx.shortest_path(g, qa, qb))
        assert survivors == want
        for pid in survivors:
            cur, steps = pid, 0
            while parents[cur] is not None:
                cur = parents[cur]
                steps += 1
                assert steps <= len(ids)
            assert cur == q[0]


def test_root_and_prune_star_and_path():
    s = AmoebotStructure([GridPoint(a, b) for a in range(5) for b in range(3)])
    region = Region.from_structure(s)
    pg = portal_graph(region, Axis.X)  # three x-portals in a path
    ids = sorted(p.id for p in pg.portals)
    survivors, _, _ = root_and_prune(region, Axis.X, [ids[0]], ids[0], seed=0)
    assert survivors == {ids[0]}
    survivors, _, _ = root_and_prune(region, Axis.X, [ids[0], ids[-1]], ids[0], seed=0)
    assert survivors == set(ids)


def test_root_requires_membership():
    s = AmoebotStructure([GridPoint(a, 0) for a in range(4)])
    region = Region.from_structure(s)
    with pytest.raises(ContractViolation):
        root_and_prune(region, Axis.Y, [0], 2, seed=0)


def test_degree_check_against_counts():
    rng = random.Random(3)
    for trial in range(25):
        k = rng.randint(1, 10)
        chain = [GridPoint(0, b) for b in range(k)]
        s = AmoebotStructure(chain)
        w = World(s, c=10)
        shifts = np.zeros(w.n, dtype=np.int64)
        total = 0
        for p in chain:
            v = rng.randint(0, 2)
            shifts[w.index[p]] = v
            total += v
        thr = rng.randint(1, 4)
        got = degree_check(w, chain, shifts, thr, Meter())
        assert got == (total >= thr)


def test_region_has_matches_set_intersection():
    rng = random.Random(4)
    for trial in range(15):
        s = generate_random(rng.randint(8, 40), 0, trial + 110)
        w = World(s, c=10)
        region = Region.from_structure(s)
        pins = []
        from amoegrid.grid import DIRECTIONS, direction_between

        for u, v in region.edges:
            iu, iv = w.index[u], w.index[v]
            pins.append((iu, DIRECTIONS.index(direction_between(u, v)), 0))
            pins.append((iv, DIRECTIONS.index(direction_between(v, u)), 0))
        members = sorted(s.nodes)
        subset = rng.sample(members, rng.randint(0, len(members)))
        got = region_has(w, pins, [w.index[p] for p in subset], Meter())
        assert got == bool(subset)


def test_closest_on_portal_matches_linear_scan():
    rng = random.Random(5)
    for trial in range(25):
        k = rng.randint(1, 12)
        chain = [GridPoint(0, b) for b in range(k)]
        s = AmoebotStructure(chain)
        w = World(s, c=10)
        marked = np.zeros(w.n, dtype=bool)
        ms = rng.sample(range(k), rng.randint(1, k))
        for j in ms:
            marked[w.index[chain[j]]] = True
        end = rng.randint(0, 1)
        got = closest_on_portal(w, chain, marked, end, Meter())
        assert got == (chain[min(ms)] if end == 0 else chain[max(ms)])


def test_global_maxima_boundary_matches_oracle():
    rng = random.Random(6)
    for seed in range(5):
        s = generate_random(70 + 20 * seed, seed % 3, seed)
        outer, inner = find_holes(s)
        for R in [set(outer.boundary)] + [set(h.boundary) for h in inner]:
            for d in (Direction.E, Direction.NNE, "WNW", "ESE"):
                got, _ = global_maxima_boundary(s, d, R, seed=seed)
                assert got == global_maxima_oracle(R, d), (seed, d)


def test_global_maxima_general_matches_oracle():
    rng = random.Random(8)
    for seed in range(3):
        s = generate_random(60, seed % 2, seed)
        nodes = sorted(s.nodes)
        R = set(rng.sample(nodes, max(2, len(nodes) // 3)))
        for d in (Direction.E, "WNW", Direction.SSE):
            got, _ = global_maxima_general(s, d, R, seed=seed)
            assert got == global_maxima_oracle(R, d), (seed, d)


def test_boundary_maxima_round_bound():
    import math

    for n in (64, 256):
        s = generate_random(n, max(1, n // 128), 0)
        outer, _ = find_holes(s)
        _, trace = global_maxima_boundary(s, Direction.E, set(outer.boundary), seed=0)
        assert trace.rounds <= 60 * math.log2(n) + 120
