import random

import pytest

from amoegrid.errors import DomainError, InvalidStructureError
from amoegrid.grid import (
    AmoebotStructure,
    Direction,
    GridPoint,
    boundary_cycles,
    find_holes,
    turning_total,
)


def hexagon(radius: int, center: GridPoint = GridPoint(0, 0)) -> list[GridPoint]:
    """Filled hexagon: all points within grid distance `radius` of center."""
    pts = []
    for a in range(-radius, radius + 1):
        for b in range(-radius, radius + 1):
            da, db = a, b
            dist = max(abs(da), abs(db)) if da * db < 0 else abs(da) + abs(db)
            if dist <= radius:
                pts.append(GridPoint(center.a + a, center.b + b))
    return pts


def parallelogram(width: int, height: int) -> list[GridPoint]:
    return [GridPoint(a, b) for a in range(width) for b in range(height)]


def random_structure(rng: random.Random, n: int) -> AmoebotStructure:
    pts = {GridPoint(0, 0)}
    while len(pts) < n:
        base = rng.choice(sorted(pts))
        d = rng.choice(list(Direction))
        pts.add(base.neighbor(d))
    return AmoebotStructure(pts)


def test_direction_opposites_partition_neighborhood():
    assert {d.opposite for d in Direction} == set(Direction)
    for d in Direction:
        assert d.opposite.opposite is d
        assert d.opposite is not d
    offsets = {d.offset for d in Direction}
    assert len(offsets) == 6
    assert all(off != (0, 0) for off in offsets)


def test_neighbor_offsets():
    p = GridPoint(2, -1)
    assert p.neighbor(Direction.E) == GridPoint(3, -1)
    assert p.neighbor(Direction.W) == GridPoint(1, -1)
    assert p.neighbor(Direction.NNE) == GridPoint(2, 0)
    assert p.neighbor(Direction.SSW) == GridPoint(2, -2)
    assert p.neighbor(Direction.NNW) == GridPoint(1, 0)
    assert p.neighbor(Direction.SSE) == GridPoint(3, -2)


def test_neighbors_single_node():
    s = AmoebotStructure([GridPoint(0, 0)])
    assert s.neighbors(GridPoint(0, 0)) == []


def test_neighbors_full_hexagon_center():
    s = AmoebotStructure(hexagon(1))
    neigh = s.neighbors(GridPoint(0, 0))
    assert len(neigh) == 6
    assert [d for d, _ in neigh] == list(Direction.__members__.values())


def test_neighbors_outside_raises():
    s = AmoebotStructure([GridPoint(0, 0)])
    with pytest.raises(DomainError):
        s.neighbors(GridPoint(5, 5))


def test_neighbors_matches_offset_scan():
    rng = random.Random(7)
    for _ in range(50):
        s = random_structure(rng, rng.randint(1, 60))
        for p in s.nodes:
            expected = [
                (d, p.neighbor(d)) for d in Direction if p.neighbor(d) in s.nodes
            ]
            assert s.neighbors(p) == expected


def test_disconnected_structure_rejected():
    with pytest.raises(InvalidStructureError):
        AmoebotStructure([GridPoint(0, 0), GridPoint(5, 0)])


def test_text_round_trip():
    s = AmoebotStructure(hexagon(2))
    assert AmoebotStructure.from_text(s.to_text()).nodes == s.nodes


def test_text_rejects_duplicates():
    with pytest.raises(InvalidStructureError):
        AmoebotStructure.from_text("0 0\n1 0\n0 0\n")


def test_text_comments_and_errors():
    s = AmoebotStructure.from_text("# header\n0 0\n\n1 0\n")
    assert s.n == 2
    with pytest.raises(InvalidStructureError):
        AmoebotStructure.from_text("")
    with pytest.raises(InvalidStructureError):
        AmoebotStructure.from_text("0 x\n")


def test_find_holes_solid_parallelogram():
    s = AmoebotStructure(parallelogram(6, 4))
    outer, inner = find_holes(s)
    assert inner == []
    assert outer.kind == "outer"


def test_find_holes_punctured_hexagon():
    pts = [p for p in hexagon(2) if p != GridPoint(0, 0)]
    s = AmoebotStructure(pts)
    outer, inner = find_holes(s)
    assert len(inner) == 1
    assert inner[0].cells == frozenset([GridPoint(0, 0)])
    assert inner[0].boundary == frozenset(hexagon(1)) - {GridPoint(0, 0)}


def test_find_holes_four_carved_holes():
    pts = set(parallelogram(14, 9))
    for c in (GridPoint(2, 2), GridPoint(6, 2), GridPoint(10, 2), GridPoint(6, 6)):
        pts.discard(c)
    s = AmoebotStructure(pts)
    _, inner = find_holes(s)
    assert len(inner) == 4


def test_hole_count_translation_invariant():
    pts = set(parallelogram(8, 8)) - {GridPoint(3, 3), GridPoint(5, 5)}
    moved = {GridPoint(p.a + 11, p.b - 7) for p in pts}
    assert len(find_holes(AmoebotStructure(pts))[1]) == len(
        find_holes(AmoebotStructure(moved))[1]
    )


def test_boundary_classification_covers_rim():
    rng = random.Random(3)
    for _ in range(25):
        s = random_structure(rng, rng.randint(2, 80))
        outer, inner = find_holes(s)
        rim = {
            p
            for p in s.nodes
            if any(q not in s.nodes for _, q in p.neighborhood())
        }
        claimed = set(outer.boundary)
        for h in inner:
            claimed |= h.boundary
        assert claimed == rim


def test_boundary_cycle_hexagon_rim():
    s = AmoebotStructure(hexagon(1))
    cycles = boundary_cycles(s)
    assert len(cycles) == 1
    hole, cyc = cycles[0]
    assert hole.kind == "outer"
    assert len(cyc) == 6
    assert set(cyc) == set(hexagon(1)) - {GridPoint(0, 0)}


def test_boundary_cycle_one_cell_hole():
    pts = [p for p in hexagon(1) if p != GridPoint(0, 0)]
    s = AmoebotStructure(pts)
    cycles = boundary_cycles(s)
    kinds = sorted(h.kind for h, _ in cycles)
    assert kinds == ["inner", "outer"]
    inner_cycle = next(c for h, c in cycles if h.kind == "inner")
    assert len(inner_cycle) == 6


def test_boundary_cycles_visit_exact_boundary_sets():
    rng = random.Random(11)
    for _ in range(30):
        s = random_structure(rng, rng.randint(2, 100))
        for hole, cyc in boundary_cycles(s):
            assert set(cyc) == set(hole.boundary)


def test_turning_sign_separates_inner_and_outer():
    pts = set(parallelogram(9, 7)) - {GridPoint(4, 3), GridPoint(4, 4)}
    s = AmoebotStructure(pts)
    for hole, cyc in boundary_cycles(s):
        total = turning_total(s, (cyc[-1], cyc[0]))
        assert total == (6 if hole.kind == "inner" else -6)
