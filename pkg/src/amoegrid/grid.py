"""Triangular-grid geometry: coordinates, directions, structures, holes.

Points are integer pairs ``(a, b)`` embedded in the plane as
``a * (1, 0) + b * (1/2, sqrt(3)/2)``.  The three grid axes are then
E-W (x axis), NNE-SSW (y axis) and NNW-SSE (z axis); the y axis renders
as a line climbing to the north-north-east, which is why the two sides
of a y-aligned chain are called WNW and ESE throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, NamedTuple

from .errors import DomainError, InvalidStructureError


class Direction(Enum):
    """One of the six lattice directions, valued by its (a, b) offset."""

    E = (1, 0)
    NNE = (0, 1)
    NNW = (-1, 1)
    W = (-1, 0)
    SSW = (0, -1)
    SSE = (1, -1)

    @property
    def offset(self) -> tuple[int, int]:
        return self.value

    @property
    def opposite(self) -> "Direction":
        return _OPPOSITE[self]

    def rotated(self, steps: int) -> "Direction":
        """Rotate counterclockwise by ``steps`` times 60 degrees."""
        return _CCW_ORDER[(_CCW_INDEX[self] + steps) % 6]


# Counterclockwise angular order, starting at E (0, 60, ..., 300 degrees).
_CCW_ORDER = (
    Direction.E,
    Direction.NNE,
    Direction.NNW,
    Direction.W,
    Direction.SSW,
    Direction.SSE,
)
_CCW_INDEX = {d: i for i, d in enumerate(_CCW_ORDER)}
_OPPOSITE = {d: d.rotated(3) for d in Direction}

#: Fixed direction order used by neighborhood queries.
DIRECTIONS = (
    Direction.E,
    Direction.NNE,
    Direction.NNW,
    Direction.W,
    Direction.SSW,
    Direction.SSE,
)

_OFFSET_TO_DIRECTION = {d.offset: d for d in Direction}


class GridPoint(NamedTuple):
    """A node of the infinite triangular grid."""

    a: int
    b: int

    def neighbor(self, d: Direction) -> "GridPoint":
        da, db = d.offset
        return GridPoint(self.a + da, self.b + db)

    def neighborhood(self) -> Iterator[tuple[Direction, "GridPoint"]]:
        for d in DIRECTIONS:
            yield d, self.neighbor(d)

    @property
    def render_xy(self) -> tuple[float, float]:
        """Plane embedding used for rendering and west/east tie-breaks."""
        return (self.a + self.b / 2.0, self.b * 0.8660254037844386)


def direction_between(u: GridPoint, v: GridPoint) -> Direction:
    """Direction of the grid step from ``u`` to its neighbor ``v``."""
    try:
        return _OFFSET_TO_DIRECTION[(v.a - u.a, v.b - u.b)]
    except KeyError:
        raise DomainError(f"{u} and {v} are not grid neighbors") from None


def render_x(p: GridPoint) -> int:
    """Twice the rendering x coordinate; integral, orders points west to east."""
    return 2 * p.a + p.b


class AmoebotStructure:
    """A connected set of occupied grid nodes with induced adjacency."""

    __slots__ = ("nodes", "_adjacency")

    def __init__(self, nodes: Iterable[GridPoint]):
        pts = frozenset(GridPoint(a, b) for a, b in nodes)
        if not pts:
            raise InvalidStructureError("structure must contain at least one node")
        self.nodes: frozenset[GridPoint] = pts
        self._adjacency: dict[GridPoint, tuple[tuple[Direction, GridPoint], ...]] | None = None
        if not self._connected():
            raise InvalidStructureError("structure is not connected")

    @property
    def n(self) -> int:
        return len(self.nodes)

    def __contains__(self, p) -> bool:
        return p in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def _connected(self) -> bool:
        start = next(iter(self.nodes))
        seen = {start}
        stack = [start]
        while stack:
            p = stack.pop()
            for _, q in p.neighborhood():
                if q in self.nodes and q not in seen:
                    seen.add(q)
                    stack.append(q)
        return len(seen) == len(self.nodes)

    @property
    def adjacency(self) -> dict[GridPoint, tuple[tuple[Direction, GridPoint], ...]]:
        if self._adjacency is None:
            self._adjacency = {
                p: tuple((d, q) for d, q in p.neighborhood() if q in self.nodes)
                for p in self.nodes
            }
        return self._adjacency

    def neighbors(self, p: GridPoint) -> list[tuple[Direction, GridPoint]]:
        """Occupied neighbors of ``p`` in fixed direction order E,NNE,NNW,W,SSW,SSE."""
        if p not in self.nodes:
            raise DomainError(f"{p} is not part of the structure")
        return list(self.adjacency[p])

    def edges(self) -> set[tuple[GridPoint, GridPoint]]:
        """Induced edges as sorted node pairs."""
        out = set()
        for p in self.nodes:
            for d in (Direction.E, Direction.NNE, Direction.NNW):
                q = p.neighbor(d)
                if q in self.nodes:
                    out.add((p, q) if p <= q else (q, p))
        return out

    def bounding_box(self) -> tuple[int, int, int, int]:
        a_vals = [p.a for p in self.nodes]
        b_vals = [p.b for p in self.nodes]
        return min(a_vals), max(a_vals), min(b_vals), max(b_vals)

    # -- text format ---------------------------------------------------------

    @classmethod
    def from_text(cls, text: str) -> "AmoebotStructure":
        """Parse the one-pair-per-line format; '#' lines are comments."""
        pts: list[GridPoint] = []
        seen: set[GridPoint] = set()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise InvalidStructureError(f"line {lineno}: expected 'a b', got {raw!r}")
            try:
                p = GridPoint(int(parts[0]), int(parts[1]))
            except ValueError:
                raise InvalidStructureError(f"line {lineno}: non-integer coordinate in {raw!r}") from None
            if p in seen:
                raise InvalidStructureError(f"line {lineno}: duplicate point {p}")
            seen.add(p)
            pts.append(p)
        if not pts:
            raise InvalidStructureError("no points in input")
        return cls(pts)

    def to_text(self) -> str:
        lines = [f"{p.a} {p.b}" for p in sorted(self.nodes)]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Hole:
    """A connected component of the unoccupied complement.

    The outer hole is unbounded; its ``cells`` field stores only the portion
    inside a one-ring extension of the structure's bounding box.
    """

    kind: str  # "inner" or "outer"
    cells: frozenset[GridPoint]
    boundary: frozenset[GridPoint]


def find_holes(structure: AmoebotStructure) -> tuple[Hole, list[Hole]]:
    """Classify complement components into the outer hole and inner holes.

    Inner holes are returned sorted by their minimal cell for determinism.
    """
    a_lo, a_hi, b_lo, b_hi = structure.bounding_box()
    a_lo, a_hi, b_lo, b_hi = a_lo - 1, a_hi + 1, b_lo - 1, b_hi + 1

    def in_box(p: GridPoint) -> bool:
        return a_lo <= p.a <= a_hi and b_lo <= p.b <= b_hi

    empty = {
        GridPoint(a, b)
        for a in range(a_lo, a_hi + 1)
        for b in range(b_lo, b_hi + 1)
        if GridPoint(a, b) not in structure.nodes
    }

    components: list[set[GridPoint]] = []
    unvisited = set(empty)
    while unvisited:
        start = unvisited.pop()
        comp = {start}
        stack = [start]
        while stack:
            p = stack.pop()
            for _, q in p.neighborhood():
                if q in unvisited:
                    unvisited.discard(q)
                    comp.add(q)
                    stack.append(q)
        components.append(comp)

    corner = GridPoint(a_lo, b_lo)
    outer_cells = next(c for c in components if corner in c)

    def boundary_of(cells: set[GridPoint]) -> frozenset[GridPoint]:
        out = set()
        for c in cells:
            for _, q in c.neighborhood():
                if q in structure.nodes:
                    out.add(q)
        return frozenset(out)

    outer = Hole("outer", frozenset(outer_cells), boundary_of(outer_cells))
    inner = [
        Hole("inner", frozenset(c), boundary_of(c))
        for c in components
        if c is not outer_cells
    ]
    inner.sort(key=lambda h: min(h.cells))
    return outer, inner


# -- boundary walking ---------------------------------------------------------
#
# Boundary cycles are orbits of a successor map on directed occupied edges.
# Arriving at v heading d, the walk scans clockwise from the reverse of d
# (exclusive) and leaves toward the first occupied neighbor.  The unoccupied
# cells swept over belong to the hole the walk keeps on its left, and the
# signed turn at v is (3 - k) sixths of a full angle when k directions were
# scanned.  Summed around a cycle this is +6 for an inner hole and -6 for
# the outer one.


def boundary_step(
    occupied, u: GridPoint, v: GridPoint
) -> tuple[GridPoint, int, tuple[GridPoint, ...]]:
    """Successor of the directed boundary edge (u, v).

    Returns ``(w, turn, swept)`` where (v, w) is the next directed edge,
    turn is in sixths of 360 degrees, and swept are the unoccupied cells
    between the reverse direction and the exit direction.  Only the
    6-neighborhood of v is inspected.
    """
    rev = direction_between(v, u)
    swept: list[GridPoint] = []
    for k in range(1, 7):
        d = rev.rotated(-k)
        w = v.neighbor(d)
        if w in occupied:
            return w, 3 - k, tuple(swept)
        swept.append(w)
    raise DomainError(f"{v} has no occupied neighbor")  # pragma: no cover


def boundary_cycles(
    structure: AmoebotStructure,
) -> list[tuple[Hole, tuple[GridPoint, ...]]]:
    """Wall-following cycles, one per hole, as ordered node sequences.

    A node appears several times in a cycle when the boundary pinches at it.
    For the degenerate single-node structure the outer cycle is that node.
    """
    outer, inner = find_holes(structure)
    if structure.n == 1:
        node = next(iter(structure.nodes))
        return [(outer, (node,))]

    cell_to_hole: dict[GridPoint, Hole] = {}
    for h in [outer, *inner]:
        for c in h.cells:
            cell_to_hole[c] = h

    directed = set()
    for p in structure.nodes:
        for _, q in p.neighborhood():
            if q in structure.nodes:
                directed.add((p, q))

    cycles: list[tuple[Hole, tuple[GridPoint, ...]]] = []
    remaining = set(directed)
    for start in sorted(directed):
        if start not in remaining:
            continue
        orbit = [start]
        swept_cells: list[GridPoint] = []
        edge = start
        while True:
            w, _, swept = boundary_step(structure.nodes, *edge)
            swept_cells.extend(swept)
            edge = (edge[1], w)
            if edge == start:
                break
            orbit.append(edge)
        for e in orbit:
            remaining.discard(e)
        if not swept_cells:
            continue  # face orbit of a filled triangle, not a boundary
        holes = {cell_to_hole[c] for c in swept_cells}
        if len(holes) != 1:
            raise DomainError("boundary walk swept cells of several holes")
        cycles.append((holes.pop(), tuple(v for _, v in orbit)))

    cycles.sort(key=lambda item: (item[0].kind != "outer", min(item[0].cells)))
    return cycles


def turning_total(structure: AmoebotStructure, cycle_start: tuple[GridPoint, GridPoint]) -> int:
    """Total turning of the boundary cycle through the given directed edge."""
    total = 0
    edge = cycle_start
    while True:
        w, turn, _ = boundary_step(structure.nodes, *edge)
        total += turn
        edge = (edge[1], w)
        if edge == cycle_start:
            return total
