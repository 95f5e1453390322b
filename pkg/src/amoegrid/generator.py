"""Seeded random amoebot structures with a prescribed number of inner holes.

Structures grow by biased accretion around the origin, then hole clusters
are carved and re-validated with the flood-fill hole finder.  Generation is
deterministic per (n, holes, seed).
"""

from __future__ import annotations

import random

from .errors import AmoegridError
from .grid import AmoebotStructure, GridPoint, find_holes


def _grow_blob(n: int, rng: random.Random) -> set[GridPoint]:
    blob = {GridPoint(0, 0)}
    # insertion-ordered frontier with incrementally maintained weights keeps
    # generation deterministic and linear-ish; candidates are weighted by the
    # squared occupied-neighbor count so the blob grows chunky and carving
    # holes rarely disconnects it
    frontier: list[GridPoint] = [q for _, q in GridPoint(0, 0).neighborhood()]
    pos = {q: i for i, q in enumerate(frontier)}
    weights = [1.0] * len(frontier)
    while len(blob) < n:
        chosen = rng.choices(frontier, weights=weights, k=1)[0]
        blob.add(chosen)
        idx = pos.pop(chosen)
        last = frontier[-1]
        frontier[idx] = last
        weights[idx] = weights[-1]
        if last != chosen:
            pos[last] = idx
        frontier.pop()
        weights.pop()
        for _, q in chosen.neighborhood():
            if q in blob:
                continue
            if q in pos:
                k = sum(1 for _, r in q.neighborhood() if r in blob)
                weights[pos[q]] = float(k * k)
            else:
                pos[q] = len(frontier)
                frontier.append(q)
                k = sum(1 for _, r in q.neighborhood() if r in blob)
                weights.append(float(k * k))
    return blob


def _is_connected(pts: set[GridPoint]) -> bool:
    start = next(iter(pts))
    seen = {start}
    stack = [start]
    while stack:
        p = stack.pop()
        for _, q in p.neighborhood():
            if q in pts and q not in seen:
                seen.add(q)
                stack.append(q)
    return len(seen) == len(pts)


def _carve_one(pts: set[GridPoint], rng: random.Random, max_cluster: int) -> bool:
    """Try to carve one new hole; True on success (pts mutated)."""
    interior = sorted(
        p for p in pts if all(q in pts for _, q in p.neighborhood())
    )
    if not interior:
        return False
    structure_holes = len(find_holes(AmoebotStructure(pts))[1])
    for _ in range(40):
        seed_cell = rng.choice(interior)
        cluster = {seed_cell}
        size = rng.randint(1, max_cluster)
        while len(cluster) < size:
            base = rng.choice(sorted(cluster))
            nxt = rng.choice([q for _, q in base.neighborhood()])
            if nxt in pts:
                cluster.add(nxt)
            else:
                break
        candidate = pts - cluster
        if not candidate or not _is_connected(candidate):
            continue
        try:
            holes_after = len(find_holes(AmoebotStructure(candidate))[1])
        except AmoegridError:
            continue
        if holes_after == structure_holes + 1:
            pts -= cluster
            return True
    return False


def generate_random(n: int, holes: int, seed: int) -> AmoebotStructure:
    """Connected structure with exactly ``holes`` inner holes, about ``n`` nodes.

    The node count is exact: carved cells are replaced by growing the rim at
    positions that do not touch any hole.
    """
    if n < 1:
        raise AmoegridError("n must be positive")
    if holes > 0 and n < 7 * holes + 6:
        raise AmoegridError(f"n={n} is too small for {holes} holes")
    for attempt in range(20):
        rng = random.Random(seed * 1_000_003 + n * 4099 + holes * 131 + attempt)
        pts = _grow_blob(n, rng)
        carved = 0
        for _ in range(holes):
            if _carve_one(pts, rng, max_cluster=max(1, min(4, n // 200 + 1))):
                carved += 1
        if carved != holes:
            continue
        # Regrow to exact size without touching hole cells.
        hole_cells: set[GridPoint] = set()
        for h in find_holes(AmoebotStructure(pts))[1]:
            hole_cells |= h.cells
        forbidden = set(hole_cells)
        for c in hole_cells:
            for _, q in c.neighborhood():
                forbidden.add(q)
        guard = 0
        while len(pts) < n and guard < 10 * n:
            guard += 1
            rim = sorted(
                q
                for p in pts
                for _, q in p.neighborhood()
                if q not in pts and q not in forbidden
            )
            if not rim:
                break
            weights = [sum(1 for _, r in c.neighborhood() if c and r in pts) ** 2 for c in rim]
            pts.add(rng.choices(rim, weights=weights, k=1)[0])
        if len(pts) != n:
            continue
        structure = AmoebotStructure(pts)
        if len(find_holes(structure)[1]) == holes:
            return structure
    raise AmoegridError(
        f"could not generate a structure with n={n}, holes={holes}, seed={seed}"
    )
