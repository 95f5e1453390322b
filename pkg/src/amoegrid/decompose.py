"""Centralized decomposition into simple, geodesically convex regions.

Phase 1 splits the structure at the WNW-most and ESE-most boundary node of
every inner hole (and their y-portals), leaving simple regions.  Phase 2
reduces each simple region to tunnel regions meeting at most two gates by
pruning the y-portal tree and splitting at branch portals and multi-degree
gates.  Phase 3 makes every tunnel geodesically convex with a constant
number of x/z-portal splits per tunnel, plus median-portal splits of the
middle region when both axes leave one.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import ContractViolation, DomainError
from .grid import AmoebotStructure, Direction, GridPoint, find_holes, render_x
from .portals import AXES, Axis, Portal, PortalGraph, compute_portals, portal_graph
from .split import (
    SIDES,
    Gate,
    NodeCut,
    Region,
    SplitNodeSpec,
    resolve_spec,
    split_many,
)


def _westernmost(nodes) -> GridPoint:
    return min(nodes, key=lambda p: (render_x(p), p))


def _northernmost(nodes) -> GridPoint:
    return max(nodes, key=lambda p: (p.b, -render_x(p)))


def _side_cross_dirs(axis: Axis, side: str) -> tuple[Direction, Direction]:
    for name, up, down in SIDES[axis]:
        if name == side:
            return up, down
    raise DomainError(f"no side {side} on axis {axis.value}")  # pragma: no cover


def _touches_outside(region: Region, p: GridPoint, axis: Axis, side: str) -> bool:
    """True if ``p`` misses a neighbor on the given side of its axis line."""
    up, down = _side_cross_dirs(axis, side)
    return p.neighbor(up) not in region.nodes or p.neighbor(down) not in region.nodes


# -- phase 1 -------------------------------------------------------------------


def hole_split_specs(structure: AmoebotStructure, hole) -> list[SplitNodeSpec]:
    """The WNW-most and ESE-most boundary nodes of a hole with empty points."""
    boundary = hole.boundary
    v_wnw = min(boundary, key=lambda p: (p.a, -p.b))
    v_ese = min(boundary, key=lambda p: (-p.a, -p.b))
    specs = []
    for v, prefs in ((v_wnw, (Direction.E, Direction.SSE)), (v_ese, (Direction.W, Direction.NNW))):
        empty = None
        for d in prefs:
            if v.neighbor(d) in hole.cells:
                empty = v.neighbor(d)
                break
        if empty is None:
            raise ContractViolation(f"extreme boundary node {v} has no hole cell beside it")
        specs.append(SplitNodeSpec(v, empty))
    return specs


def phase1_simple(structure: AmoebotStructure) -> tuple[list[Region], list[Gate]]:
    """Split at the extreme boundary nodes of every inner hole."""
    root = Region.from_structure(structure)
    _, inner = find_holes(structure)
    if not inner:
        return [root], []

    portals = compute_portals(root, Axis.Y)
    owner: dict[GridPoint, Portal] = {}
    for portal in portals:
        for p in portal.nodes:
            owner[p] = portal

    by_portal: dict[int, tuple[Portal, list[NodeCut]]] = {}
    for hole in inner:
        for spec in hole_split_specs(structure, hole):
            portal = owner[spec.node]
            cut = resolve_spec(root, portal, spec)
            entry = by_portal.setdefault(portal.id, (portal, []))
            if cut not in entry[1]:
                entry[1].append(cut)

    regions = split_many(root, [entry for _, entry in sorted(by_portal.items())])
    gates = [g for r in regions for g in r.gates]
    return regions, gates


# -- phase 2 -------------------------------------------------------------------


def _prune_to_gates(pg: PortalGraph, gate_pids: set[int]) -> set[int]:
    """Ids of portals surviving iterated removal of non-gate leaves."""
    deg = {pid: len(nbrs) for pid, nbrs in pg.neighbor_map.items()}
    alive = set(deg)
    queue = deque(pid for pid in alive if deg[pid] <= 1 and pid not in gate_pids)
    while queue:
        pid = queue.popleft()
        if pid not in alive or pid in gate_pids or deg[pid] > 1:
            continue
        alive.discard(pid)
        for nb in pg.neighbor_map[pid]:
            if nb in alive:
                deg[nb] -= 1
                if deg[nb] <= 1 and nb not in gate_pids:
                    queue.append(nb)
    return alive


def phase2_tunnels(region: Region, gates: tuple[Gate, ...] | None = None) -> list[Region]:
    """Split a simple region into tunnel regions meeting at most two gates."""
    gates = region.gates if gates is None else tuple(gates)
    if len(gates) <= 1:
        return [region]

    pg = portal_graph(region, Axis.Y)
    gate_pids = {pg.portal_of(g.nodes[0]).id for g in gates}
    survivors = _prune_to_gates(pg, gate_pids)
    survivor_nodes: set[GridPoint] = set()
    for portal in pg.portals:
        if portal.id in survivors:
            survivor_nodes.update(portal.nodes)

    branch_pids = sorted(
        pid
        for pid in survivors
        if pid not in gate_pids
        and sum(1 for nb in pg.neighbor_map[pid] if nb in survivors) >= 3
    )
    by_id = {p.id: p for p in pg.portals}
    children = (
        split_many(region, [(by_id[pid], []) for pid in branch_pids])
        if branch_pids
        else [region]
    )

    tunnels: list[Region] = []
    for child in children:
        cpg = portal_graph(child, Axis.Y)
        child_survivors = {
            p.id for p in cpg.portals if p.nodes[0] in survivor_nodes
        }
        cuts: list[NodeCut] = []
        for gate in child.gates:
            gate_pid = cpg.portal_of(gate.nodes[0]).id
            adj = [
                by_id_c
                for by_id_c in cpg.neighbor_map[gate_pid]
                if by_id_c in child_survivors
            ]
            if len(adj) < 2:
                continue
            portals_ns = sorted(
                (next(p for p in cpg.portals if p.id == pid) for pid in adj),
                key=lambda p: -max(q.b for q in p.nodes),
            )
            gate_nodes = gate.node_set
            for p_i in portals_ns[1:]:
                members = p_i.node_set
                candidates = [
                    g
                    for g in gate.nodes
                    if any(q in members for _, q in child.adjacency[g])
                ]
                if not candidates:
                    raise ContractViolation("gate lost adjacency to a neighbor portal")
                g_i = _northernmost(candidates)
                cut = NodeCut(g_i, gate.axis, gate.side)
                if cut not in cuts:
                    cuts.append(cut)
        if cuts:
            tunnels.extend(split_many(child, [], cuts))
        else:
            tunnels.append(child)
    return tunnels


# -- phase 3 -------------------------------------------------------------------


@dataclass(frozen=True)
class AxisSplitInfo:
    """Per-axis (x or z) record of the first splitting round of a tunnel."""

    axis: str
    case: int
    upper: tuple[GridPoint, ...] | None = None  # case 1 northern portal
    lower: tuple[GridPoint, ...] | None = None  # case 1 southern portal
    near: tuple[GridPoint, ...] | None = None  # case 2 portal at gate G
    far: tuple[GridPoint, ...] | None = None  # case 2 portal at gate G'
    b_upper: GridPoint | None = None
    b_lower: GridPoint | None = None
    b_near: GridPoint | None = None
    b_far: GridPoint | None = None
    near_side: str | None = None  # side of `near` facing the middle
    far_side: str | None = None
    near_crossing: GridPoint | None = None  # node shared with the own gate
    far_crossing: GridPoint | None = None


@dataclass(frozen=True)
class MedianInfo:
    """Per-axis record of the point-gate splitting of region M."""

    axis: str
    d: int
    portal: tuple[GridPoint, ...]
    same_region: bool
    b_node: GridPoint | None


@dataclass
class TunnelCaseData:
    tunnel_lineage: tuple[int, ...] = ()
    gate_count: int = 0
    x: AxisSplitInfo | None = None
    z: AxisSplitInfo | None = None
    m_present: bool = False
    g: GridPoint | None = None
    g_prime: GridPoint | None = None
    medians: dict[str, MedianInfo] = field(default_factory=dict)


def _gate_order_key(g: Gate) -> tuple:
    return (g.line, -max(p.b for p in g.nodes), g.nodes[0])


def _portal_side_toward(pg: PortalGraph, pid: int, other_pid: int) -> str:
    """Side of portal ``pid`` on which its neighbor ``other_pid`` lies."""
    axis = pg.axis
    line = next(p for p in pg.portals if p.id == pid).line
    other_line = next(p for p in pg.portals if p.id == other_pid).line
    names = [s[0] for s in SIDES[axis]]
    # First listed side is the one whose cross directions increase the line key.
    up_side, down_side = names
    probe = next(p for p in pg.portals if p.id == pid).nodes[0]
    up_dir = _side_cross_dirs(axis, up_side)[0]
    if axis.line_key(probe.neighbor(up_dir)) > line:
        plus, minus = up_side, down_side
    else:  # the y axis: WNW cross directions decrease the line key a
        plus, minus = down_side, up_side
    return plus if other_line > line else minus


def _axis_round(
    tunnel: Region, q: Axis, gate_a: Gate, gate_b: Gate
) -> tuple[list[tuple[Portal, list[NodeCut]]], AxisSplitInfo]:
    """Splitting portals and node cuts of the first phase-3 round for one axis."""
    qpg = portal_graph(tunnel, q)
    pids_a = {qpg.portal_of(u).id for u in gate_a.nodes}
    pids_b = {qpg.portal_of(u).id for u in gate_b.nodes}
    by_id = {p.id: p for p in qpg.portals}
    common = pids_a & pids_b
    gate_nodes = gate_a.node_set | gate_b.node_set

    if common:
        lines = sorted(common, key=lambda pid: by_id[pid].line)
        p_down, p_up = by_id[lines[0]], by_id[lines[-1]]
        up_side, down_side = [s[0] for s in SIDES[q]]
        splits: list[tuple[Portal, list[NodeCut]]] = []
        info_nodes = {}
        for portal, side, tag in ((p_up, up_side, "b_upper"), (p_down, down_side, "b_lower")):
            candidates = [
                p
                for p in portal.nodes
                if p not in gate_nodes and _touches_outside(tunnel, p, q, side)
            ]
            cuts = []
            if candidates:
                b = _westernmost(candidates)
                cuts.append(NodeCut(b, q, side))
                info_nodes[tag] = b
            splits.append((portal, cuts))
        if p_up.id == p_down.id:
            merged_cuts = splits[0][1] + splits[1][1]
            splits = [(p_up, merged_cuts)]
        info = AxisSplitInfo(
            q.value,
            1,
            upper=p_up.nodes,
            lower=p_down.nodes,
            b_upper=info_nodes.get("b_upper"),
            b_lower=info_nodes.get("b_lower"),
        )
        return splits, info

    dist_b = qpg.distances_from(sorted(pids_b))
    best = min(dist_b[pid] for pid in pids_a)
    near_ids = [pid for pid in sorted(pids_a) if dist_b[pid] == best]
    if len(near_ids) != 1:
        raise ContractViolation(f"{q.value}-portal nearest to the far gate is not unique")
    near = by_id[near_ids[0]]

    dist_a = qpg.distances_from(sorted(pids_a))
    best = min(dist_a[pid] for pid in pids_b)
    far_ids = [pid for pid in sorted(pids_b) if dist_a[pid] == best]
    if len(far_ids) != 1:
        raise ContractViolation(f"{q.value}-portal nearest to the near gate is not unique")
    far = by_id[far_ids[0]]

    def toward(pid: int, dist: dict[int, int]) -> str:
        if dist[pid] == 0:
            raise ContractViolation("case 2 portal intersects both gates")
        nxt = next(
            nb for nb in qpg.neighbor_map[pid] if dist.get(nb, -2) == dist[pid] - 1
        )
        return _portal_side_toward(qpg, pid, nxt)

    splits = []
    info_nodes = {}
    sides = {}
    crossings = {}
    for portal, own_gate, dist, tag in (
        (near, gate_a, dist_b, "near"),
        (far, gate_b, dist_a, "far"),
    ):
        side = toward(portal.id, dist)
        sides[tag] = side
        crossing = own_gate.node_set & portal.node_set
        crossings[tag] = min(crossing) if crossing else None
        candidates = [
            p
            for p in portal.nodes
            if p not in own_gate.node_set and _touches_outside(tunnel, p, q, side)
        ]
        cuts = []
        if candidates:
            b = _westernmost(candidates)
            cuts.append(NodeCut(b, q, side))
            info_nodes[tag] = b
        splits.append((portal, cuts))
    info = AxisSplitInfo(
        q.value,
        2,
        near=near.nodes,
        far=far.nodes,
        b_near=info_nodes.get("near"),
        b_far=info_nodes.get("far"),
        near_side=sides["near"],
        far_side=sides["far"],
        near_crossing=crossings["near"],
        far_crossing=crossings["far"],
    )
    return splits, info


def _pick_point_gate(m_region: Region, info: AxisSplitInfo, info_z: AxisSplitInfo, end: str) -> GridPoint:
    """The single-node gate of M on one side.

    It is the crossing point of the two case-2 gates, or failing that the
    x- then the z-side split node, whichever lies in M.  This is the locally
    checkable identification; in degenerate tunnels several candidates can
    exist at once and the preference order fixes the choice.
    """
    near_x = frozenset(info.near if end == "near" else info.far)
    near_z = frozenset(info_z.near if end == "near" else info_z.far)
    b_x = info.b_near if end == "near" else info.b_far
    b_z = info_z.b_near if end == "near" else info_z.b_far
    inter = near_x & near_z
    if inter:
        w = next(iter(inter))
        if w in m_region.nodes:
            return w
    for b in (b_x, b_z):
        if b is not None and b in m_region.nodes:
            return b
    raise ContractViolation("no point-gate candidate inside the middle region")


def occupied_run_count(node_set, p: GridPoint) -> int:
    """Maximal cyclic runs of set members around ``p``; >= 2 marks a cut node.

    Valid as a cut test only for hole-free sets, where the two local runs
    cannot reconnect around an enclosed empty cell.
    """
    ring = [p.neighbor(d) in node_set for d in (
        Direction.E, Direction.NNE, Direction.NNW, Direction.W, Direction.SSW, Direction.SSE,
    )]
    if all(ring):
        return 0
    runs = 0
    for i in range(6):
        if ring[i] and not ring[i - 1]:
            runs += 1
    return runs


def _point_gate_plan(
    m_region: Region, g: GridPoint, g2: GridPoint
) -> tuple[list[tuple[Portal, list[NodeCut]]], dict[str, MedianInfo]]:
    graphs = {q: portal_graph(m_region, q) for q in AXES}
    dists = {}
    for q in AXES:
        pg = graphs[q]
        pid_g, pid_g2 = pg.portal_of(g).id, pg.portal_of(g2).id
        from_g = pg.distances_from([pid_g])
        from_g2 = pg.distances_from([pid_g2])
        dists[q] = (pid_g, pid_g2, from_g, from_g2)

    # S_M: nodes whose portal lies on the g-g' tree path for every axis.
    s_m = set()
    for v in m_region.nodes:
        on_all = True
        for q in AXES:
            pid_g, pid_g2, from_g, from_g2 = dists[q]
            pid = graphs[q].portal_of(v).id
            if from_g[pid] + from_g2[pid] != from_g[pid_g2]:
                on_all = False
                break
        if on_all:
            s_m.add(v)
    cut_set = {v for v in s_m if occupied_run_count(s_m, v) >= 2}

    splits: list[tuple[Portal, list[NodeCut]]] = []
    medians: dict[str, MedianInfo] = {}
    for q in AXES:
        pg = graphs[q]
        pid_g, pid_g2, from_g, from_g2 = dists[q]
        d_q = from_g[pid_g2]
        want_g = (d_q + 1) // 2
        want_g2 = d_q // 2
        median_ids = [
            p.id
            for p in pg.portals
            if from_g[p.id] == want_g and from_g2[p.id] == want_g2
        ]
        if len(median_ids) != 1:
            raise ContractViolation(f"median {q.value}-portal is not unique")
        median = next(p for p in pg.portals if p.id == median_ids[0])

        if d_q == 0:
            same = True
            sides = [s[0] for s in SIDES[q]]
        elif d_q == 1:
            same = True
            sides = [_portal_side_toward(pg, median.id, pid_g)]
        else:
            toward_g = next(
                nb for nb in pg.neighbor_map[median.id] if from_g.get(nb, -2) == want_g - 1
            )
            toward_g2 = next(
                nb for nb in pg.neighbor_map[median.id] if from_g2.get(nb, -2) == want_g2 - 1
            )
            side_g = _portal_side_toward(pg, median.id, toward_g)
            side_g2 = _portal_side_toward(pg, median.id, toward_g2)
            same = side_g == side_g2
            sides = [side_g]

        cuts: list[NodeCut] = []
        b_node = None
        if same:
            on_portal = cut_set & median.node_set
            if on_portal:
                b_node = _westernmost(on_portal)
                cuts = [NodeCut(b_node, q, s) for s in sides]
        splits.append((median, cuts))
        medians[q.value] = MedianInfo(q.value, d_q, median.nodes, same, b_node)
    return splits, medians


def point_gate_split(m_region: Region, g: GridPoint, g2: GridPoint) -> list[Region]:
    """Split the middle region at its three median portals (single-node gates)."""
    if g not in m_region.nodes or g2 not in m_region.nodes:
        raise DomainError("point gates must lie in the region")
    splits, _ = _point_gate_plan(m_region, g, g2)
    return split_many(m_region, splits)


def phase3_convex(tunnel: Region) -> tuple[list[Region], TunnelCaseData]:
    """Split a tunnel region into geodesically convex regions."""
    data = TunnelCaseData(tunnel_lineage=tunnel.lineage, gate_count=len(tunnel.gates))
    if len(tunnel.gates) < 2:
        return [tunnel], data
    if len(tunnel.gates) > 2:
        raise ContractViolation(
            f"tunnel meets {len(tunnel.gates)} gates; phase 2 must leave at most two"
        )
    gate_a, gate_b = sorted(tunnel.gates, key=_gate_order_key)

    splits: list[tuple[Portal, list[NodeCut]]] = []
    infos = {}
    for q in (Axis.X, Axis.Z):
        axis_splits, info = _axis_round(tunnel, q, gate_a, gate_b)
        splits.extend(axis_splits)
        infos[q.value] = info
    data.x, data.z = infos["x"], infos["z"]

    children = split_many(tunnel, splits)

    if data.x.case == 2 and data.z.case == 2:
        near_x = frozenset(data.x.near)
        near_z = frozenset(data.z.near)
        far_x = frozenset(data.x.far)
        far_z = frozenset(data.z.far)

        def contact(child: Region, q: Axis, info: AxisSplitInfo, end: str) -> bool:
            pset = frozenset(info.near if end == "near" else info.far)
            side = info.near_side if end == "near" else info.far_side
            b = info.b_near if end == "near" else info.b_far
            crossing = info.near_crossing if end == "near" else info.far_crossing
            for g in child.gates:
                if g.axis is not q or g.side != side:
                    continue
                if not g.node_set <= pset:
                    continue
                if b is not None and crossing is not None and crossing in g.node_set:
                    continue  # severed corner piece still holding the own gate
                return True
            return False

        m_candidates = [
            r
            for r in children
            if (contact(r, Axis.X, data.x, "near") or contact(r, Axis.Z, data.z, "near"))
            and (contact(r, Axis.X, data.x, "far") or contact(r, Axis.Z, data.z, "far"))
        ]
        if not m_candidates:
            raise ContractViolation("no middle region meets both sides' gates")
        # Collapsed tunnels can leave several slivers qualifying; take the
        # canonically smallest so both engines agree.
        m_region = min(m_candidates, key=lambda r: tuple(sorted(r.nodes)))
        data.m_present = True
        g = _pick_point_gate(m_region, data.x, data.z, "near")
        g2 = _pick_point_gate(m_region, data.x, data.z, "far")
        data.g, data.g_prime = g, g2
        plan, medians = _point_gate_plan(m_region, g, g2)
        data.medians = medians
        m_children = split_many(m_region, plan)
        children = [r for r in children if r is not m_region] + m_children
    return children, data


# -- full pipeline -------------------------------------------------------------


@dataclass
class Decomposition:
    """Final regions plus the artifacts of each phase."""

    regions: list[Region]
    phase1_gates: list[Gate]
    phase1_region_count: int
    tunnel_count: int
    tunnel_cases: list[TunnelCaseData]
    hole_count: int

    def coverage(self) -> set[GridPoint]:
        out: set[GridPoint] = set()
        for r in self.regions:
            out |= r.nodes
        return out

    def canonical(self) -> tuple:
        """Region multiset as sorted (nodes, edges) pairs, for comparisons."""
        return tuple(
            sorted((tuple(sorted(r.nodes)), tuple(sorted(r.edges))) for r in self.regions)
        )


def decompose(structure: AmoebotStructure) -> Decomposition:
    """Run all three phases and renumber regions deterministically."""
    regions1, gates = phase1_simple(structure)
    tunnels: list[Region] = []
    for r in regions1:
        tunnels.extend(phase2_tunnels(r))
    final: list[Region] = []
    cases: list[TunnelCaseData] = []
    for t in tunnels:
        rs, data = phase3_convex(t)
        final.extend(rs)
        cases.append(data)
    final.sort(key=lambda r: r.lineage)
    final = [
        Region(r.nodes, r.edges, r.gates, id=i, lineage=r.lineage)
        for i, r in enumerate(final)
    ]
    _, inner = find_holes(structure)
    return Decomposition(
        regions=final,
        phase1_gates=gates,
        phase1_region_count=len(regions1),
        tunnel_count=len(tunnels),
        tunnel_cases=cases,
        hole_count=len(inner),
    )
