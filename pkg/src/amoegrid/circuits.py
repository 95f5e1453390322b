"""Synchronous amoebot simulator with reconfigurable circuits.

Each edge between neighbors carries ``c`` pins per side.  An amoebot groups
its pins into partition sets; connected partition sets form circuits, and a
beep sent on a set is heard next round by every set of the same circuit,
with no information about origin or multiplicity.

Rounds are fully synchronous: activations read the previous round's inbox
and their own state, emit a new pin configuration plus beeps, and beeps
propagate on the updated configuration.  The implementation is array-based;
protocols may be written per amoebot (reference style, used in tests) or
vectorized, and both funnel through the same delivery path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import RoundBudgetExceeded, SimulationFault
from .grid import DIRECTIONS, AmoebotStructure, GridPoint

OPPOSITE_SLOT = np.array([3, 4, 5, 0, 1, 2], dtype=np.int64)  # E,NNE,NNW,W,SSW,SSE

#: labels below this bound are free for protocol circuits; idle pins park
#: above it, so every parked pin pair forms a private two-pin channel.
#: Sixteen labels per directed-edge visit times up to six visits per node.
STAGE_LABELS = 96


def mix64(*columns) -> np.ndarray:
    """Deterministic 64-bit mixer over integer arrays (splitmix finalizer)."""
    acc = np.zeros(1, dtype=np.uint64)
    for col in columns:
        acc = acc + np.asarray(col, dtype=np.int64).astype(np.uint64) * np.uint64(
            0x9E3779B97F4A7C15
        )
        z = acc
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        acc = z ^ (z >> np.uint64(31))
    return acc


@dataclass
class Circuit:
    """A connected component of partition sets."""

    partition_sets: tuple[tuple[GridPoint, int], ...]  # (amoebot, local label)
    amoebots: tuple[GridPoint, ...]


@dataclass
class SimulationTrace:
    seed: int
    nhat: int
    rounds: int = 0
    phase_rounds: dict[str, int] = field(default_factory=dict)
    events: list[str] = field(default_factory=list)
    log_events: bool = False
    memory_audit: dict[str, int] = field(default_factory=dict)
    memory_warnings: list[str] = field(default_factory=list)

    def enter_phase(self, name: str) -> "_PhaseMeter":
        return _PhaseMeter(self, name)

    def note(self, message: str) -> None:
        if self.log_events:
            self.events.append(f"[{self.rounds}] {message}")

    def export_text(self) -> str:
        lines = [
            f"seed: {self.seed}",
            f"nhat: {self.nhat}",
            f"total_rounds: {self.rounds}",
        ]
        for name, r in self.phase_rounds.items():
            lines.append(f"phase {name}: {r}")
        for name in sorted(self.memory_audit):
            lines.append(f"register {name}: max {self.memory_audit[name]}")
        for w in self.memory_warnings:
            lines.append(f"memory warning: {w}")
        if self.log_events:
            lines.extend(self.events)
        return "\n".join(lines) + "\n"


class _PhaseMeter:
    def __init__(self, trace: SimulationTrace, name: str):
        self.trace = trace
        self.name = name

    def __enter__(self):
        self._start = self.trace.rounds
        return self

    def __exit__(self, *exc):
        spent = self.trace.rounds - self._start
        self.trace.phase_rounds[self.name] = (
            self.trace.phase_rounds.get(self.name, 0) + spent
        )
        return False


class World:
    """Array-backed amoebot world: geometry, pins, partition sets, beeps."""

    def __init__(self, structure: AmoebotStructure, c: int = 2, seed: int = 0, nhat: int | None = None):
        if c < 1:
            raise SimulationFault("need at least one pin per edge")
        self.structure = structure
        self.c = c
        self.seed = seed
        self.nodes: list[GridPoint] = sorted(structure.nodes)
        self.index: dict[GridPoint, int] = {p: i for i, p in enumerate(self.nodes)}
        self.n = len(self.nodes)
        self.nhat = nhat if nhat is not None else self.n
        self.S = STAGE_LABELS + 6 * c  # stage labels plus one parking label per pin

        self.a = np.array([p.a for p in self.nodes], dtype=np.int64)
        self.b = np.array([p.b for p in self.nodes], dtype=np.int64)
        nbr = np.full((self.n, 6), -1, dtype=np.int64)
        for i, p in enumerate(self.nodes):
            for d_idx, d in enumerate(DIRECTIONS):
                q = p.neighbor(d)
                j = self.index.get(q)
                if j is not None:
                    nbr[i, d_idx] = j
        self.nbr = nbr

        # Flattened pin table: pin (i, d, k) at row i*6c + d*c + k.
        self.pin_owner = np.repeat(np.arange(self.n), 6 * c)
        dd = np.tile(np.repeat(np.arange(6), c), self.n)
        kk = np.tile(np.arange(c), 6 * self.n)
        self.pin_dir = dd
        self.pin_k = kk
        partner_node = nbr[self.pin_owner, dd]
        self.pin_live = partner_node >= 0
        self.pin_partner = np.where(
            self.pin_live,
            partner_node * (6 * c) + OPPOSITE_SLOT[dd] * c + kk,
            -1,
        )

        # Default configuration: every pin isolated in its own parked set.
        self.pset = np.tile(
            STAGE_LABELS + np.arange(6 * c, dtype=np.int32), self.n
        ).reshape(self.n, 6 * c)
        self._dirty = True
        self._comp_of = None
        self._n_comp = 0
        self.rng_counter = np.zeros(self.n, dtype=np.int64)
        self._ref_labels: dict[int, dict] = {}

    # -- configuration -------------------------------------------------------

    def reset_pins_isolated(self) -> None:
        self.pset = np.tile(
            STAGE_LABELS + np.arange(6 * self.c, dtype=np.int32), self.n
        ).reshape(self.n, 6 * self.c)
        self.mark_dirty()

    def park_label(self, d_idx: int, k: int) -> int:
        """Label a parked pin sits on: its edge is a private 2-pin channel."""
        return STAGE_LABELS + d_idx * self.c + k

    def slot(self, d_idx: int, k: int) -> int:
        return d_idx * self.c + k

    def mark_dirty(self) -> None:
        self._dirty = True

    def coins(self, tag: int, mask: np.ndarray) -> np.ndarray:
        """One fresh coin per masked amoebot from its private stream."""
        out = np.zeros(self.n, dtype=bool)
        idx = np.flatnonzero(mask)
        if idx.size:
            vals = mix64(self.seed, self.a[idx], self.b[idx], tag, self.rng_counter[idx])
            out[idx] = (vals & np.uint64(1)).astype(bool)
            self.rng_counter[idx] += 1
        return out

    # -- circuits and delivery -------------------------------------------------

    def _recompute_circuits(self) -> None:
        # Components are computed over stage-labeled pins only.  A parked pin
        # (label >= STAGE_LABELS, always its own slot's label) forms a private
        # two-pin channel with its partner, handled directly in deliver();
        # where a live edge joins a stage pin to a parked pin, the parked side
        # is absorbed into the stage circuit.
        flat = self.pset.reshape(-1)
        stage = flat < STAGE_LABELS
        gid = self.pin_owner * STAGE_LABELS + np.minimum(flat, STAGE_LABELS - 1)
        live = self.pin_live
        both = live & stage & stage[np.where(live, self.pin_partner, 0)]
        rows = gid[both]
        cols = gid[self.pin_partner[both]]
        used, inverse = np.unique(
            np.concatenate([rows, cols]) if len(rows) else np.zeros(0, dtype=np.int64),
            return_inverse=True,
        )
        m = len(used)
        half = len(rows)
        if m:
            graph = coo_matrix(
                (np.ones(half, dtype=np.int8), (inverse[:half], inverse[half:])),
                shape=(m, m),
            )
            n_used, labels_used = connected_components(graph, directed=False)
        else:
            n_used, labels_used = 0, np.zeros(0, dtype=np.int64)
        lookup = np.full(self.n * STAGE_LABELS, -1, dtype=np.int64)
        if m:
            lookup[used] = labels_used
        self._stage_pin_comp = np.full(self.n * 6 * self.c, -1, dtype=np.int64)
        stage_rows = np.flatnonzero(stage)
        comp = lookup[gid[stage_rows]]
        fresh = comp < 0
        if fresh.any():
            _, inv = np.unique(gid[stage_rows][fresh], return_inverse=True)
            comp[fresh] = n_used + inv
            n_used += int(inv.max()) + 1 if inv.size else 0
        self._stage_pin_comp[stage_rows] = comp
        self._n_comp = max(n_used, 1)
        # caches driving fast delivery
        self._stage_rows = stage_rows
        self._stage_comps = comp
        self._stage_owners = self.pin_owner[stage_rows]
        self._stage_labels = flat[stage_rows]
        set_comp = np.full((self.n, STAGE_LABELS), -1, dtype=np.int32)
        set_comp[self._stage_owners, self._stage_labels] = comp
        self._set_comp = set_comp
        partner = np.where(stage_rows < len(self.pin_partner), self.pin_partner[stage_rows], -1)
        live_here = self.pin_live[stage_rows]
        parked_partner = np.where(
            live_here & (partner >= 0) & ~stage[np.maximum(partner, 0)], partner, -1
        )
        keepers = parked_partner >= 0
        self._absorb_stage_comp = comp[keepers]
        absorbed = parked_partner[keepers]
        self._absorb_parked_owner = self.pin_owner[absorbed]
        self._absorb_parked_label = flat[absorbed]
        self._dirty = False

    def deliver(self, send: np.ndarray) -> np.ndarray:
        """One synchronous beep exchange on the current pin configuration.

        Cost scales with the stage-labeled pins plus the actual beeps; a
        parked pin is a private two-pin channel handled straight from the
        send side.
        """
        if self._dirty:
            self._recompute_circuits()
        flat = self.pset.reshape(-1)
        recv = np.zeros((self.n, self.S), dtype=bool)
        hot = np.zeros(self._n_comp + 1, dtype=bool)

        stage_send = np.argwhere(send[:, :STAGE_LABELS])
        if stage_send.size:
            comps = self._set_comp[stage_send[:, 0], stage_send[:, 1]]
            hot[comps[comps >= 0]] = True

        park_send = np.argwhere(send[:, STAGE_LABELS:])
        for i, slot in park_send:
            r = i * 6 * self.c + slot
            if flat[r] != STAGE_LABELS + slot:
                continue  # that pin was rewired into a stage set
            recv[i, STAGE_LABELS + slot] = True  # own echo
            if not self.pin_live[r]:
                continue
            pr = int(self.pin_partner[r])
            if flat[pr] < STAGE_LABELS:
                c = self._stage_pin_comp[pr]
                if c >= 0:
                    hot[c] = True
            else:
                recv[self.pin_owner[pr], flat[pr]] = True

        if self._stage_rows.size:
            heard = hot[self._stage_comps]
            if heard.any():
                recv[self._stage_owners[heard], self._stage_labels[heard]] = True
        if self._absorb_stage_comp.size:
            heard = hot[self._absorb_stage_comp]
            if heard.any():
                recv[self._absorb_parked_owner[heard], self._absorb_parked_label[heard]] = True
        return recv

    def circuits_of(self) -> list[Circuit]:
        """Explicit circuit objects over sets that own at least one live pin."""
        if self._dirty:
            self._recompute_circuits()
        flat = self.pset.reshape(-1)
        stage = flat < STAGE_LABELS
        used: dict[tuple, set[tuple[int, int]]] = {}
        for r in np.flatnonzero(self.pin_live):
            if stage[r]:
                key = ("s", int(self._stage_pin_comp[r]))
            else:
                pr = int(self.pin_partner[r])
                if stage[pr]:
                    key = ("s", int(self._stage_pin_comp[pr]))
                else:
                    key = ("p", min(r, pr))
            used.setdefault(key, set()).add((int(self.pin_owner[r]), int(flat[r])))
        out = []
        for key in used:
            sets = sorted(used[key])
            members = tuple(sorted({self.nodes[o] for o, _ in sets}))
            out.append(Circuit(tuple((self.nodes[o], l) for o, l in sets), members))
        out.sort(key=lambda circ: circ.partition_sets[0])
        return out

    # -- per-amoebot reference semantics ---------------------------------------

    def step(self, activation: Callable, states: dict, inbox: dict, order: Iterable[int] | None = None):
        """One reference round: activations in any order, then delivery.

        ``activation(node, state, inbox_labels) -> (state, pins, beeps)``
        where pins maps a label to the (dir_idx, k) slots it groups and beeps
        is the set of labels beeped on.  Returns (states, inboxes) for the
        next round; the result is independent of ``order``.
        """
        new_states: dict[GridPoint, object] = {}
        send = np.zeros((self.n, self.S), dtype=bool)
        idx_order = list(range(self.n)) if order is None else list(order)
        for i in idx_order:
            p = self.nodes[i]
            state, pins, beeps = activation(p, states.get(p), inbox.get(p, frozenset()))
            new_states[p] = state
            if pins is not None:
                labels = sorted(pins)
                if len(labels) > self.S:
                    raise SimulationFault(f"{p}: too many partition sets")
                label_to_int = {lab: j for j, lab in enumerate(labels)}
                claimed = set()
                row = self.pset[i]
                for lab, slots in pins.items():
                    for (d_idx, k) in slots:
                        if (d_idx, k) in claimed:
                            raise SimulationFault(f"{p}: pin ({d_idx},{k}) in two sets")
                        claimed.add((d_idx, k))
                        row[self.slot(d_idx, k)] = label_to_int[lab]
                self._ref_labels[i] = label_to_int
                self.mark_dirty()
            for lab in beeps:
                mapped = self._ref_labels.get(i, {}).get(lab)
                if mapped is None:
                    raise SimulationFault(f"{p}: beep on unknown set {lab!r}")
                send[i, mapped] = True
        recv = self.deliver(send)
        new_inbox: dict[GridPoint, frozenset] = {}
        for i in idx_order:
            p = self.nodes[i]
            heard = {
                lab for lab, j in self._ref_labels.get(i, {}).items() if recv[i, j]
            }
            new_inbox[p] = frozenset(heard)
        return new_states, new_inbox


class Protocol:
    """Vectorized protocol driven by ``run_protocol``.

    Subclasses implement ``start`` and ``step``; ``step`` returns the send
    matrix for this round (or None for an empty round) and may reconfigure
    ``world.pset`` (marking it dirty) before returning.
    """

    name = "protocol"
    min_c = 1
    register_whitelist: frozenset[str] = frozenset()

    def start(self, world: World) -> None:  # pragma: no cover - interface
        raise NotImplementedError

    def step(self, world: World, recv: np.ndarray) -> np.ndarray | None:  # pragma: no cover
        raise NotImplementedError

    def finished(self) -> bool:  # pragma: no cover - interface
        raise NotImplementedError

    def registers(self) -> dict[str, np.ndarray]:
        return {}


def audit_registers(protocol: Protocol, trace: SimulationTrace, nhat: int) -> None:
    """Record per-register maxima; flag values that grow beyond O(log^2 n)."""
    limit = max(64, 4 * int(np.log2(max(nhat, 2))) ** 2)
    for name, arr in protocol.registers().items():
        if arr.size == 0:
            continue
        peak = int(np.max(np.abs(arr)))
        trace.memory_audit[f"{protocol.name}.{name}"] = peak
        if peak > limit and name not in protocol.register_whitelist:
            trace.memory_warnings.append(
                f"{protocol.name}.{name} reached {peak} (> {limit})"
            )


def run_protocol(
    structure: AmoebotStructure,
    protocol: Protocol,
    seed: int = 0,
    round_budget: int | None = None,
    c: int | None = None,
    nhat: int | None = None,
    world: World | None = None,
    trace: SimulationTrace | None = None,
):
    """Run one protocol to completion; returns (protocol, trace)."""
    if world is None:
        world = World(structure, c=c or max(2, protocol.min_c), seed=seed, nhat=nhat)
    if world.c < protocol.min_c:
        raise SimulationFault(
            f"{protocol.name} needs {protocol.min_c} pins per edge, world has {world.c}"
        )
    if trace is None:
        trace = SimulationTrace(seed=seed, nhat=world.nhat)
    budget = round_budget if round_budget is not None else 64 * (world.nhat.bit_length() + 1)
    protocol.start(world)
    recv = np.zeros((world.n, world.S), dtype=bool)
    while not protocol.finished():
        send = protocol.step(world, recv)
        if send is None:
            send = np.zeros((world.n, world.S), dtype=bool)
        recv = world.deliver(send)
        trace.rounds += 1
        if trace.rounds > budget:
            raise RoundBudgetExceeded(
                f"{protocol.name} exceeded {budget} rounds", trace=trace
            )
    audit_registers(protocol, trace, world.nhat)
    return protocol, trace
