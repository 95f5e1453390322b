"""Counting PASC: bit-serial rank/count streaming over element forests.

Elements (visits or portals) are joined by primary/secondary track pairs.
Active elements cross the tracks, passive ones pass them straight, so the
track on which the root's beep arrives encodes the parity of active
elements on the root path.  With the active set halving each iteration and
a sticky flip correction for passive hearers, element e learns, least
significant bit first, the count of marked elements strictly between the
root and e.  Iteration count is fixed from an upper bound on the counts,
which keeps every instance on the same round schedule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..circuits import Protocol, World

PinRef = tuple[int, int, int]  # (node index, direction index, pin k)


@dataclass
class ElementForest:
    """Rooted forest of elements with wiring pins.

    ``up_p``/``up_s`` point toward the parent; ``dn_p``/``dn_s`` collect the
    matching pins toward all children; ``int_p``/``int_s`` are the two
    internal tracks that carry the signal through multi-node elements.
    ``bcast`` gives per-node instance-circuit pins (label 15 reserved).
    """

    world: World
    parent: np.ndarray  # (E,) element id or -1
    instance: np.ndarray  # (E,)
    members: list[np.ndarray]
    up_p: list[list[PinRef]]
    up_s: list[list[PinRef]]
    dn_p: list[list[PinRef]]
    dn_s: list[list[PinRef]]
    int_p: list[list[PinRef]]
    int_s: list[list[PinRef]]
    label_a: list[dict[int, int]]  # per element: node -> label of set A
    label_b: list[dict[int, int]]
    bcast: dict[int, list[tuple[int, int]]] = field(default_factory=dict)
    bcast_label: int = 47

    @property
    def ne(self) -> int:
        return len(self.parent)

    def wire(self, active: np.ndarray, reset: bool = True) -> None:
        """Configure pins for one parity round given the active element set."""
        world = self.world
        if reset:
            world.reset_pins_isolated()
        pset = world.pset
        c = world.c
        for node, pins in self.bcast.items():
            for d, k in pins:
                pset[node, d * c + k] = self.bcast_label
        for e in range(self.ne):
            la, lb = self.label_a[e], self.label_b[e]
            a_pins = list(self.up_p[e]) + list(self.int_p[e])
            b_pins = list(self.up_s[e]) + list(self.int_s[e])
            if active[e]:
                a_pins += self.dn_s[e]
                b_pins += self.dn_p[e]
            else:
                a_pins += self.dn_p[e]
                b_pins += self.dn_s[e]
            for i, d, k in a_pins:
                pset[i, d * c + k] = la[i]
            for i, d, k in b_pins:
                pset[i, d * c + k] = lb[i]
        world.mark_dirty()

    def hears_b(self, recv: np.ndarray) -> np.ndarray:
        """Per element: did its secondary-parity set receive a beep."""
        out = np.zeros(self.ne, dtype=bool)
        for e in range(self.ne):
            for i, lab in self.label_b[e].items():
                if recv[i, lab]:
                    out[e] = True
                    break
        return out

    def root_send(self, send: np.ndarray) -> None:
        """Roots inject the stream on their set A (one member suffices)."""
        for e in np.flatnonzero(self.parent < 0):
            la = self.label_a[int(e)]
            if la:
                i, lab = next(iter(sorted(la.items())))
                send[i, lab] = True


@dataclass
class Meter:
    """Round counter shared by pipeline stages."""

    rounds: int = 0


def run_counting_pasc(
    world: World,
    forests: list[ElementForest],
    marked: list[np.ndarray],
    iters: int,
    meter: Meter,
    echo=None,
) -> list[np.ndarray]:
    """Run ``iters`` lockstep counting iterations; one round per iteration.

    ``streams[s][e, j]`` is bit j of the count of marked elements strictly
    before e in forest s.  ``echo(j, bits_list) -> extra rounds`` lets the
    caller interleave per-iteration rounds (e.g. storing bits in blocks).
    """
    if len(forests) != len(marked):
        raise ValueError("one mark vector per forest")
    active = [m.copy() for m in marked]
    flip = [np.zeros(f.ne, dtype=bool) for f in forests]
    streams = [np.zeros((f.ne, iters), dtype=bool) for f in forests]
    for j in range(iters):
        send = np.zeros((world.n, world.S), dtype=bool)
        world.reset_pins_isolated()
        for forest, act in zip(forests, active):
            forest.wire(act, reset=False)
            forest.root_send(send)
        recv = world.deliver(send)
        meter.rounds += 1
        bits_now = []
        for s, forest in enumerate(forests):
            heard = forest.hears_b(recv)
            bits = heard ^ flip[s]
            streams[s][:, j] = bits
            active[s] &= ~bits
            flip[s] |= bits
            bits_now.append(bits)
        if echo is not None:
            echo(j, bits_now)
    return streams


class CountingPascProtocol(Protocol):
    """run_protocol adapter around the same iteration logic, for standalone use."""

    name = "counting-pasc"
    min_c = 10

    def __init__(self, forests, marked, iters):
        self.forests = forests
        self.active = [m.copy() for m in marked]
        self.flip = [np.zeros(f.ne, dtype=bool) for f in forests]
        self.iters = iters
        self.it = 0
        self.done = False
        self.streams = [np.zeros((f.ne, iters), dtype=bool) for f in forests]

    def start(self, world: World) -> None:
        pass

    def step(self, world: World, recv: np.ndarray):
        if self.it > 0:
            for s, forest in enumerate(self.forests):
                bits = forest.hears_b(recv) ^ self.flip[s]
                self.streams[s][:, self.it - 1] = bits
                self.active[s] &= ~bits
                self.flip[s] |= bits
        if self.it >= self.iters:
            self.done = True
            return None
        send = np.zeros((world.n, world.S), dtype=bool)
        world.reset_pins_isolated()
        for forest, act in zip(self.forests, self.active):
            forest.wire(act, reset=False)
            forest.root_send(send)
        self.it += 1
        return send

    def finished(self) -> bool:
        return self.done
