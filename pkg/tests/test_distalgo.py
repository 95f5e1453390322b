import math

import numpy as np
import pytest

from amoegrid.decompose import decompose
from amoegrid.distalgo import run_distributed
from amoegrid.generator import generate_random
from amoegrid.grid import AmoebotStructure, GridPoint
from amoegrid.oracle import is_geodesically_convex, is_simple, verify_decomposition

from test_grid import hexagon, parallelogram


def test_single_node_trivial():
    s = AmoebotStructure([GridPoint(0, 0)])
    out = run_distributed(s, seed=0)
    assert len(out.decomposition.regions) == 1
    assert out.trace.rounds <= 5


def test_hole_free_single_region():
    s = AmoebotStructure(hexagon(2))
    out = run_distributed(s, seed=1)
    assert len(out.decomposition.regions) == 1
    assert out.decomposition.canonical() == decompose(s).canonical()


def test_annulus_equals_centralized():
    pts = [p for p in hexagon(2) if p != GridPoint(0, 0)]
    s = AmoebotStructure(pts)
    out = run_distributed(s, seed=2)
    assert out.decomposition.canonical() == decompose(s).canonical()
    assert out.trace.rounds > 0
    assert sum(out.trace.phase_rounds.values()) == out.trace.rounds


def test_equivalence_on_random_structures():
    for seed in range(8):
        s = generate_random(120 + 20 * (seed % 3), 1 + seed % 3, seed)
        out = run_distributed(s, seed=seed)
        central = decompose(s)
        assert out.decomposition.canonical() == central.canonical(), seed


def test_distributed_outputs_pass_oracle():
    for seed in range(4):
        s = generate_random(150, 2, seed + 7)
        out = run_distributed(s, seed=seed)
        report = verify_decomposition(s, out.decomposition)
        assert report.all_ok, "\n".join(report.summary_lines())


def test_seed_changes_rounds_not_output():
    s = generate_random(140, 2, 3)
    a = run_distributed(s, seed=1)
    b = run_distributed(s, seed=99)
    assert a.decomposition.canonical() == b.decomposition.canonical()


def test_trace_deterministic_per_seed():
    s = generate_random(100, 1, 4)
    a = run_distributed(s, seed=5)
    b = run_distributed(s, seed=5)
    assert a.trace.export_text() == b.trace.export_text()
    assert a.decomposition.canonical() == b.decomposition.canonical()


def test_round_budget_error_carries_trace():
    from amoegrid.errors import RoundBudgetExceeded

    s = generate_random(100, 1, 2)
    with pytest.raises(RoundBudgetExceeded) as err:
        run_distributed(s, seed=0, round_budget=3)
    assert err.value.trace is not None


def test_rounds_scale_logarithmically_small_sweep():
    ratios = []
    for n in (64, 256, 1024):
        s = generate_random(n, max(1, n // 128), 0)
        out = run_distributed(s, seed=0)
        ratios.append(out.trace.rounds / math.log2(n))
    assert ratios[-1] <= ratios[0] * 1.25
