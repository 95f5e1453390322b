import pytest

from amoegrid.errors import AmoegridError
from amoegrid.generator import generate_random
from amoegrid.grid import find_holes


def test_exact_hole_counts():
    for holes in range(4):
        s = generate_random(160, holes, 11)
        assert s.n == 160
        assert len(find_holes(s)[1]) == holes


def test_seed_reproducibility():
    a = generate_random(130, 2, 5)
    b = generate_random(130, 2, 5)
    assert a.nodes == b.nodes


def test_different_seeds_differ():
    a = generate_random(130, 2, 5)
    b = generate_random(130, 2, 6)
    assert a.nodes != b.nodes


def test_too_small_for_holes():
    with pytest.raises(AmoegridError):
        generate_random(10, 3, 0)
