from collections import Counter

import numpy as np
import pytest

from weavehash.groups import (
    build_cubic,
    build_group,
    build_icosahedral,
    closing_element,
    closing_elements,
)
from weavehash.su2 import qdistance, qmul


def angle_classes(G):
    return Counter(round(np.degrees(G.angle(i))) for i in range(G.order))


def test_icosahedral_structure():
    G = build_icosahedral()
    assert G.order == 60
    assert G.index_of(np.array([1.0, 0, 0, 0])) == 0
    assert angle_classes(G) == {0: 1, 72: 12, 144: 12, 120: 20, 180: 15}


def test_cubic_structure():
    G = build_cubic()
    assert G.order == 24
    assert angle_classes(G) == {0: 1, 90: 6, 120: 8, 180: 9}
    # the half turns split into 3 about face axes and 6 about edge axes
    half = [i for i in range(G.order) if round(np.degrees(G.angle(i))) == 180]
    nonzero = Counter(int(np.sum(np.abs(G.quats[i, 1:]) > 1e-9)) for i in half)
    assert nonzero == {1: 3, 2: 6}


@pytest.mark.parametrize("name", ["icosahedral", "cubic"])
def test_tables_agree_with_quaternions(name):
    G = build_group(name)
    for i in range(G.order):
        for j in range(G.order):
            prod = qmul(G.quats[i], G.quats[j])
            assert qdistance(prod, G.quats[G.mul_table[i, j]]) < 1e-12
        assert G.mul_table[i, G.inv_table[i]] == 0
    assert np.all(np.sort(G.mul_table, axis=0) == np.arange(G.order)[:, None])


def test_unknown_group():
    with pytest.raises(ValueError):
        build_group("tetrahedral")


def test_closing_element():
    G = build_icosahedral()
    rng = np.random.default_rng(0)
    tuples = rng.integers(0, 60, size=(200, 3))
    ks = closing_elements(G, tuples)
    for t, k in zip(tuples, ks):
        assert closing_element(G, t) == k
        q = np.array([1.0, 0, 0, 0])
        for i in list(t) + [k]:
            q = qmul(q, G.quats[i])
        assert qdistance(q, np.array([1.0, 0, 0, 0])) < 1e-12
    assert closing_element(G, [0, 0, 0]) == 0


def test_index_of_rejects_non_members():
    G = build_cubic()
    with pytest.raises(KeyError):
        G.index_of(np.array([np.cos(0.1), np.sin(0.1), 0, 0]))
