"""Finite rotation subgroups of SU(2)/{+-1}: icosahedral (60) and cubic (24).

Elements are kept as canonical unit quaternions. The multiplication and
inverse tables are integer arrays, so products of group elements (and the
closing element of a tuple) never touch floating point.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .su2 import AxisAngle, Gate, from_axis_angle, qcanon, qdistance, qmul

MATCH_TOL = 1e-9


class GroupConstructionError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    name: str
    quats: np.ndarray  # (O, 4), canonical, index 0 = identity
    mul_table: np.ndarray  # (O, O) int
    inv_table: np.ndarray  # (O,) int

    @property
    def order(self) -> int:
        return len(self.quats)

    @property
    def elements(self) -> list[Gate]:
        return [Gate.from_quat(q) for q in self.quats]

    def element(self, i: int) -> Gate:
        return Gate.from_quat(self.quats[i])

    def angle(self, i: int) -> float:
        """Rotation angle in [0, pi] of element i."""
        return 2 * math.acos(min(1.0, abs(float(self.quats[i, 0]))))

    def index_of(self, q: np.ndarray) -> int:
        d = qdistance(self.quats, np.asarray(q)[None, :])
        k = int(np.argmin(d))
        if d[k] > MATCH_TOL:
            raise KeyError("quaternion is not a group element")
        return k


def _closure(generators: list[np.ndarray], expected: int) -> np.ndarray:
    elems = [np.array([1.0, 0.0, 0.0, 0.0])]
    frontier = list(elems)
    while frontier:
        new = []
        for a in frontier:
            for g in generators:
                c = qcanon(qmul(a, g))
                if np.min(qdistance(np.array(elems), c[None, :])) > MATCH_TOL:
                    elems.append(c)
                    new.append(c)
        frontier = new
        if len(elems) > expected:
            raise GroupConstructionError(f"closure exceeded {expected} elements")
    if len(elems) != expected:
        raise GroupConstructionError(f"closure produced {len(elems)} elements, expected {expected}")
    return np.array(elems)


def _sorted_elements(quats: np.ndarray) -> np.ndarray:
    # identity first, then by rotation angle, then by axis; rounded so the
    # order does not depend on last-bit noise
    def key(q):
        angle = round(2 * math.acos(min(1.0, q[0])), 9)
        return (angle, tuple(round(-x, 9) for x in q[1:]))

    quats = np.array([Gate.from_quat(q).quat for q in quats])
    order = sorted(range(len(quats)), key=lambda i: key(quats[i]))
    return quats[order]


def _tables(quats: np.ndarray, name: str) -> FiniteGroup:
    O = len(quats)
    mul = np.empty((O, O), dtype=np.int64)
    for i in range(O):
        prods = qmul(quats[i][None, :], quats)
        d = qdistance(prods[:, None, :], quats[None, :, :])
        k = np.argmin(d, axis=1)
        if np.any(d[np.arange(O), k] > MATCH_TOL):
            raise GroupConstructionError("multiplication is not closed")
        if np.sum(d < MATCH_TOL) != O:
            raise GroupConstructionError("ambiguous product match")
        mul[i] = k
    if not np.all(np.sort(mul, axis=1) == np.arange(O)):
        raise GroupConstructionError("multiplication table is not a Latin square")
    inv = np.argmax(mul == 0, axis=1)
    if not np.all(mul[np.arange(O), inv] == 0):
        raise GroupConstructionError("missing inverse")
    mul.setflags(write=False)
    inv.setflags(write=False)
    quats = quats.copy()
    quats.setflags(write=False)
    return FiniteGroup(name, quats, mul, inv)


def _rotation(axis, angle) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return from_axis_angle(AxisAngle(tuple(axis), angle)).quat


@functools.lru_cache(maxsize=None)
def build_icosahedral() -> FiniteGroup:
    phi = (1 + math.sqrt(5)) / 2
    five = _rotation((0.0, 1.0, phi), 2 * math.pi / 5)  # vertex axis
    three = _rotation((1.0, 1.0, 1.0), 2 * math.pi / 3)  # cyclic permutation of coordinates
    quats = _sorted_elements(_closure([five, three], 60))
    return _tables(quats, "icosahedral")


@functools.lru_cache(maxsize=None)
def build_cubic() -> FiniteGroup:
    four = _rotation((0.0, 0.0, 1.0), math.pi / 2)
    three = _rotation((1.0, 1.0, 1.0), 2 * math.pi / 3)
    quats = _sorted_elements(_closure([four, three], 24))
    return _tables(quats, "cubic")


def build_group(name: str) -> FiniteGroup:
    builders = {"icosahedral": build_icosahedral, "cubic": build_cubic}
    try:
        return builders[name]()
    except KeyError:
        raise ValueError(f"unknown group {name!r}") from None


def closing_element(G: FiniteGroup, indices) -> int:
    """Index k with g_{i1} ... g_{in} g_k = identity (table arithmetic only)."""
    acc = 0
    for i in indices:
        acc = int(G.mul_table[acc, i])
    return int(G.inv_table[acc])


def closing_elements(G: FiniteGroup, tuples: np.ndarray) -> np.ndarray:
    """Vectorized closing_element over rows of an (M, n) index array."""
    acc = np.zeros(len(tuples), dtype=np.int64)
    for col in tuples.T:
        acc = G.mul_table[acc, col]
    return G.inv_table[acc]
