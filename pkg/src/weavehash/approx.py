"""Approximating gates by weaves: exhaustive search, meet-in-the-middle search,
and pseudogroups (weave approximations of every element of a finite group).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import _kernels
from .groups import FiniteGroup, build_group
from .su2 import Gate, distance, qdistance
from .weave import (
    BraidWord,
    WeaveTable,
    count_weaves,
    evaluate,
    format_word,
    parse_word,
    reduce,
    weave_table,
    word_quat,
)

EXHAUSTIVE_LIMIT = 32
FORMAT_VERSION = "pseudogroup-v1"
VERIFY_TOL = 1e-10
# errors closer than this count as tied; ties go to the shorter, then
# lexicographically first, word
TIE_TOL = 1e-13
# one radius above the diameter of SU(2)/{+-1}: the search cannot miss
EXHAUSTIVE_SCHEDULE = (2.0,)


class CapacityError(ValueError):
    pass


class PseudogroupFormatError(ValueError):
    pass


class PseudogroupVerificationError(PseudogroupFormatError):
    pass


def predicted_mean_error(L: float) -> float:
    """Large-L brute-force mean error, 1.021 exp(-L/5.970)."""
    return 1.021 * math.exp(-L / 5.970)


def _as_quat(target) -> np.ndarray:
    if isinstance(target, Gate):
        return np.array(target.quat, dtype=float)
    return np.asarray(target, dtype=float)


# --- exhaustive search -------------------------------------------------------

def brute_force_many(targets: np.ndarray, L_max: int, limit: int = EXHAUSTIVE_LIMIT,
                     table: WeaveTable | None = None) -> tuple[list[BraidWord], np.ndarray]:
    """Best weave of even length <= L_max for each row of a (T, 4) quaternion array."""
    if L_max > limit:
        raise CapacityError(f"exhaustive search limited to L <= {limit}, got {L_max}; use mitm")
    if L_max < 0 or L_max % 2:
        raise ValueError("L_max must be a non-negative even integer")
    table = table if table is not None and table.max_length >= L_max else weave_table(L_max)
    hi = int(table.offsets[L_max // 2 + 1])
    targets = np.ascontiguousarray(np.atleast_2d(targets), dtype=float)
    _, best = _kernels.nearest_many(table.quats, hi, targets)
    words, errors = [], []
    for t, b in zip(targets, best):
        cap = 64
        while True:
            idx, n = _kernels.collect_within(table.quats, hi, t, float(b) + 1e-12, cap)
            if n <= cap:
                break
            cap = n
        w, e = _pick([table.word(i) for i in idx[:n]], t)
        words.append(w)
        errors.append(e)
    return words, np.array(errors)


def _pick(candidates: Sequence[BraidWord], t: np.ndarray) -> tuple[BraidWord, float]:
    """Minimum-error candidate, ties (within TIE_TOL) broken by sort_key."""
    scored = [(float(qdistance(word_quat(w), t)), w) for w in candidates]
    best = min(e for e, _ in scored)
    tied = [(w.sort_key(), e, w) for e, w in scored if e <= best + TIE_TOL]
    _, e, w = min(tied, key=lambda x: x[0])
    return w, e


def brute_force(target: Gate, L_max: int, limit: int = EXHAUSTIVE_LIMIT) -> tuple[BraidWord, float]:
    words, errors = brute_force_many(_as_quat(target)[None, :], L_max, limit)
    return words[0], float(errors[0])


# --- meet in the middle ------------------------------------------------------

class MitmResult(NamedTuple):
    word: BraidWord
    error: float
    complete: bool


def radius_schedule(L: int, rounds: int = 8, factor: float = 2.0) -> tuple[float, ...]:
    r0 = predicted_mean_error(L)
    return tuple(r0 * factor**k for k in range(rounds))


class HalfWordIndex:
    """Grid-hashed index over the canonical quaternions of all weaves of
    length <= half_length.

    Points are bucketed by 4-D cells of side ``cell``; antipodal points are
    handled at query time. Queries are exact (no false negatives).
    """

    def __init__(self, half_length: int, dtype=None, points_per_cell: float = 8.0):
        n = sum(count_weaves(L) for L in range(0, half_length + 1, 2))
        if dtype is None:
            dtype = np.float64 if n <= 30_000_000 else np.float32
        self.half_length = half_length
        self.dtype = np.dtype(dtype)
        table = WeaveTable(half_length, dtype=self.dtype)
        self.table = table
        # the upper half of S^3 has volume pi^2
        self.cell = float(min(0.5, (math.pi**2 * points_per_cell / max(n, 1)) ** (1 / 3)))
        K = int(math.ceil(1.0 / self.cell)) + 1
        self._base = K + 1
        self._span = 2 * K + 3
        keys = _kernels.cell_keys(table.quats, self.cell, self._base, self._span)
        perm = np.argsort(keys, kind="stable")
        keys = keys[perm]
        pts = np.empty_like(table.quats)
        for k in range(4):
            pts[:, k] = table.quats[perm, k]
        table.quats = None  # only the cell-ordered copy is kept
        self.pts = pts
        lengths = np.repeat(np.arange(0, half_length + 1, 2, dtype=np.int8),
                            np.diff(table.offsets))
        self.lens = lengths[perm]
        self.perm = perm.astype(np.int32 if n < 2**31 else np.int64)
        del perm
        ncells = int(np.count_nonzero(np.diff(keys))) + 1 if n else 1
        self._bits = max(4, int(math.ceil(math.log2(2 * ncells))))
        self._tkeys, self._tstart, self._tcount = _kernels.build_hash(keys, self._bits)
        self._mask = (1 << self._bits) - 1
        self._empty_pos = int(np.flatnonzero(self.perm == 0)[0])
        self.slack = 1e-10 if self.dtype == np.float64 else 2e-6

    def __len__(self):
        return len(self.pts)

    def word_at(self, pos: int) -> BraidWord:
        return self.table.word(int(self.perm[pos]))

    def query(self, g, radius: float) -> list[BraidWord]:
        """Every indexed word whose gate is within `radius` of g."""
        q = _as_quat(g)
        cap = 1024
        while True:
            out, n = _kernels.query_ball(self.pts, self._tkeys, self._tstart, self._tcount,
                                         self._mask, self.cell, self._base, self._span,
                                         q, float(radius), cap)
            if n <= cap:
                break
            cap = n
        return [self.word_at(p) for p in sorted(out[:n], key=lambda p: int(self.perm[p]))]

    def _seed(self, t: np.ndarray, right_max: int) -> tuple[int, float]:
        idx, d = _kernels.nearest_bounded(self.pts, self.lens, right_max, t)
        return int(idx), float(d)

    def join(self, t: np.ndarray, left_max: int, right_max: int, radius: float, best: float):
        cap = 4096
        while True:
            hi = np.empty(cap, dtype=np.int64)
            hj = np.empty(cap, dtype=np.int64)
            hd = np.empty(cap)
            n, best_out = _kernels.join_scan(
                self.pts, self.lens, left_max, right_max, self._tkeys, self._tstart, self._tcount,
                self._mask, self.cell, self._base, self._span, t, float(radius),
                self.slack, float(best), hi, hj, hd)
            if n <= cap:
                return hi[:n], hj[:n], hd[:n], best_out
            cap = 2 * n


def mitm_search(target, L: int, index: HalfWordIndex,
                schedule: Sequence[float] | None = None) -> MitmResult:
    """Best product u*v with len(u) <= L - L/2 rounded, len(v) <= index half length.

    Runs the radius schedule until a round finds a pair within its radius; the
    answer is then the exact optimum over all weaves of length <= L. If every
    round comes back empty the best pair seen so far is returned with
    complete=False.
    """
    if index is None or len(index) == 0:
        raise ValueError("empty half-word index")
    left_max = 2 * (L // 4)
    right_max = L - left_max
    if right_max > index.half_length:
        raise ValueError(f"index covers half length {index.half_length}, need {right_max}")
    t = _as_quat(target)
    t = t / np.linalg.norm(t)
    if float(qdistance(t, np.array([1.0, 0.0, 0.0, 0.0]))) == 0.0:
        return MitmResult(BraidWord(), 0.0, True)
    schedule = tuple(schedule) if schedule is not None else radius_schedule(L)

    seed_pos, seed_d = index._seed(t, right_max)
    cand_i = [index._empty_pos]
    cand_j = [seed_pos]
    cand_d = [seed_d]
    best = seed_d
    complete = False
    for radius in schedule:
        hi, hj, hd, best = index.join(t, left_max, right_max, radius, best)
        cand_i.extend(hi.tolist())
        cand_j.extend(hj.tolist())
        cand_d.extend(hd.tolist())
        if best < radius:
            complete = True
            break
    cand_d = np.asarray(cand_d)
    keep = np.flatnonzero(cand_d <= best + index.slack)
    pairs = sorted({(cand_i[k], cand_j[k]) for k in keep})
    words = [reduce(index.word_at(i).blocks + index.word_at(j).blocks) for i, j in pairs]
    word, err = _pick(words, t)
    return MitmResult(word, err, complete)


# --- pseudogroups ------------------------------------------------------------

@dataclass(eq=False)
class Pseudogroup:
    """Weave approximations of every element of a finite group at length L."""

    group_name: str
    L: int
    words: list[BraidWord]
    errors: np.ndarray
    complete: list[bool] | None = field(default=None, repr=False)

    def __post_init__(self):
        self.errors = np.asarray(self.errors, dtype=float)
        self.quats = np.array([word_quat(w) for w in self.words])

    @property
    def order(self) -> int:
        return len(self.words)

    def _stats(self) -> np.ndarray:
        # identity (index 0) is the exact empty word
        return self.errors[1:]

    @property
    def mean_error(self) -> float:
        return float(np.mean(self._stats()))

    @property
    def min_error(self) -> float:
        return float(np.min(self._stats()))

    @property
    def max_error(self) -> float:
        return float(np.max(self._stats()))

    def gate(self, i: int) -> Gate:
        return evaluate(self.words[i])


def build_pseudogroup(G: FiniteGroup, L: int, mode: str = "exhaustive", *,
                      limit: int = EXHAUSTIVE_LIMIT, index: HalfWordIndex | None = None,
                      schedule: Sequence[float] | None = None,
                      progress: Callable[[int, MitmResult], None] | None = None) -> Pseudogroup:
    targets = np.array(G.quats[1:])
    if mode == "exhaustive":
        words, errors = brute_force_many(targets, L, limit)
        complete = [True] * len(words)
    elif mode == "mitm":
        if index is None:
            index = HalfWordIndex(L - 2 * (L // 4))
        words, errors, complete = [], [], []
        for k, t in enumerate(targets, start=1):
            res = mitm_search(t, L, index, schedule)
            if progress is not None:
                progress(k, res)
            words.append(res.word)
            errors.append(res.error)
            complete.append(res.complete)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    errors = [distance(evaluate(w), G.element(i + 1)) for i, w in enumerate(words)]
    return Pseudogroup(G.name, L, [BraidWord()] + list(words), [0.0] + errors,
                       complete=[True] + list(complete))


def save_pseudogroup(p: Pseudogroup, path) -> None:
    lines = [FORMAT_VERSION, f"group={p.group_name}", f"L={p.L}", f"count={p.order}"]
    for i, (w, e) in enumerate(zip(p.words, p.errors)):
        lines.append(f"{i} {format_word(w)} {format(float(e), '.17g')}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _header(line: str, key: str) -> str:
    k, sep, v = line.partition("=")
    if not sep or k != key:
        raise PseudogroupFormatError(f"expected '{key}=...', got {line!r}")
    return v


def load_pseudogroup(path, group: FiniteGroup | None = None) -> Pseudogroup:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 4 or lines[0] != FORMAT_VERSION:
        raise PseudogroupFormatError(f"{path}: not a {FORMAT_VERSION} file")
    name = _header(lines[1], "group")
    try:
        L = int(_header(lines[2], "L"))
        count = int(_header(lines[3], "count"))
    except ValueError as exc:
        raise PseudogroupFormatError(str(exc)) from None
    G = group if group is not None else build_group(name)
    if G.name != name:
        raise PseudogroupFormatError(f"file is for group {name}, not {G.name}")
    if count != G.order or len(lines) - 4 != count:
        raise PseudogroupFormatError(f"expected {G.order} entries, header says {count}, found {len(lines) - 4}")
    words, errors = [], []
    for k, line in enumerate(lines[4:]):
        parts = line.split()
        if len(parts) != 3 or int(parts[0]) != k:
            raise PseudogroupFormatError(f"malformed entry line {line!r}")
        w = parse_word(parts[1])
        e = float(parts[2])
        if w.length > L:
            raise PseudogroupVerificationError(f"entry {k}: word length {w.length} exceeds L={L}")
        actual = distance(evaluate(w), G.element(k))
        if abs(actual - e) > VERIFY_TOL:
            raise PseudogroupVerificationError(
                f"entry {k}: stored error {e!r} but word is at distance {actual!r}")
        words.append(w)
        errors.append(e)
    return Pseudogroup(name, L, words, errors)
