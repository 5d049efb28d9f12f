"""Weaves over the two Fibonacci braiding generators.

A weave is written as blocks ``sigma_p^q`` with alternating generators
``p in {1, 2}``. Because ``sigma^10 = 1`` every exponent can be brought into
``{+-2, +-4}``; words in that form are canonical and are the only ones the
search code deals with. ``WeaveTable`` stores every canonical weave up to a
given length as flat arrays (block code + pointer to the remaining word) so
that tens of millions of words fit in memory.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .su2 import Gate, qcanon, qmul

TAU = (math.sqrt(5) - 1) / 2

# Block order used for enumeration and tie-breaking: generator 1 before 2,
# exponents ordered +2, -2, +4, -4.
EXPONENTS = (2, -2, 4, -4)
BLOCKS: tuple[tuple[int, int], ...] = tuple((p, q) for p in (1, 2) for q in EXPONENTS)
BLOCK_CODE = {b: i for i, b in enumerate(BLOCKS)}


class NonCanonicalWordError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSet:
    sigma1: Gate
    sigma2: Gate
    tau: float = TAU


@functools.lru_cache(maxsize=None)
def generators() -> GeneratorSet:
    s1 = np.array(
        [[np.exp(-4j * np.pi / 5), 0], [0, -np.exp(-2j * np.pi / 5)]],
        dtype=complex,
    )
    off = -math.sqrt(TAU) * np.exp(2j * np.pi / 5)
    s2 = np.array([[-TAU * np.exp(-1j * np.pi / 5), off], [off, -TAU]], dtype=complex)
    return GeneratorSet(Gate(s1), Gate(s2))


@functools.lru_cache(maxsize=None)
def block_matrix(p: int, q: int) -> np.ndarray:
    gens = generators()
    s = (gens.sigma1 if p == 1 else gens.sigma2).entries
    m = np.linalg.matrix_power(s, abs(q))
    return m if q >= 0 else m.conj().T


@functools.lru_cache(maxsize=None)
def block_quats() -> np.ndarray:
    """Canonical quaternions of the 8 blocks, indexed by block code."""
    return np.array([Gate(block_matrix(p, q)).quat for p, q in BLOCKS])


def _check_blocks(blocks: Sequence[tuple[int, int]]) -> None:
    prev = None
    for p, q in blocks:
        if p not in (1, 2):
            raise NonCanonicalWordError(f"generator must be 1 or 2, got {p}")
        if q not in (2, -2, 4, -4):
            raise NonCanonicalWordError(f"exponent {q} is not in {{+-2, +-4}}")
        if p == prev:
            raise NonCanonicalWordError("adjacent blocks share a generator")
        prev = p


@dataclass(frozen=True, order=False)
class BraidWord:
    """Canonical weave: alternating generator blocks with exponents +-2, +-4."""

    blocks: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        blocks = tuple((int(p), int(q)) for p, q in self.blocks)
        _check_blocks(blocks)
        object.__setattr__(self, "blocks", blocks)

    @property
    def length(self) -> int:
        return sum(abs(q) for _, q in self.blocks)

    def __len__(self):
        return len(self.blocks)

    def sort_key(self) -> tuple:
        """(length, block codes): the global tie-breaking order."""
        return (self.length, tuple(BLOCK_CODE[b] for b in self.blocks))

    def inverse(self) -> "BraidWord":
        return BraidWord(tuple((p, -q) for p, q in reversed(self.blocks)))

    def __str__(self):
        return format_word(self)


def format_word(w: BraidWord) -> str:
    if not w.blocks:
        return "e"
    return ".".join(f"{p}^{q}" for p, q in w.blocks)


def parse_word(text: str) -> BraidWord:
    text = text.strip()
    if text == "e":
        return BraidWord()
    blocks = []
    for tok in text.split("."):
        p, _, q = tok.partition("^")
        if not _:
            raise ValueError(f"malformed word token {tok!r}")
        blocks.append((int(p), int(q)))
    return BraidWord(tuple(blocks))


def evaluate(w: BraidWord) -> Gate:
    if not isinstance(w, BraidWord):
        raise NonCanonicalWordError("evaluate expects a canonical BraidWord; call reduce() first")
    m = np.eye(2, dtype=complex)
    for p, q in w.blocks:
        m = m @ block_matrix(p, q)
    return Gate(m)


def word_quat(w: BraidWord | Sequence[tuple[int, int]]) -> np.ndarray:
    """Quaternion of the word's gate (sign not normalized)."""
    blocks = w.blocks if isinstance(w, BraidWord) else w
    bq = block_quats()
    q = np.array([1.0, 0.0, 0.0, 0.0])
    for b in blocks:
        q = qmul(q, bq[BLOCK_CODE[b]])
    return q


def _fold_exponent(q: int) -> int:
    r = q % 10
    return r - 10 if r > 5 else r


def reduce(blocks: Iterable[tuple[int, int]] | BraidWord) -> BraidWord:
    """Bring an arbitrary list of even-exponent blocks into canonical form."""
    if isinstance(blocks, BraidWord):
        blocks = blocks.blocks
    stack: list[list[int]] = []
    for p, q in blocks:
        p, q = int(p), int(q)
        if p not in (1, 2):
            raise ValueError(f"generator must be 1 or 2, got {p}")
        if q % 2:
            raise ValueError(f"odd exponent {q}: not a weave")
        q = _fold_exponent(q)
        if q == 0:
            continue
        if stack and stack[-1][0] == p:
            merged = _fold_exponent(stack[-1][1] + q)
            if merged == 0:
                stack.pop()
            else:
                stack[-1][1] = merged
        else:
            stack.append([p, q])
    return BraidWord(tuple((p, q) for p, q in stack))


def concatenate_reduce(a: BraidWord, b: BraidWord) -> BraidWord:
    return reduce(a.blocks + b.blocks)


def concatenate_reduce_many(words: Iterable[BraidWord]) -> BraidWord:
    blocks: list[tuple[int, int]] = []
    for w in words:
        blocks.extend(w.blocks)
    return reduce(blocks)


# --- counting and enumeration -----------------------------------------------

def _counts(L: int) -> tuple[int, int]:
    """(N2, N4): weaves of length exactly L ending in a +-2 / +-4 block."""
    n2, n4 = 4, 0
    for _ in range(2, L, 2):
        n2, n4 = 2 * n4 + 2 * n2, n2
    return n2, n4


def count_weaves(L: int) -> int:
    if L < 0 or L % 2:
        raise ValueError(f"L must be a non-negative even integer, got {L}")
    if L == 0:
        return 1
    n2, n4 = _counts(L)
    return n2 + n4


def count_weaves_upto(L: int) -> int:
    """Number of canonical weaves of every even length <= L (empty word included)."""
    return sum(count_weaves(k) for k in range(0, L + 1, 2))


def count_weaves_closed_form(L: int) -> float:
    r3 = math.sqrt(3)
    return (1 - 1 / r3) * (1 - r3) ** (L // 2) + (1 + 1 / r3) * (1 + r3) ** (L // 2)


def enumerate_weaves(L: int) -> Iterator[BraidWord]:
    """Canonical weaves of length exactly L in block-lexicographic order."""
    if L < 0 or L % 2:
        raise ValueError(f"L must be a non-negative even integer, got {L}")

    def rec(remaining: int, banned: int) -> Iterator[tuple]:
        if remaining == 0:
            yield ()
            return
        for p, q in BLOCKS:
            if p == banned or abs(q) > remaining:
                continue
            for rest in rec(remaining - abs(q), p):
                yield ((p, q),) + rest

    for blocks in rec(L, 0):
        yield BraidWord(blocks)


# --- bulk table ---------------------------------------------------------------

_CHUNK = 1 << 20


class WeaveTable:
    """Every canonical weave of length <= max_length, as flat arrays.

    Words are indexed by (length, block-lexicographic order); index 0 is the
    empty word. Word ``i`` is ``BLOCKS[code[i]]`` followed by word ``rest[i]``.
    ``quats`` holds the canonical (q0 >= 0) quaternion of each word's gate.
    """

    def __init__(self, max_length: int, dtype=np.float64):
        if max_length < 0 or max_length % 2:
            raise ValueError("max_length must be a non-negative even integer")
        self.max_length = max_length
        self.dtype = np.dtype(dtype)
        sizes = [count_weaves(L) for L in range(0, max_length + 1, 2)]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        total = int(self.offsets[-1])
        idx_t = np.int32 if total < 2**31 else np.int64
        self.quats = np.empty((total, 4), dtype=self.dtype)
        self.rest = np.zeros(total, dtype=idx_t)
        self.code = np.full(total, -1, dtype=np.int8)
        # index where words starting with generator 2 begin, per level
        self.splits = np.zeros(len(sizes), dtype=np.int64)
        self._build()

    def __len__(self):
        return int(self.offsets[-1])

    def _level(self, L: int) -> tuple[int, int]:
        k = L // 2
        return int(self.offsets[k]), int(self.offsets[k + 1])

    def _build(self) -> None:
        bq = block_quats()
        exact: dict[int, np.ndarray] = {0: np.array([[1.0, 0.0, 0.0, 0.0]])}
        self.quats[0] = exact[0][0]
        self.splits[0] = 1
        for L in range(2, self.max_length + 1, 2):
            lo, hi = self._level(L)
            # exact copies are only needed for levels that serve as suffixes later
            keep64 = self.dtype != np.float64 and L < self.max_length
            level64 = np.empty((hi - lo, 4)) if keep64 else None
            pos = lo
            for c, (p, q) in enumerate(BLOCKS):
                if p == 2 and c == 4:
                    self.splits[L // 2] = pos
                r = L - abs(q)
                if r < 0:
                    continue
                if r == 0:
                    rlo, rhi = 0, 1
                else:
                    slo, shi = self._level(r)
                    split = int(self.splits[r // 2])
                    rlo, rhi = (split, shi) if p == 1 else (slo, split)
                src = exact[r]
                src_lo = 0 if r == 0 else self._level(r)[0]
                n = rhi - rlo
                self.rest[pos : pos + n] = np.arange(rlo, rhi, dtype=self.rest.dtype)
                self.code[pos : pos + n] = c
                for s in range(0, n, _CHUNK):
                    e = min(n, s + _CHUNK)
                    prod = qcanon(qmul(bq[c][None, :], src[rlo - src_lo + s : rlo - src_lo + e]))
                    self.quats[pos + s : pos + e] = prod
                    if level64 is not None:
                        level64[pos - lo + s : pos - lo + e] = prod
                pos += n
            assert pos == hi
            exact[L] = level64 if keep64 else self.quats[lo:hi]
            exact.pop(L - 4, None)

    def length_of(self, i: int) -> int:
        return 2 * (int(np.searchsorted(self.offsets, i, side="right")) - 1)

    def word(self, i: int) -> BraidWord:
        blocks = []
        i = int(i)
        while i != 0:
            blocks.append(BLOCKS[self.code[i]])
            i = int(self.rest[i])
        return BraidWord(tuple(blocks))

    def first_block(self, i: int) -> int:
        """Block code of the leading block, -1 for the empty word."""
        return int(self.code[i])


@functools.lru_cache(maxsize=4)
def weave_table(max_length: int) -> WeaveTable:
    return WeaveTable(max_length)
