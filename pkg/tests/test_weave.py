import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weavehash.su2 import Gate, distance, qdistance
from weavehash.weave import (
    BLOCKS,
    TAU,
    BraidWord,
    NonCanonicalWordError,
    WeaveTable,
    block_matrix,
    concatenate_reduce,
    concatenate_reduce_many,
    count_weaves,
    count_weaves_closed_form,
    count_weaves_upto,
    enumerate_weaves,
    evaluate,
    format_word,
    generators,
    parse_word,
    reduce,
    word_quat,
)


def raw_power(p, q):
    s = (generators().sigma1 if p == 1 else generators().sigma2).entries
    m = np.linalg.matrix_power(s, abs(q))
    return m if q >= 0 else np.linalg.inv(m)


def raw_product(blocks):
    m = np.eye(2, dtype=complex)
    for p, q in blocks:
        m = m @ raw_power(p, q)
    return Gate(m)


raw_blocks = st.lists(
    st.tuples(st.sampled_from([1, 2]), st.integers(-12, 12).map(lambda k: 2 * k)), max_size=12)


def test_generator_entries():
    g = generators()
    w = np.exp(1j * np.pi / 5)
    assert g.tau == pytest.approx((np.sqrt(5) - 1) / 2)
    assert np.allclose(g.sigma1.entries, np.diag([w**-4, -w**-2]), atol=1e-15)
    off = -np.sqrt(TAU) * w**2
    assert np.allclose(g.sigma2.entries, [[-TAU / w, off], [off, -TAU]], atol=1e-15)
    assert TAU == pytest.approx(1 / ((1 + np.sqrt(5)) / 2))


def test_generators_have_order_ten():
    for s in (generators().sigma1, generators().sigma2):
        assert np.allclose(np.linalg.matrix_power(s.entries, 10), np.eye(2), atol=1e-12)
        assert np.allclose(s.entries @ s.entries.conj().T, np.eye(2), atol=1e-15)


def test_braid_relation():
    s1, s2 = generators().sigma1.entries, generators().sigma2.entries
    assert np.allclose(s1 @ s2 @ s1, s2 @ s1 @ s2, atol=1e-14)


def test_word_validation():
    with pytest.raises(NonCanonicalWordError):
        BraidWord(((1, 2), (1, 4)))
    with pytest.raises(NonCanonicalWordError):
        BraidWord(((1, 6),))
    with pytest.raises(NonCanonicalWordError):
        BraidWord(((3, 2),))
    w = BraidWord(((1, 2), (2, -4)))
    assert w.length == 6 and len(w) == 2


def test_evaluate_examples():
    assert distance(evaluate(BraidWord()), Gate.identity()) == 0
    w = BraidWord(((1, 2), (2, -4), (1, 4)))
    assert distance(evaluate(w), raw_product(w.blocks)) < 1e-12
    with pytest.raises(NonCanonicalWordError):
        evaluate([(1, 2)])


def test_inverse():
    w = BraidWord(((1, 2), (2, -4), (1, 4)))
    assert distance(evaluate(w) @ evaluate(w.inverse()), Gate.identity()) < 1e-12


def test_reduce_examples():
    assert reduce([(1, 2), (1, 2)]) == BraidWord(((1, 4),))
    assert reduce([(1, 2), (1, -2)]) == BraidWord()
    assert reduce([(1, 6)]) == BraidWord(((1, -4),))
    assert reduce([(2, 10), (1, 2)]) == BraidWord(((1, 2),))
    assert reduce([(1, 2), (2, 4), (2, -4), (1, 2)]) == BraidWord(((1, 4),))
    with pytest.raises(ValueError):
        reduce([(1, 3)])


@settings(max_examples=300, deadline=None)
@given(raw_blocks)
def test_reduce_preserves_gate(blocks):
    w = reduce(blocks)
    assert distance(evaluate(w), raw_product(blocks)) < 1e-10
    assert reduce(w) == w


@settings(max_examples=100, deadline=None)
@given(raw_blocks, raw_blocks)
def test_concatenate_reduce(a, b):
    wa, wb = reduce(a), reduce(b)
    c = concatenate_reduce(wa, wb)
    assert distance(evaluate(c), evaluate(wa) @ evaluate(wb)) < 1e-10
    assert c.length <= wa.length + wb.length
    assert concatenate_reduce_many([wa, wb]) == c


def test_word_text_round_trip():
    for w in [BraidWord(), BraidWord(((2, -2), (1, 4)))]:
        assert parse_word(format_word(w)) == w
    assert format_word(BraidWord(((2, -2), (1, 4)))) == "2^-2.1^4"
    with pytest.raises(ValueError):
        parse_word("1-2")


def test_count_small_values():
    assert [count_weaves(L) for L in (0, 2, 4, 6)] == [1, 4, 12, 32]
    assert count_weaves(24) == 272768
    assert count_weaves_upto(24) == 430249
    with pytest.raises(ValueError):
        count_weaves(3)


def test_count_matches_closed_form():
    for L in range(2, 62, 2):
        assert count_weaves(L) == round(count_weaves_closed_form(L))
        assert abs(count_weaves(L) - count_weaves_closed_form(L)) / count_weaves(L) < 1e-12


def test_enumeration_matches_count():
    for L in range(0, 16, 2):
        words = list(enumerate_weaves(L))
        assert len(words) == count_weaves(L)
        assert len(set(words)) == len(words)
        assert all(w.length == L for w in words)
    keys = [w.sort_key() for w in enumerate_weaves(8)]
    assert keys == sorted(keys)


def test_table_matches_enumeration():
    table = WeaveTable(10)
    words = [w for L in range(0, 12, 2) for w in enumerate_weaves(L)]
    assert len(table) == len(words)
    for i in range(0, len(words), 37):
        assert table.word(i) == words[i]
        assert table.length_of(i) == words[i].length
        assert qdistance(table.quats[i], word_quat(words[i])) < 1e-13
    assert table.quats[:, 0].min() >= 0


def test_table_float32_close_to_float64():
    t64 = WeaveTable(12)
    t32 = WeaveTable(12, dtype=np.float32)
    assert t32.quats.dtype == np.float32
    assert np.array_equal(t64.rest, t32.rest) and np.array_equal(t64.code, t32.code)
    d = qdistance(t64.quats, t32.quats.astype(float))
    assert d.max() < 1e-6


def test_block_matrices_cover_all_blocks():
    mats = [block_matrix(p, q) for p, q in BLOCKS]
    for (p, q), m in zip(BLOCKS, mats):
        assert distance(Gate(m), raw_product([(p, q)])) < 1e-12
    for a, b in itertools.combinations(mats, 2):
        assert distance(Gate(a), Gate(b)) > 0.1
