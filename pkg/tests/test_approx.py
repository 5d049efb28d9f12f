import numpy as np
import pytest

from weavehash.approx import (
    CapacityError,
    HalfWordIndex,
    Pseudogroup,
    PseudogroupFormatError,
    PseudogroupVerificationError,
    brute_force,
    brute_force_many,
    build_pseudogroup,
    load_pseudogroup,
    mitm_search,
    predicted_mean_error,
    radius_schedule,
    save_pseudogroup,
)
from weavehash.groups import build_cubic
from weavehash.hashing import DATA_DIR
from weavehash.su2 import Gate, distance, named_gate
from weavehash.weave import BraidWord, enumerate_weaves, evaluate, parse_word


def haar_quats(seed, k):
    q = np.random.default_rng(seed).normal(size=(k, 4))
    return q / np.linalg.norm(q, axis=1)[:, None]


def linear_scan(target: Gate, L: int):
    best = None
    for n in range(0, L + 1, 2):
        for w in enumerate_weaves(n):
            d = distance(evaluate(w), target)
            if best is None or d < best[1] - 1e-13:
                best = (w, d)
    return best


def test_brute_force_matches_linear_scan():
    for q in haar_quats(1, 5):
        target = Gate.from_quat(q)
        w, e = brute_force(target, 8)
        ref_w, ref_e = linear_scan(target, 8)
        assert e == pytest.approx(ref_e, abs=1e-12)
        assert w == ref_w


def test_brute_force_exact_word_found():
    w = parse_word("1^2.2^-4.1^4.2^2")
    found, err = brute_force(evaluate(w), 12)
    assert err < 1e-12
    assert found.length <= w.length


def test_brute_force_identity_is_empty_word():
    w, e = brute_force(Gate.identity(), 6)
    assert w == BraidWord() and e == 0


def test_brute_force_capacity():
    with pytest.raises(CapacityError):
        brute_force(named_gate("X"), 40)


def test_mitm_agrees_with_brute_force():
    index = HalfWordIndex(8)
    targets = haar_quats(2, 40)
    words, errors = brute_force_many(targets, 16)
    for t, w, e in zip(targets, words, errors):
        res = mitm_search(t, 16, index)
        assert res.complete
        assert res.error == pytest.approx(e, abs=1e-12)
        assert res.word == w


def test_mitm_oversized_index_respects_length():
    small, big = HalfWordIndex(6), HalfWordIndex(10)
    for t in haar_quats(3, 10):
        a = mitm_search(t, 12, small)
        b = mitm_search(t, 12, big)
        assert b.word.length <= 12
        assert a.word == b.word


def test_mitm_rejects_small_index():
    with pytest.raises(ValueError):
        mitm_search(np.array([1.0, 0, 0, 0]), 20, HalfWordIndex(6))


def test_index_query_is_exact():
    index = HalfWordIndex(10)
    g = Gate.from_quat(haar_quats(4, 1)[0])
    radius = 0.15
    found = set(index.query(g, radius))
    expected = {w for n in range(0, 12, 2) for w in enumerate_weaves(n) if distance(evaluate(w), g) < radius}
    assert found == expected and found


def test_radius_schedule():
    r = radius_schedule(24)
    assert r[0] == pytest.approx(predicted_mean_error(24))
    assert all(b == pytest.approx(2 * a) for a, b in zip(r, r[1:]))


def test_build_pseudogroup_modes_agree():
    G = build_cubic()
    ex = build_pseudogroup(G, 12, "exhaustive")
    mm = build_pseudogroup(G, 12, "mitm")
    assert ex.words == mm.words
    assert np.allclose(ex.errors, mm.errors, atol=1e-12)
    assert ex.words[0] == BraidWord() and ex.errors[0] == 0
    for i in range(1, G.order):
        assert ex.errors[i] == pytest.approx(distance(ex.gate(i), G.element(i)), abs=1e-12)
    with pytest.raises(ValueError):
        build_pseudogroup(G, 12, "guess")


def test_save_load_round_trip(tmp_path):
    G = build_cubic()
    p = build_pseudogroup(G, 8)
    path = tmp_path / "cubic_L8.pg"
    save_pseudogroup(p, path)
    q = load_pseudogroup(path)
    assert q.words == p.words
    assert np.array_equal(q.errors, p.errors)
    assert path.read_bytes().endswith(b"\n")


def test_load_rejects_tampering(tmp_path):
    p = build_pseudogroup(build_cubic(), 8)
    path = tmp_path / "p.pg"
    save_pseudogroup(p, path)
    lines = path.read_text().splitlines()

    bad_error = list(lines)
    k, w, e = bad_error[6].split()
    bad_error[6] = f"{k} {w} {float(e) + 1e-6!r}"
    path.write_text("\n".join(bad_error) + "\n")
    with pytest.raises(PseudogroupVerificationError):
        load_pseudogroup(path)

    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(PseudogroupFormatError):
        load_pseudogroup(path)

    path.write_text("pseudogroup-v0\n" + "\n".join(lines[1:]) + "\n")
    with pytest.raises(PseudogroupFormatError):
        load_pseudogroup(path)


@pytest.mark.parametrize("L", [8, 24, 40, 44, 64, 68])
def test_shipped_pseudogroups_verify(L):
    p = load_pseudogroup(DATA_DIR / f"icosahedral_L{L}.pg")
    assert p.order == 60 and p.L == L
    assert all(w.length <= L for w in p.words)
    # within a factor 2 of the large-L law
    assert 0.5 < p.mean_error / predicted_mean_error(L) < 2.0


def test_shipped_l24_statistics():
    p = load_pseudogroup(DATA_DIR / "icosahedral_L24.pg")
    assert p.mean_error == pytest.approx(0.018, rel=0.15)
    assert 0.002 < p.min_error < 0.005
    assert 0.08 < p.max_error < 0.11


def test_pseudogroup_stats_skip_identity():
    p = Pseudogroup("cubic", 2, [BraidWord(), BraidWord(((1, 2),))], [0.0, 0.5])
    assert p.mean_error == 0.5 and p.min_error == 0.5
