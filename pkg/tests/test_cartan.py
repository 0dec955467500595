import random

import pytest

from qcontract.cartan import (
    CartanDatum, ContractiblePair, WeylElement, contract_cartan,
    contract_root_datum, enumerate_roots, positive_roots, simple_reflection,
    simply_connected_datum, simply_laced_cartan, validate_cartan,
    weyl_embedding, weyl_group, weyl_word,
)

A2 = simply_laced_cartan((1, 2), [(1, 2)])
A3 = simply_laced_cartan((1, 2, 3), [(1, 2), (2, 3)])
D4 = simply_laced_cartan(("c", 1, 2, 3), [("c", 1), ("c", 2), ("c", 3)])


def test_validate_cartan_pinned():
    ok, bad = validate_cartan(A2)
    assert ok and not bad
    ok, bad = validate_cartan(CartanDatum((1, 2), ((2, 1), (1, 2))))
    assert not ok and any("positive" in m for m in bad)
    ok, bad = validate_cartan(CartanDatum((1, 2), ((3, -1), (-1, 2))))
    assert not ok and any("even" in m for m in bad)
    with pytest.raises(ValueError):
        CartanDatum((1, 2), ((2, -1), (0, 2)))


def test_validate_divisibility():
    # B2-like datum: 1.1 = 4, 2.2 = 2, 1.2 = -2 is fine; 1.2 = -1 is not
    ok, _ = validate_cartan(CartanDatum((1, 2), ((4, -2), (-2, 2))))
    assert ok
    ok, bad = validate_cartan(CartanDatum((1, 2), ((4, -1), (-1, 2))))
    assert not ok and any("not an integer" in m for m in bad)


def test_contract_cartan_pinned():
    out = contract_cartan(A2, ContractiblePair(1, 2))
    assert out.pairing == ((2,),)
    out = contract_cartan(A3, ContractiblePair(2, 3))
    assert out.indices == (1, "2+3")
    assert out.pairing == ((2, -1), (-1, 2))
    out = contract_cartan(D4, ContractiblePair("c", 1), new_index="c1")
    assert out.indices == ("c1", 2, 3)
    assert out.pairing == ((2, -1, -1), (-1, 2, 0), (-1, 0, 2))


def test_contract_cartan_rejects_bad_pair():
    # in A3 the indices 1 and 3 are orthogonal: 1.1 != -2*(1.3)
    with pytest.raises(ValueError):
        contract_cartan(A3, ContractiblePair(1, 3))


def test_contract_cartan_fuzz_valid():
    rng = random.Random(29)
    for _ in range(60):
        n = rng.randint(3, 6)
        verts = list(range(n))
        edges = [(0, 1)]  # the contractible pair needs exactly one bond
        for a in range(n):
            for b in range(a + 1, n):
                if (a, b) != (0, 1) and rng.random() < 0.4:
                    edges.append((a, b))
        scale = rng.choice([1, 2, 3])
        base = simply_laced_cartan(verts, edges)
        datum = CartanDatum(base.indices,
                            tuple(tuple(scale * x for x in r) for r in base.pairing))
        ok, bad = validate_cartan(datum)
        assert ok, bad
        out = contract_cartan(datum, ContractiblePair(0, 1))
        ok, bad = validate_cartan(out)
        assert ok, bad
        assert out.dot("0+1", "0+1") == datum.dot(0, 0)


def test_contract_root_datum_pinned():
    rd = simply_connected_datum(A2)
    hat = contract_root_datum(rd, ContractiblePair(1, 2), new_index="0")
    assert hat.root("0") == (1, 1)
    assert hat.coroot("0") == (1, 1)
    assert hat.pair(hat.coroot("0"), hat.root("0")) == 2


def test_dominant_cone_containment():
    rng = random.Random(31)
    rd = simply_connected_datum(A3)
    hat = contract_root_datum(rd, ContractiblePair(2, 3))
    for _ in range(20):
        x = tuple(rng.randint(0, 6) for _ in range(3))
        # dominant for I means dominant for the contracted datum
        if rd.dominant(x):
            assert hat.dominant(x)
    assert rd.dominant((1, 0, 2)) and hat.dominant((1, 0, 2))
    # the converse can fail
    assert hat.dominant((0, 1, -1)) and not rd.dominant((0, 1, -1))


def test_weyl_group_sizes():
    assert len(weyl_group(simply_connected_datum(A2))) == 6
    assert len(weyl_group(simply_connected_datum(A3))) == 24
    assert len(weyl_group(simply_connected_datum(D4))) == 192


def test_simple_reflection_involution():
    for datum in (A2, A3, D4):
        rd = simply_connected_datum(datum)
        for i in datum.indices:
            s = simple_reflection(rd, i)
            assert (s * s).is_identity()


def test_weyl_enumeration_rejects_affine():
    aff = CartanDatum((1, 2), ((2, -2), (-2, 2)))
    with pytest.raises(ValueError):
        weyl_group(simply_connected_datum(aff))


def test_weyl_embedding_merged_reflection():
    for datum, pair in ((A2, ContractiblePair(1, 2)),
                        (A3, ContractiblePair(2, 3)),
                        (D4, ContractiblePair("c", 1))):
        rd = simply_connected_datum(datum)
        emb = weyl_embedding(rd, pair)
        sp = simple_reflection(rd, pair.plus)
        sm = simple_reflection(rd, pair.minus)
        assert emb.generator_images[emb.merged] == sp * sm * sp
        # the contracted reflection acts on the same Y with the same matrix
        shat = simple_reflection(emb.contracted, emb.merged)
        assert shat == emb.generator_images[emb.merged]


def test_weyl_embedding_verify():
    rd = simply_connected_datum(A3)
    emb = weyl_embedding(rd, ContractiblePair(2, 3))
    report = emb.verify()
    assert report == {"finite_type": True, "order": 6,
                      "homomorphism": True, "injective": True}
    images = {emb.apply(w).matrix for w in weyl_group(emb.contracted)}
    assert len(images) == 6


def test_weyl_embedding_infinite_branch():
    # contracting one bond of the affine 3-cycle gives the A1(1) shape
    cyc = simply_laced_cartan((0, 1, 2), [(0, 1), (1, 2), (2, 0)])
    rd = simply_connected_datum(cyc)
    emb = weyl_embedding(rd, ContractiblePair(1, 2))
    assert not emb.contracted.cartan.is_finite_type()
    report = emb.verify(word_bound=4)
    assert report["homomorphism"] and report["injective"]


def test_roots_counts_and_symmetry():
    rd = simply_connected_datum(A2)
    roots = enumerate_roots(rd)
    assert len(roots) == 6
    assert len(positive_roots(rd)) == 3
    assert all(tuple(-x for x in r) in roots for r in roots)
    rd3 = simply_connected_datum(A3)
    assert len(enumerate_roots(rd3)) == 12
    assert len(positive_roots(rd3)) == 6
    rd4 = simply_connected_datum(D4)
    assert len(enumerate_roots(rd4)) == 24


def test_contracted_positive_roots_included():
    rd = simply_connected_datum(A3)
    hat = contract_root_datum(rd, ContractiblePair(2, 3))
    big = positive_roots(rd)
    small = positive_roots(hat)
    assert small == {(0, 1, 1), (1, 0, 0), (1, 1, 1)}
    assert small <= big


def test_affine_real_roots_height_bound():
    aff = CartanDatum((1, 2), ((2, -2), (-2, 2)))
    rd = simply_connected_datum(aff)
    with pytest.raises(ValueError):
        enumerate_roots(rd)
    roots = enumerate_roots(rd, height_bound=5)
    pos = positive_roots(rd, height_bound=5)
    assert pos == {(1, 0), (0, 1), (2, 1), (1, 2), (3, 2), (2, 3)}
    assert len(roots) == 12


def test_weyl_word_and_apply():
    rd = simply_connected_datum(A2)
    w0 = weyl_word(rd, (1, 2, 1))
    assert w0 == weyl_word(rd, (2, 1, 2))
    assert w0.apply((1, 0)) == (0, -1)
    assert w0.apply((0, 1)) == (-1, 0)


def test_json_roundtrip():
    data = A3.to_json()
    assert data["indices"] == [1, 2, 3]
    assert CartanDatum.from_json(data) == A3
    rd = simply_connected_datum(A2)
    js = rd.to_json()
    assert js["coroots_in_Y"]["1"] == [1, 0]
    assert js["roots_in_X"]["1"] == [2, -1]
