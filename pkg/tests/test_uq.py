import random

import pytest

from qcontract.cartan import (
    ContractiblePair, simply_connected_datum, simply_laced_cartan,
)
from qcontract.falg import theta
from qcontract.scalar import (
    QV_ONE, QV_ZERO, quantum_integer, v_power,
)
from qcontract.uq import (
    UAlgebra, UElement, action_matrix, bar_U, braid_assumption_holds,
    braid_basic, braid_formula_gate, braid_on_V_check, braid_props_check,
    build_module, check_relations, delta, delta_component, divided_power,
    e_gen, e_merged, emb_co_check, embedding_relations_check, f_gen,
    f_merged, k_gen, k_merged_vector, k_tilde_gen, linear_tree_factorization_check,
    module_hom_check, module_relations_check, naive_square_check, omega,
    pi_weight, psi_dot_check, psi_preimage, psi_tensor_check, render_udot,
    render_uelement, rho, subquotient_phi_probe, subset_root_datum,
    tensor_of, tensor_psi, tilde_braid_i0, u_act_udot, u_element,
    u_injectivity_report, u_multiply, u_one, udot_act_u, udot_idempotent,
    udot_multiply, UEmbedding, UTensor,
)

A1 = simply_laced_cartan((1,), [])
A2 = simply_laced_cartan((1, 2), [(1, 2)])
A3 = simply_laced_cartan((1, 2, 3), [(1, 2), (2, 3)])
A4 = simply_laced_cartan((1, 2, 3, 4), [(1, 2), (2, 3), (3, 4)])
TRIANGLE = simply_laced_cartan((1, 2, 3), [(1, 2), (2, 3), (1, 3)])

U1 = UAlgebra(simply_connected_datum(A1), 10)
U2 = UAlgebra(simply_connected_datum(A2), 8)
U3 = UAlgebra(simply_connected_datum(A3), 8)
PAIR12 = ContractiblePair(1, 2)
PAIR23 = ContractiblePair(2, 3)


def rand_element(alg, rng, width=3, letters=2):
    terms = {}
    for _ in range(rng.randint(1, width)):
        ew = tuple(rng.randrange(alg.rank) for _ in range(rng.randint(0, letters)))
        fw = tuple(rng.randrange(alg.rank) for _ in range(rng.randint(0, letters)))
        mu = tuple(rng.randint(-1, 1) for _ in range(alg.rank_y))
        terms[(ew, mu, fw)] = v_power(rng.randint(-2, 2), rng.randint(-2, 2) or 1)
    return u_element(alg, terms)


# --- multiplication ----------------------------------------------------------

def test_torus_conjugation():
    for i in (1, 2):
        for mu in ((1, 0), (0, 1), (2, -1)):
            w = U2.weight_pairing(mu, U2.f.word_degree((U2.position(i),)))
            assert u_multiply(k_gen(U2, mu), e_gen(U2, i)) == \
                u_multiply(e_gen(U2, i), k_gen(U2, mu)).scale(v_power(w))
            assert u_multiply(k_gen(U2, mu), f_gen(U2, i)) == \
                u_multiply(f_gen(U2, i), k_gen(U2, mu)).scale(v_power(-w))


def test_raising_lowering_commutator():
    com = u_multiply(e_gen(U1, 1), f_gen(U1, 1)) \
        - u_multiply(f_gen(U1, 1), e_gen(U1, 1))
    gap = (k_tilde_gen(U1, 1) - k_tilde_gen(U1, 1, -1)) \
        .scale(QV_ONE / (v_power(1) - v_power(-1)))
    assert com == gap
    # distinct indices commute across the triangular split
    assert u_multiply(e_gen(U2, 1), f_gen(U2, 2)) == \
        u_multiply(f_gen(U2, 2), e_gen(U2, 1))


def test_serre_reduction_in_u():
    # e_gen(.., n) is the divided power, so the adjacent relator has
    # coefficients 1, -1, 1
    acc = u_multiply(e_gen(U2, 1, 2), e_gen(U2, 2)) \
        - u_multiply(u_multiply(e_gen(U2, 1), e_gen(U2, 2)), e_gen(U2, 1)) \
        + u_multiply(e_gen(U2, 2), e_gen(U2, 1, 2))
    assert acc.is_zero()
    acc = u_multiply(f_gen(U2, 2, 2), f_gen(U2, 1)) \
        - u_multiply(u_multiply(f_gen(U2, 2), f_gen(U2, 1)), f_gen(U2, 2)) \
        + u_multiply(f_gen(U2, 1), f_gen(U2, 2, 2))
    assert acc.is_zero()


def test_divided_power_product():
    cube = u_multiply(e_gen(U1, 1, 2), e_gen(U1, 1))
    assert cube == e_gen(U1, 1, 3).scale(quantum_integer(3, 1))
    assert divided_power(e_gen(U1, 1), 3, 1) == e_gen(U1, 1, 3)


def test_associativity_random():
    rng = random.Random(0)
    for _ in range(40):
        x, y, z = (rand_element(U2, rng) for _ in range(3))
        assert u_multiply(u_multiply(x, y), z) == \
            u_multiply(x, u_multiply(y, z))


def test_render():
    assert render_uelement(u_one(U2)) == "(1)*1"
    assert render_uelement(UElement(U2, {})) == "0"
    assert "E[1]" in render_uelement(e_gen(U2, 1))
    word = u_multiply(u_multiply(e_gen(U2, 1), k_gen(U2, (1, 0))),
                      f_gen(U2, 2))
    assert "K{" in render_uelement(word) and "F[2]" in render_uelement(word)


# --- involutions -------------------------------------------------------------

def test_bar_involution():
    rng = random.Random(1)
    for _ in range(10):
        x = rand_element(U2, rng)
        assert bar_U(bar_U(x)) == x
    assert bar_U(k_gen(U2, (1, -1))) == k_gen(U2, (-1, 1))
    x, y = rand_element(U2, rng), rand_element(U2, rng)
    assert bar_U(u_multiply(x, y)) == u_multiply(bar_U(x), bar_U(y))


def test_omega_swaps_sides():
    assert omega(e_gen(U2, 1)) == f_gen(U2, 1)
    assert omega(f_gen(U2, 2)) == e_gen(U2, 2)
    assert omega(k_gen(U2, (1, 0))) == k_gen(U2, (-1, 0))
    rng = random.Random(2)
    for _ in range(10):
        x = rand_element(U2, rng)
        assert omega(omega(x)) == x
    x, y = rand_element(U2, rng), rand_element(U2, rng)
    assert omega(u_multiply(x, y)) == u_multiply(omega(x), omega(y))


def test_rho_antihomomorphism():
    assert rho(e_gen(U2, 1)) == \
        u_multiply(k_tilde_gen(U2, 1), f_gen(U2, 1)).scale(v_power(1))
    assert rho(f_gen(U2, 1)) == \
        u_multiply(e_gen(U2, 1), k_tilde_gen(U2, 1, -1)).scale(v_power(-1))
    rng = random.Random(3)
    x, y = rand_element(U2, rng, letters=1), rand_element(U2, rng, letters=1)
    assert rho(u_multiply(x, y)) == u_multiply(rho(y), rho(x))
    assert rho(rho(x)) == x


def test_merged_generator_conjugations():
    for eps in (1, -1):
        assert omega(e_merged(U2, PAIR12, eps)) == \
            f_merged(U2, PAIR12, eps).scale(-v_power(-eps))
        assert bar_U(e_merged(U2, PAIR12, eps)) == e_merged(U2, PAIR12, -eps)
        assert bar_U(f_merged(U2, PAIR12, eps)) == f_merged(U2, PAIR12, -eps)


# --- the embedding -----------------------------------------------------------

def test_embedding_relations_a2_to_a1():
    for eps in (1, -1):
        rep = embedding_relations_check(UEmbedding(U2, PAIR12, eps))
        assert rep["holds"], rep["failures"]
        assert set(rep["families"]) == {
            "K-product", "K-E", "K-F", "E-F", "Serre-E", "Serre-F"}
        assert all(f["holds"] for f in rep["families"].values())


def test_embedding_relations_a3_to_a2():
    for pair in (PAIR12, PAIR23):
        for eps in (1, -1):
            rep = embedding_relations_check(UEmbedding(U3, pair, eps))
            assert rep["holds"], rep["failures"]


def test_identity_images_satisfy_relations():
    rep = check_relations(
        U2, U2,
        {i: e_gen(U2, i) for i in (1, 2)},
        {i: f_gen(U2, i) for i in (1, 2)})
    assert rep["holds"] and all(f["checked"] for f in rep["families"].values())


def test_invalid_pair_rejected():
    with pytest.raises(ValueError):
        UEmbedding(U3, ContractiblePair(1, 3), 1)
    with pytest.raises(ValueError):
        UEmbedding(U2, PAIR12, 0)


def test_merged_commutator_display():
    # the commutator of the merged generators reproduces the merged torus gap
    kt0 = k_merged_vector(U2, PAIR12)
    for eps in (1, -1):
        emb = UEmbedding(U2, PAIR12, eps)
        e0 = emb.apply(e_gen(emb.source, emb.merged))
        f0 = emb.apply(f_gen(emb.source, emb.merged))
        com = u_multiply(e0, f0) - u_multiply(f0, e0)
        gap = (k_gen(U2, kt0) - k_gen(U2, tuple(-a for a in kt0))) \
            .scale(QV_ONE / (v_power(1) - v_power(-1)))
        assert com == gap


def test_psi_multiplicative_random():
    rng = random.Random(4)
    for eps in (1, -1):
        emb = UEmbedding(U3, PAIR23, eps)
        for _ in range(12):
            x = rand_element(emb.source, rng, width=2)
            y = rand_element(emb.source, rng, width=2)
            assert emb.apply(u_multiply(x, y)) == \
                u_multiply(emb.apply(x), emb.apply(y))


def test_psi_preimage_roundtrip():
    rng = random.Random(5)
    emb = UEmbedding(U2, PAIR12, 1)
    for _ in range(8):
        x = rand_element(emb.source, rng, width=2, letters=2)
        back = psi_preimage(emb, emb.apply(x))
        assert back == x
    # a bare half of the merged raising word is not in the image
    assert psi_preimage(emb, e_gen(U2, 1)) is None


def test_injectivity_report():
    emb = UEmbedding(U2, PAIR12, 1)
    rep = u_injectivity_report(emb, 3)
    assert rep["injective"]
    assert all(b["rank"] == b["dim"] for b in rep["blocks"].values())
    assert len(rep["blocks"]) > 4


# --- comultiplication --------------------------------------------------------

def test_delta_on_generators():
    one = u_one(U2)
    for i in (1, 2):
        assert delta(e_gen(U2, i)) == tensor_of(e_gen(U2, i), one) \
            + tensor_of(k_tilde_gen(U2, i), e_gen(U2, i))
        assert delta(f_gen(U2, i)) == \
            tensor_of(f_gen(U2, i), k_tilde_gen(U2, i, -1)) \
            + tensor_of(one, f_gen(U2, i))
    mu = (1, -1)
    assert delta(k_gen(U2, mu)) == tensor_of(k_gen(U2, mu), k_gen(U2, mu))


def test_delta_homomorphism_random():
    from qcontract.uq import _tensor_mul
    rng = random.Random(6)
    for _ in range(15):
        x = rand_element(U2, rng, width=2)
        y = rand_element(U2, rng, width=2)
        assert delta(u_multiply(x, y)) == _tensor_mul(delta(x), delta(y))


def test_delta_component_slices():
    t = delta(e_gen(U2, 1))
    assert delta_component(t, (1, 0), (0, 0)) == \
        tensor_of(e_gen(U2, 1), u_one(U2))
    assert delta_component(t, (0, 0), (1, 0)) == \
        tensor_of(k_tilde_gen(U2, 1), e_gen(U2, 1))
    assert delta_component(t, (0, 1), (0, 0)).is_zero()


def test_delta_merged_display():
    kt0 = k_merged_vector(U2, PAIR12)
    one = u_one(U2)
    ep, em = e_gen(U2, 1), e_gen(U2, 2)
    fp, fm = f_gen(U2, 1), f_gen(U2, 2)
    for eps in (1, -1):
        e0, f0 = e_merged(U2, PAIR12, eps), f_merged(U2, PAIR12, eps)
        assert delta(e0) == tensor_of(e0, one) \
            + tensor_of(k_gen(U2, kt0), e0) \
            + tensor_of(u_multiply(k_tilde_gen(U2, 1), em),
                        ep).scale(QV_ONE - v_power(1 - eps)) \
            + tensor_of(u_multiply(k_tilde_gen(U2, 2), ep),
                        em).scale(v_power(1) - v_power(-eps))
        assert delta(f0) == \
            tensor_of(f0, k_gen(U2, tuple(-a for a in kt0))) \
            + tensor_of(one, f0) \
            + tensor_of(fp, u_multiply(k_tilde_gen(U2, 1, -1),
                                       fm)).scale(v_power(1) - v_power(eps)) \
            + tensor_of(fm, u_multiply(k_tilde_gen(U2, 2, -1),
                                       fp)).scale(QV_ONE - v_power(1 + eps))


def test_emb_co_blocks():
    emb = UEmbedding(U2, PAIR12, 1)
    for tau, om in (((0,), (0,)), ((1,), (-1,)), ((-1,), (1,))):
        rep = emb_co_check(emb, (1,), (1,), tau, om)
        assert rep["holds"], rep["failures"]
        assert rep["checked"] == 1


def test_transported_coproduct_differs_globally():
    # the embedding respects the coproduct block by block, not globally:
    # the downstairs coproduct of a merged generator carries middle terms
    # that the transported coproduct cannot see
    for eps in (1, -1):
        emb = UEmbedding(U2, PAIR12, eps)
        f0_hat = f_gen(emb.source, emb.merged)
        assert tensor_psi(emb, delta(f0_hat)) != delta(emb.apply(f0_hat))


# --- the idempotented form ---------------------------------------------------

def test_udot_idempotents():
    lam, mu = (1, 0), (0, 1)
    one_lam = udot_idempotent(U2, lam)
    assert udot_multiply(one_lam, one_lam) == one_lam
    assert udot_multiply(one_lam, udot_idempotent(U2, mu)).is_zero()
    assert render_udot(one_lam) == "(1)*1{λ=(1,0)}"


def test_udot_weight_shifts():
    lam = (1, 1)
    one_lam = udot_idempotent(U2, lam)
    root1 = U2.datum.root(1)
    shifted = udot_idempotent(U2, tuple(a - b for a, b in zip(lam, root1)))
    assert udot_act_u(one_lam, e_gen(U2, 1)) == \
        u_act_udot(e_gen(U2, 1), shifted)
    assert pi_weight(k_gen(U2, (1, 0)), lam, lam) == \
        one_lam.scale(v_power(U2.datum.pair((1, 0), lam)))
    assert pi_weight(e_gen(U2, 1),
                     tuple(a + b for a, b in zip(lam, root1)), lam) == \
        u_act_udot(e_gen(U2, 1), one_lam)


def test_psi_dot_check():
    for eps in (1, -1):
        emb = UEmbedding(U2, PAIR12, eps)
        rep = psi_dot_check(emb, [(0, 0), (1, 0), (0, 1), (1, 1)])
        assert rep["holds"], rep["failures"]
        assert rep["checked"] > 0


# --- braid operators ---------------------------------------------------------

def test_braid_inverse_pairs():
    gens = [e_gen(U2, 1), f_gen(U2, 1), e_gen(U2, 2), f_gen(U2, 2),
            k_gen(U2, (1, 0)), k_gen(U2, (0, 1))]
    for i in (1, 2):
        for e in (1, -1):
            for primed in (True, False):
                op = braid_basic(U2, i, e, primed)
                inv = op.inverse()
                for g in gens:
                    assert inv.apply(op.apply(g)) == g
                    assert op.apply(inv.apply(g)) == g


def test_rank_two_braid_relation():
    gens = [e_gen(U2, 1), f_gen(U2, 2), k_gen(U2, (1, -1)),
            u_multiply(e_gen(U2, 1), f_gen(U2, 1))]
    for e in (1, -1):
        for primed in (True, False):
            t1 = braid_basic(U2, 1, e, primed)
            t2 = braid_basic(U2, 2, e, primed)
            for g in gens:
                assert t1.apply(t2.apply(t1.apply(g))) == \
                    t2.apply(t1.apply(t2.apply(g)))


def test_braid_gate():
    rep = braid_formula_gate(U2, PAIR12)
    assert rep["holds"], rep["failures"]


def test_braid_neighbor_assumption():
    assert braid_assumption_holds(U3, PAIR12) == (True, None)
    tri = UAlgebra(simply_connected_datum(TRIANGLE), 4)
    ok, bad = braid_assumption_holds(tri, PAIR12)
    assert not ok and bad == 3
    rep = braid_props_check(tri, PAIR12)
    assert rep == {"assumption": False, "violating_vertex": "3",
                   "holds": False, "failures": rep["failures"]}


def test_composite_braid_on_merged_lists():
    for pair in (PAIR12, PAIR23):
        rep = braid_props_check(U3, pair)
        assert rep["assumption"] and rep["holds"], rep["failures"]
        assert rep["checked"] == 24


def test_bar_conjugated_composite():
    gens = [e_gen(U2, 1), f_gen(U2, 2), e_merged(U2, PAIR12, 1),
            k_gen(U2, (1, 0))]
    for e in (1, -1):
        t_pos = tilde_braid_i0(U2, PAIR12, e, True)
        t_neg = tilde_braid_i0(U2, PAIR12, -e, True)
        for g in gens:
            assert bar_U(t_pos.apply(bar_U(g))) == t_neg.apply(g)


def test_braid_on_image_a2():
    for eps in (1, -1):
        emb = UEmbedding(U2, PAIR12, eps)
        for e in (1, -1):
            rep = braid_on_V_check(emb, e)
            assert rep["hypothesis"] and rep["holds"], rep["failures"]
            assert rep["checked"] == 12


def test_braid_on_image_a3_hypothesis():
    # vertex 2 is interior, so one sign pattern per pair is rejected
    emb = UEmbedding(U3, PAIR23, 1)
    good = braid_on_V_check(emb, 1)          # e*eps = 1 needs minus end vertex
    assert good["hypothesis"] and good["holds"], good["failures"]
    bad = braid_on_V_check(emb, -1)          # e*eps = -1 needs plus end vertex
    assert not bad["hypothesis"] and bad["non_end_vertex"] == "2"
    emb = UEmbedding(U3, PAIR12, 1)
    assert braid_on_V_check(emb, -1)["holds"]
    assert not braid_on_V_check(emb, 1)["hypothesis"]


# --- subquotient probe -------------------------------------------------------

def test_subquotient_probe_a2():
    rep = subquotient_phi_probe(U2, PAIR12, 3, epsilon=1)
    assert rep["label"] == "evidence"
    assert rep["holds"], rep["failures"]
    assert rep["surjective"] and rep["meet_trivial"] and rep["torus_bijective"]
    assert rep["identities_hold"]
    assert rep["quotient_braid"]["holds"]
    assert rep["quotient_braid"]["checked"] == 16
    rep = subquotient_phi_probe(U2, PAIR12, 1, epsilon=-1)
    assert rep["holds"] and rep["identities_hold"], rep["failures"]


def test_subquotient_probe_a3():
    rep = subquotient_phi_probe(U3, PAIR23, 3, epsilon=1)
    assert rep["holds"], rep["failures"]
    assert rep["quotient_braid"]["holds"]
    assert rep["quotient_braid"]["checked"] == 28


# --- integrable quotients ----------------------------------------------------

def test_module_dims_match_weyl_count():
    # rank two: dim = (a+1)(b+1)(a+b+2)/2
    for lam, want in (((0, 0), 1), ((1, 0), 3), ((0, 1), 3),
                      ((1, 1), 8), ((2, 0), 6)):
        assert build_module(U2, lam).dim == want
    # rank three checks against the same hook-content count
    assert build_module(U3, (1, 0, 0)).dim == 4
    assert build_module(U3, (0, 1, 0)).dim == 6


def test_module_weights_and_relations():
    mod = build_module(U1, (2,))
    assert mod.dim == 3
    assert mod.weights == [(2,), (0,), (-2,)]
    rep = module_relations_check(mod)
    assert rep["holds"], rep["failures"]
    rep = module_relations_check(build_module(U2, (1, 1)))
    assert rep["holds"], rep["failures"]


def test_module_rejects_bad_weights():
    with pytest.raises(ValueError):
        build_module(U2, (-1, 0))


def test_module_action_shape():
    mod = build_module(U2, (1, 0))
    cols = action_matrix(mod, k_gen(U2, (1, 0)))
    for idx in range(mod.dim):
        assert list(cols[idx]) == [idx]
    ef = action_matrix(mod, u_multiply(e_gen(U2, 1), f_gen(U2, 1)))
    fe = action_matrix(mod, u_multiply(f_gen(U2, 1), e_gen(U2, 1)))
    for idx in range(mod.dim):
        gap = U2.datum.pair(U2.datum.coroot(1), mod.weights[idx])
        want = quantum_integer(abs(gap), 1)
        if gap < 0:
            want = QV_ZERO - want
        diff = (ef[idx].get(idx, QV_ZERO) - fe[idx].get(idx, QV_ZERO))
        assert diff == want


def test_module_hom_check_small():
    for eps in (1, -1):
        emb = UEmbedding(U2, PAIR12, eps)
        for lam, hyp_minus, hyp_plus in (((1, 0), True, False),
                                         ((0, 1), False, True)):
            rep = module_hom_check(emb, lam)
            assert rep["holds"], rep["failures"]
            assert rep["dims"] == [2, 3]
            assert rep["hypothesis_minus"] is hyp_minus
            assert rep["hypothesis_plus"] is hyp_plus


def test_tensor_module_check():
    emb = UEmbedding(U2, PAIR12, 1)
    rep = psi_tensor_check(emb, (1, 0), (0, 1))
    assert rep["holds"], rep
    assert rep["dims"] == [4, 9]
    assert rep["factor_map_matches"]
    rep = psi_tensor_check(emb, (0, 0), (0, 0))
    assert rep["holds"] and rep["dims"] == [1, 1]


# --- linear chains -----------------------------------------------------------

def test_subset_root_datum():
    sub = subset_root_datum(U3.datum, [1, 2])
    assert sub.cartan.indices == (1, 2)
    assert sub.cartan.dot(1, 2) == -1
    assert sub.root(1) == U3.datum.root(1)


def test_linear_tree_factorization():
    for eps in (1, -1):
        rep = linear_tree_factorization_check(U3, (2, 3), eps)
        assert rep["hypothesis"] and rep["holds"], rep["failures"]
        assert rep["checked"] == 7


def test_linear_tree_rejections():
    rep = linear_tree_factorization_check(U3, (1, 3), 1)
    assert not rep["hypothesis"] and "adjacent" in rep["reason"]
    u4 = UAlgebra(simply_connected_datum(A4), 6)
    rep = linear_tree_factorization_check(u4, (2, 3), 1)
    assert not rep["hypothesis"] and "off the chain" in rep["reason"]


def test_naive_square():
    for eps in (1, -1):
        rep = naive_square_check(U3, 1, 2, 3, eps)
        assert rep["holds"], rep["failures"]
        assert rep["checked"] == 7
