"""Clones as graded coefficient systems: engine, membership, certificates."""

import numpy as np
import pytest

from clonecalc import clone, clonoid, core
from clonecalc.clonoid import ArityAboveCap, ClonoidSig
from clonecalc.core import FnTable, LinearMapSpec

from conftest import random_table


@pytest.fixture(scope="module")
def additive():
    mod = core.modulus_for(6)
    return mod, clone.from_generators([], mod, 2)


def mul_table(mod):
    return FnTable.from_callable(
        mod, 2, lambda pt: ((pt[0][0] * pt[0][1]) % 2, (pt[1][0] * pt[1][1]) % 3)
    )


def test_additive_clone_grades(additive):
    mod, clo = additive
    ranks = [clo.grades[k].rank() for k in sorted(clo.grades)]
    # ({0}, constants, {0}) and ({0}, constants, {0}, {0})
    assert ranks == [0, 1, 0, 0, 1, 0, 0]


def test_linear_maps_are_members(additive, rng):
    mod, clo = additive
    for _ in range(10):
        vectors = tuple(
            tuple(int(c) for c in rng.integers(0, p, size=2)) for p in mod.primes
        )
        h = core.linear_map(LinearMapSpec(mod, vectors))
        ok, cert = clo.member(h, certificate=True)
        assert ok and cert.replay(clo.generators) == h


def test_multiplication_not_in_additive(additive):
    mod, clo = additive
    assert clo.member(mul_table(mod))[0] is False


def test_multiplication_clone(additive):
    mod, _ = additive
    mul = mul_table(mod)
    cm = clone.from_generators([mul], mod, 2)
    # grade-2 clonoids gain the constant 1 in both components
    assert 1 in cm.grades[(1, 2)].constants_in()
    assert 1 in cm.grades[(2, 2)].constants_in()
    ok, cert = cm.member(mul, certificate=True)
    assert ok and cert.replay(cm.generators) == mul
    # x·(y·z) at arity 2: x·y·z with identified variables
    sq = core.compose(mul, [mul, core.linear_map(LinearMapSpec.projection(mod, 2, 1))])
    ok, cert = cm.member(sq, certificate=True)
    assert ok and cert.replay(cm.generators) == sq


def test_member_arity_zero_and_cap(additive):
    mod, clo = additive
    const0 = FnTable.zero(mod, 0)
    assert clo.member(const0)[0]
    const1 = FnTable.from_callable(mod, 0, lambda pt: (1, 1))
    assert not clo.member(const1)[0]
    with pytest.raises(ArityAboveCap):
        clo.member(FnTable.zero(mod, 3))


def test_gamma_shapes(additive):
    mod, clo = additive
    sig = ClonoidSig(2, (3,))
    lattice = clonoid.enumerate_clonoids(sig, 2)
    zero = next(c for c in lattice if c.rank() == 0)
    g0 = clone.gamma(mod, 1, zero, 2)
    assert g0.equal(clo)  # gamma of the zero clonoid is the additive clone
    consts = next(c for c in lattice if c.rank() == 1)
    gc = clone.gamma(mod, 1, consts, 2)
    # membership of the constant-1-in-component-1 function
    e1_one = core.e_embed(mod, 1, 1, np.ones(3, dtype=np.uint8))
    assert gc.member(e1_one)[0]
    chi0 = core.e_embed(mod, 1, 1, np.array([1, 0, 0], dtype=np.uint8))
    assert not gc.member(chi0)[0]
    ok, cert = gc.member(e1_one, certificate=True)
    assert ok and cert.replay(gc.generators) == e1_one


def test_gamma_monotone_exhaustive():
    mod = core.modulus_for(6)
    sig = ClonoidSig(2, (3,))
    lattice = clonoid.enumerate_clonoids(sig, 2)
    gammas = [clone.gamma(mod, 1, c, 2) for c in lattice]
    for a, ca in enumerate(lattice):
        for b, cb in enumerate(lattice):
            assert ca.leq(cb) == gammas[a].leq(gammas[b])


def test_rho_of_additive(additive):
    mod, clo = additive
    grades = clone.rho(clo)
    assert grades[(1, 1)].rank() == 1 and grades[(1, 0)].rank() == 0
    # definition spot-check: f in rho_(i,j) iff induce(f·x_1···x_j) is a member
    from clonecalc.poly import CoeffFn, CoeffRingSig, RPoly, induce

    sig1 = CoeffRingSig(2, (3,), 1)
    for c in range(2):
        coeff = CoeffFn.constant(sig1, c)
        probe = induce(RPoly.monomial(sig1, (1,), coeff), mod, 1, 1)
        assert clo.member(probe)[0] == grades[(1, 1)].member(coeff.table, 1)


def test_rho_gamma_grade_zero_roundtrip():
    mod = core.modulus_for(6)
    sig = ClonoidSig(2, (3,))
    for c in clonoid.enumerate_clonoids(sig, 2):
        g = clone.gamma(mod, 1, c, 2)
        assert g.grades[(1, 0)].canonical_key() == c.canonical_key()


def test_extract_generators_roundtrip_small():
    mod = core.modulus_for(6)
    mul = mul_table(mod)
    cm = clone.from_generators([mul], mod, 2)
    gens = clone.extract_generators(cm)
    assert max(g.arity for g in gens) <= 3
    rebuilt = clone.from_generators(gens, mod, 2, with_provenance=False)
    assert rebuilt.equal(cm)


def test_clone_meet_join_with_bottom(additive):
    mod, clo = additive
    mul = mul_table(mod)
    cm = clone.from_generators([mul], mod, 2)
    assert clo.leq(cm)
    assert cm.meet(clo).equal(clo)
    assert cm.join(clo).equal(cm)


def test_ball_contains_basics(additive):
    mod, clo = additive
    ball = clone.brute_force_clg_ball([], mod, 2, 2)
    plus = core.linear_map(LinearMapSpec(mod, ((1, 1), (1, 1)))).values
    ident2 = core.linear_map(LinearMapSpec.projection(mod, 2, 1)).values
    keys = {stack.tobytes() for stack in ball[2]}
    assert plus.tobytes() in keys and ident2.tobytes() in keys
    # x+x = +∘(π1, π1) reachable at depth 2: components (0, 2x)
    xx = core.linear_map(LinearMapSpec(mod, ((0, 0), (2, 0)))).values
    assert xx.tobytes() in keys
    for b, stack in ball.items():
        assert clo.member_batch(stack, b).all()


def test_ball_members_and_certificates(rng):
    mod = core.modulus_for(6)
    gens = [mul_table(mod)]
    cm = clone.from_generators(gens, mod, 2)
    ball = clone.brute_force_clg_ball(gens, mod, 2, 2)
    for b, stack in ball.items():
        assert cm.member_batch(stack, b).all()
        idx = rng.choice(stack.shape[0], size=min(10, stack.shape[0]), replace=False)
        for k in idx:
            f = FnTable(mod, b, stack[k])
            ok, cert = cm.member(f, certificate=True)
            assert ok and cert.replay(cm.generators) == f


def test_member_batch_matches_member(rng):
    mod = core.modulus_for(6)
    cm = clone.from_generators([mul_table(mod)], mod, 2)
    stack = np.stack([random_table(rng, mod, 2).values for _ in range(60)])
    batch = cm.member_batch(stack, 2)
    for k in range(stack.shape[0]):
        assert batch[k] == cm.member(FnTable(mod, 2, stack[k]))[0]


def test_enumerate_clones_gamma_floor():
    mod = core.modulus_for(6)
    census = clone.enumerate_clones(mod, 2, pool=[], subset_size=0)
    assert census["count"] >= 9  # 6 + 4 - 1 distinct gamma images


def test_certificate_json_roundtrip():
    mod = core.modulus_for(6)
    mul = mul_table(mod)
    cm = clone.from_generators([mul], mod, 2)
    ok, cert = cm.member(mul, certificate=True)
    obj = cert.to_obj()
    back = clone.CloneCertificate.from_obj(obj, mod)
    assert back.replay(cm.generators) == mul


def test_idempotence_of_close(additive):
    mod, clo = additive
    mul = mul_table(mod)
    cm = clone.from_generators([mul], mod, 2)
    key = cm.grade_key()
    cm.close()
    assert cm.grade_key() == key


def test_monotone_in_generators(rng):
    mod = core.modulus_for(6)
    pool = clone.unary_coefficient_pool(mod, max_grade=2)
    for _ in range(5):
        a = pool[int(rng.integers(len(pool)))]
        b = pool[int(rng.integers(len(pool)))]
        small = clone.from_generators([a], mod, 2, with_provenance=False)
        big = clone.from_generators([a, b], mod, 2, with_provenance=False)
        assert small.leq(big)


def test_z30_additive_clone():
    mod = core.modulus_for(30)
    clo = clone.from_generators([], mod, 1)
    ranks = {k: clo.grades[k].rank() for k in sorted(clo.grades)}
    for (i, j), r in ranks.items():
        assert r == (1 if j == 1 else 0)
    ident = FnTable.from_callable(mod, 1, lambda pt: (pt[0][0], pt[1][0], pt[2][0]))
    assert clo.member(ident)[0]


def test_pcert_translation_homomorphism(rng):
    # polynomial derivations translate to clone composition trees:
    # whenever h is derived from h1 by the clonoid rules, the translated
    # tree evaluates induce(h) from induce(h1) and linear maps
    from clonecalc import pclonoid
    from clonecalc.poly import CoeffFn, CoeffRingSig, RPoly, induce, trim

    mod = core.modulus_for(6)
    for i, p in ((1, 2), (2, 3)):
        sig = CoeffRingSig(p, mod.others(i), 1)
        for _ in range(12):
            nv = int(rng.integers(1, 3))
            terms = {}
            for _ in range(int(rng.integers(1, 4))):
                mono = trim(tuple(int(e) for e in rng.integers(0, p, size=nv)))
                table = rng.integers(0, p, size=sig.domain_len, dtype=np.uint8)
                if table.any():
                    terms[mono] = CoeffFn(sig, table)
            if not terms:
                continue
            h1 = RPoly(sig, terms)
            arity = max(h1.nvars, 1)
            base_tree = clone.CLeafGen(0)
            base_table = induce(h1, mod, i, arity)
            for h, cert in pclonoid.monomials_of(h1):
                tree, poly, out_arity = clone.translate_pcert(
                    cert, mod, i, base_tree, h1, arity
                )
                assert poly == h
                got = clone.CloneCertificate(tree).replay([base_table])
                assert got == induce(h, mod, i, out_arity)


def test_translation_of_degree_shift(rng):
    from clonecalc import pclonoid
    from clonecalc.poly import CoeffFn, CoeffRingSig, RPoly, induce

    mod = core.modulus_for(6)
    sig = CoeffRingSig(2, (3,), 1)
    r = CoeffFn(sig, [1, 0, 1])
    base = RPoly.monomial(sig, (1, 1), r)
    cert = pclonoid.degree_shift(r, 2, (1, 1, 1))
    base_table = induce(base, mod, 1, 2)
    tree, poly, arity = clone.translate_pcert(cert, mod, 1, clone.CLeafGen(0), base, 2)
    assert poly == RPoly.monomial(sig, (1, 1, 1), r)
    got = clone.CloneCertificate(tree).replay([base_table])
    assert got == induce(poly, mod, 1, arity)
