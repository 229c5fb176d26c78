"""Linearly closed clonoids: closures, lattices, enumeration."""

import numpy as np
import pytest

from clonecalc import clonoid, guards
from clonecalc.clonoid import ArityAboveCap, ClonoidSig, cig_closure, cig_closure_stagewise
from clonecalc.poly import CoeffFn, CoeffRingSig

SIG23 = ClonoidSig(2, (3,))
SIG32 = ClonoidSig(3, (2,))
C1 = CoeffRingSig(2, (3,), 1)


def unary_set(c):
    return sorted(tuple(int(x) for x in row) for row in c.unary_tables())


def test_zero_and_constant_closures():
    zero = cig_closure([CoeffFn.constant(C1, 0)], 2)
    assert unary_set(zero) == [(0, 0, 0)]
    consts = cig_closure([CoeffFn.constant(C1, 1)], 2)
    assert unary_set(consts) == [(0, 0, 0), (1, 1, 1)]


def test_chi0_closure_matches_expected():
    chi0 = CoeffFn(C1, [1, 0, 0])
    c = cig_closure([chi0], 2)
    assert unary_set(c) == [(0, 0, 0), (0, 1, 1), (1, 0, 0), (1, 1, 1)]


def test_empty_generators_rejected():
    with pytest.raises(ValueError):
        cig_closure([], 2)


def test_member_and_cap():
    chi0 = CoeffFn(C1, [1, 0, 0])
    c = cig_closure([chi0], 2)
    assert clonoid.member(chi0, c)
    assert clonoid.member(CoeffFn.constant(C1, 0), c)
    one = CoeffFn.constant(C1, 1)
    assert clonoid.member(one, c)
    zero_clo = clonoid.zero_clonoid(SIG23, 2)
    assert not clonoid.member(one, zero_clo)
    sig3 = CoeffRingSig(2, (3,), 3)
    with pytest.raises(ArityAboveCap):
        c.member(np.zeros(27, dtype=np.uint8), 3)


def test_enumeration_counts():
    assert len(clonoid.enumerate_clonoids(SIG23, 2)) == 6
    assert len(clonoid.enumerate_clonoids(SIG32, 2)) == 4


def test_enumeration_guard():
    big = ClonoidSig(2, (3, 5))
    with pytest.raises(guards.ResourceGuardError):
        clonoid.enumerate_clonoids(big, 2)


def test_unary_generates_everywhere():
    for sig in (SIG23, SIG32):
        for c in clonoid.enumerate_clonoids(sig, 2):
            assert clonoid.unary_generates(c)


def test_binary_generator_still_unary_generated(rng):
    sig2 = CoeffRingSig(2, (3,), 2)
    for _ in range(5):
        table = rng.integers(0, 2, size=9, dtype=np.uint8)
        if not table.any():
            continue
        c = cig_closure([CoeffFn(sig2, table)], 2)
        assert clonoid.unary_generates(c)


def test_meet_join_examples():
    lattice = clonoid.enumerate_clonoids(SIG23, 2)
    zero = clonoid.zero_clonoid(SIG23, 2)
    for c in lattice:
        assert c.meet(c).eq(c)
        assert c.join(zero).eq(c)
    consts = cig_closure([CoeffFn.constant(C1, 1)], 2)
    chi0 = cig_closure([CoeffFn(C1, [1, 0, 0])], 2)
    joined = consts.join(chi0)
    both = cig_closure([CoeffFn.constant(C1, 1), CoeffFn(C1, [1, 0, 0])], 2)
    assert joined.eq(both)


def test_lattice_axioms_exhaustive():
    for sig in (SIG23, SIG32):
        lattice = clonoid.enumerate_clonoids(sig, 2)
        for a in lattice:
            for b in lattice:
                m, j = a.meet(b), a.join(b)
                assert m.eq(b.meet(a)) and j.eq(b.join(a))
                assert a.meet(j).eq(a) and a.join(m).eq(a)  # absorption
                for c in lattice:
                    assert a.meet(b.meet(c)).eq(a.meet(b).meet(c))
                    assert a.join(b.join(c)).eq(a.join(b).join(c))


def test_closure_idempotent_and_monotone(rng):
    for _ in range(25):
        tables = [
            CoeffFn(C1, rng.integers(0, 2, size=3, dtype=np.uint8)) for _ in range(2)
        ]
        c = cig_closure(tables, 2)
        members = [CoeffFn(C1, row) for row in c.arity_basis(1)] + [
            CoeffFn(CoeffRingSig(2, (3,), 2), row) for row in c.arity_basis(2)
        ]
        again = cig_closure(members or [CoeffFn.constant(C1, 0)], 2)
        assert again.eq(c)
        bigger = cig_closure(tables + [CoeffFn(C1, rng.integers(0, 2, size=3, dtype=np.uint8))], 2)
        assert c.leq(bigger)


def test_stagewise_equivalence(rng):
    for _ in range(3):
        tables = [
            CoeffFn(C1, rng.integers(0, 2, size=3, dtype=np.uint8)) for _ in range(2)
        ]
        fast = cig_closure(tables, 2)
        slow = cig_closure_stagewise(tables, 2)
        for k in (1, 2):
            got = frozenset(t.tobytes() for t in fast.arity_members(k))
            assert got == slow[k]


def test_canonical_key_is_complete(rng):
    seen = {}
    for _ in range(40):
        tables = [
            CoeffFn(C1, rng.integers(0, 2, size=3, dtype=np.uint8)) for _ in range(2)
        ]
        c = cig_closure(tables, 2)
        key = c.canonical_key()
        if key in seen:
            assert seen[key].eq(c)
        seen[key] = c


def test_constants_in():
    chi0 = cig_closure([CoeffFn(C1, [1, 0, 0])], 2)
    assert chi0.constants_in() == [0, 1]
    zero = clonoid.zero_clonoid(SIG23, 2)
    assert zero.constants_in() == [0]
