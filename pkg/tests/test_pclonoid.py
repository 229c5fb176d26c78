"""Extraction algorithms, certificates, and the membership oracle."""

import numpy as np
import pytest

from clonecalc import pclonoid
from clonecalc.pclonoid import (
    Certificate,
    PolyGenSet,
    degree_shift,
    extract_max_degree_monomial,
    isolate_full_support,
    monomials_of,
    pclonoid_member_oracle,
)
from clonecalc.poly import CoeffFn, CoeffRingSig, RPoly

SIG = CoeffRingSig(2, (3,), 1)
SIG3 = CoeffRingSig(3, (2,), 1)
R = CoeffFn(SIG, [1, 0, 1])
R3 = CoeffFn(SIG3, [1, 2])
RP3 = CoeffFn(SIG3, [2, 1])


def test_isolate_trivial_and_one_subtraction():
    f = RPoly(SIG, {(1, 1): R})
    res, cert = isolate_full_support(f, 2)
    assert res == f and len(cert.nodes()[0]) == 1  # g = 0: empty derivation
    f = RPoly(SIG, {(1, 1): R, (1,): R})
    res, cert = isolate_full_support(f, 2)
    assert res == RPoly(SIG, {(1, 1): R})
    ops = [type(n).__name__ for n in cert.nodes()[0]]
    assert ops.count("CertLin") == 1 and ops.count("CertZero") == 1


def test_isolate_constant_elimination():
    f = RPoly(SIG3, {(1, 1): R3, (): RP3})
    res, cert = isolate_full_support(f, 2)
    assert res == RPoly(SIG3, {(1, 1): R3})
    assert cert.replay([f]) == res


def test_isolate_rejects_high_degree_rest():
    f = RPoly(SIG3, {(1,): R3, (2, 2): RP3})
    with pytest.raises(ValueError):
        isolate_full_support(f, 1)


def test_extract_multilinear_returns_itself():
    f = RPoly(SIG, {(1, 1): R})
    res, cert = extract_max_degree_monomial(f, (1, 1))
    assert res == f


def test_extract_square_splits():
    f = RPoly(SIG3, {(2,): R3})
    res, cert = extract_max_degree_monomial(f, (2,))
    assert res == RPoly(SIG3, {(1, 1): R3})
    assert cert.replay([f]) == res


def test_extract_cube_two_rounds():
    sig5 = CoeffRingSig(5, (2,), 1)
    r5 = CoeffFn(sig5, [3, 1])
    f = RPoly(sig5, {(3,): r5})
    res, cert = extract_max_degree_monomial(f, (3,))
    assert res == RPoly(sig5, {(1, 1, 1): r5})
    assert cert.replay([f]) == res


def test_extract_errors():
    f = RPoly(SIG, {(1, 1): R, (1,): R})
    with pytest.raises(ValueError):
        extract_max_degree_monomial(f, (1,))  # not maximal degree
    with pytest.raises(ValueError):
        extract_max_degree_monomial(f, (0, 0, 1))  # not a monomial of f


def test_monomials_of_single():
    f = RPoly(SIG, {(1, 1): R})
    items = monomials_of(f)
    assert len(items) == 1 and items[0][0] == f


def test_monomials_of_two_terms_oracle_crosscheck():
    rp = CoeffFn(SIG, [0, 1, 1])
    f = RPoly(SIG, {(1, 1): R, (1,): rp})
    items = monomials_of(f)
    assert [h.monomials() for h, _ in items] == [[(1, 1)], [(1,)]]
    for h, cert in items:
        assert cert.replay([f]) == h
        assert pclonoid_member_oracle(h, [f]) == pclonoid.YES


def test_monomials_of_mixed_degrees():
    f = RPoly(SIG3, {(2,): R3, (): RP3})
    items = monomials_of(f)
    assert sorted(h.monomials()[0] for h, _ in items) == [(), (2,)]
    total = RPoly.zero(SIG3)
    for h, _ in items:
        total = total.add(h)
    assert total == f


def test_degree_shift_examples():
    # p=2, d=2, x1x2x3: exactly one self-composition
    cert = degree_shift(R, 2, (1, 1, 1))
    kinds = [type(n).__name__ for n in cert.nodes()[0]]
    assert kinds.count("CertSelfComp") == 1
    # p=3, d=2, x1^2: identification only
    cert = degree_shift(R3, 2, (2,))
    kinds = [type(n).__name__ for n in cert.nodes()[0]]
    assert kinds == ["CertLeaf", "CertIdent"]
    # target equal to the base: empty certificate
    cert = degree_shift(R3, 2, (1, 1))
    assert [type(n).__name__ for n in cert.nodes()[0]] == ["CertLeaf"]


def test_degree_shift_p2_reaches_degree_one():
    # with p = 2 every nonzero degree is congruent; x1 is reachable from d=2
    cert = degree_shift(R, 2, (1,))
    base = RPoly(SIG, {(1, 1): R})
    assert cert.replay([base]) == RPoly(SIG, {(1,): R})


def test_degree_shift_errors():
    with pytest.raises(ValueError):
        degree_shift(R3, 1, (1,))
    with pytest.raises(ValueError):
        degree_shift(R3, 2, ())
    with pytest.raises(ValueError):
        degree_shift(R3, 2, (1,))  # tD 1 not congruent to 2 mod 2


def test_oracle_examples():
    f = RPoly(SIG, {(1, 1): R, (1,): R})
    assert pclonoid_member_oracle(f, [f]) == pclonoid.YES
    assert pclonoid_member_oracle(RPoly(SIG, {(1, 1): R}), [f]) == pclonoid.YES
    zero = RPoly.zero(SIG)
    x1 = RPoly(SIG, {(1,): CoeffFn.constant(SIG, 1)})
    assert pclonoid_member_oracle(x1, [zero]) == pclonoid.NO
    assert pclonoid_member_oracle(zero, [x1]) == pclonoid.YES  # 0 = 0·f
    with pytest.raises(ValueError):
        pclonoid_member_oracle(x1, [])


def test_oracle_unknown_on_cap():
    f = RPoly(SIG, {(1, 1, 1, 1): R})
    assert pclonoid_member_oracle(f, [f], var_cap=3) == pclonoid.UNKNOWN


def test_oracle_negative_is_sound(rng):
    # a degree-2 monomial is never generated by a degree-1 polynomial
    lin = RPoly(SIG, {(1,): R})
    quad = RPoly(SIG, {(1, 1): R})
    assert pclonoid_member_oracle(quad, [lin]) == pclonoid.NO


def test_gen_set_validation():
    with pytest.raises(ValueError):
        PolyGenSet(SIG, [])
    with pytest.raises(ValueError):
        PolyGenSet(SIG, [RPoly.zero(SIG3)])


def test_certificate_json_roundtrip():
    f = RPoly(SIG, {(1, 1): R, (1,): R})
    res, cert = isolate_full_support(f, 2)
    obj = cert.to_obj()
    back = Certificate.from_obj(obj)
    assert back.replay([f]) == res
    cert2 = degree_shift(R, 2, (1, 1, 1))
    base = RPoly(SIG, {(1, 1): R})
    back2 = Certificate.from_obj(cert2.to_obj())
    assert back2.replay([base]) == cert2.replay([base])


def test_certificate_soundness_random(rng):
    # certificates replay over fresh random inputs beyond the verify suite
    for k in range(30):
        p = 2 if k % 2 == 0 else 3
        sig = SIG if p == 2 else SIG3
        nv = int(rng.integers(1, 4))
        terms = {}
        for _ in range(int(rng.integers(1, 4))):
            mono = tuple(int(e) for e in rng.integers(0, p, size=nv))
            table = rng.integers(0, p, size=sig.domain_len, dtype=np.uint8)
            if table.any():
                from clonecalc.poly import trim

                terms[trim(mono)] = CoeffFn(sig, table)
        if not terms:
            continue
        f = RPoly(sig, terms)
        for h, cert in monomials_of(f):
            assert cert.replay([f]) == h
