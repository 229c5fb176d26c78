"""Dense tables, CRT split, linear maps, composition."""

import numpy as np
import pytest

from clonecalc import core
from clonecalc.core import FnTable, LinearMapSpec

from conftest import random_table


def test_modulus_validation():
    assert core.modulus_for(6).primes == (2, 3)
    assert core.modulus_for(30).primes == (2, 3, 5)
    with pytest.raises(ValueError):
        core.modulus_for(4)
    with pytest.raises(ValueError):
        core.modulus_for(12)
    with pytest.raises(ValueError):
        core.SquarefreeModulus((3, 2))
    with pytest.raises(ValueError):
        core.SquarefreeModulus((2, 2))


def test_crt_scalars(mod6):
    # (prod_{j != i} p_j)^(p_i - 1): 3 and 4 on Z_6; they sum to 1 mod 6
    assert mod6.crt_scalar(1) == 3
    assert mod6.crt_scalar(2) == 4
    mod30 = core.modulus_for(30)
    total = sum(mod30.crt_scalar(i) for i in (1, 2, 3)) % 30
    assert total == 1


def test_crt_split_constant_one(mod6):
    one = FnTable.from_callable(mod6, 0, lambda pt: (1, 1))
    f1, f2 = core.crt_split(one)
    # constant 1 splits into 3 and 4: residues (1,0) and (0,1)
    assert f1.values.tolist() == [[1, 0]]
    assert f2.values.tolist() == [[0, 1]]
    assert core.add(f1, f2) == one


def test_crt_split_identity(mod6):
    ident = FnTable.from_callable(mod6, 1, lambda pt: (pt[0][0], pt[1][0]))
    f1, f2 = core.crt_split(ident)
    assert f1 == core.scalar_mul(3, ident)
    assert f2 == core.scalar_mul(4, ident)
    assert core.add(f1, f2) == ident


def test_crt_recombination_z30(rng):
    mod = core.modulus_for(30)
    f = random_table(rng, mod, 1)
    parts = core.crt_split(f)
    acc = parts[0]
    for part in parts[1:]:
        acc = core.add(acc, part)
    assert acc == f
    # block independence: part i vanishes in components j != i
    for i, part in enumerate(parts, start=1):
        for j in range(1, mod.m + 1):
            if j != i:
                assert not core.component_of(part, j).values.any()


def test_component_of(mod6):
    ident = FnTable.from_callable(mod6, 1, lambda pt: (pt[0][0], pt[1][0]))
    comp1 = core.component_of(ident, 1)
    assert comp1.values.tolist() == [0, 0, 0, 1, 1, 1]
    mul = FnTable.from_callable(
        mod6, 2, lambda pt: ((pt[0][0] * pt[0][1]) % 2, (pt[1][0] * pt[1][1]) % 3)
    )
    comp2 = core.component_of(mul, 2)
    dom = core.domain(mod6.primes, 2)
    for t in range(dom.npoints):
        x, y = dom.decode(t)
        assert comp2.values[t] == (y[0] * y[1]) % 3
    with pytest.raises(IndexError):
        core.component_of(ident, 3)


def test_components_recombine(rng, mod6):
    f = random_table(rng, mod6, 2)
    cols = [core.component_of(f, i).values for i in (1, 2)]
    assert core.from_components(mod6, 2, cols) == f


def test_linear_map_identity_and_addition(mod6):
    ident = FnTable.from_callable(mod6, 1, lambda pt: (pt[0][0], pt[1][0]))
    assert core.linear_map(LinearMapSpec(mod6, ((1,), (1,)))) == ident
    plus = core.linear_map(LinearMapSpec(mod6, ((1, 1), (1, 1))))
    dom = core.domain(mod6.primes, 2)
    for t in range(dom.npoints):
        x, y = dom.decode(t)
        assert tuple(plus.values[t]) == ((x[0] + x[1]) % 2, (y[0] + y[1]) % 3)


def test_linear_map_is_three_x(mod6):
    # a_1 = (1), a_2 = (0) is x -> 3x on Z_6
    lm = core.linear_map(LinearMapSpec(mod6, ((1,), (0,))))
    three_x = FnTable.from_callable(mod6, 1, lambda pt: (pt[0][0] % 2, 0))
    assert lm == three_x
    dom = core.domain(mod6.primes, 1)
    for t in range(dom.npoints):
        x, y = dom.decode(t)
        zs = 3 * (3 * x[0] + 4 * y[0]) % 6  # 3·(CRT value)
        assert (zs % 2, zs % 3) == tuple(lm.values[t])


def test_linear_map_respects_composition(rng, mod6):
    # composing linear maps matches the matrix-product coefficients
    for _ in range(10):
        k, l = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        outer = LinearMapSpec(
            mod6,
            tuple(tuple(int(c) for c in rng.integers(0, p, size=k)) for p in mod6.primes),
        )
        inners = [
            LinearMapSpec(
                mod6,
                tuple(tuple(int(c) for c in rng.integers(0, p, size=l)) for p in mod6.primes),
            )
            for _ in range(k)
        ]
        composed = core.compose(core.linear_map(outer), [core.linear_map(s) for s in inners])
        prod_vectors = []
        for bi, p in enumerate(mod6.primes):
            row = [0] * l
            for arg in range(k):
                c = outer.vectors[bi][arg]
                for col in range(l):
                    row[col] = (row[col] + c * inners[arg].vectors[bi][col]) % p
            prod_vectors.append(tuple(row))
        assert composed == core.linear_map(LinearMapSpec(mod6, tuple(prod_vectors)))


def test_compose_projections_doubling(mod6):
    plus = core.linear_map(LinearMapSpec(mod6, ((1, 1), (1, 1))))
    pi1 = core.linear_map(LinearMapSpec.projection(mod6, 1, 1))
    double = core.compose(plus, [pi1, pi1])
    ident = FnTable.from_callable(mod6, 1, lambda pt: (pt[0][0], pt[1][0]))
    assert double == core.scalar_mul(2, ident)


def test_add_scalar_axioms(rng, mod6):
    f = random_table(rng, mod6, 1)
    zero = FnTable.zero(mod6, 1)
    assert core.add(f, zero) == f
    five = core.scalar_mul(5, f)
    acc = f
    for _ in range(4):
        acc = core.add(acc, f)
    assert five == acc


def test_arity_and_modulus_mismatch(mod6):
    f = FnTable.zero(mod6, 1)
    g = FnTable.zero(mod6, 2)
    with pytest.raises(ValueError):
        core.add(f, g)
    with pytest.raises(ValueError):
        core.compose(g, [f])
    mod10 = core.modulus_for(10)
    with pytest.raises(ValueError):
        core.add(f, FnTable.zero(mod10, 1))


def test_e_embed_examples(mod6):
    zero = core.e_embed(mod6, 1, 1, np.zeros(3, dtype=np.uint8))
    assert zero == FnTable.zero(mod6, 1)
    chi0 = np.array([1, 0, 0], dtype=np.uint8)
    emb = core.e_embed(mod6, 1, 1, chi0)
    dom = core.domain(mod6.primes, 1)
    for t in range(dom.npoints):
        x, y = dom.decode(t)
        assert emb.values[t, 0] == (1 if y[0] == 0 else 0)
        assert emb.values[t, 1] == 0
    # round-trip through component projection
    comp = core.component_of(emb, 1)
    cmap = core.coeff_index_map(mod6.primes, 1, 1, 1)
    assert (comp.values == chi0[cmap]).all()


def test_index_order_bijection():
    for n in (6, 30):
        mod = core.modulus_for(n)
        for arity in (0, 1, 2):
            dom = core.domain(mod.primes, arity)
            seen = set()
            for t in range(dom.npoints):
                pt = dom.decode(t)
                assert dom.encode(pt) == t
                seen.add(pt)
            assert len(seen) == dom.npoints


def test_block_lexicographic_order(mod6):
    # x_1-block most significant; within a block coordinate 1 most significant
    dom = core.domain(mod6.primes, 2)
    assert dom.decode(0) == ((0, 0), (0, 0))
    assert dom.decode(1) == ((0, 0), (0, 1))
    assert dom.decode(3) == ((0, 0), (1, 0))
    assert dom.decode(9) == ((0, 1), (0, 0))
    assert dom.decode(18) == ((1, 0), (0, 0))


def test_unique_rows(rng):
    arr = rng.integers(0, 6, size=(500, 13), dtype=np.uint8)
    arr[250:] = arr[:250]
    fast = core.unique_rows(arr)
    slow = np.unique(arr, axis=0)
    assert np.array_equal(np.sort(fast.view("S13").ravel()), np.sort(slow.view("S13").ravel()))
