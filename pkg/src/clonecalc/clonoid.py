"""Linearly closed clonoids with a prime target Z_p and product source.

A clonoid here is a nonempty set of functions Π_j Z_{q_j}^n -> Z_p, one
grade per arity n, closed under Z_p-linear combinations and under
precomposition with per-block matrix substitutions.  Each grade is a
Z_p-subspace, and substitutions compose blockwise, so the closure of a
generator set restricted to arities <= cap is the smallest subspace of the
arity-cap table space that contains the (padded) generators and is
invariant under the elementary substitutions; lower arities are the
members that ignore the extra coordinates.  cig_closure computes exactly
that fixed point; cig_closure_stagewise is the literal staged closure kept
as a small-scale cross-check.
"""

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from clonecalc import core, guards
from clonecalc.poly import CoeffFn, CoeffRingSig
from clonecalc.zpmath import SpanBasis, intersect_rowspaces, nullspace, rref


@lru_cache(maxsize=None)
def primitive_root(p):
    if p == 2:
        return 1
    for g in range(2, p):
        x, seen = 1, set()
        for _ in range(p - 1):
            x = x * g % p
            seen.add(x)
        if len(seen) == p - 1:
            return g
    raise ArithmeticError(f"no primitive root mod {p}")


@dataclass(frozen=True)
class ClonoidSig:
    """Target prime p and source primes; the source may be empty."""

    p: int
    source_primes: tuple

    def __post_init__(self):
        object.__setattr__(self, "source_primes", tuple(int(q) for q in self.source_primes))
        CoeffRingSig(self.p, self.source_primes, 0)  # reuse the validation

    def at_arity(self, n):
        return CoeffRingSig(self.p, self.source_primes, n)

    @property
    def unary_domain(self):
        size = 1
        for q in self.source_primes:
            size *= q
        return size


class ArityAboveCap(ValueError):
    """Membership was asked above the materialized arity cap."""


@lru_cache(maxsize=None)
def _pad_map(primes, arity_from, arity_to):
    """Map cap-domain index -> from-domain index of the truncated point."""
    dom = core.domain(primes, arity_to)
    sub = core.domain(primes, arity_from)
    idx = np.zeros(dom.npoints, dtype=np.int64)
    for i in range(1, len(primes) + 1):
        for j in range(1, arity_from + 1):
            idx += dom.digits(i, j).astype(np.int64) * sub.weight(i, j)
    return idx


@lru_cache(maxsize=None)
def _restrict_map(primes, arity_from, arity_to):
    """Map from-domain index -> cap-domain index with high coords zero."""
    sub = core.domain(primes, arity_from)
    dom = core.domain(primes, arity_to)
    idx = np.zeros(sub.npoints, dtype=np.int64)
    for i in range(1, len(primes) + 1):
        for j in range(1, arity_from + 1):
            idx += sub.digits(i, j).astype(np.int64) * dom.weight(i, j)
    return idx


@lru_cache(maxsize=None)
def _zero_coords_map(primes, cap, keep):
    """Map: index -> index of the point with coords > keep zeroed per block."""
    dom = core.domain(primes, cap)
    idx = np.zeros(dom.npoints, dtype=np.int64)
    for i in range(1, len(primes) + 1):
        for j in range(1, min(keep, cap) + 1):
            idx += dom.digits(i, j).astype(np.int64) * dom.weight(i, j)
    return idx


@lru_cache(maxsize=None)
def _zero_block_map(primes, cap, block):
    """Map: index -> index of the point with the given block zeroed."""
    dom = core.domain(primes, cap)
    idx = np.zeros(dom.npoints, dtype=np.int64)
    for i in range(1, len(primes) + 1):
        if i == block:
            continue
        for j in range(1, cap + 1):
            idx += dom.digits(i, j).astype(np.int64) * dom.weight(i, j)
    return idx


def _block_matrix(nvars, rows_spec):
    """Identity matrix with the given rows replaced; as tuple of tuples."""
    mat = [[1 if a == b else 0 for b in range(nvars)] for a in range(nvars)]
    for a, row in rows_spec.items():
        mat[a - 1] = list(row)
    return tuple(tuple(r) for r in mat)


@lru_cache(maxsize=None)
def _elementary_ops(primes, cap):
    """Elementary substitution index maps on the arity-cap domain.

    Each op is (block, matrix, index_map): composing a table with the map
    applies the per-block substitution z_block := matrix · z_block.  Span
    closure under these yields closure under all blockwise matrix tuples.
    """
    dom = core.domain(primes, cap)
    ops = []
    base = np.zeros(dom.npoints, dtype=np.int64)
    for i in range(1, len(primes) + 1):
        for j in range(1, cap + 1):
            base += dom.digits(i, j).astype(np.int64) * dom.weight(i, j)
    for bi, q in enumerate(primes, start=1):
        for a in range(1, cap + 1):
            da = dom.digits(bi, a).astype(np.int64)
            wa = dom.weight(bi, a)
            # transvections z_a := z_a + z_b
            for b in range(1, cap + 1):
                if b == a:
                    continue
                db = dom.digits(bi, b).astype(np.int64)
                new = (da + db) % q
                idx = base + (new - da) * wa
                row = tuple(1 if c == a or c == b else 0 for c in range(1, cap + 1))
                ops.append((bi, _block_matrix(cap, {a: row}), idx))
            # scaling z_a := g z_a by a primitive root
            g = primitive_root(q)
            if g != 1:
                new = (g * da) % q
                idx = base + (new - da) * wa
                row = tuple(g if c == a else 0 for c in range(1, cap + 1))
                ops.append((bi, _block_matrix(cap, {a: row}), idx))
            # zero assignment z_a := 0
            idx = base - da * wa
            row = tuple(0 for _ in range(cap))
            ops.append((bi, _block_matrix(cap, {a: row}), idx))
    return tuple(ops)


class LinClonoid:
    """A linearly closed clonoid materialized at arities 1..cap.

    Internally a single span basis over the arity-cap table domain; the
    arity-k part consists of the members that ignore the coordinates
    beyond k (extracted on demand).  With a ``lincomb`` payload combiner,
    every basis row carries provenance through the closure.
    """

    def __init__(self, sig, cap, lincomb=None, subst_payload=None):
        if cap < 1:
            raise ValueError("arity cap must be at least 1")
        self.sig = sig
        self.cap = cap
        self.dom = core.domain(sig.source_primes, cap)
        self.basis = SpanBasis(self.dom.npoints, sig.p, lincomb)
        self._subst_payload = subst_payload
        self.closed = False

    # -- representation ----------------------------------------------------

    def copy(self):
        dup = LinClonoid(self.sig, self.cap, self.basis._lincomb, self._subst_payload)
        dup.basis = self.basis.copy()
        dup.closed = self.closed
        return dup

    def pad_table(self, table, arity):
        """Ambient (arity-cap) table of an arity <= cap member."""
        if arity > self.cap:
            raise ArityAboveCap(f"arity {arity} above cap {self.cap}")
        if arity == self.cap:
            return np.asarray(table, dtype=np.uint8)
        pmap = _pad_map(self.sig.source_primes, arity, self.cap)
        return np.asarray(table, dtype=np.uint8)[pmap]

    def insert(self, table, arity, payload=None):
        """Add a member given at its own arity; True if the span grew."""
        grew = self.basis.insert(self.pad_table(table, arity), payload)
        if grew:
            self.closed = False
        return grew

    def insert_coeff(self, fn, payload=None):
        return self.insert(fn.table, fn.sig.coeff_arity, payload)

    # -- closure -----------------------------------------------------------

    def close(self):
        """Run the elementary-substitution span fixed point."""
        ops = _elementary_ops(self.sig.source_primes, self.cap)
        queue = [self.basis.rows()[r].copy() for r in range(self.basis.rank)]
        payloads = self.basis.payloads() if self._subst_payload else [None] * len(queue)
        queue = list(zip(queue, payloads))
        grew = False
        while queue:
            row, payload = queue.pop()
            for block, matrix, idx in ops:
                image = row[idx]
                new_payload = None
                if self._subst_payload is not None and payload is not None:
                    new_payload = self._subst_payload(payload, block, matrix)
                before = self.basis.rank
                if self.basis.insert(image, new_payload):
                    grew = True
                    queue.append(
                        (
                            self.basis.rows()[before].copy(),
                            self.basis.payloads()[before] if self._subst_payload else None,
                        )
                    )
        self.closed = True
        return grew

    # -- queries -----------------------------------------------------------

    def member(self, table, arity):
        """Exact membership for arity <= cap; raises ArityAboveCap beyond."""
        if arity > self.cap:
            raise ArityAboveCap(f"membership arity {arity} above cap {self.cap}")
        return self.basis.contains(self.pad_table(table, arity))

    def member_coeff(self, fn):
        return self.member(fn.table, fn.sig.coeff_arity)

    def express(self, table, arity):
        return self.basis.express(self.pad_table(table, arity))

    def fixed_subbasis(self, index_map):
        """Rows (ambient) of the subspace {v in span : v[index_map] == v}."""
        rows = self.basis.rows()
        if not rows.size:
            return np.zeros((0, self.dom.npoints), dtype=np.uint8)
        diff = (rows[:, index_map].astype(np.int64) - rows) % self.sig.p
        combos = nullspace(diff.T.astype(np.uint8), self.sig.p)
        out = (combos.astype(np.int64) @ rows.astype(np.int64)) % self.sig.p
        red, _ = rref(out, self.sig.p)
        return red

    def arity_basis(self, k):
        """Basis rows of the arity-k part, over the arity-k domain."""
        if k > self.cap:
            raise ArityAboveCap(f"arity {k} above cap {self.cap}")
        zmap = _zero_coords_map(self.sig.source_primes, self.cap, k)
        fixed = self.fixed_subbasis(zmap)
        rmap = _restrict_map(self.sig.source_primes, k, self.cap)
        return np.ascontiguousarray(fixed[:, rmap])

    def arity_members(self, k, limit=None):
        """All arity-k member tables (rows); guarded materialization."""
        rows = self.arity_basis(k)
        span = SpanBasis(rows.shape[1], self.sig.p)
        for row in rows:
            span.insert(row)
        return span.members(limit or guards.limit("span_members"))

    def unary_tables(self):
        return self.arity_members(1)

    def constants_in(self):
        """The c in Z_p whose constant function lies in the clonoid."""
        ones = np.ones(self.dom.npoints, dtype=np.uint8)
        return [c for c in range(self.sig.p) if self.basis.contains((c * ones) % self.sig.p)]

    def canonical_key(self):
        return self.basis.canonical_key()

    def rank(self):
        return self.basis.rank

    # -- lattice -----------------------------------------------------------

    def _check_compatible(self, other):
        if self.sig != other.sig or self.cap != other.cap:
            raise ValueError("signature or cap mismatch")

    def leq(self, other):
        self._check_compatible(other)
        return other.basis.contains_space(self.basis)

    def eq(self, other):
        self._check_compatible(other)
        return self.basis.rank == other.basis.rank and self.leq(other)

    def meet(self, other):
        """Arity-wise intersection; closed automatically."""
        self._check_compatible(other)
        rows = intersect_rowspaces(self.basis.rows(), other.basis.rows(), self.sig.p)
        out = LinClonoid(self.sig, self.cap)
        for row in rows:
            out.basis.insert(row)
        out.closed = True
        return out

    def join(self, other):
        """Closure of the union."""
        self._check_compatible(other)
        out = LinClonoid(self.sig, self.cap)
        for row in self.basis.rows():
            out.basis.insert(row)
        for row in other.basis.rows():
            out.basis.insert(row)
        out.close()
        return out


def cig_closure(gens, arity_cap):
    """The linearly closed clonoid generated by the CoeffFns, up to the cap."""
    gens = list(gens)
    if not gens:
        raise ValueError("generator set must be nonempty")
    sig0 = gens[0].sig
    sig = ClonoidSig(sig0.p, sig0.source_primes)
    out = LinClonoid(sig, arity_cap)
    for g in gens:
        if (g.sig.p, g.sig.source_primes) != (sig.p, sig.source_primes):
            raise ValueError("generators must share the signature")
        out.insert_coeff(g)
    out.close()
    return out


def zero_clonoid(sig, arity_cap):
    out = LinClonoid(sig, arity_cap)
    out.closed = True
    return out


def constants_clonoid(sig, arity_cap):
    out = LinClonoid(sig, arity_cap)
    out.basis.insert(np.ones(out.dom.npoints, dtype=np.uint8))
    out.closed = True
    return out


def member(fn, clonoid_):
    """Spec-level membership of a CoeffFn in a closed clonoid."""
    if not clonoid_.closed:
        raise ValueError("clonoid is not closed")
    return clonoid_.member_coeff(fn)


def unary_generates(clonoid_, arity_cap=None):
    """Whether the unary part regenerates the whole clonoid at the cap."""
    cap = arity_cap or clonoid_.cap
    unary_rows = clonoid_.arity_basis(1)
    regen = LinClonoid(clonoid_.sig, cap)
    for row in unary_rows:
        regen.insert(row, 1)
    regen.close()
    return regen.eq(clonoid_)


def enumerate_clonoids(sig, arity_cap):
    """Distinct closures of all subsets of the unary function space.

    Deduplicated by the canonical subspace key and sorted by it; the empty
    subset contributes the zero clonoid.
    """
    space = sig.unary_domain
    guards.check("unary_space", sig.p**space, "unary function space")
    n_unary = sig.p**space
    if n_unary > 30:
        raise guards.ResourceGuardError(f"2^{n_unary} unary subsets is beyond any guard")
    guards.check("clonoid_subsets", 2**n_unary, "unary subsets")
    tables = [
        np.array([(t // sig.p**k) % sig.p for k in range(space)], dtype=np.uint8)
        for t in range(n_unary)
    ]
    seen = {}
    for mask in range(2**n_unary):
        subset = [tables[k] for k in range(n_unary) if mask >> k & 1]
        clo = LinClonoid(sig, arity_cap)
        for t in subset:
            clo.insert(t, 1)
        clo.close()
        seen.setdefault(clo.canonical_key(), clo)
    return [seen[k] for k in sorted(seen)]


def meet(c, d):
    return c.meet(d)


def join(c, d):
    return c.join(d)


# --- literal staged closure (cross-check oracle) ---------------------------


def _all_matrices(q, rows, cols):
    cells = rows * cols
    for combo in itertools.product(range(q), repeat=cells):
        yield [combo[r * cols : (r + 1) * cols] for r in range(rows)]


def _apply_blockwise(table, arity_from, arity_to, matrices, primes, p):
    """f(A_1 z_1, ..., A_m z_m) as a dense table over the target arity."""
    src = core.domain(primes, arity_from)
    dst = core.domain(primes, arity_to)
    idx = np.zeros(dst.npoints, dtype=np.int64)
    for i, q in enumerate(primes, start=1):
        mat = matrices[i - 1]
        for a in range(1, arity_from + 1):
            digit = np.zeros(dst.npoints, dtype=np.int64)
            for b in range(1, arity_to + 1):
                c = mat[a - 1][b - 1]
                if c:
                    digit += c * dst.digits(i, b).astype(np.int64)
            idx += (digit % q) * src.weight(i, a)
    return np.asarray(table, dtype=np.uint8)[idx]


def cig_closure_stagewise(gens, arity_cap, max_stages=60):
    """Literal staged closure: alternate all linear combinations and all
    blockwise matrix images until a fixed point.  Exponential in everything;
    tiny signatures only.  Returns {arity: frozenset of table bytes}.
    """
    gens = list(gens)
    if not gens:
        raise ValueError("generator set must be nonempty")
    p = gens[0].sig.p
    primes = gens[0].sig.source_primes
    current = {k: set() for k in range(1, arity_cap + 1)}
    for g in gens:
        k = g.sig.coeff_arity
        if k == 0:
            arr = np.full(core.domain(primes, 1).npoints, int(g.table[0]), dtype=np.uint8)
            current[1].add(arr.tobytes())
        else:
            current[k].add(np.asarray(g.table, dtype=np.uint8).tobytes())
    for _ in range(max_stages):
        new = {k: set(v) for k, v in current.items()}
        for k, tables in current.items():
            arrs = [np.frombuffer(t, dtype=np.uint8) for t in tables]
            for fa in arrs:
                for fb in arrs:
                    for a in range(p):
                        for b in range(p):
                            new[k].add(((a * fa.astype(np.int64) + b * fb) % p).astype(np.uint8).tobytes())
            for fa in arrs:
                for l in range(1, arity_cap + 1):
                    for mats in itertools.product(
                        *[_all_matrices(q, k, l) for q in primes]
                    ):
                        new[l].add(_apply_blockwise(fa, k, l, mats, primes, p).tobytes())
        if new == current:
            break
        current = new
    else:
        raise RuntimeError("staged closure did not stabilize")
    return {k: frozenset(v) for k, v in current.items()}
