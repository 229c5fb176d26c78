"""Squarefree carriers Z_{p_1···p_m}, dense function tables, CRT machinery.

An n-ary function on the carrier is stored as a dense table over the domain
written in per-prime blocks: a point is (x_1, ..., x_m) with x_i in
Z_{p_i}^n.  The canonical index order is block-lexicographic: the x_1 block
is most significant, coordinates within a block descend from coordinate 1.
Every table in the package (and the JSON format) uses this exact order.

Values are stored as residue tuples, one column per prime, dtype uint8.
All arithmetic is done in int64 before reduction; tables are immutable.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from clonecalc import guards
from clonecalc.backend import mixed_index


def is_prime(n):
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


@dataclass(frozen=True)
class SquarefreeModulus:
    """A product of distinct primes p_1 < ... < p_m."""

    primes: tuple

    def __post_init__(self):
        ps = tuple(int(p) for p in self.primes)
        object.__setattr__(self, "primes", ps)
        if not ps:
            raise ValueError("at least one prime required")
        if any(not is_prime(p) for p in ps):
            raise ValueError(f"not all factors prime: {ps}")
        if any(a >= b for a, b in zip(ps, ps[1:])):
            raise ValueError(f"primes must be strictly increasing: {ps}")

    @property
    def s(self):
        out = 1
        for p in self.primes:
            out *= p
        return out

    @property
    def m(self):
        return len(self.primes)

    def others(self, i):
        """The primes with block index != i (1-based i)."""
        return tuple(p for k, p in enumerate(self.primes, start=1) if k != i)

    def crt_scalar(self, i):
        """The CRT idempotent (prod_{j != i} p_j)^(p_i - 1) mod s."""
        p = self.primes[i - 1]
        base = 1
        for q in self.others(i):
            base *= q
        return pow(base, p - 1, self.s)


def modulus_for(n):
    """SquarefreeModulus for the integer n; raises if n is not squarefree."""
    n = int(n)
    if n < 2:
        raise ValueError("modulus must be >= 2")
    primes = []
    rest = n
    d = 2
    while d * d <= rest:
        if rest % d == 0:
            rest //= d
            if rest % d == 0:
                raise ValueError(f"modulus {n} is not squarefree")
            primes.append(d)
        d += 1
    if rest > 1:
        primes.append(rest)
    return SquarefreeModulus(tuple(primes))


class Domain:
    """Index bookkeeping for Π_i Z_{q_i}^arity in the canonical order."""

    def __init__(self, primes, arity):
        self.primes = tuple(primes)
        self.arity = arity
        self.npoints = 1
        for p in self.primes:
            self.npoints *= p**arity
        guards.check("table_points", self.npoints, f"domain {self.primes}^{arity}")
        self._digits = None

    def weight(self, i, j):
        """Index weight of digit (block i, coordinate j), both 1-based."""
        w = self.primes[i - 1] ** (self.arity - j)
        for q in self.primes[i:]:
            w *= q**self.arity
        return w

    def weights_matrix(self):
        """(nblocks, arity) int64 matrix of digit weights."""
        m, n = len(self.primes), self.arity
        out = np.empty((m, n), dtype=np.int64)
        for i in range(1, m + 1):
            for j in range(1, n + 1):
                out[i - 1, j - 1] = self.weight(i, j)
        return out

    def digits(self, i, j):
        """uint8 array over all points: coordinate j of block i (1-based)."""
        if self._digits is None:
            idx = np.arange(self.npoints, dtype=np.int64)
            cols = {}
            for bi in range(1, len(self.primes) + 1):
                for bj in range(1, self.arity + 1):
                    w = self.weight(bi, bj)
                    cols[(bi, bj)] = ((idx // w) % self.primes[bi - 1]).astype(np.uint8)
            self._digits = cols
        return self._digits[(i, j)]

    def encode(self, point):
        """Index of a point given as a tuple of per-block coordinate tuples."""
        idx = 0
        for i, block in enumerate(point, start=1):
            for j, v in enumerate(block, start=1):
                idx += int(v) * self.weight(i, j)
        return idx

    def decode(self, idx):
        """Inverse of encode."""
        return tuple(
            tuple(int((idx // self.weight(i, j)) % self.primes[i - 1]) for j in range(1, self.arity + 1))
            for i in range(1, len(self.primes) + 1)
        )


@lru_cache(maxsize=None)
def domain(primes, arity):
    return Domain(primes, arity)


@lru_cache(maxsize=None)
def coeff_index_map(primes, i, arity, coeff_arity):
    """Map from the full domain to the block-i-deleted coefficient domain.

    For every point of Π Z_{p_j}^arity, the index of the point of
    Π_{j != i} Z_{p_j}^coeff_arity formed by the first coeff_arity
    coordinates of each block other than i.
    """
    dom = domain(primes, arity)
    others = tuple(p for k, p in enumerate(primes, start=1) if k != i)
    cdom = domain(others, coeff_arity)
    idx = np.zeros(dom.npoints, dtype=np.int64)
    ci = 0
    for bi, p in enumerate(primes, start=1):
        if bi == i:
            continue
        ci += 1
        for j in range(1, coeff_arity + 1):
            idx += dom.digits(bi, j).astype(np.int64) * cdom.weight(ci, j)
    return idx


class FnTable:
    """Dense table of an n-ary function on the carrier.

    values: (npoints, m) uint8, column i holding the Z_{p_i} residue of the
    output. Immutable after construction.
    """

    __slots__ = ("modulus", "arity", "values", "_key")

    def __init__(self, modulus, arity, values):
        dom = domain(modulus.primes, arity)
        vals = np.ascontiguousarray(values, dtype=np.uint8)
        if vals.shape != (dom.npoints, modulus.m):
            raise ValueError(
                f"table shape {vals.shape} != ({dom.npoints}, {modulus.m}) for arity {arity}"
            )
        for col, p in enumerate(modulus.primes):
            if vals[:, col].max(initial=0) >= p:
                raise ValueError(f"entries of component {col + 1} not reduced mod {p}")
        vals.flags.writeable = False
        self.modulus = modulus
        self.arity = arity
        self.values = vals
        self._key = None

    @classmethod
    def zero(cls, modulus, arity):
        dom = domain(modulus.primes, arity)
        return cls(modulus, arity, np.zeros((dom.npoints, modulus.m), dtype=np.uint8))

    @classmethod
    def from_callable(cls, modulus, arity, fn):
        """Tabulate fn(point) -> residue tuple; for tests and small inputs."""
        dom = domain(modulus.primes, arity)
        vals = np.empty((dom.npoints, modulus.m), dtype=np.uint8)
        for t in range(dom.npoints):
            vals[t] = fn(dom.decode(t))
        return cls(modulus, arity, vals)

    @property
    def domain(self):
        return domain(self.modulus.primes, self.arity)

    def key(self):
        if self._key is None:
            self._key = (self.modulus.primes, self.arity, self.values.tobytes())
        return self._key

    def __eq__(self, other):
        return isinstance(other, FnTable) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"FnTable(primes={self.modulus.primes}, arity={self.arity})"


@dataclass(frozen=True)
class ComponentFn:
    """The Z_{p_i} residue of a function's output over the full domain."""

    modulus: SquarefreeModulus
    index: int
    arity: int
    values: np.ndarray

    def __post_init__(self):
        dom = domain(self.modulus.primes, self.arity)
        vals = np.ascontiguousarray(self.values, dtype=np.uint8)
        p = self.modulus.primes[self.index - 1]
        if vals.shape != (dom.npoints,):
            raise ValueError("component table has wrong length")
        if vals.max(initial=0) >= p:
            raise ValueError(f"component entries not reduced mod {p}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class LinearMapSpec:
    """Coefficient vectors (a_1, ..., a_m), a_i in Z_{p_i}^k."""

    modulus: SquarefreeModulus
    vectors: tuple  # one tuple of length k per prime

    def __post_init__(self):
        vecs = tuple(tuple(int(v) for v in vec) for vec in self.vectors)
        object.__setattr__(self, "vectors", vecs)
        if len(vecs) != self.modulus.m:
            raise ValueError("one coefficient vector per prime required")
        lengths = {len(v) for v in vecs}
        if len(lengths) > 1:
            raise ValueError(f"coefficient vectors of equal length required, got {lengths}")
        for vec, p in zip(vecs, self.modulus.primes):
            if any(not 0 <= c < p for c in vec):
                raise ValueError(f"coefficients not reduced mod {p}")

    @property
    def arity(self):
        return len(self.vectors[0])

    @classmethod
    def projection(cls, modulus, arity, k):
        """The k-th projection of the given arity as a linear map."""
        vec = tuple(1 if j == k else 0 for j in range(1, arity + 1))
        return cls(modulus, tuple(vec for _ in modulus.primes))

    @classmethod
    def zero(cls, modulus, arity):
        return cls(modulus, tuple(tuple(0 for _ in range(arity)) for _ in modulus.primes))


def linear_map(spec):
    """The FnTable (x_1,...,x_m) -> (<a_1,x_1>, ..., <a_m,x_m>)."""
    mod = spec.modulus
    k = spec.arity
    dom = domain(mod.primes, k)
    vals = np.zeros((dom.npoints, mod.m), dtype=np.int64)
    for i, p in enumerate(mod.primes, start=1):
        acc = vals[:, i - 1]
        for j in range(1, k + 1):
            c = spec.vectors[i - 1][j - 1]
            if c:
                acc += c * dom.digits(i, j).astype(np.int64)
        acc %= p
    return FnTable(mod, k, vals)


def add(f, g):
    """Pointwise sum in the product group."""
    if f.modulus != g.modulus:
        raise ValueError("modulus mismatch")
    if f.arity != g.arity:
        raise ValueError(f"arity mismatch: {f.arity} != {g.arity}")
    primes = np.array(f.modulus.primes, dtype=np.int64)
    vals = (f.values.astype(np.int64) + g.values.astype(np.int64)) % primes
    return FnTable(f.modulus, f.arity, vals)


def scalar_mul(c, f):
    """The pointwise multiple c·f, c an integer scalar."""
    primes = np.array(f.modulus.primes, dtype=np.int64)
    vals = (f.values.astype(np.int64) * (int(c) % primes)) % primes
    return FnTable(f.modulus, f.arity, vals)


def compose(f, args):
    """Clone composition f(g_1, ..., g_n) evaluated tablewise."""
    args = list(args)
    if len(args) != f.arity:
        raise ValueError(f"{f.arity} arguments expected, got {len(args)}")
    if any(g.modulus != f.modulus for g in args):
        raise ValueError("modulus mismatch")
    if args:
        k = args[0].arity
        if any(g.arity != k for g in args):
            raise ValueError("arguments must share one arity")
    else:
        raise ValueError("composition of a constant needs a target arity; use at_arity")
    dom = domain(f.modulus.primes, f.arity)
    stack = np.stack([g.values for g in args])
    idx = mixed_index(stack, dom.weights_matrix())
    return FnTable(f.modulus, k, f.values[idx])


def at_arity(f, arity, slots=None):
    """View f at a larger arity, reading its inputs from the given slots.

    slots defaults to (1, ..., f.arity); equivalent to composing with
    projections.
    """
    if slots is None:
        slots = tuple(range(1, f.arity + 1))
    if len(slots) != f.arity:
        raise ValueError("one slot per argument required")
    mod = f.modulus
    if f.arity == 0:
        dom = domain(mod.primes, arity)
        return FnTable(mod, arity, np.repeat(f.values, dom.npoints, axis=0))
    projs = [linear_map(LinearMapSpec.projection(mod, arity, s)) for s in slots]
    return compose(f, projs)


def crt_split(f):
    """The m pointwise multiples f_i with sum f and single-block support."""
    return [scalar_mul(f.modulus.crt_scalar(i), f) for i in range(1, f.modulus.m + 1)]


def component_of(f, i):
    """The Z_{p_i} residue column of f as a ComponentFn."""
    if not 1 <= i <= f.modulus.m:
        raise IndexError(f"prime index {i} out of range 1..{f.modulus.m}")
    return ComponentFn(f.modulus, i, f.arity, f.values[:, i - 1])


def from_components(modulus, arity, columns):
    """Reassemble an FnTable from its m residue columns."""
    vals = np.stack([np.asarray(c, dtype=np.uint8) for c in columns], axis=1)
    return FnTable(modulus, arity, vals)


def unique_rows(flat):
    """Distinct rows of a 2D uint8 array, packed-int64 lexsort dedup.

    Equivalent to np.unique(flat, axis=0) but substantially faster for the
    short rows dense tables produce.
    """
    k, l = flat.shape
    if k <= 1:
        return np.ascontiguousarray(flat)
    pad = (-l) % 8
    padded = flat
    if pad:
        padded = np.hstack([flat, np.zeros((k, pad), dtype=np.uint8)])
    packed = np.ascontiguousarray(padded).view(np.int64).reshape(k, -1)
    order = np.lexsort(packed.T[::-1])
    sp = packed[order]
    keep = np.ones(k, dtype=bool)
    keep[1:] = (sp[1:] != sp[:-1]).any(axis=1)
    return np.ascontiguousarray(flat[order[keep]])


def e_embed(modulus, i, arity, coeff_values, coeff_arity=None):
    """Embed g: Π_{j != i} Z_{p_j}^n -> Z_{p_i} as a function on the carrier.

    The result is zero in every component except i, where it evaluates g on
    the first coeff_arity coordinates of the blocks other than i (so the
    block x_i is ignored).
    """
    if coeff_arity is None:
        coeff_arity = arity
    if coeff_arity > arity:
        raise ValueError("embedding arity too small for the coefficient function")
    dom = domain(modulus.primes, arity)
    g = np.asarray(coeff_values, dtype=np.uint8)
    cmap = coeff_index_map(modulus.primes, i, arity, coeff_arity)
    vals = np.zeros((dom.npoints, modulus.m), dtype=np.uint8)
    vals[:, i - 1] = g[cmap]
    return FnTable(modulus, arity, vals)
