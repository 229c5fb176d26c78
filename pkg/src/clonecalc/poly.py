"""Reduced multivariate polynomials with function-valued coefficients.

The coefficient ring is Z_p^(A^n) for a prime p and a coefficient domain
A = Π_j Z_{q_j} (pointwise operations); the degenerate case with no source
primes gives plain Z_p constants through the same code path. Polynomials
are kept reduced: every exponent is at most p-1, the canonical
representative modulo the relations x^p = x, and zero coefficients are
dropped, so structural equality coincides with semantic equality.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from clonecalc import core
from clonecalc.zpmath import inv_mod, rref


@dataclass(frozen=True)
class CoeffRingSig:
    """Target prime, source primes, and arity of the coefficient functions."""

    p: int
    source_primes: tuple
    coeff_arity: int

    def __post_init__(self):
        object.__setattr__(self, "source_primes", tuple(int(q) for q in self.source_primes))
        if not core.is_prime(self.p):
            raise ValueError(f"target {self.p} not prime")
        qs = self.source_primes
        if len(set(qs)) != len(qs) or any(not core.is_prime(q) for q in qs) or self.p in qs:
            raise ValueError(f"source primes must be distinct primes != {self.p}: {qs}")
        if self.coeff_arity < 0:
            raise ValueError("negative coefficient arity")

    @property
    def domain_len(self):
        return core.domain(self.source_primes, self.coeff_arity).npoints


class CoeffFn:
    """A coefficient: a function Π_j Z_{q_j}^n -> Z_p as a dense table."""

    __slots__ = ("sig", "table", "_key")

    def __init__(self, sig, table):
        vals = np.ascontiguousarray(table, dtype=np.uint8)
        if vals.shape != (sig.domain_len,):
            raise ValueError(f"coefficient table of length {sig.domain_len} expected")
        if vals.max(initial=0) >= sig.p:
            raise ValueError(f"coefficient entries not reduced mod {sig.p}")
        vals.flags.writeable = False
        self.sig = sig
        self.table = vals
        self._key = None

    @classmethod
    def constant(cls, sig, c):
        return cls(sig, np.full(sig.domain_len, int(c) % sig.p, dtype=np.uint8))

    @classmethod
    def zero(cls, sig):
        return cls.constant(sig, 0)

    def is_zero(self):
        return not self.table.any()

    def add(self, other, a=1, b=1):
        t = (a * self.table.astype(np.int64) + b * other.table.astype(np.int64)) % self.sig.p
        return CoeffFn(self.sig, t)

    def scale(self, c):
        return CoeffFn(self.sig, (int(c) * self.table.astype(np.int64)) % self.sig.p)

    def mul(self, other):
        """Pointwise (Hadamard) product in the coefficient ring."""
        return CoeffFn(self.sig, (self.table.astype(np.int64) * other.table) % self.sig.p)

    def key(self):
        if self._key is None:
            self._key = (self.sig, self.table.tobytes())
        return self._key

    def __eq__(self, other):
        return isinstance(other, CoeffFn) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"CoeffFn({self.sig.p}^{self.sig.source_primes}, {list(self.table)})"


def trim(mono):
    """Canonical monomial form: trailing zero exponents removed."""
    m = tuple(int(e) for e in mono)
    while m and m[-1] == 0:
        m = m[:-1]
    return m


def tdeg(mono):
    return sum(mono)


def reduce_exponent(e, p):
    """x^e = x^e' with e' <= p-1, using x^p = x."""
    if e <= p - 1:
        return e
    return (e - 1) % (p - 1) + 1


class RPoly:
    """Reduced polynomial: finite map monomial -> nonzero CoeffFn."""

    __slots__ = ("sig", "terms", "_key")

    def __init__(self, sig, terms):
        self.sig = sig
        clean = {}
        for mono, coeff in terms.items():
            mono = trim(mono)
            if any(e < 0 or e > sig.p - 1 for e in mono):
                raise ValueError(f"monomial {mono} not reduced mod x^{sig.p} = x")
            if coeff.sig != sig:
                raise ValueError("coefficient signature mismatch")
            if not coeff.is_zero():
                clean[mono] = coeff
        self.terms = clean
        self._key = None

    @classmethod
    def zero(cls, sig):
        return cls(sig, {})

    @classmethod
    def monomial(cls, sig, mono, coeff):
        return cls(sig, {trim(mono): coeff})

    @classmethod
    def from_raw(cls, sig, raw_terms):
        """Reduce arbitrary-exponent terms: the remainder modulo x_i^p - x_i."""
        acc = {}
        for mono, coeff in raw_terms:
            red = trim(tuple(reduce_exponent(int(e), sig.p) for e in mono))
            if red in acc:
                acc[red] = acc[red].add(coeff)
            else:
                acc[red] = coeff
        return cls(sig, acc)

    @property
    def nvars(self):
        return max((len(m) for m in self.terms), default=0)

    def is_zero(self):
        return not self.terms

    def coefficient(self, mono):
        return self.terms.get(trim(mono), CoeffFn.zero(self.sig))

    def monomials(self):
        return sorted(self.terms)

    def total_degree(self):
        """Max total degree over the monomials; 0 for the zero polynomial."""
        return max((tdeg(m) for m in self.terms), default=0)

    def add(self, other, a=1, b=1):
        if other.sig != self.sig:
            raise ValueError("signature mismatch")
        acc = {m: c.scale(a) for m, c in self.terms.items()}
        for m, c in other.terms.items():
            acc[m] = acc[m].add(c, 1, b) if m in acc else c.scale(b)
        return RPoly(self.sig, acc)

    def sub(self, other):
        return self.add(other, 1, self.sig.p - 1)

    def scale(self, c):
        return RPoly(self.sig, {m: co.scale(c) for m, co in self.terms.items()})

    def key(self):
        if self._key is None:
            items = tuple(sorted((m, c.table.tobytes()) for m, c in self.terms.items()))
            self._key = (self.sig, items)
        return self._key

    def __eq__(self, other):
        return isinstance(other, RPoly) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        if not self.terms:
            return "RPoly(0)"
        bits = []
        for m in self.monomials():
            mono = "*".join(f"x{i+1}^{e}" if e > 1 else f"x{i+1}" for i, e in enumerate(m) if e)
            bits.append(f"[{list(self.terms[m].table)}]{'*' + mono if mono else ''}")
        return "RPoly(" + " + ".join(bits) + ")"


def reduce_raw(sig, raw_terms):
    """Spec operation: remainder of an arbitrary-exponent polynomial."""
    return RPoly.from_raw(sig, raw_terms)


def _raw_mul(sig, f_terms, g_terms):
    """Product of raw term dicts (exponents may grow; reduce afterwards)."""
    out = {}
    for m1, c1 in f_terms.items():
        for m2, c2 in g_terms.items():
            k = max(len(m1), len(m2))
            mono = tuple(
                (m1[i] if i < len(m1) else 0) + (m2[i] if i < len(m2) else 0) for i in range(k)
            )
            c = c1.mul(c2)
            if mono in out:
                out[mono] = out[mono].add(c)
            else:
                out[mono] = c
    return out


def substitute(f, mapping):
    """Substitute x_v := mapping[v] (an RPoly) for each mapped variable.

    Unmapped variables stay; the result is reduced. The common engine for
    compose_at, linear_substitute, and certificate replay.
    """
    sig = f.sig
    one = {(): CoeffFn.constant(sig, 1)}
    raw_out = {}
    for mono, coeff in f.terms.items():
        acc = {(): coeff}
        for v, e in enumerate(mono, start=1):
            if not e:
                continue
            if v in mapping:
                factor = mapping[v].terms
            else:
                factor = {tuple(0 for _ in range(v - 1)) + (1,): CoeffFn.constant(sig, 1)}
            for _ in range(e):
                acc = _raw_mul(sig, acc, factor)
        for m, c in acc.items():
            if m in raw_out:
                raw_out[m] = raw_out[m].add(c)
            else:
                raw_out[m] = c
    return RPoly.from_raw(sig, raw_out.items())


def compose_at(g, slots, fs):
    """The composition g ∘_b (f_1, ..., f_h): substitute f_t into slot b_t."""
    slots = tuple(int(b) for b in slots)
    if len(slots) != len(fs):
        raise ValueError("one replacement per slot required")
    if any(b2 <= b1 for b1, b2 in zip(slots, slots[1:])):
        raise ValueError("slots must be strictly increasing")
    if any(b < 1 for b in slots):
        raise ValueError("slot out of range")
    for f in fs:
        if f.sig != g.sig:
            raise ValueError("signature mismatch")
    return substitute(g, dict(zip(slots, fs)))


def zero_substitute(f, slot):
    """f ∘_(slot) 0: drop every monomial containing x_slot."""
    return compose_at(f, (slot,), [RPoly.zero(f.sig)])


def linear_substitute(f, matrix):
    """Substitute x_i := <row_i, (x_1..x_l)> for a k×l matrix over Z_p."""
    m = [list(map(int, row)) for row in matrix]
    k = len(m)
    if k < f.nvars:
        raise ValueError(f"matrix needs at least {f.nvars} rows, got {k}")
    widths = {len(row) for row in m}
    if len(widths) > 1:
        raise ValueError("ragged matrix")
    sig = f.sig
    mapping = {}
    for v in range(1, f.nvars + 1):
        terms = {}
        for j, c in enumerate(m[v - 1], start=1):
            c %= sig.p
            if c:
                terms[tuple(0 for _ in range(j - 1)) + (1,)] = CoeffFn.constant(sig, c)
        mapping[v] = RPoly(sig, terms)
    return substitute(f, mapping)


def identify_vars(f, targets):
    """Substitute x_v := x_{targets[v-1]} for every variable of f."""
    sig = f.sig
    mapping = {
        v: RPoly.monomial(sig, tuple(0 for _ in range(t - 1)) + (1,), CoeffFn.constant(sig, 1))
        for v, t in enumerate(targets, start=1)
    }
    return substitute(f, mapping)


def shift_vars(f, offset):
    """Rename x_v to x_{v+offset} throughout."""
    if offset == 0:
        return f
    return RPoly(f.sig, {tuple([0] * offset) + m: c for m, c in f.terms.items()})


@lru_cache(maxsize=None)
def _monomial_grid(p, n):
    """All exponent tuples of [p-1]_0^n in mixed-radix order, m_1 major."""
    out = []
    for t in range(p**n):
        out.append(tuple((t // p ** (n - 1 - c)) % p for c in range(n)))
    return tuple(out)


@lru_cache(maxsize=None)
def _eval_matrix_inverse(p, n):
    """Inverse of the monomial evaluation matrix V[x, m] = x^m over Z_p."""
    grid = _monomial_grid(p, n)
    size = p**n
    v = np.empty((size, size), dtype=np.int64)
    for xi, xs in enumerate(grid):
        for mi, ms in enumerate(grid):
            val = 1
            for c in range(n):
                val = (val * pow(int(xs[c]), int(ms[c]), p)) % p
            v[xi, mi] = val
    aug = np.hstack([v, np.eye(size, dtype=np.int64)])
    red, pivots = rref(aug, p)
    if pivots[:size] != list(range(size)):
        raise ArithmeticError("evaluation matrix is singular; should be impossible")
    return np.ascontiguousarray(red[:, size:]).astype(np.int64)


def interpolate(sig, n_xvars, values):
    """The unique reduced polynomial inducing the given complete table.

    values: array of shape (p^n_xvars, coefficient domain length); row x in
    mixed-radix order (x_1 most significant), column z in the canonical
    coefficient-domain order. Returns f with f(x)(z) = values[x, z].
    """
    p = sig.p
    vals = np.asarray(values, dtype=np.int64)
    expected = (p**n_xvars, sig.domain_len)
    if vals.shape != expected:
        raise ValueError(f"table of shape {expected} expected, got {vals.shape}")
    vinv = _eval_matrix_inverse(p, n_xvars)
    coeffs = (vinv @ vals) % p
    grid = _monomial_grid(p, n_xvars)
    terms = {}
    for mi, mono in enumerate(grid):
        row = coeffs[mi].astype(np.uint8)
        if row.any():
            terms[trim(mono)] = CoeffFn(sig, row)
    return RPoly(sig, terms)


def component_signature(modulus, i, coeff_arity):
    return CoeffRingSig(modulus.primes[i - 1], modulus.others(i), coeff_arity)


def interpolate_component(comp):
    """Interpolate a ComponentFn along its own block's monomials.

    Returns the RPoly h over the block-i variables with function-valued
    coefficients on the other blocks, satisfying
    induce(h, modulus, i, arity) == e_embed of comp.
    """
    mod, i, n = comp.modulus, comp.index, comp.arity
    sig = component_signature(mod, i, n)
    p = sig.p
    dom = core.domain(mod.primes, n)
    xidx = np.zeros(dom.npoints, dtype=np.int64)
    for c in range(1, n + 1):
        xidx += dom.digits(i, c).astype(np.int64) * p ** (n - c)
    zidx = core.coeff_index_map(mod.primes, i, n, n)
    grid_vals = np.zeros((p**n, sig.domain_len), dtype=np.int64)
    grid_vals[xidx, zidx] = comp.values
    return interpolate(sig, n, grid_vals)


@lru_cache(maxsize=None)
def _pow_table(p):
    """pw[v, e] = v^e mod p for v, e in [0, p)."""
    pw = np.empty((p, p), dtype=np.int64)
    for v in range(p):
        for e in range(p):
            pw[v, e] = pow(v, e, p)
    return pw


def induce(f, modulus, i, arity):
    """The arity-s induced function: component i evaluates f, the rest are 0.

    Monomials read the block-i coordinates; coefficients read the first
    coeff_arity coordinates of every other block.
    """
    sig = f.sig
    if sig.p != modulus.primes[i - 1] or sig.source_primes != modulus.others(i):
        raise ValueError("signature does not match the modulus component")
    k, n = f.nvars, sig.coeff_arity
    if arity < max(k, n):
        raise ValueError(f"arity {arity} too small; need at least {max(k, n)}")
    p = sig.p
    dom = core.domain(modulus.primes, arity)
    zidx = core.coeff_index_map(modulus.primes, i, arity, n)
    pw = _pow_table(p)
    acc = np.zeros(dom.npoints, dtype=np.int64)
    for mono, coeff in f.terms.items():
        term = coeff.table[zidx].astype(np.int64)
        for c, e in enumerate(mono, start=1):
            if e:
                term *= pw[dom.digits(i, c).astype(np.int64), e]
                term %= p
        acc += term
    acc %= p
    vals = np.zeros((dom.npoints, modulus.m), dtype=np.uint8)
    vals[:, i - 1] = acc
    return core.FnTable(modulus, arity, vals)
