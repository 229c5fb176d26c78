"""Cardinality bounds: Gaussian binomials, factorizations over Z_p, reports.

All arithmetic is exact (Python integers).  Polynomials over Z_p are
coefficient tuples in ascending degree with a nonzero leading coefficient;
() is the zero polynomial.
"""

import itertools
from dataclasses import dataclass, field

from clonecalc.core import is_prime, modulus_for


def gaussian_binomial(n, k, q):
    """The q-binomial coefficient: subspace count, exact integer."""
    if k < 0 or k > n:
        raise ValueError(f"k = {k} outside 0..{n}")
    if q < 2:
        raise ValueError("q must be at least 2")
    num = 1
    den = 1
    for i in range(1, k + 1):
        num *= q ** (n - k + i) - 1
        den *= q**i - 1
    if num % den:
        raise ArithmeticError("Gaussian binomial division not exact; impossible")
    return num // den


def clonoid_count_upper(p, n):
    """Formula bound on the clonoid-lattice size: sum of q-binomials."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return sum(gaussian_binomial(n, r, p) for r in range(1, n + 1))


# --- polynomials over Z_p ---------------------------------------------------


def poly_trim(coeffs):
    c = list(int(x) for x in coeffs)
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def poly_mul(a, b, p):
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca:
            for j, cb in enumerate(b):
                out[i + j] = (out[i + j] + ca * cb) % p
    return poly_trim(out)


def poly_divmod(a, b, p):
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    a = list(a)
    inv_lead = pow(b[-1], p - 2, p)
    deg_b = len(b) - 1
    quot = [0] * max(0, len(a) - deg_b)
    while len(a) - 1 >= deg_b and any(a):
        if a[-1] == 0:
            a.pop()
            continue
        shift = len(a) - 1 - deg_b
        factor = a[-1] * inv_lead % p
        quot[shift] = factor
        for j, cb in enumerate(b):
            a[shift + j] = (a[shift + j] - factor * cb) % p
        while a and a[-1] == 0:
            a.pop()
    return poly_trim(quot), poly_trim(a)


def _monic_polys(p, degree):
    for tail in itertools.product(range(p), repeat=degree):
        yield poly_trim(tail + (1,))


@dataclass(frozen=True)
class FactorizationZp:
    """poly = unit · Π factor^multiplicity over Z_p, factors monic irreducible."""

    p: int
    poly: tuple
    unit: int
    factors: tuple  # ((monic factor, multiplicity), ...)

    def verify(self):
        prod = (self.unit,)
        for fac, mult in self.factors:
            for _ in range(mult):
                prod = poly_mul(prod, fac, self.p)
        return prod == self.poly


def factor_over_zp(poly, p, degree_guard=16):
    """Complete factorization by trial division over all small monic divisors.

    Quadratic-ish and honest: at desk scale the inputs are x^(q-1) - 1 for
    small primes q.  The result is verified by re-multiplication.
    """
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    poly = poly_trim(poly)
    if not poly:
        raise ValueError("cannot factor the zero polynomial")
    if len(poly) - 1 > degree_guard:
        raise ValueError(f"degree {len(poly) - 1} exceeds the guard {degree_guard}")
    unit = poly[-1] % p
    rest, rem = poly_divmod(poly, (unit,), p)
    assert not rem
    factors = []
    degree = 1
    while len(rest) - 1 >= 1:
        if degree > (len(rest) - 1) // 2:
            factors.append((rest, 1))  # what is left is irreducible
            break
        hit = None
        for cand in _monic_polys(p, degree):
            quot, rem = poly_divmod(rest, cand, p)
            if not rem:
                hit = cand
                break
        if hit is None:
            degree += 1
            continue
        mult = 0
        while True:
            quot, rem = poly_divmod(rest, hit, p)
            if rem:
                break
            rest = quot
            mult += 1
        factors.append((hit, mult))
    out = FactorizationZp(p, poly, unit, tuple(factors))
    if not out.verify():
        raise AssertionError("factorization failed re-multiplication")
    return out


def cyclotomic_like(p, q):
    """x^(q-1) - 1 as a coefficient tuple over Z_p."""
    coeffs = [0] * q
    coeffs[0] = p - 1
    coeffs[q - 1] = 1
    return poly_trim(coeffs)


# --- reports ------------------------------------------------------------------


@dataclass
class BoundsReport:
    modulus: tuple
    counts_formula: tuple
    counts_enumerated: tuple | None
    lower: int
    upper: int
    chain_value: int | None = None
    flags: list = field(default_factory=list)
    detail: dict = field(default_factory=dict)

    def to_obj(self):
        return {
            "modulus": list(self.modulus),
            "counts": {
                "formula": list(self.counts_formula),
                "enumerated": list(self.counts_enumerated)
                if self.counts_enumerated is not None
                else None,
            },
            "lower": self.lower,
            "upper": self.upper,
            "chain_value": self.chain_value,
            "flags": list(self.flags),
            "detail": self.detail,
        }


def clone_count_bounds(modulus, enumerated_counts=None):
    """Bounds on the number of clones above the additive clone.

    lower = sum of the per-prime clonoid counts - m + 1; upper = product of
    the counts to the p_i + 1.  Enumerated clonoid counts are used when
    supplied; otherwise the formula bounds stand in (flagged).
    """
    if isinstance(modulus, int):
        modulus = modulus_for(modulus)
    primes = modulus.primes
    m = len(primes)
    n_i = [modulus.s // p for p in primes]
    formula = tuple(clonoid_count_upper(p, n) for p, n in zip(primes, n_i))
    flags = []
    if enumerated_counts is not None:
        counts = tuple(int(c) for c in enumerated_counts)
        if len(counts) != m:
            raise ValueError("one enumerated count per prime required")
    else:
        counts = formula
        flags.append("formula-counts-substituted")
    if m == 1:
        flags.append("single-prime")
    lower = sum(counts) - m + 1
    upper = 1
    for c, p in zip(counts, primes):
        upper *= c ** (p + 1)
    if enumerated_counts is not None and not lower <= upper:
        flags.append("bound-ordering-violated")
    return BoundsReport(
        modulus=primes,
        counts_formula=formula,
        counts_enumerated=tuple(enumerated_counts) if enumerated_counts is not None else None,
        lower=lower,
        upper=upper,
        flags=flags,
        detail={"n_i": n_i},
    )


def pq_bounds(p, q):
    """Two-prime bounds from the factorizations of x^(q-1)-1 and x^(p-1)-1.

    Reports the displayed lower and middle bounds and the final chain value
    2^(pq+p+q); when the middle expression exceeds the chain value the
    report is flagged rather than silently reconciled.
    """
    if p == q or not (is_prime(p) and is_prime(q)):
        raise ValueError("p and q must be distinct primes")
    fp = factor_over_zp(cyclotomic_like(p, q), p)
    fq = factor_over_zp(cyclotomic_like(q, p), q)
    prod_k = 1
    for _, mult in fp.factors:
        prod_k *= mult + 1
    prod_d = 1
    for _, mult in fq.factors:
        prod_d *= mult + 1
    lower = 2 * (prod_k + prod_d) - 1
    middle = 2 ** (p + q + 2) * prod_k ** (p + 1) * prod_d ** (q + 1)
    chain = 2 ** (p * q + p + q)
    flags = []
    if middle > chain:
        flags.append("chain-inconsistent")
    lo, hi = min(p, q), max(p, q)
    return BoundsReport(
        modulus=(lo, hi),
        counts_formula=(clonoid_count_upper(p, q), clonoid_count_upper(q, p)),
        counts_enumerated=None,
        lower=lower,
        upper=middle,
        chain_value=chain,
        flags=flags,
        detail={
            "k_multiplicities": [mult for _, mult in fp.factors],
            "d_multiplicities": [mult for _, mult in fq.factors],
            "factorization_gp": [list(fac) for fac, _ in fp.factors],
            "factorization_gq": [list(fac) for fac, _ in fq.factors],
            "prod_k_plus_1": prod_k,
            "prod_d_plus_1": prod_d,
        },
    )
