"""Polynomial linearly closed clonoids: extraction algorithms + certificates.

The closure rules are Z_p-linear combination and substitution of a Z_p
matrix into the variables.  Every extraction below returns a replayable
Certificate: a derivation DAG whose leaves are generators and whose inner
nodes are closure steps.  Replaying a certificate re-executes the steps on
the polynomial level and must reproduce the claimed polynomial bit-exactly;
the extraction functions assert this before returning.

The membership oracle is exact: substitution distributes over linear
combinations and substitutions compose, so the generated clonoid restricted
to any fixed variable count is the smallest subspace containing the
generators that is invariant under elementary substitutions (transvections,
scalings, zero-assignments).  That fixed point is computed by incremental
span closure; "unknown" is returned only when a cap is exceeded, never as a
guess.
"""

import math
from functools import lru_cache

import numpy as np

from clonecalc import guards
from clonecalc.poly import (
    CoeffFn,
    RPoly,
    _monomial_grid,
    compose_at,
    identify_vars,
    linear_substitute,
    reduce_exponent,
    shift_vars,
    tdeg,
    trim,
    zero_substitute,
)
from clonecalc.zpmath import SpanBasis, inv_mod

YES, NO, UNKNOWN = "yes", "no", "unknown"


class PolyGenSet:
    """A finite generator set of reduced polynomials over one signature."""

    def __init__(self, sig, generators):
        gens = tuple(generators)
        if not gens:
            raise ValueError("generator set must be nonempty")
        if any(g.sig != sig for g in gens):
            raise ValueError("generators must share the signature")
        self.sig = sig
        self.generators = gens


# --- certificate nodes ---------------------------------------------------


class CertLeaf:
    __slots__ = ("gen",)

    def __init__(self, gen=0):
        self.gen = gen


class CertLin:
    """a * left + b * right."""

    __slots__ = ("a", "b", "left", "right")

    def __init__(self, a, b, left, right):
        self.a, self.b, self.left, self.right = a, b, left, right


class CertSubst:
    """f(M · (x_1..x_l)^t) for an explicit matrix M (tuple of row tuples)."""

    __slots__ = ("matrix", "child")

    def __init__(self, matrix, child):
        self.matrix = tuple(tuple(int(c) for c in row) for row in matrix)
        self.child = child


class CertZero:
    """f ∘_(slot) 0."""

    __slots__ = ("slot", "child")

    def __init__(self, slot, child):
        self.slot, self.child = slot, child


class CertIdent:
    """x_v := x_{targets[v-1]} (variable identification)."""

    __slots__ = ("targets", "child")

    def __init__(self, targets, child):
        self.targets = tuple(int(t) for t in targets)
        self.child = child


class CertSelfComp:
    """host ∘_(slot) (base with variables shifted by offset)."""

    __slots__ = ("slot", "offset", "host", "base")

    def __init__(self, slot, offset, host, base):
        self.slot, self.offset, self.host, self.base = slot, offset, host, base


class Certificate:
    """A replayable derivation; leaves index into a generator list."""

    def __init__(self, root):
        self.root = root

    def replay(self, generators):
        """Execute the derivation on the generators; returns the RPoly."""
        memo = {}

        def run(node):
            key = id(node)
            if key in memo:
                return memo[key]
            if isinstance(node, CertLeaf):
                out = generators[node.gen]
            elif isinstance(node, CertLin):
                out = run(node.left).add(run(node.right), node.a, node.b)
            elif isinstance(node, CertSubst):
                out = linear_substitute(run(node.child), node.matrix)
            elif isinstance(node, CertZero):
                out = zero_substitute(run(node.child), node.slot)
            elif isinstance(node, CertIdent):
                out = identify_vars(run(node.child), node.targets)
            elif isinstance(node, CertSelfComp):
                host = run(node.host)
                base = run(node.base)
                out = compose_at(host, (node.slot,), [shift_vars(base, node.offset)])
            else:
                raise TypeError(f"unknown certificate node {type(node).__name__}")
            memo[key] = out
            return out

        return run(self.root)

    def nodes(self):
        """All distinct nodes, leaves first (topological)."""
        seen = {}
        order = []

        def walk(node):
            if id(node) in seen:
                return
            for attr in ("left", "right", "child", "host", "base"):
                sub = getattr(node, attr, None)
                if sub is not None:
                    walk(sub)
            seen[id(node)] = len(order)
            order.append(node)

        walk(self.root)
        return order, seen

    def to_obj(self):
        """JSON-ready form: a flat node table preserving DAG sharing."""
        order, index = self.nodes()
        out = []
        for node in order:
            if isinstance(node, CertLeaf):
                out.append({"op": "generator", "gen": node.gen})
            elif isinstance(node, CertLin):
                out.append(
                    {
                        "op": "linear-combination",
                        "a": node.a,
                        "b": node.b,
                        "left": index[id(node.left)],
                        "right": index[id(node.right)],
                    }
                )
            elif isinstance(node, CertSubst):
                out.append(
                    {
                        "op": "matrix-substitution",
                        "matrix": [list(r) for r in node.matrix],
                        "child": index[id(node.child)],
                    }
                )
            elif isinstance(node, CertZero):
                out.append({"op": "zero-substitution", "slot": node.slot, "child": index[id(node.child)]})
            elif isinstance(node, CertIdent):
                out.append(
                    {
                        "op": "variable-identification",
                        "targets": list(node.targets),
                        "child": index[id(node.child)],
                    }
                )
            else:
                out.append(
                    {
                        "op": "self-composition",
                        "slot": node.slot,
                        "offset": node.offset,
                        "host": index[id(node.host)],
                        "base": index[id(node.base)],
                    }
                )
        return {"nodes": out, "root": index[id(self.root)]}

    @classmethod
    def from_obj(cls, obj):
        nodes = []
        for spec in obj["nodes"]:
            op = spec["op"]
            if op == "generator":
                nodes.append(CertLeaf(spec["gen"]))
            elif op == "linear-combination":
                nodes.append(CertLin(spec["a"], spec["b"], nodes[spec["left"]], nodes[spec["right"]]))
            elif op == "matrix-substitution":
                nodes.append(CertSubst(spec["matrix"], nodes[spec["child"]]))
            elif op == "zero-substitution":
                nodes.append(CertZero(spec["slot"], nodes[spec["child"]]))
            elif op == "variable-identification":
                nodes.append(CertIdent(spec["targets"], nodes[spec["child"]]))
            elif op == "self-composition":
                nodes.append(CertSelfComp(spec["slot"], spec["offset"], nodes[spec["host"]], nodes[spec["base"]]))
            else:
                raise ValueError(f"unknown certificate op {op!r}")
        return cls(nodes[obj["root"]])


def graft(node, replacement):
    """Replace every CertLeaf in the tree with the replacement node."""
    memo = {}

    def walk(n):
        if id(n) in memo:
            return memo[id(n)]
        if isinstance(n, CertLeaf):
            out = replacement
        elif isinstance(n, CertLin):
            out = CertLin(n.a, n.b, walk(n.left), walk(n.right))
        elif isinstance(n, CertSubst):
            out = CertSubst(n.matrix, walk(n.child))
        elif isinstance(n, CertZero):
            out = CertZero(n.slot, walk(n.child))
        elif isinstance(n, CertIdent):
            out = CertIdent(n.targets, walk(n.child))
        else:
            out = CertSelfComp(n.slot, n.offset, walk(n.host), walk(n.base))
        memo[id(n)] = out
        return out

    return walk(node)


# --- extraction algorithms ------------------------------------------------


def _isolate_nodes(f, d, base_node):
    """Shared engine: derivation of the x_1..x_d term of f, as nodes."""
    sig = f.sig
    p = sig.p
    target = tuple(1 for _ in range(d))
    r = f.coefficient(target)
    rest = f.sub(RPoly.monomial(sig, target, r))
    if rest.total_degree() > d and not rest.is_zero():
        raise ValueError(f"residual total degree {rest.total_degree()} exceeds d = {d}")
    node, cur = base_node, f
    for l in range(d + 1, f.nvars + 1):
        if any(len(m) >= l and m[l - 1] for m in cur.terms):
            cur = zero_substitute(cur, l)
            node = CertZero(l, node)
    while True:
        g = cur.sub(RPoly.monomial(sig, target, r))
        if g.is_zero():
            break
        l = next(
            l
            for l in range(1, d + 1)
            if any(len(m) < l or m[l - 1] == 0 for m in g.terms)
        )
        node = CertLin(1, p - 1, node, CertZero(l, node))
        cur = cur.sub(zero_substitute(cur, l))
    expected = RPoly.monomial(sig, target, r)
    if cur != expected:
        raise AssertionError("isolation did not converge to the full-support term")
    return expected, node


def isolate_full_support(f, d):
    """Derive the r·x_1···x_d term of f = r·x_1···x_d + g within <f>.

    Requires tD(g) <= d (g is f minus the full-support term; its x_1···x_d
    coefficient is zero by construction). Variables beyond x_d are zeroed
    first. The certificate replays the induction: repeatedly subtract
    f ∘_(l) 0 for a variable x_l missing from some monomial of g.
    """
    result, node = _isolate_nodes(f, d, CertLeaf(0))
    cert = Certificate(node)
    assert cert.replay([f]) == result
    return result, cert


def _extract_nodes(f, mono, base_node):
    sig = f.sig
    p = sig.p
    mono = trim(mono)
    if mono not in f.terms:
        raise ValueError(f"{mono} is not a monomial of f")
    d = tdeg(mono)
    if d != f.total_degree():
        raise ValueError(f"monomial degree {d} below total degree {f.total_degree()}")
    r = f.terms[mono]
    node, cur, exps = base_node, f, list(mono)
    while True:
        j = next((v for v, e in enumerate(exps, start=1) if e > 1), None)
        if j is None:
            break
        u = cur.nvars
        rows = []
        for v in range(1, u + 1):
            row = [0] * (u + 1)
            row[v - 1] = 1
            if v == j:
                row[u] = 1  # x_j := x_j + x_{u+1}
            rows.append(tuple(row))
        sj = exps[j - 1]
        cur = linear_substitute(cur, rows).scale(inv_mod(sj, p))
        lin = CertSubst(rows, node)
        node = CertLin(inv_mod(sj, p), 0, lin, lin)
        exps = exps + [0] * (u - len(exps))
        exps[j - 1] -= 1
        exps.append(1)
        if cur.terms.get(trim(tuple(exps))) != r:
            raise AssertionError("degree splitting lost the tracked monomial")
    support = [v for v, e in enumerate(exps, start=1) if e]
    if support != list(range(1, d + 1)):
        targets = []
        nxt = d
        for v in range(1, cur.nvars + 1):
            if v in support:
                targets.append(support.index(v) + 1)
            else:
                nxt += 1
                targets.append(nxt)
        cur = identify_vars(cur, targets)
        node = CertIdent(targets, node)
    return _isolate_nodes(cur, d, node)


def extract_max_degree_monomial(f, mono):
    """Derive r·x_1···x_d from f, where mono is a maximal-degree monomial
    of f with coefficient r and total degree d.

    Exponents above 1 are split off one at a time: substitute
    x_j := x_j + x_fresh, keep the binomial term with the fresh variable to
    the first power, and rescale by the inverted exponent; the multilinear
    case delegates to isolate_full_support after renaming the support.
    """
    result, node = _extract_nodes(f, mono, CertLeaf(0))
    cert = Certificate(node)
    assert cert.replay([f]) == result
    return result, cert


def monomials_of(f):
    """Each monomial of f, certified to lie in the clonoid generated by f.

    Peels maximal-degree monomials: extract the canonical multilinear term,
    identify variables back into the monomial's exponent pattern, subtract,
    recurse. The certified monomials sum to f.
    """
    if f.is_zero():
        raise ValueError("f must be nonzero")
    sig = f.sig
    p = sig.p
    out = []
    cur, node_cur = f, CertLeaf(0)
    while not cur.is_zero():
        d = cur.total_degree()
        mono = min(m for m in cur.terms if tdeg(m) == d)
        r = cur.terms[mono]
        _, node_lin = _extract_nodes(cur, mono, node_cur)
        targets = []
        for v, e in enumerate(mono, start=1):
            targets.extend([v] * e)
        if targets != list(range(1, d + 1)):
            node_mono = CertIdent(targets, node_lin)
        else:
            node_mono = node_lin
        h = RPoly.monomial(sig, mono, r)
        cert = Certificate(node_mono)
        assert cert.replay([f]) == h
        out.append((h, cert))
        cur = cur.sub(h)
        node_cur = CertLin(1, p - 1, node_cur, node_mono)
    total = RPoly.zero(sig)
    for h, _ in out:
        total = total.add(h)
    assert total == f
    return out


def degree_shift(r, d, mono):
    """Certificate deriving r·x^mono from the generator r·x_1···x_d.

    Requires d >= 2, mono nonzero and reduced, and tD(x^mono) congruent to
    d modulo p-1. Uses the minimal number of self-compositions (each
    multiplies the coefficient by r and appends d-1 fresh variables; after
    any multiple of p-1 of them the coefficient returns to r), then one
    variable identification.
    """
    p = r.sig.p
    mono = trim(mono)
    if d < 2:
        raise ValueError("base degree must be at least 2")
    if not mono:
        raise ValueError("target monomial must be nonzero")
    if any(e > p - 1 for e in mono):
        raise ValueError("target monomial must be reduced")
    u = tdeg(mono)
    if (u - d) % (p - 1):
        raise ValueError(f"tD {u} not congruent to {d} mod {p - 1}")
    s = 0
    while d + s * (p - 1) * (d - 1) < u:
        s += 1
    node = CertLeaf(0)
    cap = d
    for _ in range(s * (p - 1)):
        node = CertSelfComp(cap, cap - 1, node, CertLeaf(0))
        cap += d - 1
    support = [v for v, e in enumerate(mono, start=1) if e]
    targets = []
    for t, v in enumerate(support):
        if t < len(support) - 1:
            targets.extend([v] * mono[v - 1])
        else:
            targets.extend([v] * (cap - (u - mono[v - 1])))
    if targets != list(range(1, cap + 1)):
        node = CertIdent(tuple(targets), node)
    cert = Certificate(node)
    base = RPoly.monomial(r.sig, tuple(1 for _ in range(d)), r)
    assert cert.replay([base]) == RPoly.monomial(r.sig, mono, r)
    return cert


# --- membership oracle ----------------------------------------------------


@lru_cache(maxsize=None)
def _primitive_root(p):
    if p == 2:
        return 1
    for g in range(2, p):
        seen, x = set(), 1
        for _ in range(p - 1):
            x = x * g % p
            seen.add(x)
        if len(seen) == p - 1:
            return g
    raise ArithmeticError(f"no primitive root mod {p}")


@lru_cache(maxsize=None)
def _substitution_operators(p, nvars):
    """Matrices of the elementary substitutions on the monomial space.

    Monomials indexed by the mixed-radix grid of [p-1]_0^nvars. Returns a
    tuple of (nm, nm) uint8 matrices: transvections x_a := x_a + x_b,
    scalings x_a := g·x_a (g a primitive root), zero-assignments x_a := 0.
    Together with span closure these generate the action of all Z_p
    matrices on reduced polynomials.
    """
    grid = _monomial_grid(p, nvars)
    index = {m: i for i, m in enumerate(grid)}
    nm = len(grid)
    ops = []

    def matrix_from(action):
        mat = np.zeros((nm, nm), dtype=np.uint8)
        for i, mono in enumerate(grid):
            for target, c in action(mono):
                mat[index[target], i] = (mat[index[target], i] + c) % p
        return mat

    for a in range(1, nvars + 1):
        for b in range(1, nvars + 1):
            if a == b:
                continue

            def transvect(mono, a=a, b=b):
                e = mono[a - 1]
                out = []
                for k in range(e + 1):
                    new = list(mono)
                    new[a - 1] = e - k
                    eb = new[b - 1] + k
                    new[b - 1] = reduce_exponent(eb, p) if eb else 0
                    out.append((tuple(new), math.comb(e, k) % p))
                return out

            ops.append(matrix_from(transvect))
    root = _primitive_root(p)
    if root != 1:
        for a in range(1, nvars + 1):

            def scale(mono, a=a):
                return [(mono, pow(root, mono[a - 1], p))]

            ops.append(matrix_from(scale))
    for a in range(1, nvars + 1):

        def zero(mono, a=a):
            return [(mono, 1)] if mono[a - 1] == 0 else []

        ops.append(matrix_from(zero))
    return tuple(ops)


def _vectorize(f, nvars):
    """Flatten an RPoly into Z_p^(p^nvars * domain_len)."""
    p = f.sig.p
    grid = _monomial_grid(p, nvars)
    index = {m: i for i, m in enumerate(grid)}
    out = np.zeros((len(grid), f.sig.domain_len), dtype=np.uint8)
    for mono, coeff in f.terms.items():
        out[index[mono + (0,) * (nvars - len(mono))]] = coeff.table
    return out.reshape(-1)


def pclonoid_member_oracle(f, gens, var_cap=3, step_cap=100_000):
    """Exact membership of f in the clonoid generated by gens.

    Returns "yes"/"no" when decided within the caps, "unknown" otherwise
    (never a wrong answer). var_cap bounds the ambient variable count,
    step_cap the number of closure steps.
    """
    if var_cap < 1 or step_cap < 1:
        raise ValueError("caps must be at least 1")
    if isinstance(gens, PolyGenSet):
        gens = gens.generators
    gens = list(gens)
    if not gens:
        raise ValueError("generator set must be nonempty")
    sig = f.sig
    if any(g.sig != sig for g in gens):
        raise ValueError("signature mismatch")
    nvars = max([f.nvars, 1] + [g.nvars for g in gens])
    if nvars > var_cap:
        return UNKNOWN
    p = sig.p
    nm = p**nvars
    dim = nm * sig.domain_len
    guards.check("span_dim", dim, "membership oracle ambient dimension")
    target = _vectorize(f, nvars)
    ops = _substitution_operators(p, nvars)
    basis = SpanBasis(dim, p)
    queue = []
    steps = 0

    def push(vecflat):
        before = basis.rank
        if basis.insert(vecflat):
            queue.append(basis.rows()[before].copy())
            return True
        return False

    for g in gens:
        push(_vectorize(g, nvars))
    if basis.contains(target):
        return YES
    while queue:
        row = queue.pop()
        mat = row.reshape(nm, sig.domain_len)
        for op in ops:
            steps += 1
            if steps > step_cap:
                return UNKNOWN
            image = (op.astype(np.int64) @ mat) % p
            if push(image.astype(np.uint8).reshape(-1)) and basis.contains(target):
                return YES
    return NO if not basis.contains(target) else YES
