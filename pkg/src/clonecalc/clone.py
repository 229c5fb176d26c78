"""Clones above the additive clone, as graded coefficient systems.

A clone C containing all linear maps on the squarefree carrier is
represented by one linearly closed clonoid per (prime index i, grade
j in [p_i]_0): grade j of component i holds the coefficient functions r
whose induced monomial function r·x_1···x_j (supported in component i)
belongs to C.  Total degrees >= 2 reduce into the band [2, p_i] modulo
p_i - 1; degrees 0 and 1 keep their own grades.

from_generators seeds the grades from the generators' interpolated
monomial data and then iterates closure rules to a joint fixed point:

  R1  each grade closes as a linearly closed clonoid;
  R2  products: r in grade j1 >= 1 and r' in grade j2 give the pointwise
      product r·r' in grade red(j1+j2-1) (substitute one induced monomial
      into a monomial slot of another);
  R3  composite coefficients: a coefficient argument of r belonging to
      source prime b is replaced by an achievable component-b value form
      V (+ optionally the argument's own coordinate); the composite's
      component is re-interpolated and every resulting monomial
      coefficient joins the grade of its reduced degree.  V ranges over
      the span of the forms r'·z_b^w with r' a grade-(b, t) element and
      w a block-b exponent pattern reachable from grade t; purely linear
      additions are absorbed by R1.
  ID  grade p_i sits inside grade 1 (identify all p_i variables:
      x_1···x_p becomes x_1^p = x_1).

R2/R3 are the finite reflection of clone composition; they are validated
against a brute-force composition ball by the verification suites, not
proved complete (when a form space is too large to enumerate, it is
truncated to sums of at most two basis forms and the clone records a
note).  Every stored grade element carries provenance, so a positive
membership verdict can be expanded into a replayable composition
certificate over the original generators, linear maps, and +.
"""

import itertools
from functools import lru_cache

import numpy as np

from clonecalc import core, guards, pclonoid
from clonecalc.backend import pair_index
from clonecalc.clonoid import (
    ArityAboveCap,
    ClonoidSig,
    LinClonoid,
    enumerate_clonoids,
)
from clonecalc.core import FnTable, LinearMapSpec
from clonecalc.poly import (
    CoeffFn,
    CoeffRingSig,
    RPoly,
    _eval_matrix_inverse,
    _monomial_grid,
    compose_at,
    induce,
    interpolate_component,
    linear_substitute,
    reduce_exponent,
    shift_vars,
    tdeg,
    trim,
)
from clonecalc.zpmath import rref


def reduced_grade(d, p):
    """red(d): 0 and 1 stay; d >= 2 goes to its representative in [2, p]."""
    if d <= 1:
        return d
    return 2 + (d - 2) % (p - 1)


# --- composition certificates ------------------------------------------------


class CLeafGen:
    __slots__ = ("gen",)

    def __init__(self, gen):
        self.gen = gen


class CLeafLin:
    __slots__ = ("spec",)

    def __init__(self, spec):
        self.spec = spec


class CAdd:
    __slots__ = ("left", "right")

    def __init__(self, left, right):
        self.left, self.right = left, right


class CCompose:
    __slots__ = ("fn", "args")

    def __init__(self, fn, args):
        self.fn = fn
        self.args = tuple(args)


class CloneCertificate:
    """A composition tree over generator tables, linear maps, and +."""

    def __init__(self, root):
        self.root = root

    def replay(self, generators):
        memo = {}

        def run(node):
            key = id(node)
            if key in memo:
                return memo[key]
            if isinstance(node, CLeafGen):
                out = generators[node.gen]
            elif isinstance(node, CLeafLin):
                out = core.linear_map(node.spec)
            elif isinstance(node, CAdd):
                out = core.add(run(node.left), run(node.right))
            elif isinstance(node, CCompose):
                out = core.compose(run(node.fn), [run(a) for a in node.args])
            else:
                raise TypeError(f"unknown node {type(node).__name__}")
            memo[key] = out
            return out

        return run(self.root)

    def nodes(self):
        seen, order = {}, []

        def walk(node):
            if id(node) in seen:
                return
            if isinstance(node, CAdd):
                walk(node.left)
                walk(node.right)
            elif isinstance(node, CCompose):
                walk(node.fn)
                for a in node.args:
                    walk(a)
            seen[id(node)] = len(order)
            order.append(node)

        walk(self.root)
        return order, seen

    def size(self):
        return len(self.nodes()[0])

    def to_obj(self):
        order, index = self.nodes()
        out = []
        for node in order:
            if isinstance(node, CLeafGen):
                out.append({"op": "generator", "gen": node.gen})
            elif isinstance(node, CLeafLin):
                out.append({"op": "linear", "vectors": [list(v) for v in node.spec.vectors]})
            elif isinstance(node, CAdd):
                out.append({"op": "add", "left": index[id(node.left)], "right": index[id(node.right)]})
            else:
                out.append(
                    {
                        "op": "compose",
                        "fn": index[id(node.fn)],
                        "args": [index[id(a)] for a in node.args],
                    }
                )
        return {"nodes": out, "root": index[id(self.root)]}

    @classmethod
    def from_obj(cls, obj, modulus):
        nodes = []
        for spec in obj["nodes"]:
            op = spec["op"]
            if op == "generator":
                nodes.append(CLeafGen(spec["gen"]))
            elif op == "linear":
                nodes.append(
                    CLeafLin(LinearMapSpec(modulus, tuple(tuple(v) for v in spec["vectors"])))
                )
            elif op == "add":
                nodes.append(CAdd(nodes[spec["left"]], nodes[spec["right"]]))
            elif op == "compose":
                nodes.append(CCompose(nodes[spec["fn"]], [nodes[a] for a in spec["args"]]))
            else:
                raise ValueError(f"unknown certificate node {op!r}")
        return cls(nodes[obj["root"]])


# --- wiring helpers -------------------------------------------------------------


def _unit(arity, k):
    return tuple(1 if c == k else 0 for c in range(1, arity + 1))


def _zero_vec(arity):
    return tuple(0 for _ in range(arity))


def _selector(modulus, arity, rows):
    """CLeafLin from per-block coefficient vectors (dict block index -> vec)."""
    vectors = []
    for i, p in enumerate(modulus.primes, start=1):
        vec = rows.get(i)
        if vec is None:
            vec = _zero_vec(arity)
        vec = tuple(int(x) % p for x in vec)
        if len(vec) < arity:
            vec = vec + _zero_vec(arity - len(vec))
        vectors.append(vec[:arity])
    return CLeafLin(LinearMapSpec(modulus, tuple(vectors)))


def _projection(modulus, arity, k):
    return _selector(modulus, arity, {i: _unit(arity, k) for i in range(1, modulus.m + 1)})


def _zero_map(modulus, arity):
    return _selector(modulus, arity, {})


def _lift(modulus, tree, arity_from, arity_to):
    """Recompose a tree at a different arity through projections.

    Valid whenever the table's value does not depend on argument slots
    beyond arity_to (slots above arity_to are fed the first projection).
    """
    if arity_from == arity_to:
        return tree
    args = [_projection(modulus, arity_to, min(k, arity_to)) for k in range(1, arity_from + 1)]
    return CCompose(tree, args)


def _sum_trees(modulus, arity, trees):
    if not trees:
        return _zero_map(modulus, arity)
    out = trees[0]
    for t in trees[1:]:
        out = CAdd(out, t)
    return out


# --- grade element provenance ------------------------------------------------------


class PConst:
    __slots__ = ("c",)

    def __init__(self, c):
        self.c = c


class PSeed:
    """A monomial of the interpolated component of generator gen."""

    __slots__ = ("gen", "i", "mono")

    def __init__(self, gen, i, mono):
        self.gen, self.i, self.mono = gen, i, mono


class PLin:
    __slots__ = ("pairs",)

    def __init__(self, pairs):
        self.pairs = tuple(pairs)


class PSubst:
    """An elementary blockwise matrix applied inside the grade clonoid."""

    __slots__ = ("payload", "block", "matrix")

    def __init__(self, payload, block, matrix):
        self.payload, self.block, self.matrix = payload, block, matrix


class PProd:
    __slots__ = ("p1", "j1", "p2", "j2")

    def __init__(self, p1, j1, p2, j2):
        self.p1, self.j1, self.p2, self.j2 = p1, j1, p2, j2


class PIdent:
    """A grade p_i element seen in grade 1 via x_1^p = x_1."""

    __slots__ = ("payload",)

    def __init__(self, payload):
        self.payload = payload


class PComposite:
    """A re-interpolated monomial coefficient of a composite.

    The composite substitutes V + eps·z_{b,pos} into coefficient argument
    pos of the grade-(i, j) element r, where V sums the stored pieces
    (c, form payload, form grade t, form table, exponent pattern w); mono
    names the re-interpolated monomial whose coefficient this element is.
    """

    __slots__ = ("payload", "j", "r_table", "pos", "block", "pieces", "eps", "mono")

    def __init__(self, payload, j, r_table, pos, block, pieces, eps, mono):
        self.payload = payload
        self.j = j
        self.r_table = r_table
        self.pos = pos
        self.block = block
        self.pieces = tuple(pieces)
        self.eps = eps
        self.mono = mono


# --- pclonoid certificate translation ------------------------------------------------


def translate_pcert(cert, modulus, i, base_tree, base_poly, base_arity):
    """Turn a polynomial-level certificate into a composition tree.

    cert derives some polynomial from the single generator base_poly; the
    returned (tree, poly, arity) satisfies: tree evaluates to
    induce(poly, modulus, i, arity), provided base_tree evaluates to
    induce(base_poly, modulus, i, base_arity).  Linear combinations become
    compositions with binary linear maps, matrix substitutions become
    compositions with per-block coordinate selectors, and self-composition
    substitutes the base's induced function (coordinate-corrected by an
    added linear map) into one argument slot.
    """
    n = base_poly.sig.coeff_arity
    memo = {}

    def pass_rows(arity, k):
        rows = {}
        if k <= n:
            for b in range(1, modulus.m + 1):
                if b != i:
                    rows[b] = _unit(arity, k)
        return rows

    def subst_wiring(child_t, child_p, child_a, matrix, ncols):
        poly = linear_substitute(child_p, matrix)
        arity = max(ncols, n, 1)
        args = []
        for k in range(1, child_a + 1):
            rows = pass_rows(arity, k)
            if k <= len(matrix):
                rows[i] = tuple(matrix[k - 1])
            args.append(_selector(modulus, arity, rows))
        return CCompose(child_t, args), poly, arity

    def walk(node):
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, pclonoid.CertLeaf):
            out = (base_tree, base_poly, base_arity)
        elif isinstance(node, pclonoid.CertLin):
            tl, pl, al = walk(node.left)
            tr, pr, ar = walk(node.right)
            arity = max(al, ar)
            tl, tr = _lift(modulus, tl, al, arity), _lift(modulus, tr, ar, arity)
            comb = _selector(modulus, 2, {i: (node.a, node.b)})
            out = (CCompose(comb, [tl, tr]), pl.add(pr, node.a, node.b), arity)
        elif isinstance(node, pclonoid.CertSubst):
            t, p_, a = walk(node.child)
            ncols = len(node.matrix[0]) if node.matrix else 1
            out = subst_wiring(t, p_, a, node.matrix, ncols)
        elif isinstance(node, pclonoid.CertZero):
            t, p_, a = walk(node.child)
            nv = max(p_.nvars, node.slot)
            matrix = tuple(
                _zero_vec(nv) if v == node.slot else _unit(nv, v) for v in range(1, nv + 1)
            )
            out = subst_wiring(t, p_, a, matrix, nv)
        elif isinstance(node, pclonoid.CertIdent):
            t, p_, a = walk(node.child)
            ncols = max(node.targets)
            matrix = tuple(_unit(ncols, tg) for tg in node.targets)
            out = subst_wiring(t, p_, a, matrix, ncols)
        elif isinstance(node, pclonoid.CertSelfComp):
            th, ph, ah = walk(node.host)
            tb, pb, ab = walk(node.base)
            shifted = shift_vars(pb, node.offset)
            poly = compose_at(ph, (node.slot,), [shifted])
            arity = max(ah, node.offset + pb.nvars, n, poly.nvars, 1)
            inner_args = []
            for k in range(1, ab + 1):
                rows = pass_rows(arity, k)
                if k <= pb.nvars:
                    rows[i] = _unit(arity, node.offset + k)
                inner_args.append(_selector(modulus, arity, rows))
            fix_rows = {}
            if node.slot <= n:
                for b in range(1, modulus.m + 1):
                    if b != i:
                        fix_rows[b] = _unit(arity, node.slot)
            slot_arg = CAdd(CCompose(tb, inner_args), _selector(modulus, arity, fix_rows))
            args = [
                slot_arg if k == node.slot else _projection(modulus, arity, k)
                for k in range(1, ah + 1)
            ]
            out = (CCompose(th, args), poly, arity)
        else:
            raise TypeError(f"unknown certificate node {type(node).__name__}")
        memo[key] = out
        return out

    root = cert.root if isinstance(cert, pclonoid.Certificate) else cert
    return walk(root)


# --- index precomputations ------------------------------------------------------------


@lru_cache(maxsize=None)
def _component_interp_data(primes, i, arity):
    """(xidx, zidx, vinv) for batched interpolation of component i tables."""
    p = primes[i - 1]
    dom = core.domain(primes, arity)
    xidx = np.zeros(dom.npoints, dtype=np.int64)
    for c in range(1, arity + 1):
        xidx += dom.digits(i, c).astype(np.int64) * p ** (arity - c)
    zidx = core.coeff_index_map(primes, i, arity, arity)
    vinv = _eval_matrix_inverse(p, arity)
    return xidx, zidx, vinv


def _interp_component_batch(modulus, i, arity, tables):
    """Monomial coefficients of a stack of component-i tables.

    tables: (K, s^arity) residues mod p_i over the full domain.
    Returns (K, p^arity, coeff_len) with row order = the monomial grid.
    """
    p = modulus.primes[i - 1]
    xidx, zidx, vinv = _component_interp_data(modulus.primes, i, arity)
    k = tables.shape[0]
    coeff_len = core.domain(modulus.others(i), arity).npoints
    grid = np.zeros((k, p**arity, coeff_len), dtype=np.int64)
    grid[:, xidx, zidx] = tables
    return np.einsum("mk,rkl->rml", vinv, grid) % p


@lru_cache(maxsize=None)
def _shift_groups(p, cap, j):
    """Reduced monomials of x^m · x_1···x_j, grouped.

    Returns ((mono', grade, grid indices of the m's mapping to mono'), ...)
    for m over the monomial grid of [p-1]_0^cap.
    """
    groups = {}
    for gi_, m in enumerate(_monomial_grid(p, cap)):
        mm = list(m) + [0] * max(0, j - cap)
        for k in range(j):
            mm[k] += 1
        red = trim(tuple(reduce_exponent(e, p) if e else 0 for e in mm))
        groups.setdefault(red, []).append(gi_)
    return tuple(
        (mono, reduced_grade(tdeg(mono), p), tuple(idxs)) for mono, idxs in sorted(groups.items())
    )


# --- the clone representation ------------------------------------------------------------


class CloneRep:
    """A clone containing all linear maps, as payload-carrying grades."""

    def __init__(self, modulus, cap=2, generators=(), with_provenance=True):
        guards.check("modulus", modulus.s, "carrier size")
        if cap < 1:
            raise ValueError("arity cap must be at least 1")
        self.modulus = modulus
        self.cap = cap
        self.generators = tuple(generators)
        self.closed = False
        self.with_provenance = with_provenance
        self.notes = []
        self._expand_cache = {}
        self._seed_cache = {}
        lincomb = (lambda pairs: PLin(pairs)) if with_provenance else None
        subst = (
            (lambda payload, block, matrix: PSubst(payload, block, matrix))
            if with_provenance
            else None
        )
        self.grades = {}
        for i, p in enumerate(modulus.primes, start=1):
            sig = ClonoidSig(p, modulus.others(i))
            for j in range(p + 1):
                self.grades[(i, j)] = LinClonoid(sig, cap, lincomb, subst)
        for i in range(1, modulus.m + 1):
            ones = np.ones(self.grades[(i, 1)].dom.npoints, dtype=np.uint8)
            self.grades[(i, 1)].insert(ones, cap, PConst(1) if with_provenance else None)

    # -- closure engine --------------------------------------------------------------

    def _insert(self, i, j, table_at_cap, payload):
        grade = self.grades[(i, j)]
        return grade.insert(table_at_cap, self.cap, payload if self.with_provenance else None)

    def _rule_products(self):
        grew = False
        for i, p in enumerate(self.modulus.primes, start=1):
            for j1 in range(1, p + 1):
                g1 = self.grades[(i, j1)]
                if not g1.rank():
                    continue
                for j2 in range(p + 1):
                    g2 = self.grades[(i, j2)]
                    if not g2.rank():
                        continue
                    target = reduced_grade(j1 + j2 - 1, p)
                    rows1, pay1 = g1.basis.rows(), g1.basis.payloads()
                    rows2, pay2 = g2.basis.rows(), g2.basis.payloads()
                    for a in range(rows1.shape[0]):
                        for c in range(rows2.shape[0]):
                            prod = ((rows1[a].astype(np.int64) * rows2[c]) % p).astype(np.uint8)
                            if not prod.any():
                                continue
                            payload = None
                            if self.with_provenance:
                                payload = PProd(pay1[a], j1, pay2[c], j2)
                            grew |= self._insert(i, target, prod, payload)
        return grew

    def _rule_identify(self):
        grew = False
        for i, p in enumerate(self.modulus.primes, start=1):
            g = self.grades[(i, p)]
            rows, pays = g.basis.rows(), g.basis.payloads()
            for a in range(rows.shape[0]):
                payload = PIdent(pays[a]) if self.with_provenance else None
                grew |= self._insert(i, 1, rows[a], payload)
        return grew

    def _w_candidates(self, pb, t):
        """Block-b exponent patterns reachable from an induced grade-t monomial."""
        if t == 0:
            return [()]
        if t == 1:
            return [trim(_unit(self.cap, l)) for l in range(1, self.cap + 1)]
        out = []
        for exps in itertools.product(range(pb), repeat=self.cap):
            w = trim(exps)
            if w and (tdeg(w) - t) % (pb - 1) == 0:
                out.append(w)
        return out

    def _form_space(self, b):
        """Span basis of the achievable nonlinear component-b value forms.

        Pieces are r'·z_b^w on the full arity-cap domain, r' running over
        the grade-(b, t) basis rows.  Returns (SpanBasis with flattened
        piece provenance, full domain).
        """
        from clonecalc.zpmath import SpanBasis

        mod = self.modulus
        pb = mod.primes[b - 1]
        dom = core.domain(mod.primes, self.cap)
        cmap = core.coeff_index_map(mod.primes, b, self.cap, self.cap)

        def merge(pairs):
            acc = {}
            for c, sub in pairs:
                if sub is None:
                    continue
                for cc, desc in sub:
                    keyd = id(desc)
                    cur = acc.get(keyd)
                    if cur is None:
                        acc[keyd] = [(c * cc) % pb, desc]
                    else:
                        cur[0] = (cur[0] + c * cc) % pb
            return tuple((c, desc) for c, desc in (v for v in acc.values()) if c)

        span = SpanBasis(dom.npoints, pb, lincomb=merge)
        for t in range(pb + 1):
            grade = self.grades[(b, t)]
            rows, pays = grade.basis.rows(), grade.basis.payloads()
            if not rows.shape[0]:
                continue
            for w in self._w_candidates(pb, t):
                factor = np.ones(dom.npoints, dtype=np.int64)
                for l, e in enumerate(w, start=1):
                    if e:
                        dl = dom.digits(b, l).astype(np.int64)
                        for _ in range(e):
                            factor = factor * dl % pb
                for a in range(rows.shape[0]):
                    table = rows[a][cmap].astype(np.int64) * factor % pb
                    if not table.any():
                        continue
                    desc = (pays[a] if self.with_provenance else None, t, rows[a], w)
                    span.insert(table.astype(np.uint8), ((1, desc),))
        return span, dom

    def _form_members(self, span, pb):
        """Explicit (table, pieces) pairs of the form space, guarded."""
        rank = span.rank
        rows = span.rows()
        pays = span.payloads()
        limit = guards.limit("r3_forms")
        members = []
        if pb**rank <= limit:
            for combo in itertools.product(range(pb), repeat=rank):
                if not any(combo):
                    continue
                table = np.zeros(span.dim, dtype=np.int64)
                pairs = []
                for c, row, pay in zip(combo, rows, pays):
                    if c:
                        table += c * row
                        pairs.append((c, pay))
                merged = span._lincomb(pairs)
                members.append(((table % pb).astype(np.uint8), merged))
        else:
            note = f"form space over source prime {pb} truncated to pairwise sums (rank {rank})"
            if note not in self.notes:
                self.notes.append(note)
            singles = list(range(rank))
            for a in singles:
                members.append((rows[a].copy(), pays[a]))
            for a in singles:
                for c in singles:
                    if a < c:
                        table = (rows[a].astype(np.int64) + rows[c]) % pb
                        merged = span._lincomb([(1, pays[a]), (1, pays[c])])
                        members.append((table.astype(np.uint8), merged))
        return members

    def _rule_composites(self):
        """R3: substitute value forms into coefficient arguments, re-seed."""
        grew = False
        mod = self.modulus
        full = core.domain(mod.primes, self.cap)
        for i, p in enumerate(mod.primes, start=1):
            if all(
                self.grades[(i, j)].rank() == self.grades[(i, j)].dom.npoints
                for j in range(p + 1)
            ):
                continue  # component already full
            rdom = core.domain(mod.others(i), self.cap)
            ridx0 = core.coeff_index_map(mod.primes, i, self.cap, self.cap)
            rows_all, pays_all, js_all = [], [], []
            for j in range(p + 1):
                g = self.grades[(i, j)]
                for a in range(g.basis.rank):
                    rows_all.append(g.basis.rows()[a])
                    pays_all.append(g.basis.payloads()[a] if self.with_provenance else None)
                    js_all.append(j)
            if not rows_all:
                continue
            rows_all = np.stack(rows_all)
            seen_coeffs = {
                j: {bytes(r.tobytes()) for r in self.grades[(i, j)].basis.rows()}
                for j in range(p + 1)
            }
            for b in range(1, mod.m + 1):
                if b == i:
                    continue
                pb = mod.primes[b - 1]
                span, dom = self._form_space(b)
                if not span.rank:
                    continue
                members = self._form_members(span, pb)
                bpos_r = mod.others(i).index(pb) + 1
                for pos in range(1, self.cap + 1):
                    d_full = full.digits(b, pos).astype(np.int64)
                    w_r = rdom.weight(bpos_r, pos)
                    seen_targets = set()
                    for vtab, vpieces in members:
                        for eps in (0, 1):
                            target = (vtab.astype(np.int64) + eps * d_full) % pb
                            tkey = target.tobytes()
                            if tkey in seen_targets:
                                continue
                            seen_targets.add(tkey)
                            if np.array_equal(target, d_full):
                                continue  # identity rewiring
                            # the point ridx0 maps to has (b, pos)-digit d_full
                            ridx = ridx0 + (target - d_full) * w_r
                            tprime = rows_all[:, ridx]
                            coeffs = _interp_component_batch(mod, i, self.cap, tprime)
                            for ri in range(rows_all.shape[0]):
                                j = js_all[ri]
                                for mono, jt, idxs in _shift_groups(p, self.cap, j):
                                    merged = coeffs[ri][list(idxs)].sum(axis=0) % p
                                    mb = merged.astype(np.uint8)
                                    kb = mb.tobytes()
                                    if not mb.any() or kb in seen_coeffs[jt]:
                                        continue
                                    payload = None
                                    if self.with_provenance:
                                        payload = PComposite(
                                            pays_all[ri], j, rows_all[ri], pos, b,
                                            vpieces, eps, mono,
                                        )
                                    grew |= self._insert(i, jt, mb, payload)
                                    seen_coeffs[jt].add(kb)
        return grew

    def close(self):
        """Iterate R1/R2/R3/identify to a joint fixed point."""
        while True:
            grew = False
            for grade in self.grades.values():
                grew |= grade.close()
            grew |= self._rule_products()
            grew |= self._rule_identify()
            if grew:
                continue
            grew |= self._rule_composites()
            if not grew:
                break
        self.closed = True
        return self

    def seed_generator(self, gi):
        """Seed the grades from generator gi's interpolated monomial data.

        Generators of arity above the cap are admitted when every monomial
        coefficient depends only on the first cap coordinates per block
        (true for the unary-coefficient monomial generators the extraction
        emits); anything else is rejected.
        """
        from clonecalc.clonoid import _restrict_map, _zero_coords_map

        g = self.generators[gi]
        for i, p in enumerate(self.modulus.primes, start=1):
            comp = core.component_of(core.scalar_mul(self.modulus.crt_scalar(i), g), i)
            h = interpolate_component(comp)
            for mono, coeff in sorted(h.terms.items()):
                j = reduced_grade(tdeg(mono), p)
                payload = PSeed(gi, i, mono) if self.with_provenance else None
                table = coeff.table
                arity = g.arity
                if arity > self.cap:
                    others = self.modulus.others(i)
                    if not np.array_equal(table[_zero_coords_map(others, arity, self.cap)], table):
                        raise ArityAboveCap(
                            f"generator {gi}: coefficient of {mono} in component {i} "
                            f"does not factor through the cap {self.cap}"
                        )
                    table = table[_restrict_map(others, self.cap, arity)]
                    arity = self.cap
                self._insert(i, j, self.grades[(i, j)].pad_table(table, arity), payload)

    # -- comparisons --------------------------------------------------------------------

    def grade(self, i, j):
        return self.grades[(i, j)]

    def rho(self):
        """The grade family rho(C), keyed by (prime index, grade)."""
        if not self.closed:
            raise ValueError("clone is not closed")
        return {key: g.copy() for key, g in self.grades.items()}

    def grade_key(self):
        return tuple(self.grades[k].canonical_key() for k in sorted(self.grades))

    def _check(self, other):
        if self.modulus != other.modulus or self.cap != other.cap:
            raise ValueError("modulus or cap mismatch")

    def leq(self, other):
        self._check(other)
        return all(self.grades[k].leq(other.grades[k]) for k in self.grades)

    def equal(self, other):
        self._check(other)
        return self.grade_key() == other.grade_key()

    def meet(self, other):
        """Grade-wise intersection (closed: every rule passes to meets)."""
        self._check(other)
        out = CloneRep(self.modulus, self.cap, (), with_provenance=False)
        for key in self.grades:
            out.grades[key] = self.grades[key].meet(other.grades[key])
        out.closed = True
        return out

    def join(self, other):
        """Fixed point of the rule engine over the grade-wise union."""
        self._check(other)
        out = CloneRep(self.modulus, self.cap, (), with_provenance=False)
        for key in self.grades:
            g = out.grades[key]
            for row in self.grades[key].basis.rows():
                g.basis.insert(row)
            for row in other.grades[key].basis.rows():
                g.basis.insert(row)
        out.close()
        return out

    # -- membership ----------------------------------------------------------------------

    def decompose(self, f):
        """(prime index, monomial, coefficient) triples of the query."""
        out = []
        for i in range(1, self.modulus.m + 1):
            comp = core.component_of(core.scalar_mul(self.modulus.crt_scalar(i), f), i)
            h = interpolate_component(comp)
            for mono, coeff in sorted(h.terms.items()):
                out.append((i, mono, coeff))
        return out

    def member(self, f, certificate=False):
        """Membership of an FnTable, optionally with a replayable certificate.

        The query is decomposed through the CRT idempotents and interpolated
        monomial data; it belongs to the clone iff every monomial
        coefficient lies in the grade of its reduced degree.  Arity-0
        queries are decided through their unary padding.
        """
        if f.modulus != self.modulus:
            raise ValueError("modulus mismatch")
        if not self.closed:
            raise ValueError("clone is not closed")
        if f.arity > self.cap:
            raise ArityAboveCap(f"query arity {f.arity} above cap {self.cap}")
        if f.arity == 0:
            f = core.at_arity(f, 1)
        pieces = self.decompose(f)
        for i, mono, coeff in pieces:
            p = self.modulus.primes[i - 1]
            j = reduced_grade(tdeg(mono), p)
            if not self.grades[(i, j)].member(coeff.table, f.arity):
                return False, None
        if not certificate:
            return True, None
        if not self.with_provenance:
            raise ValueError("clone was built without provenance; no certificates")
        trees = [self._monomial_witness(i, mono, coeff, f.arity) for i, mono, coeff in pieces]
        cert = CloneCertificate(_sum_trees(self.modulus, f.arity, trees))
        if cert.replay(self.generators) != f:
            raise AssertionError("assembled certificate does not replay to the query")
        return True, cert

    def member_batch(self, stack, arity):
        """Vectorized membership for a stack of tables (K, npoints, m)."""
        if not self.closed:
            raise ValueError("clone is not closed")
        if arity > self.cap:
            raise ArityAboveCap(f"query arity {arity} above cap {self.cap}")
        k = stack.shape[0]
        ok = np.ones(k, dtype=bool)
        from clonecalc.clonoid import _pad_map

        for i, p in enumerate(self.modulus.primes, start=1):
            coeffs = _interp_component_batch(self.modulus, i, arity, stack[:, :, i - 1])
            pmap = None
            if arity != self.cap:
                pmap = _pad_map(self.modulus.others(i), arity, self.cap)
            grade_tests = {}
            for j in range(p + 1):
                red_rows, pivots = rref(self.grades[(i, j)].basis.rows(), p)
                grade_tests[j] = (red_rows.astype(np.int64), pivots)
            for mi, mono in enumerate(_monomial_grid(p, arity)):
                j = reduced_grade(tdeg(trim(mono)), p)
                vecs = coeffs[:, mi, :]
                amb = vecs if pmap is None else vecs[:, pmap]
                red_rows, pivots = grade_tests[j]
                if not pivots:
                    ok &= ~amb.any(axis=1)
                    continue
                recon = amb[:, pivots] @ red_rows % p
                ok &= (recon == amb).all(axis=1)
        return ok

    # -- witness assembly --------------------------------------------------------------------

    def _coeff_sig(self, i):
        return CoeffRingSig(self.modulus.primes[i - 1], self.modulus.others(i), self.cap)

    def expand(self, payload, i, j):
        """(tree, arity): tree evaluates to induce(r·x_1···x_j, i, arity)
        for the grade-(i, j) element r that the payload proves."""
        key = (id(payload), i, j)
        if key in self._expand_cache:
            return self._expand_cache[key]
        mod = self.modulus
        p = mod.primes[i - 1]
        if isinstance(payload, PConst):
            arity = max(self.cap, 1)
            tree = _selector(mod, arity, {i: (payload.c,)})
            out = (tree, arity)
        elif isinstance(payload, PLin):
            parts = []
            arity = max(j, 1)
            for c, sub in payload.pairs:
                t, a = self.expand(sub, i, j)
                parts.append((c, t, a))
                arity = max(arity, a)
            scaled = []
            for c, t, a in parts:
                t = _lift(mod, t, a, arity)
                if c != 1:
                    t = CCompose(_selector(mod, 1, {i: (c,)}), [t])
                scaled.append(t)
            out = (_sum_trees(mod, arity, scaled), arity)
        elif isinstance(payload, PSubst):
            t, a = self.expand(payload.payload, i, j)
            source = mod.others(i)
            bidx = mod.primes.index(source[payload.block - 1]) + 1
            arity = max(a, self.cap, j, 1)
            args = []
            for k in range(1, a + 1):
                rows = {}
                if k <= j:
                    rows[i] = _unit(arity, k)
                for bb in range(1, mod.m + 1):
                    if bb == i or k > self.cap:
                        continue
                    rows[bb] = tuple(payload.matrix[k - 1]) if bb == bidx else _unit(arity, k)
                args.append(_selector(mod, arity, rows))
            out = (CCompose(t, args), arity)
        elif isinstance(payload, PSeed):
            out = self._expand_seed(payload, i, j)
        elif isinstance(payload, PProd):
            out = self._expand_product(payload, i, j)
        elif isinstance(payload, PIdent):
            t, a = self.expand(payload.payload, i, p)
            args = []
            for k in range(1, a + 1):
                rows = {}
                if k <= p:
                    rows[i] = _unit(a, 1)
                for bb in range(1, mod.m + 1):
                    if bb != i and k <= self.cap:
                        rows[bb] = _unit(a, k)
                args.append(_selector(mod, a, rows))
            out = (CCompose(t, args), a)
        elif isinstance(payload, PComposite):
            out = self._expand_composite(payload, i, j)
        else:
            raise TypeError(f"unknown payload {type(payload).__name__}")
        self._expand_cache[key] = out
        return out

    def _monomial_chain(self, base_tree, base_poly, base_arity, i, mono, jgrade):
        """Witness for induce(r·x_1···x_jgrade) where r is the coefficient
        of mono in base_poly, derived through the extraction certificates."""
        monos = {m: (hm, cert) for hm, cert in ((hm, c) for hm, c in pclonoid.monomials_of(base_poly)) for m in hm.terms}
        hm, cert_mono = monos[mono]
        r = hm.terms[mono]
        d = tdeg(mono)
        tree, poly, arity = translate_pcert(cert_mono, self.modulus, i, base_tree, base_poly, base_arity)
        if mono != tuple(1 for _ in range(d)):
            _, cert_lin = pclonoid.extract_max_degree_monomial(hm, mono)
            tree, poly, arity = translate_pcert(cert_lin, self.modulus, i, tree, poly, arity)
        if jgrade != d:
            shift = pclonoid.degree_shift(r, d, tuple(1 for _ in range(jgrade)))
            tree, poly, arity = translate_pcert(shift, self.modulus, i, tree, poly, arity)
        return tree, arity

    def _expand_seed(self, payload, i, j):
        gi, mono = payload.gen, payload.mono
        h, base_tree, _ = self._seed_chain(gi, i)
        base_arity = max(self.generators[gi].arity, 1)
        return self._monomial_chain(base_tree, h, base_arity, i, mono, j)

    def _seed_chain(self, gi, i):
        key = (gi, i)
        if key in self._seed_cache:
            return self._seed_cache[key]
        mod = self.modulus
        g = self.generators[gi]
        scalar = mod.crt_scalar(i)
        comp = core.component_of(core.scalar_mul(scalar, g), i)
        h = interpolate_component(comp)
        base_tree = CCompose(
            _selector(mod, 1, {b: (scalar,) for b in range(1, mod.m + 1)}), [CLeafGen(gi)]
        )
        out = (h, base_tree, None)
        self._seed_cache[key] = out
        return out

    def _expand_product(self, payload, i, jtarget):
        mod = self.modulus
        j1, j2 = payload.j1, payload.j2
        t1, a1 = self.expand(payload.p1, i, j1)
        t2, a2 = self.expand(payload.p2, i, j2)
        jraw = j1 + j2 - 1
        arity = max(a1, a2, jraw, self.cap, 1)
        inner_args = []
        for k in range(1, a2 + 1):
            rows = {}
            if k <= j2:
                rows[i] = _unit(arity, j1 + k - 1)
            for bb in range(1, mod.m + 1):
                if bb != i and k <= self.cap:
                    rows[bb] = _unit(arity, k)
            inner_args.append(_selector(mod, arity, rows))
        fix = _selector(mod, arity, {bb: _unit(arity, 1) for bb in range(1, mod.m + 1) if bb != i})
        slot1 = CAdd(CCompose(t2, inner_args), fix)
        args = [slot1]
        for k in range(2, a1 + 1):
            rows = {}
            if k <= j1:
                rows[i] = _unit(arity, k - 1)
            for bb in range(1, mod.m + 1):
                if bb != i and k <= self.cap:
                    rows[bb] = _unit(arity, k)
            args.append(_selector(mod, arity, rows))
        tree = CCompose(t1, args)
        if jraw != jtarget:
            sig = self._coeff_sig(i)
            dummy = CoeffFn.constant(sig, 1)
            shift = pclonoid.degree_shift(dummy, jraw, tuple(1 for _ in range(jtarget)))
            base_poly = RPoly.monomial(sig, tuple(1 for _ in range(jraw)), dummy)
            tree, _, arity = translate_pcert(shift, mod, i, tree, base_poly, arity)
        return tree, arity

    def _piece_tree(self, b, c, form_payload, t, form_table, w):
        """Tree for induce(c·form·z_b^w, b, arity) from the grade payload."""
        mod = self.modulus
        pb = mod.primes[b - 1]
        t_f, a_f = self.expand(form_payload, b, t)
        sig_b = CoeffRingSig(pb, mod.others(b), self.cap)
        if t == 0:
            t_w, a_w = t_f, a_f
        elif t == 1 and w == (1,):
            t_w, a_w = t_f, a_f
        elif t == 1:
            l = len(w)
            a_w = max(a_f, l, self.cap)
            args = []
            for k in range(1, a_f + 1):
                rows = {}
                if k == 1:
                    rows[b] = _unit(a_w, l)
                for bb in range(1, mod.m + 1):
                    if bb != b and k <= self.cap:
                        rows[bb] = _unit(a_w, k)
                args.append(_selector(mod, a_w, rows))
            t_w = CCompose(t_f, args)
        else:
            form = CoeffFn(sig_b, form_table)
            shift = pclonoid.degree_shift(form, t, w)
            base_poly = RPoly.monomial(sig_b, tuple(1 for _ in range(t)), form)
            t_w, _, a_w = translate_pcert(shift, mod, b, t_f, base_poly, a_f)
        if c != 1:
            t_w = CCompose(_selector(mod, 1, {b: (c,)}), [t_w])
        return t_w, a_w

    def _expand_composite(self, payload, i, jtarget):
        mod = self.modulus
        p = mod.primes[i - 1]
        b, pos, j = payload.block, payload.pos, payload.j
        pb = mod.primes[b - 1]
        t_r, a_r = self.expand(payload.payload, i, j)
        piece_parts = []
        arity_v = max(self.cap, 1)
        for c, desc in payload.pieces:
            form_payload, t, form_table, w = desc
            t_w, a_w = self._piece_tree(b, c, form_payload, t, form_table, w)
            piece_parts.append((t_w, a_w))
            arity_v = max(arity_v, a_w)
        arity = max(a_r, arity_v, self.cap, j, 1)
        v_trees = [_lift(mod, t_w, a_w, arity) for t_w, a_w in piece_parts]
        fix_rows = {}
        if pos <= j:
            fix_rows[i] = _unit(arity, pos)
        for bb in range(1, mod.m + 1):
            if bb not in (i, b) and pos <= self.cap:
                fix_rows[bb] = _unit(arity, pos)
        if payload.eps:
            fix_rows[b] = _unit(arity, pos)
        slot_arg = _sum_trees(mod, arity, v_trees + [_selector(mod, arity, fix_rows)])
        args = [slot_arg if k == pos else _projection(mod, arity, k) for k in range(1, a_r + 1)]
        base_tree = CCompose(t_r, args)
        base_poly = self._composite_poly(payload, i)
        tree, arity2 = self._monomial_chain(base_tree, base_poly, arity, i, payload.mono, jtarget)
        return tree, arity2

    def _composite_poly(self, payload, i):
        """The reduced polynomial of the composite behind a PComposite."""
        mod = self.modulus
        p = mod.primes[i - 1]
        b, pos, j = payload.block, payload.pos, payload.j
        pb = mod.primes[b - 1]
        full = core.domain(mod.primes, self.cap)
        cmap_b = core.coeff_index_map(mod.primes, b, self.cap, self.cap)
        target = np.zeros(full.npoints, dtype=np.int64)
        for c, desc in payload.pieces:
            _, t, form_table, w = desc
            factor = np.full(full.npoints, c, dtype=np.int64)
            for l, e in enumerate(w, start=1):
                if e:
                    dl = full.digits(b, l).astype(np.int64)
                    for _ in range(e):
                        factor = factor * dl % pb
            target += factor * form_table[cmap_b]
        if payload.eps:
            target += full.digits(b, pos).astype(np.int64)
        target %= pb
        rdom = core.domain(mod.others(i), self.cap)
        ridx0 = core.coeff_index_map(mod.primes, i, self.cap, self.cap)
        bpos_r = mod.others(i).index(pb) + 1
        d_full = full.digits(b, pos).astype(np.int64)
        ridx = ridx0 + (target - d_full) * rdom.weight(bpos_r, pos)
        tprime = payload.r_table[ridx]
        coeffs = _interp_component_batch(mod, i, self.cap, tprime[None])[0]
        sig = self._coeff_sig(i)
        raw = []
        for mi, mono in enumerate(_monomial_grid(p, self.cap)):
            row = coeffs[mi].astype(np.uint8)
            if row.any():
                mm = tuple(mono) + tuple(0 for _ in range(max(0, j - self.cap)))
                mm = tuple(e + 1 if k < j else e for k, e in enumerate(mm))
                raw.append((mm, CoeffFn(sig, row)))
        return RPoly.from_raw(sig, raw)

    def _monomial_witness(self, i, mono, coeff, query_arity):
        """Tree evaluating to induce(coeff·x^mono, i, query_arity)."""
        mod = self.modulus
        p = mod.primes[i - 1]
        d = tdeg(mono)
        dgrade = reduced_grade(d, p)
        grade = self.grades[(i, dgrade)]
        padded = grade.pad_table(coeff.table, query_arity)
        expr = grade.basis.express(padded)
        if expr is None:
            raise AssertionError("witness requested for a non-member coefficient")
        parts = []
        arity = max(dgrade, 1)
        for c, payload in expr:
            tr, a = self.expand(payload, i, dgrade)
            parts.append((c, tr, a))
            arity = max(arity, a)
        scaled = []
        for c, tr, a in parts:
            tr = _lift(mod, tr, a, arity)
            if c != 1:
                tr = CCompose(_selector(mod, 1, {i: (c,)}), [tr])
            scaled.append(tr)
        tree = _sum_trees(mod, arity, scaled)
        if mono != tuple(1 for _ in range(dgrade)):
            sig = self._coeff_sig(i)
            base_coeff = CoeffFn(sig, padded)
            if d >= 2:
                shift = pclonoid.degree_shift(base_coeff, dgrade, mono)
                base_poly = RPoly.monomial(sig, tuple(1 for _ in range(dgrade)), base_coeff)
                tree, _, arity = translate_pcert(shift, mod, i, tree, base_poly, arity)
            else:
                # d == 1 and mono = x_l with l > 1: rewire the monomial slot
                l = len(mono)
                new_arity = max(arity, l)
                args = []
                for k in range(1, arity + 1):
                    rows = {}
                    if k == 1:
                        rows[i] = _unit(new_arity, l)
                    for bb in range(1, mod.m + 1):
                        if bb != i and k <= self.cap:
                            rows[bb] = _unit(new_arity, k)
                    args.append(_selector(mod, new_arity, rows))
                tree, arity = CCompose(tree, args), new_arity
        return _lift(mod, tree, arity, query_arity)


# --- spec-level operations ------------------------------------------------------------------


def from_generators(gens, modulus, arity_cap=2, with_provenance=True):
    """The clone generated by the tables together with all linear maps."""
    prepared = []
    for g in gens:
        if g.modulus != modulus:
            raise ValueError("generator modulus mismatch")
        prepared.append(core.at_arity(g, 1) if g.arity == 0 else g)
    clone = CloneRep(modulus, arity_cap, tuple(prepared), with_provenance)
    for gi in range(len(prepared)):
        clone.seed_generator(gi)
    clone.close()
    return clone


def gamma(modulus, i, clonoid_image, arity_cap=2):
    """The clone embedding of a clonoid: all e_i(g) + linear maps.

    Built by generating from the embedded unary part; the result's
    component-i grade 0 must reproduce the clonoid (unary generation), its
    grade 1 holds exactly the constants, and every other grade is zero.
    """
    expected = ClonoidSig(modulus.primes[i - 1], modulus.others(i))
    if clonoid_image.sig != expected:
        raise ValueError(f"clonoid signature {clonoid_image.sig} does not match component {i}")
    if clonoid_image.cap != arity_cap:
        raise ValueError("clonoid cap must match the clone arity cap")
    gens = [core.e_embed(modulus, i, 1, row) for row in clonoid_image.arity_basis(1)]
    clone = from_generators(gens, modulus, arity_cap)
    if clone.grades[(i, 0)].canonical_key() != clonoid_image.canonical_key():
        raise AssertionError(
            "embedded clone's grade 0 differs from the clonoid; unary generation failed"
        )
    return clone


def member(f, clone, certificate=False):
    return clone.member(f, certificate)


def rho(clone):
    return clone.rho()


def equal(c, d):
    return c.equal(d)


def leq(c, d):
    return c.leq(d)


def extract_generators(clone):
    """Unary-coefficient generators: induce(r·x_1···x_j) per grade basis.

    Every emitted table has arity max(j, 1) <= max(p_1, ..., p_m); feeding
    the result back to from_generators reproduces the clone.
    """
    if not clone.closed:
        raise ValueError("clone is not closed")
    mod = clone.modulus
    bound = max(mod.primes)
    out = []
    for (i, j) in sorted(clone.grades):
        grade = clone.grades[(i, j)]
        rows = grade.arity_basis(1)
        sig1 = CoeffRingSig(mod.primes[i - 1], mod.others(i), 1)
        for row in rows:
            arity = max(j, 1)
            if arity > bound:
                raise AssertionError("generator arity exceeds the prime bound")
            fn = induce(
                RPoly.monomial(sig1, tuple(1 for _ in range(j)), CoeffFn(sig1, row)),
                mod,
                i,
                arity,
            )
            if fn not in out:
                out.append(fn)
    return out


def unary_coefficient_pool(modulus, max_grade=None):
    """Singleton generator pool: induced unary-coefficient monomials."""
    pool = []
    for i, p in enumerate(modulus.primes, start=1):
        sig1 = CoeffRingSig(p, modulus.others(i), 1)
        size = sig1.domain_len
        top = min(p, max_grade) if max_grade is not None else p
        for code in range(1, p**size):
            table = np.array([(code // p**k) % p for k in range(size)], dtype=np.uint8)
            for j in range(1, top + 1):
                fn = induce(
                    RPoly.monomial(sig1, tuple(1 for _ in range(j)), CoeffFn(sig1, table)),
                    modulus,
                    i,
                    max(j, 1),
                )
                pool.append(fn)
    return pool


def enumerate_clones(modulus, arity_cap=2, pool=None, subset_size=1, seed=0, n_random=0):
    """Distinct clones from gamma images and generator-pool closures.

    Returns a dict with the deduplicated clones, their labels, and the
    count.  Clones are compared by their grade families.
    """
    clones = []
    labels = []

    def add(clone, label):
        for seen in clones:
            if seen.equal(clone):
                return
        clones.append(clone)
        labels.append(label)

    for i in range(1, modulus.m + 1):
        sig = ClonoidSig(modulus.primes[i - 1], modulus.others(i))
        lattice = enumerate_clonoids(sig, arity_cap)
        for k, c in enumerate(lattice):
            add(gamma(modulus, i, c, arity_cap), f"gamma_{i}[{k}]")
    if pool is None:
        pool = unary_coefficient_pool(modulus, max_grade=arity_cap)
    pool = list(pool)
    if n_random:
        rng = np.random.default_rng(seed)
        dom = core.domain(modulus.primes, min(2, arity_cap))
        for _ in range(n_random):
            vals = np.stack(
                [rng.integers(0, p, size=dom.npoints, dtype=np.uint8) for p in modulus.primes],
                axis=1,
            )
            pool.append(FnTable(modulus, min(2, arity_cap), vals))
    subsets = []
    for size in range(1, subset_size + 1):
        subsets.extend(itertools.combinations(range(len(pool)), size))
    guards.check("clone_pool", len(subsets), "generator pool subsets")
    for combo in subsets:
        gens = [pool[k] for k in combo]
        add(from_generators(gens, modulus, arity_cap), f"gens{list(combo)}")
    return {"clones": clones, "labels": labels, "count": len(clones)}


# --- brute-force composition ball ----------------------------------------------------------


def brute_force_clg_ball(gens, modulus, arity_cap=2, depth_cap=3):
    """All tables reachable from gens ∪ projections ∪ {+} by compositions
    nested at most depth_cap deep, at arities <= arity_cap.  A sound
    under-approximation of the clone; raises ResourceGuardError instead of
    truncating.

    Returns {arity: uint8 array (count, npoints, m)}.
    """
    mod = modulus
    m = mod.m
    stacks = {}
    for b in range(1, arity_cap + 1):
        rows = [
            core.linear_map(LinearMapSpec.projection(mod, b, k)).values for k in range(1, b + 1)
        ]
        stacks[b] = core.unique_rows(np.stack(rows).reshape(len(rows), -1))
    plus = core.linear_map(LinearMapSpec(mod, tuple((1, 1) for _ in mod.primes))).values
    stacks[2] = core.unique_rows(np.vstack([stacks[2], plus.reshape(1, -1)]))
    for g in gens:
        if g.modulus != mod:
            raise ValueError("generator modulus mismatch")
        g2 = core.at_arity(g, 1) if g.arity == 0 else g
        if g2.arity > arity_cap:
            raise ValueError("generator arity above the ball cap")
        stacks[g2.arity] = core.unique_rows(
            np.vstack([stacks[g2.arity], g2.values.reshape(1, -1)])
        )

    def shaped(b):
        flat = stacks[b]
        return flat.reshape(flat.shape[0], -1, m)

    primes_row = np.array(mod.primes, dtype=np.int64)
    proj_keys = {
        b: {
            core.linear_map(LinearMapSpec.projection(mod, b, k)).values.tobytes()
            for k in range(1, b + 1)
        }
        for b in range(1, arity_cap + 1)
    }
    plus_key = plus.tobytes()

    class Dedup:
        """Rolling unique accumulator over flat uint8 rows."""

        def __init__(self, first):
            self.parts = [first]
            self.size = first.shape[0]

        def add(self, arr):
            if arr.shape[0]:
                self.parts.append(arr)
                self.size += arr.shape[0]
                if self.size > 3_000_000:
                    self.compact()

        def compact(self):
            arr = core.unique_rows(np.vstack(self.parts))
            self.parts = [arr]
            self.size = arr.shape[0]
            return arr

    for _ in range(depth_cap):
        acc = {b: Dedup(stacks[b]) for b in stacks}
        for b in range(1, arity_cap + 1):
            args = shaped(b)
            k = args.shape[0]
            if not k:
                continue
            npts = args.shape[1]
            guards.check("ball_work", k * k * npts, f"pairwise sums at arity {b}")
            chunk = max(1, 3_000_000 // max(1, k * npts))
            # the + table: all pairwise sums, chunked over the left operand
            left = args.astype(np.int64)
            for lo in range(0, k, chunk):
                hi = min(lo + chunk, k)
                sums = (left[lo:hi, None, :, :] + left[None, :, :, :]) % primes_row
                acc[b].add(core.unique_rows(sums.reshape((hi - lo) * k, -1).astype(np.uint8)))
            for a in range(1, arity_cap + 1):
                fs = shaped(a)
                keep = [
                    fi
                    for fi in range(fs.shape[0])
                    if fs[fi].tobytes() not in proj_keys[a]
                    and not (a == 2 and fs[fi].tobytes() == plus_key)
                ]
                if not keep:
                    continue
                weights = core.domain(mod.primes, a).weights_matrix()
                contrib = np.ascontiguousarray(
                    np.einsum("kti,ij->jkt", args.astype(np.int64), weights)
                )
                # compositions stream through chunks; bound the total work
                guards.check(
                    "ball_work",
                    k**a * len(keep) * npts,
                    f"ball compositions at arity {b}",
                )

                def idx_chunks():
                    if a == 1:
                        yield contrib[0]
                        return
                    if a == 2 and k * k * npts <= 3_000_000:
                        yield pair_index(contrib[0], contrib[1])
                        return
                    row_chunk = max(1, 3_000_000 // max(1, k ** (a - 1) * npts))
                    for lo in range(0, k, row_chunk):
                        hi = min(lo + row_chunk, k)
                        idx = contrib[0][lo:hi]
                        for s in range(1, a):
                            idx = (idx[:, None, :] + contrib[s][None, :, :]).reshape(
                                -1, npts
                            )
                        yield idx

                for idx in idx_chunks():
                    for fi in keep:
                        batch = fs[fi][idx]
                        acc[b].add(core.unique_rows(batch.reshape(batch.shape[0], -1)))
        for b in acc:
            stacks[b] = acc[b].compact()
            guards.check("ball_tables", stacks[b].shape[0], f"ball tables at arity {b}")
    return {b: np.ascontiguousarray(shaped(b)) for b in stacks}
