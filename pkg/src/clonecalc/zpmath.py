"""Dense linear algebra over the prime fields Z_p, for small p.

Matrices are numpy uint8 arrays with entries in [0, p). Products are taken
in int64 before reduction, so no uint8 overflow can occur.

SpanBasis is the workhorse of every closure in the package: an incrementally
grown row-echelon basis of a Z_p-subspace, optionally carrying one payload
per row (used to thread derivation provenance through closures).
"""

import numpy as np

from clonecalc import backend


def inv_mod(a, p):
    """Multiplicative inverse of a modulo the prime p."""
    a %= p
    if a == 0:
        raise ZeroDivisionError(f"0 has no inverse mod {p}")
    return pow(a, p - 2, p)


def rref(mat, p):
    """Reduced row echelon form over Z_p.

    Returns (R, pivots) where R has len(pivots) nonzero rows, each with a
    leading 1 in strictly increasing pivot columns and zeros above them.
    """
    m = np.array(mat, dtype=np.int64) % p
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        src = None
        for rr in range(r, rows):
            if m[rr, c] % p:
                src = rr
                break
        if src is None:
            continue
        if src != r:
            m[[r, src]] = m[[src, r]]
        m[r] = (m[r] * inv_mod(int(m[r, c]), p)) % p
        for rr in range(rows):
            if rr != r and m[rr, c]:
                m[rr] = (m[rr] - m[rr, c] * m[r]) % p
        pivots.append(c)
        r += 1
    return m[:r].astype(np.uint8), pivots


def nullspace(mat, p):
    """Basis (rows) of {x : mat @ x = 0 (mod p)}."""
    m = np.asarray(mat)
    rows, cols = m.shape
    red, pivots = rref(m, p)
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for k, fc in enumerate(free):
        basis[k, fc] = 1
        for r, pc in enumerate(pivots):
            basis[k, pc] = (-int(red[r, fc])) % p
    return basis


def intersect_rowspaces(a, b, p):
    """Basis (rows, RREF) of rowspace(a) ∩ rowspace(b) over Z_p.

    Zassenhaus: row-reduce [[A A],[B 0]]; rows with zero left half carry the
    intersection in their right half.
    """
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    cols = a.shape[1]
    if b.shape[1] != cols:
        raise ValueError("row spaces live in different dimensions")
    top = np.hstack([a, a])
    bot = np.hstack([b, np.zeros_like(b)])
    red, _ = rref(np.vstack([top, bot]), p)
    left_zero = ~red[:, :cols].any(axis=1)
    inter = red[left_zero][:, cols:]
    red2, _ = rref(inter, p) if inter.size else (inter, [])
    return red2


class SpanBasis:
    """Incremental row-echelon basis of a subspace of Z_p^dim.

    Rows keep zeros at all earlier pivot columns, so a single forward sweep
    reduces any vector exactly. When payload combination is enabled (pass a
    ``lincomb`` callable taking [(coeff, payload), ...]), every stored row
    carries a payload expressing it in terms of the inserted vectors.
    """

    def __init__(self, dim, p, lincomb=None):
        self.dim = dim
        self.p = p
        self._lincomb = lincomb
        self._rows = np.zeros((16, dim), dtype=np.uint8)
        self._pivots = np.zeros(16, dtype=np.int64)
        self._payloads = []
        self.nrows = 0

    @property
    def rank(self):
        return self.nrows

    def rows(self):
        return self._rows[: self.nrows]

    def payloads(self):
        return list(self._payloads)

    def _grow(self):
        if self.nrows == self._rows.shape[0]:
            self._rows = np.vstack([self._rows, np.zeros_like(self._rows)])
            self._pivots = np.concatenate([self._pivots, np.zeros_like(self._pivots)])

    def _reduce(self, vec):
        """Reduce a copy of vec; returns (residue, pivot_col, coeffs)."""
        v = np.array(vec, dtype=np.uint8)
        if v.shape != (self.dim,):
            raise ValueError(f"vector of dim {self.dim} expected, got {v.shape}")
        coeffs = np.zeros(max(self.nrows, 1), dtype=np.uint8)
        piv = backend.reduce_mod_basis(
            self._rows[: self.nrows], self._pivots[: self.nrows], self.nrows, v, self.p, coeffs
        )
        return v, piv, coeffs[: self.nrows]

    def contains(self, vec):
        _, piv, _ = self._reduce(vec)
        return piv < 0

    def express(self, vec):
        """Coefficients of vec over the stored rows, or None if outside.

        Returns a list [(coeff, payload), ...] with coeff != 0 such that
        vec = sum coeff * row. The zero vector yields [].
        """
        _, piv, coeffs = self._reduce(vec)
        if piv >= 0:
            return None
        return [
            (int(c), self._payloads[r] if self._payloads else None)
            for r, c in enumerate(coeffs)
            if c
        ]

    def insert(self, vec, payload=None):
        """Add vec to the span. Returns True if the rank grew."""
        v, piv, coeffs = self._reduce(vec)
        if piv < 0:
            return False
        lead = int(v[piv])
        scale = inv_mod(lead, self.p)
        v = ((v.astype(np.int64) * scale) % self.p).astype(np.uint8)
        if self._lincomb is not None:
            # row = scale * (inserted - sum coeffs * rows)
            pairs = [(scale, payload)]
            for r, c in enumerate(coeffs):
                if c:
                    pairs.append(((scale * (self.p - int(c))) % self.p, self._payloads[r]))
            self._payloads.append(self._lincomb(pairs))
        self._grow()
        self._rows[self.nrows] = v
        self._pivots[self.nrows] = piv
        self.nrows += 1
        return True

    def canonical_key(self):
        """Bytes identifying the subspace (sorted full RREF)."""
        red, _ = rref(self.rows(), self.p)
        order = np.lexsort(red.T[::-1]) if red.size else []
        return red[order].tobytes() if red.size else b""

    def contains_space(self, other):
        """True iff other's rowspace is contained in this one."""
        return all(self.contains(row) for row in other.rows())

    def members(self, limit):
        """All span members (including 0) as uint8 rows; guarded by limit."""
        count = self.p**self.nrows
        if count > limit:
            raise ValueError(f"span has {count} members, limit {limit}")
        out = np.zeros((count, self.dim), dtype=np.uint8)
        block = 1
        for r in range(self.nrows - 1, -1, -1):
            row = self._rows[r].astype(np.int64)
            reps = out[: block * self.p]
            for c in range(1, self.p):
                seg = reps[c * block : (c + 1) * block]
                seg[:] = out[:block]
                seg += (c * row % self.p).astype(np.uint8)
            np.mod(reps, self.p, out=reps, casting="unsafe")
            block *= self.p
        return out

    def copy(self):
        dup = SpanBasis(self.dim, self.p, self._lincomb)
        dup._rows = self._rows.copy()
        dup._pivots = self._pivots.copy()
        dup._payloads = list(self._payloads)
        dup.nrows = self.nrows
        return dup
