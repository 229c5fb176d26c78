# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels for the innermost table loops.

Mirrors the contract of `clonecalc._kernels_py`; one of the two is selected
at import by `clonecalc.backend`.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "c"


def mixed_index(cnp.uint8_t[:, :, ::1] stack, cnp.int64_t[:, ::1] weights):
    """Domain indices of composed arguments.

    stack: (nargs, npoints, nblocks) residue tuples of the argument tables.
    weights: (nblocks, nargs) positional weight of digit (block, arg slot).
    Returns int64 (npoints,) with idx[t] = sum_{j,i} stack[j,t,i]*weights[i,j].
    """
    cdef Py_ssize_t nargs = stack.shape[0]
    cdef Py_ssize_t npts = stack.shape[1]
    cdef Py_ssize_t nblk = stack.shape[2]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.zeros(npts, dtype=np.int64)
    cdef cnp.int64_t[::1] ov = out
    cdef Py_ssize_t j, t, i
    cdef cnp.int64_t acc
    for t in range(npts):
        acc = 0
        for j in range(nargs):
            for i in range(nblk):
                acc += stack[j, t, i] * weights[i, j]
        ov[t] = acc
    return out


def pair_index(cnp.int64_t[:, ::1] lhs, cnp.int64_t[:, ::1] rhs):
    """All-pairs composition indices for a binary table.

    lhs: (ka, npoints) weight-collapsed index contributions of the first
    argument, rhs: (kb, npoints) of the second.
    Returns int64 (ka*kb, npoints) with out[a*kb+b, t] = lhs[a,t] + rhs[b,t].
    """
    cdef Py_ssize_t ka = lhs.shape[0]
    cdef Py_ssize_t kb = rhs.shape[0]
    cdef Py_ssize_t npts = lhs.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=2] out = np.empty((ka * kb, npts), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] ov = out
    cdef Py_ssize_t a, b, t, row
    for a in range(ka):
        for b in range(kb):
            row = a * kb + b
            for t in range(npts):
                ov[row, t] = lhs[a, t] + rhs[b, t]
    return out


def reduce_mod_basis(cnp.uint8_t[:, ::1] basis, cnp.int64_t[::1] pivots,
                     Py_ssize_t nrows, cnp.uint8_t[::1] vec, int p,
                     cnp.uint8_t[::1] coeffs):
    """Reduce vec (mod p) against an echelon basis in place.

    basis: (capacity, dim) rows 0..nrows-1 valid, each with leading 1 at
    pivots[r]. coeffs receives the elimination coefficient used per row.
    Returns the first nonzero column of the reduced vec, or -1 if zero.
    """
    cdef Py_ssize_t dim = vec.shape[0]
    cdef Py_ssize_t r, c
    cdef int f
    for r in range(nrows):
        c = pivots[r]
        f = vec[c]
        coeffs[r] = <cnp.uint8_t> f
        if f != 0:
            f = p - f
            for c in range(dim):
                vec[c] = <cnp.uint8_t> ((vec[c] + f * basis[r, c]) % p)
    for c in range(dim):
        if vec[c] != 0:
            return c
    return -1
