"""Pure-Python (numpy) kernels, the fallback for `clonecalc._speedups`.

Both modules expose the same three functions; `clonecalc.backend` picks one
at import time.
"""

import numpy as np

BACKEND_NAME = "py"


def mixed_index(stack, weights):
    """idx[t] = sum_{j,i} stack[j,t,i] * weights[i,j], as int64."""
    return np.einsum("jti,ij->t", stack.astype(np.int64), weights)


def pair_index(lhs, rhs):
    """out[a*kb+b, t] = lhs[a,t] + rhs[b,t] for int64 contribution matrices."""
    ka, npts = lhs.shape
    kb = rhs.shape[0]
    out = lhs[:, None, :] + rhs[None, :, :]
    return out.reshape(ka * kb, npts)


def reduce_mod_basis(basis, pivots, nrows, vec, p, coeffs):
    """Reduce vec against the echelon rows in place; return pivot col or -1.

    Arithmetic is done in int64 to avoid uint8 overflow, then written back.
    """
    v = vec.astype(np.int64)
    for r in range(nrows):
        f = int(v[pivots[r]])
        coeffs[r] = f
        if f:
            v += (p - f) * basis[r]
            v %= p
    vec[:] = v.astype(np.uint8)
    nz = np.nonzero(vec)[0]
    return int(nz[0]) if nz.size else -1
