"""The compiled kernels and the numpy fallback agree."""

import numpy as np
import pytest

from clonecalc import _kernels_py, backend


def have_compiled():
    try:
        from clonecalc import _speedups  # noqa: F401

        return True
    except ImportError:
        return False


compiled = pytest.mark.skipif(not have_compiled(), reason="compiled extension missing")


def test_backend_reports_name():
    assert backend.backend_name() in ("c", "py")


@compiled
def test_mixed_index_agreement(rng):
    from clonecalc import _speedups

    for _ in range(10):
        nargs, npts, nblk = (int(x) for x in rng.integers(1, 5, size=3))
        stack = rng.integers(0, 5, size=(nargs, npts, nblk), dtype=np.uint8)
        weights = rng.integers(0, 1000, size=(nblk, nargs), dtype=np.int64)
        got = _speedups.mixed_index(np.ascontiguousarray(stack), np.ascontiguousarray(weights))
        want = _kernels_py.mixed_index(stack, weights)
        assert np.array_equal(got, want)


@compiled
def test_pair_index_agreement(rng):
    from clonecalc import _speedups

    lhs = rng.integers(0, 100, size=(7, 9)).astype(np.int64)
    rhs = rng.integers(0, 100, size=(5, 9)).astype(np.int64)
    got = _speedups.pair_index(np.ascontiguousarray(lhs), np.ascontiguousarray(rhs))
    want = _kernels_py.pair_index(lhs, rhs)
    assert np.array_equal(got, want)


@compiled
def test_reduce_mod_basis_agreement(rng):
    from clonecalc import _speedups

    for p in (2, 3, 5):
        dim = 12
        rows = []
        basis = np.zeros((6, dim), dtype=np.uint8)
        pivots = np.zeros(6, dtype=np.int64)
        nrows = 0
        # build an echelon basis the same way SpanBasis does
        for _ in range(10):
            vec = rng.integers(0, p, size=dim, dtype=np.uint8)
            v1, v2 = vec.copy(), vec.copy()
            c1 = np.zeros(max(nrows, 1), dtype=np.uint8)
            c2 = np.zeros(max(nrows, 1), dtype=np.uint8)
            piv1 = _speedups.reduce_mod_basis(basis[:nrows], pivots[:nrows], nrows, v1, p, c1)
            piv2 = _kernels_py.reduce_mod_basis(basis[:nrows], pivots[:nrows], nrows, v2, p, c2)
            assert piv1 == piv2 and np.array_equal(v1, v2) and np.array_equal(c1, c2)
            if piv1 >= 0 and nrows < 6:
                inv = pow(int(v1[piv1]), p - 2, p)
                basis[nrows] = (v1.astype(np.int64) * inv) % p
                pivots[nrows] = piv1
                nrows += 1


def test_span_closure_same_result_under_both_backends(rng, monkeypatch):
    # swap the backend function used by SpanBasis and compare outcomes
    from clonecalc import zpmath

    vecs = [rng.integers(0, 3, size=8, dtype=np.uint8) for _ in range(6)]
    span_default = zpmath.SpanBasis(8, 3)
    for v in vecs:
        span_default.insert(v.copy())
    monkeypatch.setattr(zpmath.backend, "reduce_mod_basis", _kernels_py.reduce_mod_basis)
    span_py = zpmath.SpanBasis(8, 3)
    for v in vecs:
        span_py.insert(v.copy())
    assert span_default.canonical_key() == span_py.canonical_key()
