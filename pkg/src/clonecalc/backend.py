"""Kernel backend selection.

The compiled extension is preferred; the numpy fallback is used when the
extension is missing or when CLONECALC_BACKEND=py is set. CLONECALC_BACKEND=c
demands the extension and fails loudly if it did not build.
"""

import os

_requested = os.environ.get("CLONECALC_BACKEND", "").strip().lower()
if _requested not in ("", "c", "py"):
    raise RuntimeError(f"CLONECALC_BACKEND must be 'c' or 'py', got {_requested!r}")

if _requested == "py":
    from clonecalc import _kernels_py as _impl
elif _requested == "c":
    from clonecalc import _speedups as _impl
else:
    try:
        from clonecalc import _speedups as _impl
    except ImportError:
        from clonecalc import _kernels_py as _impl

mixed_index = _impl.mixed_index
pair_index = _impl.pair_index
reduce_mod_basis = _impl.reduce_mod_basis


def backend_name():
    """Either 'c' (compiled extension) or 'py' (numpy fallback)."""
    return _impl.BACKEND_NAME
