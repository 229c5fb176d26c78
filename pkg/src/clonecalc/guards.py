"""Resource guards for the enumeration-heavy operations.

All limits scale with the CLONECALC_GUARD_OVERRIDE environment variable
(a positive multiplier, e.g. CLONECALC_GUARD_OVERRIDE=8 to allow bigger
runs). Exceeding a guard raises ResourceGuardError rather than silently
truncating a result.
"""

import os

LIMITS = {
    "modulus": 30,             # largest squarefree carrier for enumeration ops
    "table_points": 30**3,     # dense-table length per function
    "unary_space": 2**20,      # |unary coefficient function space| for enumeration
    "clonoid_subsets": 4096,   # generator subsets tried by enumerate_clonoids
    "ball_tables": 2_000_000,  # tables held by brute_force_clg_ball, per arity
    "ball_work": 200_000_000_000,  # table-cell operations per ball round
    "span_dim": 65_536,        # ambient vector dimension for span closures
    "span_members": 4096,      # subspace members materialized explicitly
    "r3_forms": 6561,          # value forms enumerated per composite rule pass
    "clone_pool": 4096,        # generator pool subsets tried by enumerate_clones
}


class ResourceGuardError(RuntimeError):
    """A desk-scale resource guard was exceeded."""


def _multiplier():
    raw = os.environ.get("CLONECALC_GUARD_OVERRIDE", "").strip()
    if not raw:
        return 1.0
    try:
        value = float(raw)
    except ValueError as exc:
        raise RuntimeError(f"CLONECALC_GUARD_OVERRIDE must be numeric, got {raw!r}") from exc
    if value <= 0:
        raise RuntimeError("CLONECALC_GUARD_OVERRIDE must be positive")
    return value


def limit(name):
    return int(LIMITS[name] * _multiplier())


def check(name, actual, what=""):
    """Raise ResourceGuardError if actual exceeds the named limit."""
    cap = limit(name)
    if actual > cap:
        detail = f" ({what})" if what else ""
        raise ResourceGuardError(
            f"guard '{name}' exceeded{detail}: {actual} > {cap}; "
            "set CLONECALC_GUARD_OVERRIDE to raise the limit"
        )
