"""JSON and DOT forms of tables, lattices, clones, and certificates.

The table format is
    {"modulus": [2, 3], "arity": 2, "values": [[a1, a2], ...]}
with the values in the canonical block-lexicographic order and one residue
per prime.  A Z_s integer form is accepted on input with "encoding": "zs".
Every exporter sorts keys and emits deterministic output.
"""

import json

import numpy as np

from clonecalc import clone as clone_mod
from clonecalc import pclonoid
from clonecalc.clonoid import ClonoidSig
from clonecalc.core import FnTable, SquarefreeModulus, domain


class FormatError(ValueError):
    """Malformed input data; the CLI maps this to exit code 2."""


def dumps(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def modulus_to_obj(modulus):
    return list(modulus.primes)


def modulus_from_obj(obj):
    try:
        return SquarefreeModulus(tuple(int(p) for p in obj))
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad modulus {obj!r}: {exc}") from exc


def fn_table_to_obj(f):
    return {
        "modulus": modulus_to_obj(f.modulus),
        "arity": f.arity,
        "values": [[int(v) for v in row] for row in f.values],
    }


def fn_table_from_obj(obj, where="table"):
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: expected an object")
    for key in ("modulus", "arity", "values"):
        if key not in obj:
            raise FormatError(f"{where}: missing key {key!r}")
    mod = modulus_from_obj(obj["modulus"])
    arity = obj["arity"]
    if not isinstance(arity, int) or arity < 0:
        raise FormatError(f"{where}: bad arity {arity!r}")
    npoints = domain(mod.primes, arity).npoints
    values = obj["values"]
    if len(values) != npoints:
        raise FormatError(
            f"{where}: {len(values)} values, expected {npoints} (= s^arity)"
        )
    encoding = obj.get("encoding", "residues")
    rows = np.zeros((npoints, mod.m), dtype=np.uint8)
    if encoding == "zs":
        for t, v in enumerate(values):
            if not isinstance(v, int) or not 0 <= v < mod.s:
                raise FormatError(f"{where}: entry {t} = {v!r} outside 0..{mod.s - 1}")
            rows[t] = [v % p for p in mod.primes]
    elif encoding == "residues":
        for t, v in enumerate(values):
            if not isinstance(v, (list, tuple)) or len(v) != mod.m:
                raise FormatError(f"{where}: entry {t} is not a residue {mod.m}-tuple")
            for c, (x, p) in enumerate(zip(v, mod.primes)):
                if not isinstance(x, int) or not 0 <= x < p:
                    raise FormatError(
                        f"{where}: entry {t} component {c + 1} = {x!r} not reduced mod {p}"
                    )
            rows[t] = v
    else:
        raise FormatError(f"{where}: unknown encoding {encoding!r}")
    return FnTable(mod, arity, rows)


def generators_to_obj(modulus, gens):
    return {
        "modulus": modulus_to_obj(modulus),
        "generators": [fn_table_to_obj(g) for g in gens],
    }


def generators_from_obj(obj):
    if not isinstance(obj, dict) or "generators" not in obj:
        raise FormatError("generator file: expected {'modulus': ..., 'generators': [...]}")
    mod = modulus_from_obj(obj.get("modulus", []))
    gens = [
        fn_table_from_obj(g, where=f"generators[{k}]") for k, g in enumerate(obj["generators"])
    ]
    for g in gens:
        if g.modulus != mod:
            raise FormatError("generator modulus differs from the file modulus")
    return mod, gens


# --- lattices -------------------------------------------------------------------


def hasse_edges(elements, leq):
    """Transitive reduction of the order: the covering pairs (a, b)."""
    n = len(elements)
    below = [[leq(elements[a], elements[b]) for b in range(n)] for a in range(n)]
    edges = []
    for a in range(n):
        for b in range(n):
            if a == b or not below[a][b]:
                continue
            if any(c != a and c != b and below[a][c] and below[c][b] for c in range(n)):
                continue
            edges.append((a, b))
    return edges


def clonoid_lattice_to_obj(sig, cap, lattice):
    elements = []
    for k, c in enumerate(lattice):
        unary = sorted(tuple(int(x) for x in row) for row in c.unary_tables())
        elements.append({"index": k, "rank": c.rank(), "unary": [list(u) for u in unary]})
    edges = hasse_edges(lattice, lambda a, b: a.leq(b))
    return {
        "signature": {"p": sig.p, "others": list(sig.source_primes)},
        "cap": cap,
        "count": len(lattice),
        "elements": elements,
        "hasse": [list(e) for e in edges],
    }


def lattice_to_dot(obj, name="lattice"):
    lines = [f"digraph {name} {{", "  rankdir=BT;"]
    for el in obj["elements"]:
        label = f"#{el['index']} (|unary|={len(el['unary'])})"
        lines.append(f'  n{el["index"]} [label="{label}"];')
    for a, b in obj["hasse"]:
        lines.append(f"  n{a} -> n{b};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def clone_to_obj(clone):
    grades = {}
    for (i, j), grade in sorted(clone.grades.items()):
        unary = sorted(tuple(int(x) for x in row) for row in grade.arity_basis(1))
        grades[f"{i},{j}"] = {
            "rank": grade.rank(),
            "unary_basis": [list(u) for u in unary],
        }
    return {
        "modulus": modulus_to_obj(clone.modulus),
        "cap": clone.cap,
        "grades": grades,
        "notes": list(clone.notes),
    }


def clone_lattice_to_obj(modulus, cap, clones, labels):
    elements = [
        {"index": k, "label": labels[k], "grades": clone_to_obj(c)["grades"]}
        for k, c in enumerate(clones)
    ]
    edges = hasse_edges(clones, lambda a, b: a.leq(b))
    return {
        "modulus": modulus_to_obj(modulus),
        "cap": cap,
        "count": len(clones),
        "elements": elements,
        "hasse": [list(e) for e in edges],
    }


def clone_lattice_to_dot(obj, name="clones"):
    lines = [f"digraph {name} {{", "  rankdir=BT;"]
    for el in obj["elements"]:
        lines.append(f'  n{el["index"]} [label="{el["label"]}"];')
    for a, b in obj["hasse"]:
        lines.append(f"  n{a} -> n{b};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# --- certificates ----------------------------------------------------------------


def clone_certificate_to_obj(cert):
    return cert.to_obj()


def clone_certificate_from_obj(obj, modulus):
    return clone_mod.CloneCertificate.from_obj(obj, modulus)


def poly_certificate_to_obj(cert):
    return cert.to_obj()


def poly_certificate_from_obj(obj):
    return pclonoid.Certificate.from_obj(obj)
