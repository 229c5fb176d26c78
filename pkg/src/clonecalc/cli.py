"""Command-line interface.

Subcommands: bounds, clonoids, clone (closure|member|generators|enumerate),
verify.  Exit codes: 0 pass, 1 verification failure, 2 usage/input error,
3 success with consistency flags raised.
"""

import argparse
import json
import sys

from clonecalc import bounds as bounds_mod
from clonecalc import clone as clone_mod
from clonecalc import clonoid as clonoid_mod
from clonecalc import core, serialize, verify
from clonecalc.clonoid import ClonoidSig
from clonecalc.guards import ResourceGuardError

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_FLAGS = 3


def _emit(args, text):
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fail(message):
    print(f"error: {message}", file=sys.stderr)
    return EXIT_USAGE


def cmd_bounds(args):
    if args.pq:
        p, q = args.pq
        try:
            report = bounds_mod.pq_bounds(p, q)
        except ValueError as exc:
            return _fail(str(exc))
    else:
        try:
            modulus = core.modulus_for(args.modulus)
        except ValueError as exc:
            return _fail(str(exc))
        enumerated = None
        try:
            counts = []
            for i in range(1, modulus.m + 1):
                sig = ClonoidSig(modulus.primes[i - 1], modulus.others(i))
                counts.append(len(clonoid_mod.enumerate_clonoids(sig, args.cap)))
            enumerated = tuple(counts)
        except ResourceGuardError:
            enumerated = None
        report = bounds_mod.clone_count_bounds(modulus, enumerated_counts=enumerated)
        formula_report = bounds_mod.clone_count_bounds(modulus)
        report.upper = formula_report.upper  # display the formula upper bound
        if modulus.m == 2:
            pq = bounds_mod.pq_bounds(*modulus.primes)
            report.chain_value = pq.chain_value
            for flag in pq.flags:
                if flag not in report.flags:
                    report.flags.append(flag)
    _emit(args, serialize.dumps(report.to_obj()))
    return EXIT_FLAGS if report.flags and any("inconsistent" in f or "violated" in f for f in report.flags) else EXIT_OK


def cmd_clonoids(args):
    try:
        sig = ClonoidSig(args.p, tuple(args.others))
    except ValueError as exc:
        return _fail(str(exc))
    try:
        lattice = clonoid_mod.enumerate_clonoids(sig, args.cap)
    except ResourceGuardError as exc:
        return _fail(str(exc))
    obj = serialize.clonoid_lattice_to_obj(sig, args.cap, lattice)
    if args.format == "dot":
        _emit(args, serialize.lattice_to_dot(obj))
    else:
        _emit(args, serialize.dumps(obj))
    return EXIT_OK


def _load_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise serialize.FormatError(f"cannot read {what} {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise serialize.FormatError(f"{what} {path}: invalid JSON: {exc}") from exc


def cmd_clone(args):
    try:
        if args.action == "enumerate":
            modulus = core.modulus_for(args.modulus)
            if args.pool == "gamma":
                pool, subset_size = [], 0
            else:
                pool, subset_size = None, args.subset_size
            census = clone_mod.enumerate_clones(
                modulus,
                args.cap,
                pool=pool,
                subset_size=subset_size,
                seed=args.seed,
                n_random=args.random_pool,
            )
            clones, labels = census["clones"], census["labels"]
            keys = {c.grade_key() for c in clones}
            obj = serialize.clone_lattice_to_obj(modulus, args.cap, clones, labels)
            obj["rho_injective"] = len(keys) == len(clones)
            if args.format == "dot":
                _emit(args, serialize.clone_lattice_to_dot(obj))
            else:
                _emit(args, serialize.dumps(obj))
            return EXIT_OK
        modulus, gens = serialize.generators_from_obj(_load_json(args.gens, "generator file"))
        built = clone_mod.from_generators(gens, modulus, args.cap)
        if args.action == "closure":
            _emit(args, serialize.dumps(serialize.clone_to_obj(built)))
            return EXIT_OK
        if args.action == "generators":
            out = clone_mod.extract_generators(built)
            obj = serialize.generators_to_obj(modulus, out)
            obj["max_arity"] = max((g.arity for g in out), default=0)
            _emit(args, serialize.dumps(obj))
            return EXIT_OK
        if args.action == "member":
            query = serialize.fn_table_from_obj(_load_json(args.query, "query file"), "query")
            if query.modulus != modulus:
                return _fail("query modulus differs from the generator modulus")
            ok, cert = built.member(query, certificate=args.certificate)
            obj = {"member": bool(ok)}
            if cert is not None:
                obj["certificate"] = serialize.clone_certificate_to_obj(cert)
                obj["certificate_replays"] = cert.replay(built.generators) == query
            _emit(args, serialize.dumps(obj))
            return EXIT_OK
        return _fail(f"unknown clone action {args.action!r}")
    except (serialize.FormatError, ValueError, ResourceGuardError) as exc:
        return _fail(str(exc))


def cmd_verify(args):
    if args.suite not in verify.SUITES:
        return _fail(f"unknown suite {args.suite!r}; choose from {', '.join(verify.SUITES)}")
    report = verify.run_suite(args.suite, seed=args.seed)
    _emit(args, serialize.dumps(report))
    return EXIT_OK if report["pass"] else EXIT_FAIL


def build_parser():
    parser = argparse.ArgumentParser(
        prog="clonecalc",
        description="clone and clonoid calculus on squarefree Z_n",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="cardinality bound reports")
    b.add_argument("--modulus", type=int, help="squarefree modulus, e.g. 6")
    b.add_argument("--pq", type=int, nargs=2, metavar=("P", "Q"), help="two-prime report")
    b.add_argument("--cap", type=int, default=2)
    b.add_argument("--output")
    b.set_defaults(fn=cmd_bounds)

    c = sub.add_parser("clonoids", help="enumerate a clonoid lattice")
    c.add_argument("--p", type=int, required=True, help="target prime")
    c.add_argument("--others", type=int, nargs="+", required=True, help="source primes")
    c.add_argument("--cap", type=int, default=2)
    c.add_argument("--format", choices=("json", "dot"), default="json")
    c.add_argument("--output")
    c.set_defaults(fn=cmd_clonoids)

    k = sub.add_parser("clone", help="clone closure, membership, generators, enumeration")
    k.add_argument("action", choices=("closure", "member", "generators", "enumerate"))
    k.add_argument("--gens", help="generator JSON file")
    k.add_argument("--query", help="query table JSON file (member)")
    k.add_argument("--certificate", action="store_true", help="emit a replayable certificate")
    k.add_argument("--modulus", type=int, default=6, help="carrier (enumerate)")
    k.add_argument("--pool", choices=("gamma", "singletons"), default="singletons")
    k.add_argument("--subset-size", type=int, default=1)
    k.add_argument("--random-pool", type=int, default=0)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--cap", type=int, default=2)
    k.add_argument("--format", choices=("json", "dot"), default="json")
    k.add_argument("--output")
    k.set_defaults(fn=cmd_clone)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("--suite", required=True)
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--output")
    v.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "bounds" and not args.pq and args.modulus is None:
        parser.parse_args(["bounds", "--help"])
        return EXIT_USAGE
    if args.command == "clone":
        if args.action in ("closure", "member", "generators") and not args.gens:
            return _fail(f"clone {args.action} requires --gens")
        if args.action == "member" and not args.query:
            return _fail("clone member requires --query")
    try:
        return args.fn(args)
    except ResourceGuardError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
