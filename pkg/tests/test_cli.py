"""CLI surface: subcommands, formats, exit codes."""

import json

import pytest

from clonecalc import cli, core, serialize
from clonecalc.core import FnTable


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_bounds_z6(capsys):
    code, out, _ = run(capsys, "bounds", "--modulus", "6")
    obj = json.loads(out)
    assert obj["lower"] == 9
    assert obj["upper"] == 2109375
    assert obj["chain_value"] == 2048
    assert "chain-inconsistent" in obj["flags"]
    assert code == cli.EXIT_FLAGS


def test_bounds_rejects_non_squarefree(capsys):
    code, _, err = run(capsys, "bounds", "--modulus", "4")
    assert code == cli.EXIT_USAGE
    assert "squarefree" in err


def test_bounds_pq(capsys):
    code, out, _ = run(capsys, "bounds", "--pq", "2", "3")
    obj = json.loads(out)
    assert obj["lower"] == 9 and obj["upper"] == 55296
    assert code == cli.EXIT_FLAGS


def test_clonoids_json_and_dot(capsys, tmp_path):
    code, out, _ = run(capsys, "clonoids", "--p", "2", "--others", "3")
    obj = json.loads(out)
    assert obj["count"] == 6 and code == cli.EXIT_OK
    code, out, _ = run(capsys, "clonoids", "--p", "3", "--others", "2")
    assert json.loads(out)["count"] == 4
    path = tmp_path / "lat.dot"
    code, _, _ = run(capsys, "clonoids", "--p", "2", "--others", "3", "--format", "dot", "--output", str(path))
    text = path.read_text()
    assert code == cli.EXIT_OK and text.count("n0") >= 1 and "digraph" in text
    assert sum(1 for line in text.splitlines() if "label=" in line) == 6


def test_clonoids_guard(capsys):
    code, _, err = run(capsys, "clonoids", "--p", "2", "--others", "3", "5")
    assert code == cli.EXIT_USAGE and "guard" in err


def _write_gens(tmp_path, mod, gens, name="gens.json"):
    path = tmp_path / name
    path.write_text(json.dumps(serialize.generators_to_obj(mod, gens)))
    return str(path)


def _write_table(tmp_path, table, name="query.json"):
    path = tmp_path / name
    path.write_text(json.dumps(serialize.fn_table_to_obj(table)))
    return str(path)


def mul6():
    mod = core.modulus_for(6)
    return mod, FnTable.from_callable(
        mod, 2, lambda pt: ((pt[0][0] * pt[0][1]) % 2, (pt[1][0] * pt[1][1]) % 3)
    )


def test_clone_member_no(capsys, tmp_path):
    mod, mul = mul6()
    gens = _write_gens(tmp_path, mod, [])
    query = _write_table(tmp_path, mul)
    code, out, _ = run(capsys, "clone", "member", "--gens", gens, "--query", query)
    assert code == cli.EXIT_OK
    assert json.loads(out)["member"] is False


def test_clone_member_yes_with_certificate(capsys, tmp_path):
    mod, mul = mul6()
    gens = _write_gens(tmp_path, mod, [mul])
    query = _write_table(tmp_path, mul)
    code, out, _ = run(capsys, "clone", "member", "--gens", gens, "--query", query, "--certificate")
    obj = json.loads(out)
    assert obj["member"] is True and obj["certificate_replays"] is True
    assert obj["certificate"]["nodes"]


def test_clone_generators(capsys, tmp_path):
    mod, mul = mul6()
    gens = _write_gens(tmp_path, mod, [mul])
    code, out, _ = run(capsys, "clone", "generators", "--gens", gens)
    obj = json.loads(out)
    assert code == cli.EXIT_OK
    assert obj["max_arity"] <= 3
    assert obj["generators"]


def test_clone_closure(capsys, tmp_path):
    mod, mul = mul6()
    gens = _write_gens(tmp_path, mod, [mul])
    code, out, _ = run(capsys, "clone", "closure", "--gens", gens)
    obj = json.loads(out)
    assert obj["grades"]["1,2"]["rank"] >= 1


def test_clone_enumerate(capsys):
    code, out, _ = run(capsys, "clone", "enumerate", "--modulus", "6", "--subset-size", "0")
    obj = json.loads(out)
    assert obj["count"] >= 9
    assert obj["rho_injective"] is True
    assert code == cli.EXIT_OK


def test_clone_malformed_query(capsys, tmp_path):
    mod, mul = mul6()
    gens = _write_gens(tmp_path, mod, [mul])
    bad = tmp_path / "bad.json"
    obj = serialize.fn_table_to_obj(mul)
    obj["values"] = obj["values"][:-1]
    bad.write_text(json.dumps(obj))
    code, _, err = run(capsys, "clone", "member", "--gens", gens, "--query", str(bad))
    assert code == cli.EXIT_USAGE and "expected 36" in err


def test_clone_missing_args(capsys):
    code, _, err = run(capsys, "clone", "member", "--query", "x.json")
    assert code == cli.EXIT_USAGE


def test_verify_unknown_suite(capsys):
    code, _, err = run(capsys, "verify", "--suite", "nope")
    assert code == cli.EXIT_USAGE and "unknown suite" in err


def test_verify_bounds_suite(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "bounds")
    obj = json.loads(out)
    assert code == cli.EXIT_OK and obj["pass"] is True


def test_verify_deterministic_output(capsys):
    code1, out1, _ = run(capsys, "verify", "--suite", "clonoid-lattice", "--seed", "7")
    code2, out2, _ = run(capsys, "verify", "--suite", "clonoid-lattice", "--seed", "7")
    obj1, obj2 = json.loads(out1), json.loads(out2)
    obj1.pop("elapsed"), obj2.pop("elapsed")
    assert obj1 == obj2
