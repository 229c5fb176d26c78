"""Deterministic verification suites behind `clonecalc verify`.

Each suite returns {"suite", "pass", "checks": [{"name", "ok", "detail"}],
"elapsed"}; the test suite and the CLI both run these.  All randomness is
seeded; reruns with the same seed produce identical reports.
"""

import time

import numpy as np

from clonecalc import bounds, clone, clonoid, core, pclonoid
from clonecalc.clonoid import ClonoidSig
from clonecalc.core import FnTable
from clonecalc.poly import CoeffFn, CoeffRingSig, RPoly, induce, tdeg, trim

SUITES = (
    "clonoid-lattice",
    "certificates",
    "oracle-agreement",
    "embedding",
    "rho-injectivity",
    "arity-bound",
    "bounds",
)

EXPECTED_CLONOID_COUNTS = {(2, (3,)): 6, (3, (2,)): 4}


def _report(suite, checks, t0):
    return {
        "suite": suite,
        "pass": all(c["ok"] for c in checks),
        "checks": checks,
        "elapsed": round(time.time() - t0, 3),
    }


def _check(checks, name, ok, detail=""):
    checks.append({"name": name, "ok": bool(ok), "detail": str(detail)})
    return ok


# --- suite: clonoid-lattice -----------------------------------------------------


def suite_clonoid_lattice(seed=0, cap=2):
    t0 = time.time()
    checks = []
    for (p, others), expected in EXPECTED_CLONOID_COUNTS.items():
        sig = ClonoidSig(p, others)
        lattice = clonoid.enumerate_clonoids(sig, cap)
        _check(
            checks,
            f"enumeration ({p};{others}) count",
            len(lattice) == expected,
            f"{len(lattice)} (expected {expected})",
        )
        _check(
            checks,
            f"unary generation ({p};{others})",
            all(clonoid.unary_generates(c) for c in lattice),
            f"all {len(lattice)} elements generated by their unary parts",
        )
    # cross-check against the factorization terms 2*prod(mult+1)
    f23 = bounds.factor_over_zp(bounds.cyclotomic_like(2, 3), 2)
    f32 = bounds.factor_over_zp(bounds.cyclotomic_like(3, 2), 3)
    low23 = 2 * int(np.prod([m + 1 for _, m in f23.factors]))
    low32 = 2 * int(np.prod([m + 1 for _, m in f32.factors]))
    _check(checks, "factorization term (2;3)", low23 == 6, f"2*prod(k+1) = {low23}")
    _check(checks, "factorization term (3;2)", low32 == 4, f"2*prod(d+1) = {low32}")
    return _report("clonoid-lattice", checks, t0)


# --- suite: bounds ----------------------------------------------------------------


def suite_bounds(seed=0):
    t0 = time.time()
    checks = []
    pq = bounds.pq_bounds(2, 3)
    _check(checks, "pq(2,3) lower", pq.lower == 9, pq.lower)
    _check(checks, "pq(2,3) middle upper", pq.upper == 55296, pq.upper)
    _check(checks, "pq(2,3) chain value", pq.chain_value == 2048, pq.chain_value)
    _check(checks, "pq(2,3) chain flag", "chain-inconsistent" in pq.flags, pq.flags)
    rep = bounds.clone_count_bounds(6)
    _check(checks, "Z6 formula upper", rep.upper == 2109375, rep.upper)
    rep6 = bounds.clone_count_bounds(6, enumerated_counts=(6, 4))
    _check(checks, "Z6 enumerated lower", rep6.lower == 9, rep6.lower)
    _check(
        checks,
        "cross-module lower agreement",
        pq.lower == rep6.lower,
        f"{pq.lower} == {rep6.lower}",
    )
    gb = all(
        bounds.gaussian_binomial(n, k, q) == bounds.gaussian_binomial(n, n - k, q)
        for n in range(1, 7)
        for k in range(n + 1)
        for q in (2, 3, 5)
    )
    _check(checks, "Gaussian binomial symmetry", gb, "n <= 6, q in {2,3,5}")
    facs = [
        (bounds.cyclotomic_like(3, 5), 3),
        (bounds.cyclotomic_like(5, 3), 5),
        (bounds.cyclotomic_like(2, 5), 2),
        ((1, 2, 0, 1), 3),
    ]
    _check(
        checks,
        "factorizations re-multiply",
        all(bounds.factor_over_zp(f, p).verify() for f, p in facs),
        f"{len(facs)} inputs",
    )
    return _report("bounds", checks, t0)


# --- suite: certificates -----------------------------------------------------------


def _random_rpoly(rng, sig, max_vars=3, max_terms=4, max_tdeg=None):
    p = sig.p
    nv = int(rng.integers(1, max_vars + 1))
    terms = {}
    for _ in range(int(rng.integers(1, max_terms + 1))):
        mono = trim(tuple(int(e) for e in rng.integers(0, p, size=nv)))
        if max_tdeg is not None and tdeg(mono) > max_tdeg:
            continue
        table = rng.integers(0, p, size=sig.domain_len, dtype=np.uint8)
        if table.any():
            terms[mono] = CoeffFn(sig, table)
    if not terms:
        table = np.zeros(sig.domain_len, dtype=np.uint8)
        table[0] = 1
        terms[(1,)] = CoeffFn(sig, table)
    return RPoly(sig, terms)


def _random_coeff(rng, sig):
    while True:
        table = rng.integers(0, sig.p, size=sig.domain_len, dtype=np.uint8)
        if table.any():
            return CoeffFn(sig, table)


def suite_certificates(seed=42, samples=100):
    t0 = time.time()
    checks = []
    rng = np.random.default_rng(seed)
    sigs = {2: CoeffRingSig(2, (3,), 1), 3: CoeffRingSig(3, (2,), 1)}

    # isolate_full_support
    replay_ok = oracle_ok = total = 0
    for k in range(samples):
        p = 2 if k % 2 == 0 else 3
        sig = sigs[p]
        d = int(rng.integers(1, 4))
        r = _random_coeff(rng, sig)
        g = _random_rpoly(rng, sig, max_vars=max(d, 2), max_tdeg=d)
        g = g.sub(RPoly.monomial(sig, tuple(1 for _ in range(d)), g.coefficient(tuple(1 for _ in range(d)))))
        f = g.add(RPoly.monomial(sig, tuple(1 for _ in range(d)), r))
        res, cert = pclonoid.isolate_full_support(f, d)
        total += 1
        replay_ok += cert.replay([f]) == res
        if not res.is_zero():
            oracle_ok += pclonoid.pclonoid_member_oracle(res, [f], var_cap=6) == pclonoid.YES
        else:
            oracle_ok += 1
    _check(checks, "isolate_full_support replay", replay_ok == total, f"{replay_ok}/{total}")
    _check(checks, "isolate_full_support oracle", oracle_ok == total, f"{oracle_ok}/{total}")

    # extract_max_degree_monomial
    replay_ok = oracle_ok = total = 0
    for k in range(samples):
        p = 2 if k % 2 == 0 else 3
        sig = sigs[p]
        f = _random_rpoly(rng, sig, max_tdeg=3)
        if f.is_zero():
            continue
        d = f.total_degree()
        mono = min(m for m in f.terms if tdeg(m) == d)
        res, cert = pclonoid.extract_max_degree_monomial(f, mono)
        total += 1
        replay_ok += cert.replay([f]) == res
        oracle_ok += pclonoid.pclonoid_member_oracle(res, [f], var_cap=6) == pclonoid.YES
    _check(checks, "extract_max_degree replay", replay_ok == total, f"{replay_ok}/{total}")
    _check(checks, "extract_max_degree oracle", oracle_ok == total, f"{oracle_ok}/{total}")

    # monomials_of
    replay_ok = oracle_ok = sum_ok = total = 0
    for k in range(samples):
        p = 2 if k % 2 == 0 else 3
        sig = sigs[p]
        f = _random_rpoly(rng, sig, max_tdeg=3)
        if f.is_zero():
            continue
        items = pclonoid.monomials_of(f)
        total += 1
        replay_ok += all(cert.replay([f]) == h for h, cert in items)
        acc = RPoly.zero(sig)
        for h, _ in items:
            acc = acc.add(h)
        sum_ok += acc == f
        oracle_ok += all(
            pclonoid.pclonoid_member_oracle(h, [f], var_cap=6) == pclonoid.YES
            for h, _ in items
        )
    _check(checks, "monomials_of replay", replay_ok == total, f"{replay_ok}/{total}")
    _check(checks, "monomials_of completeness", sum_ok == total, f"{sum_ok}/{total}")
    _check(checks, "monomials_of oracle", oracle_ok == total, f"{oracle_ok}/{total}")

    # degree_shift: replay plus induced-table equality of the claim
    replay_ok = table_ok = total = 0
    mod6 = core.modulus_for(6)
    for k in range(samples):
        p = 2 if k % 2 == 0 else 3
        sig = sigs[p]
        d = int(rng.integers(2, p + 1))
        r = _random_coeff(rng, sig)
        while True:
            mono = trim(tuple(int(e) for e in rng.integers(0, p, size=3)))
            if mono and (tdeg(mono) - d) % (p - 1) == 0:
                break
        cert = pclonoid.degree_shift(r, d, mono)
        total += 1
        base = RPoly.monomial(sig, tuple(1 for _ in range(d)), r)
        got = cert.replay([base])
        want = RPoly.monomial(sig, mono, r)
        replay_ok += got == want
        i = 1 if p == 2 else 2
        s = max(len(mono), d, 1)
        table_ok += induce(got, mod6, i, s) == induce(want, mod6, i, s)
    _check(checks, "degree_shift replay", replay_ok == total, f"{replay_ok}/{total}")
    _check(checks, "degree_shift induced tables", table_ok == total, f"{table_ok}/{total}")
    return _report("certificates", checks, t0)


# --- suite: oracle-agreement ----------------------------------------------------------


def _sample_generator_sets(modulus, rng, count):
    """Seeded generator sets: pool singletons, pairs, and random unary tables.

    Random binary generators are excluded: their exact depth-3 balls are
    computationally out of reach (the work guard would trip), while random
    unary generators already reach full clones and six-figure balls.
    """
    pool = clone.unary_coefficient_pool(modulus, max_grade=2)
    pool1 = clone.unary_coefficient_pool(modulus, max_grade=1)
    out = []
    for k in range(count):
        kind = k % 3
        if kind == 0:
            out.append([pool[int(rng.integers(len(pool)))]])
        elif kind == 1:
            # pairs stay unary: two binary generators make the exact
            # depth-3 ball computationally unreachable
            a, b = rng.integers(len(pool1)), rng.integers(len(pool1))
            out.append([pool1[int(a)], pool1[int(b)]])
        else:
            dom = core.domain(modulus.primes, 1)
            vals = np.stack(
                [rng.integers(0, p, size=dom.npoints, dtype=np.uint8) for p in modulus.primes],
                axis=1,
            )
            out.append([FnTable(modulus, 1, vals)])
    return out


def suite_oracle_agreement(seed=42, gen_sets=9, pairs_target=1000, depth=3):
    t0 = time.time()
    checks = []
    rng = np.random.default_rng(seed)
    mod = core.modulus_for(6)
    gensets = _sample_generator_sets(mod, rng, gen_sets)
    total_pairs = 0
    ball_ok = True
    cert_ok = True
    per_set = max(1, pairs_target // max(1, gen_sets))
    detail = []
    for gens in gensets:
        cl = clone.from_generators(gens, mod, 2)
        ball = clone.brute_force_clg_ball(gens, mod, 2, depth)
        sizes = {b: int(stack.shape[0]) for b, stack in ball.items()}
        for b, stack in ball.items():
            member_mask = cl.member_batch(stack, b)
            if not member_mask.all():
                ball_ok = False
                detail.append(f"missing members at arity {b}: {int((~member_mask).sum())}")
        queries = []
        for b, stack in ball.items():
            take = min(per_set // len(ball) + 1, stack.shape[0])
            idx = rng.choice(stack.shape[0], size=take, replace=False)
            queries.extend(FnTable(mod, b, stack[k]) for k in idx)
        for f in queries:
            ok, cert = cl.member(f, certificate=True)
            if not ok or cert.replay(cl.generators) != f:
                cert_ok = False
            total_pairs += 1
        detail.append(f"ball sizes {sizes}")
    _check(checks, "ball members all in clone", ball_ok, "; ".join(detail[:4]))
    _check(checks, "certificates replay exactly", cert_ok, f"{total_pairs} pairs")
    _check(checks, "pair count", total_pairs >= pairs_target, f"{total_pairs} >= {pairs_target}")
    return _report("oracle-agreement", checks, t0)


# --- suite: embedding --------------------------------------------------------------------


def suite_embedding(seed=0, cap=2):
    t0 = time.time()
    checks = []
    mod = core.modulus_for(6)
    sig = ClonoidSig(2, (3,))
    lattice = clonoid.enumerate_clonoids(sig, cap)
    gammas = [clone.gamma(mod, 1, c, cap) for c in lattice]
    n = len(lattice)
    inj = all(
        not gammas[a].equal(gammas[b]) for a in range(n) for b in range(n) if a != b
    )
    _check(checks, "gamma injective", inj, f"{n} elements")
    order = all(
        lattice[a].leq(lattice[b]) == gammas[a].leq(gammas[b])
        for a in range(n)
        for b in range(n)
    )
    _check(checks, "gamma preserves order", order, f"{n * n} ordered pairs")
    meets = joins = True
    for a in range(n):
        for b in range(a + 1, n):
            cm = lattice[a].meet(lattice[b])
            km = next(k for k in range(n) if lattice[k].eq(cm))
            meets &= gammas[a].meet(gammas[b]).equal(gammas[km])
            cj = lattice[a].join(lattice[b])
            kj = next(k for k in range(n) if lattice[k].eq(cj))
            joins &= gammas[a].join(gammas[b]).equal(gammas[kj])
    _check(checks, "gamma preserves meet", meets, f"{n * (n - 1) // 2} pairs")
    _check(checks, "gamma preserves join", joins, f"{n * (n - 1) // 2} pairs")
    return _report("embedding", checks, t0)


# --- suite: rho-injectivity -------------------------------------------------------------


def _clone_census(seed, cap=2, n_random=4):
    mod = core.modulus_for(6)
    return mod, clone.enumerate_clones(mod, cap, subset_size=1, seed=seed, n_random=n_random)


def suite_rho_injectivity(seed=42, cap=2, n_random=4):
    t0 = time.time()
    checks = []
    mod, census = _clone_census(seed, cap, n_random)
    clones = census["clones"]
    n = len(clones)
    _check(checks, "enumerated clone count", n >= 9, f"{n} distinct clones (>= 9)")
    keys = [c.grade_key() for c in clones]
    _check(checks, "rho tuples pairwise distinct", len(set(keys)) == n, f"{n} keys")
    # every pair differs on a concrete membership probe
    witness_ok = True
    unresolved = 0
    for a in range(n):
        for b in range(a + 1, n):
            found = False
            for (i, j) in sorted(clones[a].grades):
                ga, gb = clones[a].grades[(i, j)], clones[b].grades[(i, j)]
                if ga.canonical_key() == gb.canonical_key():
                    continue
                if max(j, 1) > cap:
                    continue
                sig1 = CoeffRingSig(mod.primes[i - 1], mod.others(i), 1)
                for grade, other in ((ga, gb), (gb, ga)):
                    for row in grade.arity_basis(1):
                        if not other.member(row, 1):
                            probe = induce(
                                RPoly.monomial(sig1, tuple(1 for _ in range(j)), CoeffFn(sig1, row)),
                                mod,
                                i,
                                max(j, 1),
                            )
                            ra, _ = clones[a].member(probe)
                            rb, _ = clones[b].member(probe)
                            if ra != rb:
                                found = True
                                break
                    if found:
                        break
                if found:
                    break
            if not found:
                unresolved += 1
    witness_ok = unresolved == 0
    _check(
        checks,
        "membership witnesses for distinctness",
        witness_ok,
        f"{n * (n - 1) // 2} pairs, {unresolved} without an arity<=cap witness",
    )
    return _report("rho-injectivity", checks, t0)


# --- suite: arity-bound --------------------------------------------------------------------


def suite_arity_bound(seed=42, cap=2, n_random=2):
    t0 = time.time()
    checks = []
    mod, census = _clone_census(seed, cap, n_random)
    clones = census["clones"]
    bound = max(mod.primes)
    max_arity = 0
    round_trip = True
    for c in clones:
        gens = clone.extract_generators(c)
        max_arity = max([max_arity] + [g.arity for g in gens])
        if any(g.arity > bound for g in gens):
            round_trip = False
            break
        rebuilt = clone.from_generators(gens, mod, cap, with_provenance=False)
        if not rebuilt.equal(c):
            round_trip = False
    _check(checks, "generator arity bound", max_arity <= bound, f"max arity {max_arity} <= {bound}")
    _check(checks, "generator round-trip", round_trip, f"{len(clones)} clones")
    return _report("arity-bound", checks, t0)


# --- dispatch ---------------------------------------------------------------------------------


def run_suite(name, seed=42):
    if name == "clonoid-lattice":
        return suite_clonoid_lattice(seed)
    if name == "certificates":
        return suite_certificates(seed)
    if name == "oracle-agreement":
        return suite_oracle_agreement(seed)
    if name == "embedding":
        return suite_embedding(seed)
    if name == "rho-injectivity":
        return suite_rho_injectivity(seed)
    if name == "arity-bound":
        return suite_arity_bound(seed)
    if name == "bounds":
        return suite_bounds(seed)
    raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
