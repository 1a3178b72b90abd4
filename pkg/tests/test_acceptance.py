"""The eight acceptance criteria, each at its stated tolerance.

Each test records one PASS/FAIL line, printed together at the end of the
pytest run.  Criteria 4 to 7 read the report of a real
``freeboolean verify --suite all --seed 42`` run; criterion 8 compares it
byte for byte with a second, independent run.
"""
import itertools
import json
import subprocess
import sys
import time
from math import prod

import numpy as np
import pytest

from freeboolean.bvalued import max_abs, phi_n, random_matrix_space
from freeboolean.cumulants import cumulant, cumulant_multiplicative, moments_from_cumulants
from freeboolean.inc import enumerate_inc
from freeboolean.moebius import moebius_oracle, moebius_product

from acceptance_log import record
from oracles import all_set_partitions, canon, catalan, crossing, segment_sizes

VERIFY_ARGS = ["verify", "--suite", "all", "--seed", "42"]


def chis(max_n):
    for n in range(1, max_n + 1):
        for t in itertools.product("FB", repeat=n):
            yield "".join(t)


@pytest.fixture(scope="module")
def verify_runs(tmp_path_factory):
    """Two concurrent subprocess runs of the full verification."""
    out = tmp_path_factory.mktemp("verify")
    paths = [out / "run1.json", out / "run2.json"]
    start = time.perf_counter()
    procs = [
        subprocess.Popen([sys.executable, "-m", "freeboolean", *VERIFY_ARGS, "--out", str(p)],
                         stdout=subprocess.PIPE, stderr=subprocess.PIPE)
        for p in paths
    ]
    codes = [p.wait() for p in procs]
    elapsed = time.perf_counter() - start
    blobs = [p.read_bytes() for p in paths]
    return codes, blobs, json.loads(blobs[0]), elapsed


def checks_of(report, suite):
    (entry,) = [s for s in report["suites"] if s["suite"] == suite]
    return {c["name"]: c for c in entry["checks"]}


def test_criterion_1_inc_lattice():
    start = time.perf_counter()
    failures = []
    total = 0
    for n in range(1, 8):
        nc = [p for p in all_set_partitions(n) if not crossing(p)]
        for chi in map("".join, itertools.product("FB", repeat=n)):
            brute = sorted(
                canon(p) for p in nc
                if all(chi[w - 1] != "B" or w in b for b in p for w in range(min(b) + 1, max(b)))
            )
            ours = [p.blocks for p in enumerate_inc(chi)]
            expected = prod(catalan(s) for s in segment_sizes(chi))
            total += 1
            if ours != brute or len(ours) != expected:
                failures.append(chi)
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 60
    record(1, "INC(chi) equals brute-force filter and segment Catalan product", ok,
           f"{total} type maps, n <= 7, {len(failures)} mismatches, {elapsed:.1f}s")
    assert not failures, failures[:5]
    assert elapsed < 60


def test_criterion_2_moebius_equivalence():
    start = time.perf_counter()
    pairs = mismatches = 0
    for chi in chis(6):
        for (s, p), value in moebius_oracle(chi).table.items():
            pairs += 1
            got = moebius_product(s, p, chi)
            if not (isinstance(got, int) and got == value):
                mismatches += 1
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 60
    record(2, "product-formula Moebius equals inversion oracle (exact integers)", ok,
           f"{pairs} comparable pairs over all chi with n <= 6, {mismatches} mismatches, {elapsed:.1f}s")
    assert mismatches == 0
    assert elapsed < 60


def test_criterion_3_moment_cumulant_inversion():
    tol = 1e-10
    worst_moment = worst_dual = 0.0
    count = 0
    for d in (1, 2):
        space = random_matrix_space(d, 4, ("x", "y", "z"), seed=100 + d)
        rng = np.random.default_rng(d)
        for chi in chis(6):
            word = [str(h) for h in rng.choice(["x", "y", "z"], len(chi))]
            worst_moment = max(worst_moment, max_abs(moments_from_cumulants(space, word, chi) - phi_n(space, word)))
            worst_dual = max(worst_dual, max_abs(cumulant(space, word, chi) - cumulant_multiplicative(space, word, chi)))
            count += 1
    ok = worst_moment <= tol and worst_dual <= tol
    record(3, "moment reconstruction and the two cumulant implementations agree", ok,
           f"{count} words, d in {{1,2}}, n <= 6, reconstruction {worst_moment:.2e}, dual {worst_dual:.2e}, tol {tol:g}")
    assert worst_moment <= tol and worst_dual <= tol


def test_criterion_4_independence_cross_check(verify_runs):
    codes, _, report, elapsed = verify_runs
    cfg = report["config"]
    ind, star = checks_of(report, "independence"), checks_of(report, "star")
    vanish = ind["combinatorial_independence"]
    formula = star["star_formula"]
    controls = [ind["negative_control_independence"], star["negative_control_star"]]
    ok = (
        cfg["d"] == 2 and cfg["depth"] == 6 and cfg["word_length"] == 6
        and vanish["max_residual"] <= 1e-9 and formula["max_residual"] <= 1e-9
        and vanish["n_checked"] > 0 and formula["n_checked"] > 0
        and all(c["max_residual"] > 1e-3 for c in controls)
        and elapsed < 300
    )
    record(4, "Fock families: mixed cumulants vanish and the moment formula holds", ok,
           f"{vanish['n_checked']} mixed words up to length 6, vanishing {vanish['max_residual']:.2e}, "
           f"formula {formula['max_residual']:.2e}, controls "
           f"{min(c['max_residual'] for c in controls):.2e}, wall {elapsed:.0f}s")
    assert ok


def test_criterion_5_moment_conditions(verify_runs):
    _, _, report, _ = verify_runs
    checks = checks_of(report, "section6")
    wanted = ["boolean_factorization", "boolean_pair_splitting"] + [
        f"mixed_vanishing_{k}" for k in ("interior", "left", "right", "whole", "operator_zero")
    ] + [k for k in checks if k.startswith("canonical_expectation_")]
    worst = max(checks[k]["max_residual"] for k in wanted)
    fewest = min(checks[k]["n_checked"] for k in wanted)
    ok = worst <= 1e-9 and fewest >= 100
    record(5, "Boolean factorisation and mixed vanishing conditions", ok,
           f"{len(wanted)} checks, >= {fewest} instances each, worst {worst:.2e}, tol 1e-09")
    assert ok


def test_criterion_6_clt(verify_runs):
    _, _, report, _ = verify_runs
    checks = checks_of(report, "clt")
    assert tuple(report["config"]["Ns"]) == (1, 4, 16, 64)
    order2 = checks["clt_order2_exact"]["max_residual"]
    scaling = max(checks["clt_order3_scaling"]["max_residual"], checks["clt_order4_scaling"]["max_residual"])
    ok = order2 <= 1e-10 and scaling <= 1e-9
    record(6, "CLT: exact covariance and N^(1-n/2) scaling", ok,
           f"N in 1,4,16,64, order 2 {order2:.2e} (tol 1e-10), orders 3-4 {scaling:.2e} (tol 1e-09)")
    assert ok


def test_criterion_7_positivity(verify_runs):
    _, _, report, _ = verify_runs
    checks = checks_of(report, "positivity")
    eig = checks["positivity_min_eigenvalue"]
    lowest = min(eig["details"]["lowest_eigenvalue"].values())
    identities = max(checks[k]["max_residual"] for k in ("boolean_run_collapse_left", "boolean_run_collapse_right", "pairing"))
    trials = report["config"]["trials"]
    ok = report["config"]["d"] == 2 and trials >= 200 and lowest >= -1e-8 and identities <= 1e-9
    record(7, "E[ZZ*] positive and Psi/pairing identities hold", ok,
           f"{trials} trials, lowest eigenvalue {lowest:.3e} (>= -1e-08), identities {identities:.2e} (tol 1e-09)")
    assert ok


def test_criterion_8_determinism(verify_runs):
    codes, blobs, _, _ = verify_runs
    ok = codes == [0, 0] and blobs[0] == blobs[1]
    record(8, "two runs of verify --suite all --seed 42 are byte-identical", ok,
           f"exit codes {codes}, {len(blobs[0])} bytes, identical={blobs[0] == blobs[1]}")
    assert ok
