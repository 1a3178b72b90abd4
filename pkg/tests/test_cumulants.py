import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freeboolean.bvalued import ClassicalSpace, MatrixSpace, max_abs, phi_partition, random_matrix_space
from freeboolean.cumulants import (
    ResidualReport,
    cumulant,
    cumulant_multiplicative,
    cumulant_table,
    moments_from_cumulants,
    phi_table,
    star_check,
    star_formula,
    test_combinatorial_independence as combinatorial_independence,
    vanishing_extension_check,
    word_labels,
)
from freeboolean.fock import build_model, random_family
from freeboolean.inc import enumerate_inc
from freeboolean.partitions import Partition

from oracles import refines

HANDLES = ("x", "y", "z")
chi_strategy = st.integers(1, 6).flatmap(lambda n: st.text("FB", min_size=n, max_size=n))


@pytest.fixture(scope="module")
def space():
    return random_matrix_space(2, 3, HANDLES, seed=21)


@pytest.fixture(scope="module")
def centered_scalar():
    values = np.array([-2.0, 0.5, 1.5])
    probs = np.array([0.2, 0.5, 0.3])
    values = values - probs @ values
    return ClassicalSpace({"u": values}, probs), values, probs


def test_scalar_low_orders(centered_scalar):
    space, values, probs = centered_scalar
    m2, m3, m4 = (probs @ values ** k for k in (2, 3, 4))
    assert np.isclose(cumulant(space, ["u"], "F")[0, 0], 0, atol=1e-14)
    assert np.isclose(cumulant(space, ["u"] * 2, "FF")[0, 0], m2)
    assert np.isclose(cumulant(space, ["u"] * 3, "FBF")[0, 0], m3)
    # all-F: free cumulant; interior B: Boolean cumulant
    assert np.isclose(cumulant(space, ["u"] * 4, "FFFF")[0, 0], m4 - 2 * m2 ** 2)
    assert np.isclose(cumulant(space, ["u"] * 4, "FBBF")[0, 0], m4 - m2 ** 2)
    assert np.isclose(cumulant(space, ["u"] * 4, "BBBB")[0, 0], m4 - m2 ** 2)


def test_two_cumulant_implementations_every_chi(space):
    rng = np.random.default_rng(0)
    for n in range(1, 6):
        for chi in map("".join, itertools.product("FB", repeat=n)):
            word = [str(h) for h in rng.choice(HANDLES, n)]
            a = cumulant(space, word, chi)
            assert max_abs(a - cumulant_multiplicative(space, word, chi)) < 1e-12
            assert max_abs(a - cumulant_multiplicative(space, word, chi, order="last")) < 1e-12


@settings(max_examples=50, deadline=None)
@given(chi_strategy, st.data())
def test_partitioned_cumulants_agree(space, chi, data):
    word = [data.draw(st.sampled_from(HANDLES)) for _ in chi]
    elems = enumerate_inc(chi)
    pi = elems[data.draw(st.integers(0, len(elems) - 1))]
    a = cumulant(space, word, chi, pi)
    assert max_abs(a - cumulant_multiplicative(space, word, chi, pi)) < 1e-12
    assert max_abs(a - cumulant_table(space, word, chi)[elems.index(pi)]) < 1e-12


@settings(max_examples=40, deadline=None)
@given(chi_strategy, st.data())
def test_moments_are_sums_of_cumulants_below(space, chi, data):
    word = [data.draw(st.sampled_from(HANDLES)) for _ in chi]
    elems = enumerate_inc(chi)
    kappas = cumulant_table(space, word, chi)
    pi = elems[data.draw(st.integers(0, len(elems) - 1))]
    below = [k for k, s in enumerate(elems) if refines(s.blocks, pi.blocks)]
    assert max_abs(kappas[below].sum(axis=0) - phi_partition(space, word, pi)) < 1e-12
    assert max_abs(moments_from_cumulants(space, word, chi) - space.expect(word)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.text("FB", min_size=n, max_size=n)), st.data())
def test_endpoint_labels_do_not_change_cumulants(space, chi, data):
    word = [data.draw(st.sampled_from(HANDLES)) for _ in chi]
    ref = cumulant(space, word, chi)
    for first, last in itertools.product("FB", repeat=2):
        flipped = first + chi[1:-1] + last if len(chi) > 1 else first
        assert max_abs(cumulant(space, word, flipped) - ref) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5).flatmap(lambda n: st.text("FB", min_size=n, max_size=n)), st.data())
def test_b_bilinearity(space, chi, data):
    rng = np.random.default_rng(data.draw(st.integers(0, 10_000)))
    word = [str(h) for h in rng.choice(HANDLES, len(chi))]
    b1, b2, b3 = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(3))
    ref = cumulant(space, word, chi)
    outer = [[b1, word[0]]] + [[h] for h in word[1:-1]] + [[word[-1], b2]]
    assert max_abs(cumulant(space, outer, chi) - b1 @ ref @ b2) < 1e-10
    k = data.draw(st.integers(0, len(chi) - 2))
    left = [[h] for h in word]
    right = [[h] for h in word]
    left[k] = left[k] + [b3]
    right[k + 1] = [b3] + right[k + 1]
    assert max_abs(cumulant(space, left, chi) - cumulant(space, right, chi)) < 1e-10


def test_additivity_in_each_argument():
    base = random_matrix_space(2, 3, HANDLES, seed=22)
    ops = dict(base.operators)
    ops["s"] = ops["x"] + 2.5 * ops["y"]
    space = MatrixSpace(2, ops)
    for chi in ("FBF", "BFFB", "FFBF"):
        n = len(chi)
        for k in range(n):
            word = ["z"] * n
            sw, xw, yw = list(word), list(word), list(word)
            sw[k], xw[k], yw[k] = "s", "x", "y"
            total = cumulant(space, xw, chi) + 2.5 * cumulant(space, yw, chi)
            assert max_abs(cumulant(space, sw, chi) - total) < 1e-12


def test_star_formula_with_constant_labels_is_the_moment(space):
    for chi in ("FBF", "FFBB", "BFBFB"):
        word = [HANDLES[k % 3] for k in range(len(chi))]
        value = star_formula(space, word, chi, [0] * len(chi))
        assert max_abs(value - space.expect(word)) < 1e-12


def test_phi_table_shape(space):
    table = phi_table(space, ["x", "y", "z"], "FBF")
    assert table.shape == (len(enumerate_inc("FBF")), 2, 2)


def test_invalid_arguments(space):
    with pytest.raises(ValueError):
        cumulant(space, ["x", "y"], "FBF")
    with pytest.raises(ValueError):
        cumulant(space, ["x", "y", "z"], "FBF", Partition.from_string("1,3/2"))
    with pytest.raises(ValueError):
        cumulant_multiplicative(space, ["x"], "F", order="middle")
    with pytest.raises(ValueError):
        star_formula(space, ["x", "y"], "FF", [0])
    with pytest.raises(ValueError):
        word_labels([("a", "b")], {"a": (1, "F"), "b": (2, "F")})


def test_word_labels():
    labels = {"a": (1, "F"), "b": (2, "B")}
    assert word_labels(["a", "b", ("a", np.eye(2), "a")], labels) == ((1, 2, 1), "FBF")


def test_residual_report():
    r = ResidualReport("demo", tolerance=1e-3)
    r.record(5e-4, "first")
    r.record(1e-5, "second")
    assert r.worst == "first" and r.n_checked == 2 and r.passed
    r.record(2e-3, "third")
    assert not r.passed
    assert r.to_dict()["max_residual"] == 2e-3
    with pytest.raises(ValueError):
        ResidualReport("no tolerance").passed


@pytest.fixture(scope="module")
def fock_family():
    model = build_model(2, [1, 2], 4)
    return random_family(model, seed=3), random_family(build_model(2, [1, 1], 4), seed=3, shared=True)


def test_vanishing_on_small_fock_family(fock_family):
    good, bad = fock_family
    assert combinatorial_independence(good.space(), good.labels, 4, tolerance=1e-10).passed
    assert combinatorial_independence(good.space(), good.labels, 3, coefficient_seed=1, tolerance=1e-10).passed
    assert vanishing_extension_check(good.space(), good.labels, 4, tolerance=1e-10).passed
    assert star_check(good.space(), good.labels, 4, tolerance=1e-10).passed
    assert combinatorial_independence(bad.space(), bad.labels, 4).max_residual > 1e-3
    assert star_check(bad.space(), bad.labels, 4).max_residual > 1e-3


def test_vanishing_extension_single_partition(fock_family):
    good, _ = fock_family
    pi = Partition.from_string("1,2/3")
    rep = vanishing_extension_check(good.space(), good.labels, 3, pi=pi, tolerance=1e-10)
    assert rep.n_checked > 0 and rep.passed
