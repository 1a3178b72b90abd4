import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from freeboolean.bvalued import TruncationError, max_abs
from freeboolean.fock import (
    DENSE_THRESHOLD,
    BimoduleSpec,
    FaceOperator,
    FockModel,
    build_model,
    center_local,
    expectation,
    lift_beta,
    lift_lambda,
    projection_P,
    random_family,
    random_local,
)

from oracles import numpy_word_expectation


def dense(op):
    return op.dense()


def test_small_model_structure():
    model = build_model(1, [1, 1], 2)
    assert model.words == ((), (1,), (2,), (1, 2), (2, 1))
    assert model.dim == 5
    summary = model.summary()
    assert summary["dimension"] == 5 and summary["n_words"] == 5


def test_slot_counts_multiply_ranks():
    model = build_model(2, [1, 2], 3)
    assert model.n_slots_of[(2, 1, 2)] == 4
    assert model.n_slots == sum(model.n_slots_of.values())
    assert model.dim == 2 * model.n_slots
    assert list(model.slot_length()[:5]) == [0, 1, 1, 1, 2]


def test_model_validation():
    with pytest.raises(ValueError):
        build_model(2, [1, 2], 0)
    with pytest.raises(ValueError):
        build_model(0, [1], 2)
    with pytest.raises(ValueError):
        FockModel(1, [BimoduleSpec(1, 1), BimoduleSpec(1, 2)], 2)
    with pytest.raises(ValueError):
        build_model(2, [2, 2, 2], 8, max_dim=1000)
    with pytest.raises(ValueError):
        BimoduleSpec(1, 0)


def test_hand_built_lambda():
    model = build_model(1, [1, 1], 2)
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    expected = np.zeros((5, 5))
    for group in ([0, 1], [2, 3]):  # (vacuum, e1) and (e2, e1 e2)
        expected[np.ix_(group, group)] = a
    expected[4, 4] = a[0, 0]  # e2 e1 would need a third leg
    assert np.allclose(dense(lift_lambda(model, 1, a)), expected)
    beta = np.zeros((5, 5))
    beta[:2, :2] = a
    assert np.allclose(dense(lift_beta(model, 1, a)), beta)


@pytest.fixture(scope="module")
def model():
    return build_model(2, [1, 2], 4)


def local(model, i, seed, **kw):
    return random_local(np.random.default_rng(seed), model.local_dim(i), **kw)


def test_vacuum_expectations(model):
    for i in (1, 2):
        a = local(model, i, i)
        assert max_abs(expectation(model, lift_lambda(model, i, a)) - a[:2, :2]) < 1e-14
        assert max_abs(expectation(model, lift_beta(model, i, a)) - a[:2, :2]) < 1e-14
    assert max_abs(model.expectation() - np.eye(2)) == 0


def test_projection_commutes_with_lambda(model):
    for i in (1, 2):
        p = dense(projection_P(model, i))
        lam = dense(lift_lambda(model, i, local(model, i, 10 + i)))
        assert max_abs(p @ lam - lam @ p) < 1e-14
        assert max_abs(p @ p - p) == 0


def test_beta_is_multiplicative(model):
    a, b = local(model, 2, 20), local(model, 2, 21)
    lhs = dense(lift_beta(model, 2, a)) @ dense(lift_beta(model, 2, b))
    assert max_abs(lhs - dense(lift_beta(model, 2, a @ b))) < 1e-13


def test_lambda_multiplicative_below_depth(model):
    a, b = local(model, 1, 22), local(model, 1, 23)
    lhs = dense(lift_lambda(model, 1, a)) @ dense(lift_lambda(model, 1, b))
    rhs = dense(lift_lambda(model, 1, a @ b))
    short = np.repeat(model.slot_length() <= model.depth - 1, model.d)
    assert max_abs((lhs - rhs)[:, short]) < 1e-13


def test_lifts_respect_adjoints(model):
    a = local(model, 2, 24)
    for lift in (lift_lambda, lift_beta):
        assert max_abs(dense(lift(model, 2, a)).conj().T - dense(lift(model, 2, a.conj().T))) < 1e-14


def test_right_b_linearity_guard(model):
    n, d = model.local_dim(1), model.d
    m = local(model, 1, 25)
    lam = lift_lambda(model, 1, np.kron(m, np.eye(d)))
    assert max_abs(dense(lam) - dense(lift_lambda(model, 1, m))) == 0
    bad = np.random.default_rng(0).standard_normal((n * d, n * d))
    with pytest.raises(ValueError, match="right-B-linear"):
        lift_lambda(model, 1, bad)
    with pytest.raises(ValueError):
        lift_lambda(model, 1, np.eye(3))
    with pytest.raises(KeyError):
        lift_lambda(model, 7, m)


def test_centering(model):
    c = center_local(model, local(model, 2, 26))
    assert max_abs(expectation(model, lift_lambda(model, 2, c))) < 1e-15
    assert max_abs(expectation(model, lift_beta(model, 2, c))) < 1e-15


def test_coefficients_and_bimodule_property(model):
    rng = np.random.default_rng(27)
    b1, b2 = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
    x = lift_lambda(model, 1, local(model, 1, 28))
    y = lift_beta(model, 2, local(model, 2, 29))
    base = expectation(model, x, y)
    assert max_abs(expectation(model, model.coefficient(b1), x, y, b2) - b1 @ base @ b2) < 1e-13
    assert max_abs(expectation(model, x, b1, y) - expectation(model, x, model.coefficient(b1), y)) < 1e-13


def test_amalgamated_freeness_and_boolean_factorisation(model):
    a, c = local(model, 1, 30), local(model, 1, 31)
    b = local(model, 2, 32)
    la, lc, lb = (lift_lambda(model, i, m) for i, m in ((1, a), (1, c), (2, b)))
    eb = expectation(model, lb)
    assert max_abs(expectation(model, la, lb, lc) - expectation(model, la, eb, lc)) < 1e-13
    ba, bc, bb = (lift_beta(model, i, m) for i, m in ((1, a), (1, c), (2, b)))
    product = expectation(model, ba) @ expectation(model, bb) @ expectation(model, bc)
    assert max_abs(expectation(model, ba, bb, bc) - product) < 1e-13


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 8), st.data())
def test_truncated_values_match_deeper_model(k, data):
    shallow = build_model(2, [1, 2], 4)
    deep = build_model(2, [1, 2], 9)
    seeds = data.draw(st.lists(st.integers(0, 10_000), min_size=k, max_size=k))
    owners = data.draw(st.lists(st.sampled_from([1, 2]), min_size=k, max_size=k))
    faces = data.draw(st.lists(st.sampled_from(["F", "B"]), min_size=k, max_size=k))
    vals = []
    for m in (shallow, deep):
        factors = []
        for s, i, f in zip(seeds, owners, faces):
            a = local(m, i, s)
            factors.append((lift_lambda if f == "F" else lift_beta)(m, i, a))
        vals.append(expectation(m, *factors))
    assert max_abs(vals[0] - vals[1]) < 1e-12


def test_truncation_error_beyond_twice_depth():
    m = build_model(1, [1, 1], 2)
    x = lift_lambda(m, 1, local(m, 1, 33))
    expectation(m, x, x, x, x)
    with pytest.raises(TruncationError):
        expectation(m, x, x, x, x, x)


def test_sparse_storage_matches_dense_oracle():
    m = build_model(2, [1, 2], 6)
    assert m.dim > DENSE_THRESHOLD
    x = lift_lambda(m, 1, local(m, 1, 34))
    y = lift_beta(m, 2, local(m, 2, 35))
    assert sp.issparse(x.matrix)
    ops = {"x": x.matrix, "y": y.matrix}
    assert max_abs(expectation(m, x, y, x) - numpy_word_expectation(ops, 2, ["x", "y", "x"])) < 1e-13


def test_face_operator_algebra(model):
    x = lift_lambda(model, 1, local(model, 1, 36))
    y = lift_lambda(model, 1, local(model, 1, 37))
    z = lift_beta(model, 2, local(model, 2, 38))
    assert (x @ y).degree == 2 and (x @ y).owner == 1 and (x @ y).face == "F"
    assert (x + z).owner is None and (x + z).degree == 1
    assert (x @ z).owner is None and (x @ z).face is None
    assert max_abs(dense(x - x)) == 0
    assert max_abs(dense(-x) + dense(x)) == 0
    assert max_abs(dense(x.scale(2j)) - 2j * dense(x)) == 0
    assert max_abs(dense(x.H) - dense(x).conj().T) == 0


def test_random_family_labels_and_sharing():
    m = build_model(2, [1, 1], 3)
    fam = random_family(m, seed=1, ops_per_pair=2)
    assert set(fam.labels) == {"c1.0", "c1.1", "d1.0", "d1.1", "c2.0", "c2.1", "d2.0", "d2.1"}
    assert fam.labels["d2.1"] == (2, "B")
    assert sorted(fam.handles(owner=1, face="F")) == ["c1.0", "c1.1"]
    shared = random_family(m, seed=1, shared=True)
    assert max_abs(dense(shared.operators["c2.0"]) - dense(shared.operators["c1.0"])) == 0
    assert shared.labels["c2.0"] == (2, "F")
    sa = random_family(m, seed=2, self_adjoint=True, centered=True)
    for h, op in sa.operators.items():
        assert max_abs(dense(op) - dense(op).conj().T) < 1e-14
        assert max_abs(expectation(m, op)) < 1e-14


def test_random_local_is_seeded_and_clamped():
    a = random_local(np.random.default_rng(5), 6)
    b = random_local(np.random.default_rng(5), 6)
    assert np.array_equal(a, b)
    assert np.abs(a).max() <= 2 / np.sqrt(6) + 1e-12
    h = random_local(np.random.default_rng(5), 6, self_adjoint=True)
    assert np.allclose(h, h.conj().T)
    assert isinstance(FaceOperator(np.eye(2)).dense(), np.ndarray)
