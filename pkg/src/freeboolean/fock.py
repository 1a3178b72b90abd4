"""Truncated reduced free product of ``B``-bimodules and its face operators.

Each index ``i`` carries ``X_i = B (+) B^{r_i}``, where ``B^{r_i}`` has
entrywise left and right ``B``-actions.  Tensor words then satisfy
``B^{r_{i1}} (x)_B ... (x)_B B^{r_{ik}} = B^{r_{i1} ... r_{ik}}``, so the whole
space ``X`` is a direct sum of copies of ``B``, one per *slot*.  Slots are
enumerated word by word (shorter words first), and within the word
``(i,) + w`` the slot of leg ``k`` over slot ``s`` of ``w`` is
``k * ns(w) + s``.

Vectors of ``X`` are ``(D*d, d)`` stacks of ``B``-blocks and right
``B``-linear operators are ``(D*d, D*d)`` complex matrices.  Words longer than
``depth`` are dropped: operators are compressed to the truncated space, which
leaves every product of at most ``depth`` lifted operators exact on the vacuum.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .bvalued import MatrixSpace

__all__ = [
    "BimoduleSpec",
    "FockModel",
    "FaceOperator",
    "Family",
    "build_model",
    "lift_lambda",
    "lift_beta",
    "projection_P",
    "random_local",
    "random_family",
    "expectation",
    "center_local",
    "DEFAULT_MAX_DIM",
    "DENSE_THRESHOLD",
]

DEFAULT_MAX_DIM = 20_000
DENSE_THRESHOLD = 64


@dataclass(frozen=True)
class BimoduleSpec:
    index: int
    rank: int = 1

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")


@dataclass(frozen=True)
class FaceOperator:
    """A right-``B``-linear operator on the truncated space.

    ``degree`` bounds how far the operator moves word length (a lifted local
    operator has degree 1, a ``B`` coefficient degree 0); it drives the
    exactness bookkeeping of expectations.  ``owner``/``face`` record the pair
    and face the operator belongs to, or ``None`` for mixed products.
    """

    matrix: object
    degree: int = 1
    owner: int | None = None
    face: str | None = None

    def _combine(self, other: "FaceOperator") -> tuple:
        owner = self.owner if self.owner == other.owner else None
        face = self.face if self.face == other.face and owner is not None else None
        return owner, face

    def __matmul__(self, other: "FaceOperator") -> "FaceOperator":
        owner, face = self._combine(other)
        return FaceOperator(self.matrix @ other.matrix, self.degree + other.degree, owner, face)

    def __add__(self, other: "FaceOperator") -> "FaceOperator":
        owner, face = self._combine(other)
        return FaceOperator(self.matrix + other.matrix, max(self.degree, other.degree), owner, face)

    def __sub__(self, other: "FaceOperator") -> "FaceOperator":
        owner, face = self._combine(other)
        return FaceOperator(self.matrix - other.matrix, max(self.degree, other.degree), owner, face)

    def __neg__(self) -> "FaceOperator":
        return FaceOperator(-self.matrix, self.degree, self.owner, self.face)

    def scale(self, z: complex) -> "FaceOperator":
        return FaceOperator(self.matrix * z, self.degree, self.owner, self.face)

    def adjoint(self) -> "FaceOperator":
        return FaceOperator(self.matrix.conj().T, self.degree, self.owner, self.face)

    @property
    def H(self) -> "FaceOperator":
        return self.adjoint()

    def dense(self) -> np.ndarray:
        m = self.matrix
        return m.toarray() if sp.issparse(m) else np.asarray(m)


class FockModel:
    """Slot bookkeeping for the truncated reduced free product."""

    def __init__(self, d: int, specs: Sequence[BimoduleSpec], depth: int, max_dim: int = DEFAULT_MAX_DIM):
        if d < 1:
            raise ValueError("d must be >= 1")
        if depth < 1:
            raise ValueError("depth must be >= 1")
        if not specs:
            raise ValueError("need at least one bimodule")
        idx = [s.index for s in specs]
        if len(set(idx)) != len(idx):
            raise ValueError(f"duplicate indices in {idx}")
        self.d = int(d)
        self.depth = int(depth)
        self.specs = tuple(specs)
        self.ranks = {s.index: s.rank for s in specs}
        self.indices = tuple(idx)
        words = [()]
        frontier = [()]
        for _ in range(depth):
            frontier = [w + (i,) for w in frontier for i in self.indices if not w or w[-1] != i]
            words.extend(frontier)
        # shorter first, then lexicographic in the given index order
        pos = {i: k for k, i in enumerate(self.indices)}
        words.sort(key=lambda w: (len(w), [pos[i] for i in w]))
        self.words: tuple[tuple[int, ...], ...] = tuple(words)
        self.n_slots_of = {w: int(np.prod([self.ranks[i] for i in w], dtype=np.int64)) for w in words}
        self.offset: dict[tuple, int] = {}
        total = 0
        for w in words:
            self.offset[w] = total
            total += self.n_slots_of[w]
            if total * self.d > max_dim:
                raise ValueError(
                    f"model dimension exceeds the cap {max_dim}; lower depth, ranks or the number of pairs"
                )
        self.n_slots = total
        self.dim = total * self.d

    def summary(self) -> dict:
        return {
            "d": self.d,
            "depth": self.depth,
            "ranks": {str(i): r for i, r in self.ranks.items()},
            "n_words": len(self.words),
            "n_slots": self.n_slots,
            "dimension": self.dim,
            "words": [
                {"word": list(w), "offset": self.offset[w], "slots": self.n_slots_of[w]} for w in self.words
            ],
        }

    def vacuum(self) -> np.ndarray:
        xi = np.zeros((self.dim, self.d), dtype=complex)
        xi[: self.d] = np.eye(self.d)
        return xi

    def expectation(self, *factors) -> np.ndarray:
        return expectation(self, *factors)

    def local_dim(self, i: int) -> int:
        return (1 + self.ranks[i]) * self.d

    def _finish(self, m: sp.spmatrix):
        m = m.tocsr()
        if self.dim <= DENSE_THRESHOLD:
            return m.toarray()
        return m

    def identity(self) -> FaceOperator:
        return FaceOperator(self._finish(sp.identity(self.dim, dtype=complex, format="csr")), 0)

    def coefficient(self, b: np.ndarray) -> FaceOperator:
        """Left multiplication by ``b`` on every slot."""
        b = np.asarray(b, dtype=complex)
        if b.shape != (self.d, self.d):
            raise ValueError(f"coefficient must be {(self.d, self.d)}")
        return FaceOperator(self._finish(sp.kron(sp.identity(self.n_slots), sp.csr_matrix(b))), 0)

    def slot_length(self) -> np.ndarray:
        """Word length of each slot."""
        out = np.empty(self.n_slots, dtype=int)
        for w in self.words:
            out[self.offset[w] : self.offset[w] + self.n_slots_of[w]] = len(w)
        return out

    def _check_index(self, i: int) -> None:
        if i not in self.ranks:
            raise KeyError(f"no bimodule with index {i}")

    def _groups(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        # slot groups acted on by a local operator of index i: full groups
        # (vacuum leg plus r tensor legs) and truncated singletons
        r = self.ranks[i]
        full, short = [], []
        for w in self.words:
            if w and w[0] == i:
                continue
            ns = self.n_slots_of[w]
            base = np.arange(ns) + self.offset[w]
            longer = (i,) + w
            if longer in self.offset:
                legs = [self.offset[longer] + k * ns + np.arange(ns) for k in range(r)]
                full.append(np.stack([base] + legs, axis=1))
            else:
                short.append(base)
        full_arr = np.concatenate(full) if full else np.zeros((0, 1 + r), dtype=int)
        short_arr = np.concatenate(short) if short else np.zeros(0, dtype=int)
        return full_arr, short_arr

    def _block_assemble(self, groups: np.ndarray, a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        d = self.d
        g, m = groups.shape
        if g == 0:
            z = np.zeros(0, dtype=int)
            return z, z, np.zeros(0, dtype=complex)
        blocks = a.reshape(m, d, m, d)
        p, alpha, q, beta = np.nonzero(blocks)
        vals = blocks[p, alpha, q, beta]
        rows = groups[:, p] * d + alpha
        cols = groups[:, q] * d + beta
        return rows.ravel(), cols.ravel(), np.broadcast_to(vals, rows.shape).ravel()


def build_model(
    d: int,
    ranks: Sequence[int] | Mapping[int, int],
    depth: int,
    max_dim: int = DEFAULT_MAX_DIM,
) -> FockModel:
    """Model with one bimodule per rank; indices are ``1..len(ranks)`` unless a mapping is given."""
    if isinstance(ranks, Mapping):
        specs = [BimoduleSpec(i, r) for i, r in ranks.items()]
    else:
        specs = [BimoduleSpec(i, r) for i, r in enumerate(ranks, start=1)]
    return FockModel(d, specs, depth, max_dim)


def _as_local(model: FockModel, i: int, a) -> np.ndarray:
    model._check_index(i)
    a = np.asarray(a, dtype=complex)
    n = model.local_dim(i)
    d = model.d
    if a.shape == (n, n):
        return a
    if a.shape == (n * d, n * d):
        # operator on the complex vector space B^{1+r}, entries row-major per block;
        # right-B-linear exactly when it factors as M (x) I_d
        m = a[::d, ::d]
        if not np.allclose(a, np.kron(m, np.eye(d)), atol=1e-12, rtol=0):
            raise ValueError("local operator is not right-B-linear")
        return m
    raise ValueError(f"local operator for index {i} must be {(n, n)} (or {(n * d, n * d)}), got {a.shape}")


def lift_lambda(model: FockModel, i: int, a) -> FaceOperator:
    """``lambda_i(a)``: ``a`` acting on the ``X_i`` leg of every slot group."""
    a = _as_local(model, i, a)
    d = model.d
    full, short = model._groups(i)
    r1, c1, v1 = model._block_assemble(full, a)
    r2, c2, v2 = model._block_assemble(short[:, None], a[:d, :d])
    m = sp.coo_matrix(
        (np.concatenate([v1, v2]), (np.concatenate([r1, r2]), np.concatenate([c1, c2]))),
        shape=(model.dim, model.dim),
    )
    return FaceOperator(model._finish(m), 1, i, "F")


def projection_P(model: FockModel, i: int) -> FaceOperator:
    """Orthogonal projection onto ``B (+) B^{r_i}`` (the empty word and the word ``(i,)``)."""
    model._check_index(i)
    diag = np.zeros(model.dim, dtype=complex)
    diag[: model.d] = 1
    lo = model.offset[(i,)] * model.d
    diag[lo : lo + model.ranks[i] * model.d] = 1
    return FaceOperator(model._finish(sp.diags(diag)), 0, i, None)


def lift_beta(model: FockModel, i: int, a) -> FaceOperator:
    """``beta_i(a) = P_i lambda_i(a) P_i``."""
    p = projection_P(model, i).matrix
    lam = lift_lambda(model, i, a).matrix
    m = p @ lam @ p
    if sp.issparse(m):
        m = model._finish(m)
    return FaceOperator(m, 1, i, "B")


def _expect_space(model: FockModel, factors: Sequence) -> tuple[MatrixSpace, list]:
    ops, word = {}, []
    for k, f in enumerate(factors):
        if isinstance(f, FaceOperator):
            ops[k] = f
            word.append(k)
        else:
            word.append(np.asarray(f, dtype=complex))
    if not ops:
        ops[-1] = model.identity()
    space = MatrixSpace(
        model.d,
        {k: f.matrix for k, f in ops.items()},
        degrees={k: f.degree for k, f in ops.items()},
        exact_degree=model.depth,
        cache_size=0,
    )
    return space, word


def expectation(model: FockModel, *factors) -> np.ndarray:
    """``E(f_1 ... f_k)`` for face operators and ``B`` coefficients, projected on the vacuum block."""
    space, word = _expect_space(model, factors)
    return space.expect(word)


def random_local(rng: np.random.Generator, n: int, self_adjoint: bool = False, clamp: float = 2.0) -> np.ndarray:
    """Seeded complex Gaussian ``n x n`` matrix with entries clamped to ``|z| <= clamp``, scaled by ``1/sqrt(n)``."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    mag = np.abs(z)
    z = np.where(mag > clamp, z * clamp / np.maximum(mag, 1e-300), z)
    if self_adjoint:
        z = (z + z.conj().T) / 2
    return z / np.sqrt(n)


def center_local(model: FockModel, a: np.ndarray) -> np.ndarray:
    """``a - I (x) a_00`` so that both lifts of the result have zero expectation."""
    d = model.d
    m = a.shape[0] // d
    return a - np.kron(np.eye(m), a[:d, :d])


@dataclass
class Family:
    """Labelled operators ready for the cumulant tests.

    Handles are ``"c{i}.{k}"`` for the free face (``lambda_i``) and
    ``"d{i}.{k}"`` for the Boolean face (``beta_i``); ``labels`` maps each
    handle to ``(i, face)``.
    """

    model: FockModel
    operators: dict[str, FaceOperator]
    labels: dict[str, tuple[int, str]]
    locals: dict[str, np.ndarray] = field(default_factory=dict)

    def space(self, cache_size: int = 200_000) -> MatrixSpace:
        return MatrixSpace(
            self.model.d,
            {h: op.matrix for h, op in self.operators.items()},
            degrees={h: op.degree for h, op in self.operators.items()},
            exact_degree=self.model.depth,
            cache_size=cache_size,
        )

    def handles(self, owner: int | None = None, face: str | None = None) -> list[str]:
        return [
            h for h, (i, f) in self.labels.items()
            if (owner is None or i == owner) and (face is None or f == face)
        ]


def random_family(
    model: FockModel,
    seed: int = 0,
    ops_per_pair: int = 1,
    self_adjoint: bool = False,
    centered: bool = False,
    shared: bool = False,
) -> Family:
    """Random local operators per index, lifted by ``lambda`` and ``beta``.

    With ``shared`` every index other than the first reuses the operators of
    the first index while keeping its own labels, which breaks independence
    on purpose (negative control).
    """
    rng = np.random.default_rng(seed)
    ops: dict[str, FaceOperator] = {}
    labels: dict[str, tuple[int, str]] = {}
    locs: dict[str, np.ndarray] = {}
    first = model.indices[0]
    for i in model.indices:
        n = model.local_dim(i)
        for k in range(ops_per_pair):
            for face, prefix in (("F", "c"), ("B", "d")):
                a = random_local(rng, n, self_adjoint)
                if centered:
                    a = center_local(model, a)
                h = f"{prefix}{i}.{k}"
                labels[h] = (i, face)
                if shared and i != first and model.ranks[i] == model.ranks[first]:
                    src = f"{prefix}{first}.{k}"
                    ops[h] = FaceOperator(ops[src].matrix, 1, i, face)
                    locs[h] = locs[src]
                    continue
                locs[h] = a
                ops[h] = lift_lambda(model, i, a) if face == "F" else lift_beta(model, i, a)
    return Family(model, ops, labels, locs)
