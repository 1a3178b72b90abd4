"""B-valued probability spaces with ``B = M_d(C)`` and partitioned moments.

Words are sequences of *letters*.  A letter is one argument of a multilinear
functional and is itself a product of factors: a factor is either a handle
naming a random variable of the space or a ``(d, d)`` complex array standing
for a coefficient of ``B``.  A bare handle or bare array is shorthand for a
one-factor letter; a ``list``/``tuple`` spells out the factors.  Handles must
therefore be hashable non-tuple values (strings or ints).
"""
from __future__ import annotations

import itertools
import json
from collections import OrderedDict
from functools import lru_cache
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .partitions import Partition, is_interval_block, is_noncrossing, restrict

__all__ = [
    "BProbabilitySpace",
    "MatrixSpace",
    "ClassicalSpace",
    "MomentTable",
    "TruncationError",
    "MomentLookupError",
    "as_letter",
    "flatten",
    "phi_n",
    "phi_partition",
    "random_matrix_space",
    "bmatrix_to_json",
    "bmatrix_from_json",
    "max_abs",
    "DEFAULT_ATOL",
]

DEFAULT_ATOL = 1e-9


class TruncationError(ValueError):
    """A product is too long to be evaluated exactly on a truncated model."""


class MomentLookupError(KeyError):
    """A moment table cannot supply a requested word."""


def max_abs(x) -> float:
    return float(np.max(np.abs(x))) if np.size(x) else 0.0


def _is_coef(x) -> bool:
    return isinstance(x, np.ndarray)


def as_letter(x) -> tuple:
    if isinstance(x, (list, tuple)):
        return tuple(x)
    return (x,)


def flatten(letters: Iterable[Sequence]) -> tuple:
    out: list = []
    for letter in letters:
        out.extend(letter)
    return tuple(out)


class BProbabilitySpace:
    """Base class: a unital ``B``-valued expectation on words of factors."""

    d: int

    def expect(self, factors: Sequence) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.d, dtype=complex)

    def _split_coefs(self, factors: Sequence):
        """Multiply out adjacent coefficients; return ``(left, [(handle, coef_after)], )``."""
        left = None
        items: list[list] = []
        for f in factors:
            if _is_coef(f):
                f = np.asarray(f, dtype=complex)
                if f.shape != (self.d, self.d):
                    raise ValueError(f"coefficient of shape {f.shape}, expected {(self.d, self.d)}")
                if items:
                    items[-1][1] = f if items[-1][1] is None else items[-1][1] @ f
                else:
                    left = f if left is None else left @ f
            else:
                items.append([f, None])
        return left, items


class MatrixSpace(BProbabilitySpace):
    """Operators on ``X = B^D`` stored as ``(D*d, D*d)`` complex matrices.

    A vector of ``X`` is a ``(D*d, d)`` array of stacked ``B``-blocks; operators
    act by matrix multiplication from the left, which makes them right
    ``B``-linear, and ``B`` acts from the left blockwise.  The expectation is
    the first block of ``T`` applied to the vacuum ``1_B (+) 0``.

    Parameters
    ----------
    d : int
        Size of the coefficient algebra ``M_d``.
    operators : mapping
        Handle to square matrix (dense or ``scipy.sparse``).
    degrees : mapping, optional
        Word-length degree of each operator.  Used only with ``exact_degree``.
    exact_degree : int, optional
        Products of total degree up to this are evaluated directly.  Longer
        products, up to twice this, are evaluated by pairing
        ``(F_j ... F_1)^* xi`` with ``F_{j+1} ... F_k xi``; beyond that a
        :class:`TruncationError` is raised.  ``None`` means no truncation.
    cache_size : int
        Number of memoised expectations (0 disables the memo).
    """

    def __init__(
        self,
        d: int,
        operators: Mapping[Hashable, object],
        degrees: Mapping[Hashable, int] | None = None,
        exact_degree: int | None = None,
        cache_size: int = 100_000,
    ):
        self.d = int(d)
        self.operators = dict(operators)
        if not self.operators:
            raise ValueError("a matrix space needs at least one operator")
        shapes = {op.shape for op in self.operators.values()}
        if len(shapes) != 1:
            raise ValueError(f"operators have mixed shapes {shapes}")
        (rows, cols), = shapes
        if rows != cols or rows % self.d:
            raise ValueError(f"operator shape {(rows, cols)} is not (D*d, D*d) for d={self.d}")
        self.dim = rows
        self.n_slots = rows // self.d
        self.degrees = {h: 1 for h in self.operators}
        if degrees:
            self.degrees.update(degrees)
        self.exact_degree = exact_degree
        self._adjoints: dict[Hashable, object] = {}
        self._cache: OrderedDict = OrderedDict()
        self._cache_size = cache_size

    def vacuum(self) -> np.ndarray:
        xi = np.zeros((self.dim, self.d), dtype=complex)
        xi[: self.d] = np.eye(self.d)
        return xi

    def left_multiply(self, b: np.ndarray, v: np.ndarray) -> np.ndarray:
        d = self.d
        return np.matmul(b, v.reshape(-1, d, d)).reshape(-1, d)

    def _op(self, h):
        try:
            return self.operators[h]
        except KeyError:
            raise KeyError(f"unknown handle {h!r}") from None

    def _adj(self, h):
        if h not in self._adjoints:
            self._adjoints[h] = self._op(h).conj().T
        return self._adjoints[h]

    def _key(self, factors: Sequence) -> tuple:
        return tuple(("b", f.tobytes()) if _is_coef(f) else ("h", f) for f in factors)

    def expect(self, factors: Sequence) -> np.ndarray:
        factors = tuple(factors)
        if self._cache_size:
            key = self._key(factors)
            hit = self._cache.get(key)
            if hit is not None:
                return hit
        value = self._expect(factors)
        if self._cache_size:
            self._cache[key] = value
            if len(self._cache) > self._cache_size:
                self._cache.popitem(last=False)
        return value

    def _expect(self, factors: tuple) -> np.ndarray:
        for f in factors:
            if _is_coef(f):
                if f.shape != (self.d, self.d):
                    raise ValueError(f"coefficient of shape {f.shape}, expected {(self.d, self.d)}")
            else:
                self._op(f)
        degs = [0 if _is_coef(f) else self.degrees[f] for f in factors]
        total = sum(degs)
        limit = self.exact_degree
        if limit is None or total <= limit:
            v = self.vacuum()
            for f in reversed(factors):
                v = self.left_multiply(f, v) if _is_coef(f) else self._op(f) @ v
            return np.array(v[: self.d])
        if total > 2 * limit:
            raise TruncationError(
                f"product of degree {total} exceeds twice the exact degree {limit} of this model"
            )
        # smallest prefix that leaves a suffix of degree <= limit
        acc, j = total, 0
        while acc > limit:
            acc -= degs[j]
            j += 1
        u = self.vacuum()
        for f in factors[:j]:
            u = self.left_multiply(f.conj().T, u) if _is_coef(f) else self._adj(f) @ u
        v = self.vacuum()
        for f in reversed(factors[j:]):
            v = self.left_multiply(f, v) if _is_coef(f) else self._op(f) @ v
        return u.conj().T @ v

    def clear_cache(self) -> None:
        self._cache.clear()


class ClassicalSpace(BProbabilitySpace):
    """A commutative scalar space (``d = 1``): random variables on a finite sample space."""

    def __init__(self, values: Mapping[Hashable, Sequence[complex]], probs: Sequence[float]):
        self.d = 1
        self.probs = np.asarray(probs, dtype=float)
        if np.any(self.probs < 0) or not np.isclose(self.probs.sum(), 1.0):
            raise ValueError("probs must be a probability vector")
        self.values = {h: np.asarray(v, dtype=complex) for h, v in values.items()}
        for h, v in self.values.items():
            if v.shape != self.probs.shape:
                raise ValueError(f"variable {h!r} has shape {v.shape}, expected {self.probs.shape}")

    def expect(self, factors: Sequence) -> np.ndarray:
        acc = np.ones_like(self.probs, dtype=complex)
        for f in factors:
            if _is_coef(f):
                acc = acc * complex(np.asarray(f).reshape(()))
            else:
                try:
                    acc = acc * self.values[f]
                except KeyError:
                    raise KeyError(f"unknown handle {f!r}") from None
        return np.array([[np.dot(self.probs, acc)]])


def bmatrix_to_json(b: np.ndarray) -> list[list[float]]:
    """Row-major list of ``[re, im]`` pairs."""
    return [[float(z.real), float(z.imag)] for z in np.asarray(b, dtype=complex).ravel()]


def bmatrix_from_json(data: Sequence[Sequence[float]], d: int) -> np.ndarray:
    arr = np.array([complex(re, im) for re, im in data], dtype=complex)
    if arr.size != d * d:
        raise ValueError(f"expected {d * d} entries, got {arr.size}")
    return arr.reshape(d, d)


class MomentTable(BProbabilitySpace):
    """Expectation backed by a table of precomputed moments.

    Entries are keyed by a tuple of handles plus one optional interior
    coefficient per gap between consecutive handles.  Coefficients before the
    first or after the last handle factor out by the bimodule property.  An
    interior coefficient with no exact entry is expanded in matrix units,
    which needs the matrix-unit entries to be present (always true for
    ``d = 1``, where coefficients are scalars).
    """

    def __init__(self, d: int, entries: Iterable[tuple[Sequence[Hashable], Sequence, np.ndarray]] = ()):
        self.d = int(d)
        self._plain: dict[tuple, np.ndarray] = {}
        self._coef: dict[tuple, np.ndarray] = {}
        self._records: list[tuple[tuple, tuple, np.ndarray]] = []
        for handles, coeffs, value in entries:
            self.add(handles, coeffs, value)

    def add(self, handles: Sequence[Hashable], coeffs: Sequence | None, value: np.ndarray) -> None:
        handles = tuple(handles)
        coeffs = tuple(coeffs) if coeffs else (None,) * max(len(handles) - 1, 0)
        if len(coeffs) != max(len(handles) - 1, 0):
            raise ValueError("need one interior coefficient slot per gap between handles")
        value = np.asarray(value, dtype=complex).reshape(self.d, self.d)
        coeffs = tuple(None if c is None else np.asarray(c, dtype=complex).reshape(self.d, self.d) for c in coeffs)
        self._records.append((handles, coeffs, value))
        if all(c is None for c in coeffs):
            self._plain[handles] = value
        else:
            self._coef[(handles, self._coef_key(coeffs))] = value

    def _coef_key(self, coeffs: Sequence) -> tuple:
        return tuple(None if c is None else np.round(c, 12).tobytes() for c in coeffs)

    def __len__(self) -> int:
        return len(self._records)

    @property
    def records(self) -> tuple[tuple[tuple, tuple, np.ndarray], ...]:
        """Stored ``(handles, coeffs, value)`` entries in insertion order."""
        return tuple(self._records)

    def expect(self, factors: Sequence) -> np.ndarray:
        left, items = self._split_coefs(factors)
        eye = self.identity
        if not items:
            value = eye
            right = None
        else:
            handles = tuple(h for h, _ in items)
            interior = [c for _, c in items[:-1]]
            right = items[-1][1]
            value = self._lookup(handles, interior)
        if left is not None:
            value = left @ value
        if right is not None:
            value = value @ right
        return value

    def _lookup(self, handles: tuple, interior: list) -> np.ndarray:
        eye = self.identity
        interior = [None if c is None or np.array_equal(c, eye) else c for c in interior]
        if all(c is None for c in interior):
            if handles in self._plain:
                return self._plain[handles]
            raise MomentLookupError(f"no moment for word {handles!r}")
        exact = self._coef.get((handles, self._coef_key(interior)))
        if exact is not None:
            return exact
        if self.d == 1:
            scale = np.prod([complex(c.reshape(())) for c in interior if c is not None])
            return scale * self._lookup(handles, [None] * len(interior))
        k = next((i for i, c in enumerate(interior) if c is not None and not _is_unit(c)), None)
        if k is None:
            raise MomentLookupError(
                f"no matrix-unit moment for word {handles!r}; export the table with unit coefficients"
            )
        total = np.zeros((self.d, self.d), dtype=complex)
        for (r, s), z in np.ndenumerate(interior[k]):
            if z == 0:
                continue
            unit = np.zeros((self.d, self.d), dtype=complex)
            unit[r, s] = 1
            trial = list(interior)
            trial[k] = unit
            total += z * self._lookup(handles, trial)
        return total

    # serialisation -----------------------------------------------------

    def to_json(self) -> dict:
        words = []
        for handles, coeffs, value in self._records:
            words.append(
                {
                    "handles": list(handles),
                    "coeffs": [None if c is None else bmatrix_to_json(c) for c in coeffs],
                    "value": bmatrix_to_json(value),
                }
            )
        return {"d": self.d, "words": words}

    @classmethod
    def from_json(cls, data: Mapping) -> "MomentTable":
        d = int(data["d"])
        table = cls(d)
        for w in data["words"]:
            coeffs = [None if c is None else bmatrix_from_json(c, d) for c in w.get("coeffs") or []]
            table.add(w["handles"], coeffs, bmatrix_from_json(w["value"], d))
        return table

    @classmethod
    def load(cls, path) -> "MomentTable":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)

    @classmethod
    def from_space(
        cls,
        space: BProbabilitySpace,
        handles: Sequence[Hashable],
        max_len: int,
        unit_coefficients: bool = False,
    ) -> "MomentTable":
        """Tabulate every word over ``handles`` up to ``max_len`` letters.

        With ``unit_coefficients`` the table also stores every word with matrix
        units in the gaps, enough to evaluate arbitrary interior coefficients.
        """
        d = space.d
        units = []
        for r in range(d):
            for s in range(d):
                u = np.zeros((d, d), dtype=complex)
                u[r, s] = 1
                units.append(u)
        table = cls(d)
        for n in range(1, max_len + 1):
            for word in itertools.product(handles, repeat=n):
                table.add(word, None, space.expect(word))
                if unit_coefficients and n > 1 and d > 1:
                    for gaps in itertools.product([None] + units, repeat=n - 1):
                        if all(g is None for g in gaps):
                            continue
                        factors: list = []
                        for k, h in enumerate(word):
                            factors.append(h)
                            if k < n - 1 and gaps[k] is not None:
                                factors.append(gaps[k])
                        table.add(word, gaps, space.expect(factors))
        return table


def _is_unit(c) -> bool:
    return c is not None and np.count_nonzero(c) == 1 and np.isclose(c[c != 0][0], 1.0)


# partitioned moments -------------------------------------------------------


def phi_n(space: BProbabilitySpace, word: Sequence) -> np.ndarray:
    """``E(a_1 ... a_n)`` for a nonempty word of letters."""
    letters = [as_letter(x) for x in word]
    if not letters:
        raise ValueError("phi_n needs a nonempty word")
    return space.expect(flatten(letters))


@lru_cache(maxsize=4096)
def _peel_plan(p: Partition) -> tuple[tuple[int, int, bool], ...]:
    # steps (start, stop, attach_left) on the shrinking letter list, always
    # peeling the leftmost interval block; the last step is the whole list
    steps = []
    current = p
    while len(current) > 1:
        k = next(k for k in range(len(current)) if is_interval_block(current, k))
        block = current.blocks[k]
        lo, hi = block[0], block[-1]
        steps.append((lo - 1, hi, hi < current.n))
        rest = [x for x in range(1, current.n + 1) if not lo <= x <= hi]
        current = restrict(current, rest)
    steps.append((0, current.n, True))
    return tuple(steps)


def _run_plan(space: BProbabilitySpace, letters: list, plan) -> np.ndarray:
    letters = list(letters)
    for start, stop, attach_left in plan[:-1]:
        value = space.expect(flatten(letters[start:stop]))
        if attach_left:
            letters[stop] = (value,) + tuple(letters[stop])
        else:
            letters[start - 1] = tuple(letters[start - 1]) + (value,)
        del letters[start:stop]
    return space.expect(flatten(letters))


def phi_partition(
    space: BProbabilitySpace,
    word: Sequence,
    p: Partition,
    pick: Callable[[list[int]], int] | None = None,
) -> np.ndarray:
    """Partitioned moment ``Phi_p`` by recursive interval-block peeling.

    Each peeled interval block is replaced by its expectation, which becomes a
    left coefficient of the following letter, or a right coefficient of the
    preceding letter when the block ends the word.  ``pick`` chooses among the
    candidate block indices at each step; by default the leftmost is used.
    """
    letters = [as_letter(x) for x in word]
    if p.n != len(letters):
        raise ValueError(f"partition on {p.n} points for a word of length {len(letters)}")
    if not is_noncrossing(p):
        raise ValueError(f"{p} is crossing; partitioned moments need a noncrossing partition")
    if pick is None:
        return _run_plan(space, letters, _peel_plan(p))
    current = p
    while len(current) > 1:
        cands = [k for k in range(len(current)) if is_interval_block(current, k)]
        if not cands:  # pragma: no cover - impossible for noncrossing input
            raise RuntimeError(f"no interval block in noncrossing partition {current}")
        k = pick(cands)
        if k not in cands:
            raise ValueError(f"pick returned {k}, not an interval block index")
        block = current.blocks[k]
        lo, hi = block[0], block[-1]
        value = space.expect(flatten(letters[lo - 1 : hi]))
        if hi < current.n:
            letters[hi] = (value,) + tuple(letters[hi])
        else:
            letters[lo - 2] = tuple(letters[lo - 2]) + (value,)
        del letters[lo - 1 : hi]
        rest = [x for x in range(1, current.n + 1) if not lo <= x <= hi]
        current = restrict(current, rest)
    return space.expect(flatten(letters))


def random_matrix_space(
    d: int,
    n_slots: int,
    handles: Sequence[Hashable],
    seed: int = 0,
    self_adjoint: bool = False,
) -> MatrixSpace:
    """A generic (not independent in any sense) matrix model, for cumulant algebra tests."""
    rng = np.random.default_rng(seed)
    dim = n_slots * d
    ops = {}
    for h in handles:
        m = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2 * dim)
        if self_adjoint:
            m = (m + m.conj().T) / 2
        ops[h] = m
    return MatrixSpace(d, ops)
