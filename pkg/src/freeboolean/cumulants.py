"""Free-Boolean cumulants ``kappa_{chi, pi}`` and the vanishing tests built on them.

Two implementations are kept side by side.  :func:`cumulant` is the Möbius
transform of the partitioned moments over the down-set of ``pi``.
:func:`cumulant_multiplicative` never touches the Möbius function: it peels
interval blocks, replacing each by its full cumulant, and obtains full
cumulants from the moment expansion ``E = sum over INC of kappa_pi``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .bvalued import BProbabilitySpace, as_letter, flatten, max_abs, phi_partition
from .inc import enumerate_inc, interval_down, is_inc
from .moebius import comparability_matrix, moebius_matrix
from .partitions import (
    Partition,
    chi_restrict,
    is_interval_block,
    kernel,
    leq,
    parse_chi,
    restrict,
)

__all__ = [
    "cumulant",
    "cumulant_multiplicative",
    "phi_table",
    "cumulant_table",
    "moments_from_cumulants",
    "star_formula",
    "word_labels",
    "ResidualReport",
    "test_combinatorial_independence",
    "vanishing_extension_check",
    "star_check",
]


def _prepare(word: Sequence, chi: str) -> tuple[list[tuple], str]:
    letters = [as_letter(x) for x in word]
    chi = parse_chi(chi)
    if len(letters) != len(chi):
        raise ValueError(f"word has {len(letters)} letters but chi has length {len(chi)}")
    return letters, chi


def _check_pi(pi: Partition, chi: str) -> None:
    if pi.n != len(chi) or not is_inc(pi, chi):
        raise ValueError(f"{pi} is not in INC({chi})")


def cumulant(space: BProbabilitySpace, word: Sequence, chi: str, pi: Partition | None = None) -> np.ndarray:
    """``kappa_{chi, pi}`` as a Möbius-weighted sum of ``Phi_sigma`` over ``sigma <= pi``."""
    letters, chi = _prepare(word, chi)
    pi = Partition.one(len(chi)) if pi is None else pi
    _check_pi(pi, chi)
    elems = enumerate_inc(chi)
    mu = moebius_matrix(chi)
    col = elems.index(pi)
    total = np.zeros((space.d, space.d), dtype=complex)
    for sigma in interval_down(pi, chi):
        weight = int(mu[elems.index(sigma), col])
        if weight:
            total = total + weight * phi_partition(space, letters, sigma)
    return total


def _letter_key(letter: tuple) -> tuple:
    return tuple(("b", f.tobytes()) if isinstance(f, np.ndarray) else ("h", f) for f in letter)


class _Peeler:
    def __init__(self, space: BProbabilitySpace, order: str):
        if order not in ("first", "last"):
            raise ValueError("order must be 'first' or 'last'")
        self.space = space
        self.order = order
        self.memo: dict = {}

    def full(self, letters: list, chi: str) -> np.ndarray:
        key = (chi, tuple(_letter_key(l) for l in letters))
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        n = len(letters)
        total = self.space.expect(flatten(letters))
        if n > 1:
            top = Partition.one(n)
            for p in enumerate_inc(chi):
                if p != top:
                    total = total - self.partitioned(letters, chi, p)
        self.memo[key] = total
        return total

    def partitioned(self, letters: list, chi: str, p: Partition) -> np.ndarray:
        if len(p) == 1:
            return self.full(letters, chi)
        cands = [k for k in range(len(p)) if is_interval_block(p, k)]
        block = p.blocks[cands[0] if self.order == "first" else cands[-1]]
        lo, hi = block[0], block[-1]
        inner = self.full(letters[lo - 1 : hi], chi_restrict(chi, block))
        letters = list(letters)
        if hi < p.n:
            letters[hi] = (inner,) + letters[hi]
        else:
            letters[lo - 2] = letters[lo - 2] + (inner,)
        del letters[lo - 1 : hi]
        rest = [x for x in range(1, p.n + 1) if not lo <= x <= hi]
        return self.partitioned(letters, chi_restrict(chi, rest), restrict(p, rest))


def cumulant_multiplicative(
    space: BProbabilitySpace,
    word: Sequence,
    chi: str,
    pi: Partition | None = None,
    order: str = "first",
) -> np.ndarray:
    """``kappa_{chi, pi}`` by recursive peeling, without the Möbius function.

    ``order="first"`` peels the leftmost interval block each time,
    ``order="last"`` the rightmost one; a block ending the word is attached as
    a right coefficient of the preceding letter, any other block as a left
    coefficient of the following letter.
    """
    letters, chi = _prepare(word, chi)
    pi = Partition.one(len(chi)) if pi is None else pi
    _check_pi(pi, chi)
    return _Peeler(space, order).partitioned(letters, chi, pi)


def phi_table(space: BProbabilitySpace, word: Sequence, chi: str) -> np.ndarray:
    """``Phi_sigma`` for every ``sigma`` in ``enumerate_inc(chi)``, stacked as ``(m, d, d)``."""
    letters, chi = _prepare(word, chi)
    return np.stack([phi_partition(space, letters, s) for s in enumerate_inc(chi)])


def cumulant_table(space: BProbabilitySpace, word: Sequence, chi: str, phis: np.ndarray | None = None) -> np.ndarray:
    """``kappa_{chi, pi}`` for every ``pi`` in ``enumerate_inc(chi)``, stacked as ``(m, d, d)``."""
    chi = parse_chi(chi)
    if phis is None:
        phis = phi_table(space, word, chi)
    mu = moebius_matrix(chi).astype(float)
    return np.einsum("sp,sij->pij", mu, phis)


def moments_from_cumulants(space: BProbabilitySpace, word: Sequence, chi: str) -> np.ndarray:
    """``sum over pi in INC(chi) of kappa_{chi, pi}``; reproduces ``E(a_1 ... a_n)``."""
    return cumulant_table(space, word, chi).sum(axis=0)


def _star_weights(chi: str, eps: Partition) -> np.ndarray:
    elems = enumerate_inc(chi)
    below_eps = np.array([leq(p, eps) for p in elems], dtype=float)
    mu = moebius_matrix(chi).astype(float) * comparability_matrix(chi)
    return mu @ below_eps


def star_formula(
    space: BProbabilitySpace,
    word: Sequence,
    chi: str,
    omega: Sequence[Hashable],
    phis: np.ndarray | None = None,
) -> np.ndarray:
    """``sum_sigma (sum over sigma <= pi <= ker(omega) of mu(sigma, pi)) Phi_sigma``.

    ``pi`` runs over ``INC(chi)`` only; ``ker(omega)`` itself need not belong
    to it.
    """
    letters, chi = _prepare(word, chi)
    if len(omega) != len(chi):
        raise ValueError("omega and chi must have the same length")
    if phis is None:
        phis = phi_table(space, letters, chi)
    w = _star_weights(chi, kernel(list(omega)))
    return np.einsum("s,sij->ij", w, phis)


# labelled families ----------------------------------------------------------


def word_labels(word: Sequence, labels: Mapping[Hashable, tuple[Hashable, str]]) -> tuple[tuple, str]:
    """``(omega, chi)`` of a word whose letters are handles (or products within one face)."""
    omega, chi = [], []
    for letter in word:
        tags = {labels[f] for f in as_letter(letter) if not isinstance(f, np.ndarray)}
        if len(tags) != 1:
            raise ValueError(f"letter {letter!r} does not lie in exactly one face: {tags}")
        (w, c), = tags
        omega.append(w)
        chi.append(c)
    return tuple(omega), parse_chi("".join(chi))


@dataclass
class ResidualReport:
    """Largest residual over a family of checks; ``worst`` names the offending case."""

    name: str
    max_residual: float = 0.0
    n_checked: int = 0
    worst: str = ""
    tolerance: float | None = None
    details: dict = field(default_factory=dict)

    def record(self, residual: float, label: str) -> None:
        self.n_checked += 1
        if self.n_checked == 1 or residual > self.max_residual:
            self.max_residual = residual
            self.worst = label

    @property
    def passed(self) -> bool:
        if self.tolerance is None:
            raise ValueError(f"report {self.name!r} has no tolerance")
        return self.max_residual <= self.tolerance

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "max_residual": float(f"{self.max_residual:.6e}"),
            "n_checked": self.n_checked,
            "worst": self.worst,
        }
        if self.tolerance is not None:
            out["tolerance"] = self.tolerance
            out["passed"] = self.passed
        if self.details:
            out["details"] = self.details
        return out


def _mixed_words(labels: Mapping, min_n: int, max_n: int, words: Iterable | None) -> Iterable[tuple]:
    if words is not None:
        yield from (tuple(w) for w in words)
        return
    handles = sorted(labels, key=str)
    for n in range(min_n, max_n + 1):
        for w in itertools.product(handles, repeat=n):
            if len({labels[h][0] for h in w}) > 1:
                yield w


def _random_b(rng: np.random.Generator, d: int) -> np.ndarray:
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


def _decorate(word: tuple, rng: np.random.Generator | None, d: int) -> list:
    # wrap each letter as b_k * a_k * b'_k with random coefficients
    if rng is None:
        return list(word)
    return [(_random_b(rng, d), *as_letter(a), _random_b(rng, d)) for a in word]


def _fmt(word: tuple) -> str:
    return " ".join(str(a) if not isinstance(a, tuple) else "(" + " ".join(
        "b" if isinstance(f, np.ndarray) else str(f) for f in a) + ")" for a in word)


def test_combinatorial_independence(
    space: BProbabilitySpace,
    labels: Mapping[Hashable, tuple[Hashable, str]],
    max_n: int,
    min_n: int = 2,
    words: Iterable | None = None,
    coefficient_seed: int | None = None,
    tolerance: float | None = None,
) -> ResidualReport:
    """Max entry of ``kappa_{chi, 1_n}`` over mixed words (``omega`` not constant).

    ``labels`` maps each handle to its ``(pair index, face)`` with face ``F``
    or ``B``.  With ``coefficient_seed`` every letter ``a`` is replaced by
    ``b a b'`` with random ``B`` coefficients, which stays inside its face.
    """
    rng = None if coefficient_seed is None else np.random.default_rng(coefficient_seed)
    report = ResidualReport("combinatorial_independence", tolerance=tolerance)
    for word in _mixed_words(labels, min_n, max_n, words):
        omega, chi = word_labels(word, labels)
        if len(set(omega)) < 2:
            continue
        kappa = cumulant(space, _decorate(word, rng, space.d), chi)
        report.record(max_abs(kappa), _fmt(word))
    return report


# mark as a library function rather than a pytest test
test_combinatorial_independence.__test__ = False


def vanishing_extension_check(
    space: BProbabilitySpace,
    labels: Mapping[Hashable, tuple[Hashable, str]],
    max_n: int,
    pi: Partition | None = None,
    min_n: int = 2,
    words: Iterable | None = None,
    tolerance: float | None = None,
) -> ResidualReport:
    """``kappa_{chi, pi}`` for every ``pi`` (or the given one) on which ``omega`` is not block-constant."""
    report = ResidualReport("vanishing_extension", tolerance=tolerance)
    for word in _mixed_words(labels, min_n, max_n, words):
        omega, chi = word_labels(word, labels)
        if pi is not None and pi.n != len(word):
            continue
        elems = enumerate_inc(chi)
        targets = [pi] if pi is not None else list(elems)
        targets = [
            p for p in targets
            if is_inc(p, chi) and any(len({omega[x - 1] for x in b}) > 1 for b in p.blocks)
        ]
        if not targets:
            continue
        table = cumulant_table(space, word, chi)
        for p in targets:
            report.record(max_abs(table[elems.index(p)]), f"{_fmt(word)} | {p}")
    return report


def star_check(
    space: BProbabilitySpace,
    labels: Mapping[Hashable, tuple[Hashable, str]],
    max_n: int,
    min_n: int = 1,
    words: Iterable | None = None,
    tolerance: float | None = None,
) -> ResidualReport:
    """``|star_formula - E|`` over words; mixed words only unless ``words`` is given."""
    report = ResidualReport("star_formula", tolerance=tolerance)
    for word in _mixed_words(labels, max(min_n, 2), max_n, words):
        omega, chi = word_labels(word, labels)
        letters = [as_letter(a) for a in word]
        value = star_formula(space, letters, chi, omega)
        report.record(max_abs(value - space.expect(flatten(letters))), _fmt(word))
    return report
